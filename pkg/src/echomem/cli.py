"""Command-line orchestration and bit-stable result emission.

Subcommands: fidelity, curve (--figure 2|3), solve, montecarlo,
crosscheck.  Every emitted file begins with one `#` comment line carrying
the dimensionless parameter set and the tool version; numbers are written
with 9 significant digits; JSON bodies have sorted keys.  Identical
config + seed produces byte-identical files.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .channel import (
    CLASSICAL_FIDELITY_THRESHOLD,
    MemoryParams,
    efficiency,
    squeezed_quadrature_variance,
    storage_fidelity,
)
from .config import ExperimentConfig, load_config
from .gaussian import db_to_r
from .mbsolver import flat_top_pulse, gaussian_pulse, run_protocol
from .montecarlo import SampleConfig, estimate_fidelity, sample_output_covariance

__all__ = [
    "main",
    "run_fidelity",
    "run_figure2",
    "run_figure3",
    "run_solve",
    "run_montecarlo",
    "run_crosscheck",
    "load_report",
]

_PDE_RELATIVE_TOL = 0.02
_MC_SIGMAS = 4.0


def _fmt(x) -> str:
    """Fixed 9-significant-digit, '.'-decimal rendering."""
    return f"{float(x):.9g}"


def _comment_line(params: MemoryParams) -> str:
    gtb = "none" if params.gamma_tau_bandwidth is None else _fmt(params.gamma_tau_bandwidth)
    return (
        f"# echomem {__version__} alpha_l={_fmt(params.alpha_l)} chi={_fmt(params.chi)} "
        f"gamma_tau={_fmt(params.gamma_tau)} gamma_t0={_fmt(params.gamma_t0)} "
        f"gamma_tau_bandwidth={gtb}"
    )


def _emit(text: str, path: str | None):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _csv_text(params: MemoryParams, header: list[str], rows: list[list]) -> str:
    lines = [_comment_line(params), ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _json_text(params: MemoryParams, obj) -> str:
    return _comment_line(params) + "\n" + json.dumps(obj, sort_keys=True, indent=2) + "\n"


def load_report(path):
    """Read back an emitted JSON report, skipping the leading comment."""
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return json.loads("".join(lines))


def _rows_to_json(header, rows):
    return [
        {k: float(v) for k, v in zip(header, row)}
        for row in rows
    ]


def run_fidelity(cfg: ExperimentConfig) -> str:
    """Storage fidelity, squeezed-quadrature variance and efficiency per
    squeezing level at the configured memory point."""
    header = ["squeezing_db", "r", "fidelity", "squeezed_variance", "eta"]
    eta = efficiency(cfg.memory)
    rows = []
    for db in cfg.squeezing_db:
        r = db_to_r(db)
        rows.append(
            [db, r, storage_fidelity(r, cfg.memory),
             squeezed_quadrature_variance(r, cfg.memory), eta]
        )
    if cfg.fmt == "json":
        return _json_text(cfg.memory, _rows_to_json(header, rows))
    return _csv_text(cfg.memory, header, rows)


def run_figure2(cfg: ExperimentConfig) -> str:
    """Fidelity vs optical depth, one curve per chi, fixed squeezing
    (7 dB unless overridden via curve.squeezing_db); includes the constant
    threshold column."""
    r = db_to_r(cfg.figure2_db)
    header = ["alpha_l", "chi", "fidelity", "cft"]
    rows = []
    for chi in cfg.chi_values:
        for a in cfg.alpha_l_grid:
            p = MemoryParams(alpha_l=float(a), chi=float(chi))
            rows.append([a, chi, storage_fidelity(r, p), CLASSICAL_FIDELITY_THRESHOLD])
    if cfg.fmt == "json":
        return _json_text(cfg.memory, _rows_to_json(header, rows))
    return _csv_text(cfg.memory, header, rows)


def run_figure3(cfg: ExperimentConfig) -> str:
    """Fidelity vs optical depth, one curve per squeezing level, chi fixed
    at the configured memory value."""
    header = ["alpha_l", "squeezing_db", "fidelity"]
    rows = []
    for db in cfg.squeezing_db:
        r = db_to_r(db)
        for a in cfg.alpha_l_grid:
            p = MemoryParams(alpha_l=float(a), chi=cfg.memory.chi)
            rows.append([a, db, storage_fidelity(r, p)])
    if cfg.fmt == "json":
        return _json_text(cfg.memory, _rows_to_json(header, rows))
    return _csv_text(cfg.memory, header, rows)


def _pulse_for(cfg: ExperimentConfig):
    if cfg.pulse == "gaussian":
        return gaussian_pulse(cfg.pulse_sigma)
    return flat_top_pulse(cfg.pulse_edge)


def _profile_csv(params: MemoryParams, profile) -> str:
    header = ["t", "re_amplitude", "im_amplitude"]
    rows = [[t, v.real, v.imag] for t, v in zip(profile.times, profile.values)]
    return _csv_text(params, header, rows)


def run_solve(cfg: ExperimentConfig) -> tuple[str, dict, str | None]:
    """Integrate the full protocol; returns (echo profile CSV, summary,
    transmitted profile CSV)."""
    result = run_protocol(
        cfg.memory,
        cfg.grid,
        pulse_shape=_pulse_for(cfg),
        storage_tau=cfg.storage_tau,
        echo_half_width=cfg.echo_half_width,
    )
    summary = {
        "efficiency": result.efficiency,
        "transmission": result.transmission,
        "echo_peak_time": result.echo_peak_time,
        "mode_overlap": result.mode_overlap,
        "residual_excitation": result.residual_excitation,
        "stray_emission": result.stray_emission,
        "analytic_eta": efficiency(cfg.memory),
    }
    transmitted = (
        _profile_csv(cfg.memory, result.transmitted_profile)
        if result.transmitted_profile is not None
        else None
    )
    return _profile_csv(cfg.memory, result.echo_profile), summary, transmitted


def run_montecarlo(cfg: ExperimentConfig) -> str:
    """Sample the channel at the first configured squeezing level and emit
    the estimate record."""
    db = cfg.squeezing_db[0]
    r = db_to_r(db)
    emp = sample_output_covariance(r, cfg.memory, cfg.sampling)
    fid = estimate_fidelity(r, cfg.memory, cfg.sampling)
    record = {
        "parameters": {
            "alpha_l": cfg.memory.alpha_l,
            "chi": cfg.memory.chi,
            "gamma_tau": cfg.memory.gamma_tau,
            "gamma_t0": cfg.memory.gamma_t0,
            "squeezing_db": db,
            "r": r,
            "n_samples": cfg.sampling.n_samples,
            "stream_count": cfg.sampling.stream_count,
        },
        "vxx": emp.vxx,
        "vpp": emp.vpp,
        "vxp": emp.vxp,
        "stderr_xx": emp.stderr_xx,
        "stderr_pp": emp.stderr_pp,
        "fidelity": fid.value,
        "uncertainty": fid.uncertainty,
        "seed": cfg.sampling.seed,
    }
    return _json_text(cfg.memory, record)


def _crosscheck_point(cfg: ExperimentConfig, index: int, db: float, pde_eff: float | None):
    r = db_to_r(db)
    eta = efficiency(cfg.memory)
    v_analytic = squeezed_quadrature_variance(r, cfg.memory)
    f_analytic = storage_fidelity(r, cfg.memory)
    sampling = SampleConfig(
        n_samples=cfg.sampling.n_samples,
        seed=cfg.sampling.seed + 7919 * index,  # deterministic per-point stream
        stream_count=cfg.sampling.stream_count,
    )
    emp = sample_output_covariance(r, cfg.memory, sampling)
    f_mc = estimate_fidelity(r, cfg.memory, sampling)
    mc_ok = (
        abs(emp.vxx - v_analytic) <= _MC_SIGMAS * emp.stderr_xx
        and abs(f_mc.value - f_analytic) <= _MC_SIGMAS * f_mc.uncertainty
    )
    if pde_eff is None:
        pde_ok = True
    elif eta >= 1e-9:
        pde_ok = abs(pde_eff - eta) <= _PDE_RELATIVE_TOL * eta
    else:
        pde_ok = abs(pde_eff) <= 1e-9
    return {
        "squeezing_db": db,
        "analytic_eta": eta,
        "pde_efficiency": pde_eff,
        "mc_vxx": emp.vxx,
        "mc_vxx_stderr": emp.stderr_xx,
        "analytic_vxx": v_analytic,
        "fidelity_analytic": f_analytic,
        "fidelity_mc": f_mc.value,
        "fidelity_mc_uncertainty": f_mc.uncertainty,
        "pass_flags": {"pde": pde_ok, "mc": mc_ok},
    }


def run_crosscheck(cfg: ExperimentConfig, skip_pde: bool = False) -> tuple[str, bool]:
    """Three-way validation at the configured memory point, one entry per
    squeezing level; returns (report text, all_pass)."""
    pde_eff = None
    if not skip_pde:
        result = run_protocol(
            cfg.memory,
            cfg.grid,
            pulse_shape=_pulse_for(cfg),
            storage_tau=cfg.storage_tau,
            echo_half_width=cfg.echo_half_width,
        )
        pde_eff = result.efficiency
    # MC points are independent; evaluate them concurrently, assemble in order
    with ThreadPoolExecutor(max_workers=min(4, len(cfg.squeezing_db))) as pool:
        futures = [
            pool.submit(_crosscheck_point, cfg, i, db, pde_eff)
            for i, db in enumerate(cfg.squeezing_db)
        ]
        points = [f.result() for f in futures]
    all_pass = all(
        p["pass_flags"]["pde"] and p["pass_flags"]["mc"] for p in points
    )
    report = {
        "parameters": {
            "alpha_l": cfg.memory.alpha_l,
            "chi": cfg.memory.chi,
            "gamma_tau": cfg.memory.gamma_tau,
            "gamma_t0": cfg.memory.gamma_t0,
            "n_samples": cfg.sampling.n_samples,
            "seed": cfg.sampling.seed,
            "stream_count": cfg.sampling.stream_count,
        },
        "points": points,
        "all_pass": all_pass,
    }
    return _json_text(cfg.memory, report), all_pass


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="echomem",
        description="Photon-echo quantum memory for squeezed light: analytic "
        "channel, Maxwell-Bloch solver and Monte-Carlo cross-validation.",
    )
    parser.add_argument("--version", action="version", version=f"echomem {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--out", default=None, help="output path (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None, help="override sampling seed")

    p = sub.add_parser("fidelity", help="closed-form fidelity table")
    common(p)
    p = sub.add_parser("curve", help="fidelity-vs-optical-depth curve data")
    common(p)
    p.add_argument("--figure", type=int, choices=(2, 3), default=None)
    p = sub.add_parser("solve", help="Maxwell-Bloch protocol integration")
    common(p)
    p.add_argument("--transmitted-out", default=None, help="also write the transmitted profile")
    p = sub.add_parser("montecarlo", help="Langevin sampling estimate record")
    common(p)
    p = sub.add_parser("crosscheck", help="three-way engine validation report")
    common(p)
    p.add_argument("--skip-pde", action="store_true", help=argparse.SUPPRESS)
    return parser


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config, mode=args.command)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        cfg.sampling = dataclasses.replace(cfg.sampling, seed=args.seed)
    if args.format is not None:
        cfg.fmt = args.format
    out = args.out if args.out is not None else cfg.output_path

    if args.command == "fidelity":
        _emit(run_fidelity(cfg), out)
    elif args.command == "curve":
        if args.figure is not None:
            cfg.figure = args.figure
        text = run_figure2(cfg) if cfg.figure == 2 else run_figure3(cfg)
        _emit(text, out)
    elif args.command == "solve":
        echo_csv, summary, transmitted_csv = run_solve(cfg)
        _emit(echo_csv, out)
        if args.transmitted_out and transmitted_csv is not None:
            _emit(transmitted_csv, args.transmitted_out)
        print(json.dumps(summary, sort_keys=True))
    elif args.command == "montecarlo":
        _emit(run_montecarlo(cfg), out)
    elif args.command == "crosscheck":
        text, all_pass = run_crosscheck(cfg, skip_pde=args.skip_pde)
        _emit(text, out)
        if not all_pass:
            print("crosscheck: FAIL (see pass_flags)", file=sys.stderr)
            return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
