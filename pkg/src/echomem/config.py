"""Experiment configuration: TOML ingestion and validation.

A config file has top-level keys (mode, squeezing_db, format, output) and
nested sections [memory], [grid], [sampling], [curve], [solver].  Memory
parameters come either as dimensionless groups (alpha_l, chi, ...) or as
physical values (alpha, length, gamma_decay, storage_time,
pulse_duration, bandwidth + unit); physical input is converted at this
boundary and echoed, and a disagreement between redundant forms is an
error, never silently resolved.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

import numpy as np

from .channel import MemoryParams
from .mbsolver import SolverGrid
from .montecarlo import SampleConfig

__all__ = ["ExperimentConfig", "ConfigError", "MODES", "load_config"]

MODES = ("fidelity", "curve", "solve", "montecarlo", "crosscheck")

_DIMLESS_KEYS = {"alpha_l", "chi", "gamma_tau", "gamma_t0", "gamma_tau_bandwidth"}
_PHYSICAL_KEYS = {
    "alpha",
    "length",
    "gamma_decay",
    "storage_time",
    "pulse_duration",
    "bandwidth",
    "unit",
    "initial_offset",
}
_PHYSICAL_REQUIRED = ("alpha", "length", "gamma_decay", "storage_time", "pulse_duration")


class ConfigError(ValueError):
    """Configuration problem; the message names the offending field."""


@dataclass
class ExperimentConfig:
    mode: str
    memory: MemoryParams
    squeezing_db: list[float] = field(default_factory=lambda: [3.0, 7.0, 10.0])
    grid: SolverGrid = field(default_factory=SolverGrid)
    sampling: SampleConfig = field(default_factory=SampleConfig)
    output_path: str | None = None
    fmt: str = "csv"
    # curve generation
    figure: int = 2
    alpha_l_grid: np.ndarray = field(
        default_factory=lambda: np.linspace(0.0, 5.0, 51)
    )
    chi_values: list[float] = field(default_factory=lambda: [0.0, 0.005, 0.01, 0.02])
    figure2_db: float = 7.0
    # solver knobs
    storage_tau: float | None = None
    pulse: str = "flattop"
    pulse_edge: float = 0.05
    pulse_sigma: float = 0.125
    echo_half_width: float = 1.0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.fmt not in ("csv", "json"):
            raise ConfigError(f"format must be 'csv' or 'json', got {self.fmt!r}")
        if not self.squeezing_db:
            raise ConfigError("squeezing_db must not be empty")
        for v in self.squeezing_db:
            if not math.isfinite(v) or v < 0.0:
                raise ConfigError(f"squeezing_db entries must be finite and >= 0, got {v!r}")
        if self.figure not in (2, 3):
            raise ConfigError(f"curve figure must be 2 or 3, got {self.figure!r}")
        if not math.isfinite(self.figure2_db) or self.figure2_db < 0.0:
            raise ConfigError(
                f"curve.squeezing_db must be finite and >= 0, got {self.figure2_db!r}"
            )
        if self.pulse not in ("flattop", "gaussian"):
            raise ConfigError(f"pulse must be 'flattop' or 'gaussian', got {self.pulse!r}")


def _section(data: dict, name: str) -> dict:
    sec = data.get(name, {})
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _reject_unknown(sec: dict, allowed: set, where: str):
    unknown = set(sec) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {sorted(unknown)}")


def _build_memory(sec: dict, echo) -> MemoryParams:
    _reject_unknown(sec, _DIMLESS_KEYS | _PHYSICAL_KEYS, "memory")
    given_phys = _PHYSICAL_KEYS & set(sec)
    params_phys = None
    if given_phys:
        missing = [k for k in _PHYSICAL_REQUIRED if k not in sec]
        if missing:
            raise ConfigError(
                f"physical memory form is incomplete: missing {missing} "
                f"(have {sorted(given_phys)})"
            )
        if "bandwidth" in sec and "unit" not in sec:
            raise ConfigError(
                "memory.bandwidth needs an explicit memory.unit of 'angular' or "
                "'ordinary'; the gamma*tau validity check depends on it"
            )
        params_phys = MemoryParams.from_physical(
            alpha=sec["alpha"],
            length=sec["length"],
            gamma_decay=sec["gamma_decay"],
            storage_time=sec["storage_time"],
            pulse_duration=sec["pulse_duration"],
            bandwidth=sec.get("bandwidth"),
            unit=sec.get("unit", "angular"),
            initial_offset=sec.get("initial_offset"),
        )
        # redundant dimensionless keys must agree with the conversion
        for key, value in (
            ("alpha_l", params_phys.alpha_l),
            ("chi", params_phys.chi),
            ("gamma_tau", params_phys.gamma_tau),
        ):
            if key in sec and not math.isclose(sec[key], value, rel_tol=1e-9, abs_tol=1e-15):
                raise ConfigError(
                    f"memory.{key} = {sec[key]} disagrees with the physical "
                    f"parameters ({key} = {value})"
                )
        params = params_phys
        echo(
            "memory: converted physical parameters -> "
            f"alpha_l={params.alpha_l:.9g} chi={params.chi:.9g} "
            f"gamma_tau={params.gamma_tau:.9g} gamma_t0={params.gamma_t0:.9g} "
            f"gamma_tau_bandwidth={params.gamma_tau_bandwidth}"
        )
    else:
        if "alpha_l" not in sec or "chi" not in sec:
            raise ConfigError(
                "dimensionless memory form requires at least alpha_l and chi"
            )
        params = MemoryParams(
            alpha_l=sec["alpha_l"],
            chi=sec["chi"],
            gamma_tau=sec.get("gamma_tau", 0.0),
            gamma_t0=sec.get("gamma_t0"),
            gamma_tau_bandwidth=sec.get("gamma_tau_bandwidth"),
        )
    if params.bandwidth_validity_flag:
        echo(
            f"memory: validity flag raised, gamma*tau = {params.gamma_tau_bandwidth} < 10"
        )
    return params


def _build_alpha_grid(value) -> np.ndarray:
    if isinstance(value, dict):
        for k in ("start", "stop", "num"):
            if k not in value:
                raise ConfigError(f"curve.alpha_l_grid table needs '{k}'")
        grid = np.linspace(value["start"], value["stop"], int(value["num"]))
    else:
        grid = np.asarray(value, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ConfigError("curve.alpha_l_grid must be a non-empty sequence")
    if grid[0] < 0.0 or np.any(np.diff(grid) <= 0.0):
        raise ConfigError("curve.alpha_l_grid must be non-negative and strictly increasing")
    return grid


def load_config(path, mode: str | None = None, echo=None) -> ExperimentConfig:
    """Parse and validate a TOML experiment config.

    `mode` (usually the CLI subcommand) overrides a file-level mode; a
    conflict between the two is an error.  `echo` receives human-readable
    notes (defaults to stderr).
    """
    if echo is None:
        echo = lambda msg: print(msg, file=sys.stderr)
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None

    _reject_unknown(
        set(data) if isinstance(data, dict) else set(),
        {"mode", "squeezing_db", "format", "output", "memory", "grid", "sampling", "curve", "solver"},
        "top level",
    )

    file_mode = data.get("mode")
    if file_mode is not None and mode is not None and file_mode != mode:
        raise ConfigError(
            f"config mode {file_mode!r} conflicts with the requested mode {mode!r}"
        )
    effective_mode = mode or file_mode
    if effective_mode is None:
        raise ConfigError("no mode: give one in the config or on the command line")

    memory = _build_memory(_section(data, "memory"), echo)

    gsec = _section(data, "grid")
    _reject_unknown(gsec, {"n_z", "n_t", "n_delta", "detuning_halfspan"}, "grid")
    try:
        grid = SolverGrid(
            n_z=gsec.get("n_z", 128),
            n_t=gsec.get("n_t", 512),
            n_delta=gsec.get("n_delta", 256),
            detuning_halfspan=gsec.get("detuning_halfspan", 150.0),
        )
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None

    ssec = _section(data, "sampling")
    _reject_unknown(ssec, {"n_samples", "seed", "stream_count"}, "sampling")
    try:
        sampling = SampleConfig(
            n_samples=ssec.get("n_samples", 1_000_000),
            seed=ssec.get("seed", 0),
            stream_count=ssec.get("stream_count", 1),
        )
    except ValueError as exc:
        raise ConfigError(f"sampling: {exc}") from None

    csec = _section(data, "curve")
    _reject_unknown(csec, {"figure", "alpha_l_grid", "chi_values", "squeezing_db"}, "curve")
    vsec = _section(data, "solver")
    _reject_unknown(
        vsec,
        {"storage_tau", "pulse", "pulse_edge", "pulse_sigma", "echo_half_width"},
        "solver",
    )

    kwargs = {}
    if "alpha_l_grid" in csec:
        kwargs["alpha_l_grid"] = _build_alpha_grid(csec["alpha_l_grid"])
    if "chi_values" in csec:
        kwargs["chi_values"] = [float(c) for c in csec["chi_values"]]

    try:
        return ExperimentConfig(
            mode=effective_mode,
            memory=memory,
            squeezing_db=[float(v) for v in data.get("squeezing_db", [3.0, 7.0, 10.0])],
            grid=grid,
            sampling=sampling,
            output_path=data.get("output"),
            fmt=data.get("format", "csv"),
            figure=csec.get("figure", 2),
            figure2_db=csec.get("squeezing_db", 7.0),
            storage_tau=vsec.get("storage_tau"),
            pulse=vsec.get("pulse", "flattop"),
            pulse_edge=vsec.get("pulse_edge", 0.05),
            pulse_sigma=vsec.get("pulse_sigma", 0.125),
            echo_half_width=vsec.get("echo_half_width", 1.0),
            **kwargs,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
