"""Stochastic sampling oracle for the memory channel.

Samples the linear input-output relation of the retrieved mode with the
exact noise-variance weights and estimates the output covariance and the
storage fidelity statistically.  Every noise operator has vacuum
statistics, so in the symmetric-ordered (covariance-level) picture each
contribution of power weight p adds an independent Gaussian of quadrature
variance p/4:

    x_out = sqrt(eta) x_in + sum_k sqrt(p_k) xi_k,   xi_k ~ N(0, 1/4)

with the p_k the spatially integrated budget (vacuum leak, initial
coherence, and the three Langevin intervals; the z-kernels integrate in
closed form, so no spatial discretization enters the oracle).  Streams
are counter-based (Philox keyed by seed and stream index), so the
per-stream sequences are fixed and changing stream_count only changes the
parallel layout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import MemoryParams, noise_weights
from .gaussian import fidelity_from_moments, squeezed_vacuum_covariance

__all__ = [
    "SampleConfig",
    "EmpiricalCovariance",
    "FidelityEstimate",
    "sample_output_covariance",
    "estimate_fidelity",
]

_CHUNK = 1 << 19


@dataclass(frozen=True)
class SampleConfig:
    """Sampling size, reproducibility seed and stream layout."""

    n_samples: int = 1_000_000
    seed: int = 0
    stream_count: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError(f"n_samples must be >= 1, got {self.n_samples}")
        if self.stream_count < 1:
            raise ValueError(f"stream_count must be >= 1, got {self.stream_count}")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 bits, got {self.seed}")


@dataclass(frozen=True)
class EmpiricalCovariance:
    """Sample covariance of the output quadratures with standard errors.

    mean_x / mean_p are the sample means (zero up to sampling noise for
    this displacement-free channel).
    """

    vxx: float
    vpp: float
    vxp: float
    stderr_xx: float
    stderr_pp: float
    n: int
    mean_x: float = 0.0
    mean_p: float = 0.0

    def __post_init__(self):
        if self.n >= 2 and (self.stderr_xx <= 0.0 or self.stderr_pp <= 0.0):
            raise ValueError("standard errors must be positive for n >= 2")


class FidelityEstimate(NamedTuple):
    value: float
    uncertainty: float


def _stream_rng(seed: int, index: int) -> np.random.Generator:
    # Philox's 128-bit key splits cleanly into (seed, stream index)
    return np.random.Generator(np.random.Philox(key=np.array([seed, index], dtype=np.uint64)))


def _noise_powers(params: MemoryParams, aggregate: bool) -> list[float]:
    w = noise_weights(params)
    if aggregate:
        return [1.0 - w.eta]
    b = w.integrated_budget()
    return [b["vac_leak"], b["d"], b["f11"], b["f12"], b["f2"]]


def sample_output_covariance(
    r: float,
    params: MemoryParams,
    cfg: SampleConfig,
    aggregate_noise: bool = False,
) -> EmpiricalCovariance:
    """Draw the output quadratures and return their sample covariance.

    The x quadrature of the input is squeezed (variance e^{-2r}/4), p
    anti-squeezed.  With aggregate_noise the five vacuum-like
    contributions collapse into one Gaussian of variance (1-eta)/4 --
    sampling both ways and comparing is the executable statement that
    only eta is observable.
    """
    if not math.isfinite(r) or r < 0.0:
        raise ValueError(f"squeezing parameter must be finite and >= 0, got {r!r}")
    if cfg.n_samples < 2:
        raise ValueError("covariance estimation needs n_samples >= 2")
    powers = _noise_powers(params, aggregate_noise)
    eta = noise_weights(params).eta
    amps = [math.sqrt(p) / 2.0 for p in powers]  # sqrt(p) * sigma_vac, sigma_vac = 1/2
    sx_in = math.exp(-r) / 2.0
    sp_in = math.exp(r) / 2.0
    root_eta = math.sqrt(eta)

    counts = [
        cfg.n_samples // cfg.stream_count + (1 if k < cfg.n_samples % cfg.stream_count else 0)
        for k in range(cfg.stream_count)
    ]
    sums = np.zeros(5, dtype=np.float64)  # x, p, x^2, p^2, xp
    for k, nk in enumerate(counts):
        if nk == 0:
            continue
        rng = _stream_rng(cfg.seed, k)
        done = 0
        part = np.zeros(5, dtype=np.float64)
        while done < nk:
            m = min(_CHUNK, nk - done)
            x = root_eta * rng.normal(0.0, sx_in, m)
            p = root_eta * rng.normal(0.0, sp_in, m)
            for a in amps:
                x += rng.normal(0.0, a, m)
                p += rng.normal(0.0, a, m)
            part += [x.sum(), p.sum(), (x * x).sum(), (p * p).sum(), (x * p).sum()]
            done += m
        sums += part  # fixed stream order keeps the reduction bit-stable

    n = cfg.n_samples
    mx, mp = sums[0] / n, sums[1] / n
    vxx = float((sums[2] - n * mx * mx) / (n - 1))
    vpp = float((sums[3] - n * mp * mp) / (n - 1))
    vxp = float((sums[4] - n * mx * mp) / (n - 1))
    return EmpiricalCovariance(
        vxx=vxx,
        vpp=vpp,
        vxp=vxp,
        stderr_xx=vxx * math.sqrt(2.0 / (n - 1)),
        stderr_pp=vpp * math.sqrt(2.0 / (n - 1)),
        n=n,
        mean_x=float(mx),
        mean_p=float(mp),
    )


def estimate_fidelity(
    r: float, params: MemoryParams, cfg: SampleConfig
) -> FidelityEstimate:
    """Fidelity between the analytic input state and the sampled output.

    The uncertainty is propagated from the covariance standard errors by
    linearizing F = (1/2) det(M + M')^{-1/2}.
    """
    emp = sample_output_covariance(r, params, cfg)
    m_in = squeezed_vacuum_covariance(r)
    f = fidelity_from_moments(m_in.vxx, m_in.vpp, m_in.vxp, emp.vxx, emp.vpp, emp.vxp)
    sxx = m_in.vxx + emp.vxx
    spp = m_in.vpp + emp.vpp
    sxp = m_in.vxp + emp.vxp
    det = sxx * spp - sxp * sxp
    df_dxx = -0.5 * f * spp / det
    df_dpp = -0.5 * f * sxx / det
    df_dxp = f * sxp / det
    var_xp = (emp.vxx * emp.vpp + emp.vxp**2) / (emp.n - 1)
    var_f = (
        (df_dxx * emp.stderr_xx) ** 2
        + (df_dpp * emp.stderr_pp) ** 2
        + df_dxp**2 * var_xp
    )
    return FidelityEstimate(value=f, uncertainty=math.sqrt(var_f))
