"""Gaussian-state algebra for a single optical mode.

Covariance matrices, squeezing parameterization and the zero-mean Gaussian
fidelity used by the memory channel.  Conventions:

* vacuum quadrature variance is 1/4 per quadrature (so a pure state has
  det M = 1/16).  Much of the continuous-variable literature uses 1/2;
  everything in this package assumes 1/4.
* "N dB of squeezing" means a noise reduction e^{-2r} = 10^{-N/10}.
* states are zero-mean throughout; there is no displacement anywhere in
  this package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = [
    "VACUUM_VARIANCE",
    "CovarianceMatrix",
    "SqueezingSpec",
    "db_to_r",
    "r_to_db",
    "squeezed_vacuum_covariance",
    "vacuum_covariance",
    "gaussian_fidelity",
    "fidelity_from_moments",
]

VACUUM_VARIANCE = 0.25

# slack for the det >= 1/16 uncertainty check; construction from exact
# expressions like e^{-2r}/4 * e^{2r}/4 must never trip on rounding
_UNCERTAINTY_RTOL = 1e-9


@dataclass(frozen=True)
class CovarianceMatrix:
    """2x2 symmetric quadrature covariance [[vxx, vxp], [vxp, vpp]].

    Valid instances are positive definite and satisfy the uncertainty
    relation det >= 1/16 (vacuum-variance-1/4 convention).
    """

    vxx: float
    vpp: float
    vxp: float = 0.0

    def __post_init__(self):
        for name in ("vxx", "vpp", "vxp"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v!r}")
        if self.vxx <= 0.0 or self.vpp <= 0.0:
            raise ValueError(
                f"diagonal variances must be positive, got vxx={self.vxx}, vpp={self.vpp}"
            )
        d = self.det
        if d <= 0.0:
            raise ValueError(f"covariance matrix is not positive definite (det={d})")
        if d < 0.0625 * (1.0 - _UNCERTAINTY_RTOL):
            raise ValueError(
                f"uncertainty relation violated: det={d} < 1/16 "
                "(vacuum variance is 1/4 in this convention)"
            )

    @property
    def det(self) -> float:
        return self.vxx * self.vpp - self.vxp * self.vxp

    @property
    def purity(self) -> float:
        """1/(4 sqrt(det)); equals 1 for pure states."""
        return 0.25 / math.sqrt(self.det)


@dataclass(frozen=True)
class SqueezingSpec:
    """Squeezing parameter r >= 0 and the quadrature axis it squeezes."""

    r: float
    axis: str = "x"

    def __post_init__(self):
        if not math.isfinite(self.r) or self.r < 0.0:
            raise ValueError(f"squeezing parameter must be finite and >= 0, got {self.r!r}")
        if self.axis not in ("x", "p"):
            raise ValueError(f"axis must be 'x' or 'p', got {self.axis!r}")

    @property
    def db(self) -> float:
        return r_to_db(self.r)


def db_to_r(db: float) -> float:
    """Squeezing parameter r for a noise reduction of `db` decibels.

    e^{-2r} = 10^{-db/10}, i.e. r = db * ln(10) / 20.
    """
    if not math.isfinite(db) or db < 0.0:
        raise ValueError(f"squeezing in dB must be finite and >= 0, got {db!r}")
    return db * math.log(10.0) / 20.0


def r_to_db(r: float) -> float:
    """Inverse of db_to_r: 10*log10(e^{2r})."""
    if not math.isfinite(r) or r < 0.0:
        raise ValueError(f"squeezing parameter must be finite and >= 0, got {r!r}")
    return 20.0 * r / math.log(10.0)


def vacuum_covariance() -> CovarianceMatrix:
    return CovarianceMatrix(VACUUM_VARIANCE, VACUUM_VARIANCE, 0.0)


def squeezed_vacuum_covariance(spec: SqueezingSpec | float) -> CovarianceMatrix:
    """Covariance of a squeezed vacuum state: diag(e^{-2r}, e^{2r})/4.

    A bare float is taken as r with the x axis squeezed.  The result is
    pure (det = 1/16 up to rounding).
    """
    if not isinstance(spec, SqueezingSpec):
        spec = SqueezingSpec(float(spec))
    lo = math.exp(-2.0 * spec.r) / 4.0
    hi = math.exp(2.0 * spec.r) / 4.0
    if spec.axis == "x":
        return CovarianceMatrix(lo, hi, 0.0)
    return CovarianceMatrix(hi, lo, 0.0)


def fidelity_from_moments(
    vxx1: float, vpp1: float, vxp1: float, vxx2: float, vpp2: float, vxp2: float
) -> float:
    """Zero-mean Gaussian fidelity from raw second moments.

    F = (1/2) / sqrt(det(M + M')).  This low-level form exists for
    statistical estimators whose sampled moments may sit a hair outside
    the exact uncertainty bound; physical states should go through
    gaussian_fidelity.
    """
    sxx = vxx1 + vxx2
    spp = vpp1 + vpp2
    sxp = vxp1 + vxp2
    d = sxx * spp - sxp * sxp
    if d <= 0.0:
        raise ArithmeticError(f"covariance sum is singular or indefinite (det={d})")
    return 0.5 / math.sqrt(d)


def gaussian_fidelity(m_in: CovarianceMatrix, m_out: CovarianceMatrix) -> float:
    """Fidelity between two zero-mean Gaussian states.

    Symmetric in its arguments, in (0, 1], and equal to 1 exactly when
    the two states coincide and are pure.  For valid covariances the
    mathematical value never exceeds 1 (Minkowski determinant
    inequality), so the result is clamped against last-ulp rounding.
    """
    return min(
        fidelity_from_moments(
            m_in.vxx, m_in.vpp, m_in.vxp, m_out.vxx, m_out.vpp, m_out.vxp
        ),
        1.0,
    )
