"""Photon-echo quantum memory for optical squeezed states.

Storage fidelity and squeezed-quadrature variance of a HYPER-style
backward-retrieved photon-echo memory, computed three independent ways:
a closed-form channel model (`channel`), direct Maxwell-Bloch integration
(`mbsolver`) and Monte-Carlo Langevin sampling (`montecarlo`), with
Gaussian-state algebra in `gaussian` and experiment orchestration in
`config`/`cli`.
"""

__version__ = "0.1.0"

from .channel import (
    CLASSICAL_FIDELITY_THRESHOLD,
    MemoryParams,
    NoiseWeights,
    ParameterRegimeError,
    efficiency,
    fidelity_curve,
    noise_weights,
    output_covariance,
    squeezed_quadrature_variance,
    storage_fidelity,
)
from .gaussian import (
    CovarianceMatrix,
    SqueezingSpec,
    db_to_r,
    gaussian_fidelity,
    r_to_db,
    squeezed_vacuum_covariance,
    vacuum_covariance,
)
from .mbsolver import (
    CoherenceField,
    EchoResult,
    SolverGrid,
    StepSizeError,
    absorb,
    flat_top_pulse,
    gaussian_pulse,
    rephase,
    retrieve,
    run_protocol,
)
from .montecarlo import (
    EmpiricalCovariance,
    SampleConfig,
    estimate_fidelity,
    sample_output_covariance,
)

__all__ = [
    "__version__",
    "CLASSICAL_FIDELITY_THRESHOLD",
    "CovarianceMatrix",
    "CoherenceField",
    "EchoResult",
    "EmpiricalCovariance",
    "MemoryParams",
    "NoiseWeights",
    "ParameterRegimeError",
    "SampleConfig",
    "SolverGrid",
    "SqueezingSpec",
    "StepSizeError",
    "absorb",
    "db_to_r",
    "efficiency",
    "estimate_fidelity",
    "fidelity_curve",
    "flat_top_pulse",
    "gaussian_fidelity",
    "gaussian_pulse",
    "noise_weights",
    "output_covariance",
    "r_to_db",
    "rephase",
    "retrieve",
    "run_protocol",
    "sample_output_covariance",
    "squeezed_quadrature_variance",
    "squeezed_vacuum_covariance",
    "storage_fidelity",
    "vacuum_covariance",
]
