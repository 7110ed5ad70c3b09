"""Coefficient-regularized distribution regression over two-stage samples.

Inputs are bags of points standing in for unobserved distributions. Bags are
mapped to empirical mean embeddings through a base-space kernel; an outer
kernel (PSD, indefinite, or asymmetric) acts on those embeddings; and the
regressor penalizes the coefficient vector directly, so its linear system
stays symmetric positive definite no matter the kernel. A ridge baseline,
synthetic data generation with known targets, and rate/saturation analysis
tools round out the package.
"""

from .analysis import (
    RateFit,
    SaturationConfig,
    SaturationReport,
    Schedule,
    ScheduleParams,
    SweepConfig,
    SweepResult,
    effective_dimension,
    fit_decay_exponent,
    rate_fit,
    run_rate_experiment,
    saturation_compare,
    schedule,
    select_lambda_holdout,
)
from .embedding import (
    Bag,
    BagParams,
    EmbeddingKernelSpec,
    embed_inner,
    embed_sq_dist,
    kernel_eval,
)
from .errors import (
    ConfigError,
    ContractError,
    DistRegError,
    InputError,
    NumericalError,
)
from .gram import (
    GramMatrix,
    SpectrumReport,
    build_cross_gram,
    build_gram,
    kernel_fingerprint,
    spectrum,
)
from .outer import OuterKernelSpec, SymmetryCheck, check_symmetry, outer_eval
from .solver import (
    CoefficientModel,
    FitReport,
    excess_error,
    fit_coefficient,
    fit_krr,
    predict,
)
from .synth import (
    MetaDistributionSpec,
    SyntheticTarget,
    TwoStageDataset,
    generate,
    resample_second_stage,
)

__all__ = [
    "Bag",
    "BagParams",
    "CoefficientModel",
    "ConfigError",
    "ContractError",
    "DistRegError",
    "EmbeddingKernelSpec",
    "FitReport",
    "GramMatrix",
    "InputError",
    "MetaDistributionSpec",
    "NumericalError",
    "OuterKernelSpec",
    "RateFit",
    "SaturationConfig",
    "SaturationReport",
    "Schedule",
    "ScheduleParams",
    "SpectrumReport",
    "SweepConfig",
    "SweepResult",
    "SymmetryCheck",
    "SyntheticTarget",
    "TwoStageDataset",
    "build_cross_gram",
    "build_gram",
    "check_symmetry",
    "effective_dimension",
    "embed_inner",
    "embed_sq_dist",
    "excess_error",
    "fit_coefficient",
    "fit_decay_exponent",
    "fit_krr",
    "generate",
    "kernel_eval",
    "kernel_fingerprint",
    "outer_eval",
    "predict",
    "rate_fit",
    "resample_second_stage",
    "run_rate_experiment",
    "saturation_compare",
    "schedule",
    "select_lambda_holdout",
    "spectrum",
]

__version__ = "0.1.0"
