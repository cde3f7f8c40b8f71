"""Ignorance-region analysis for multi-cause models with a latent confounder.

Two exactly solvable model families (linear-Gaussian and all-binary), a
penalized maximum-likelihood estimation lab with optional proxy variables,
positivity diagnostics for latent-label recovery, and a CLI harness that
writes figure-ready CSVs deterministically.
"""

__version__ = "0.1.0"

from .binary_latent import (
    BinaryParams,
    DegenerateMarginError,
    IgnoranceInterval,
    JointTable,
    causal_from_table,
    copula_density,
    degenerate_ignorance,
    demo_params,
    frechet_bounds,
    ignorance_region,
    intervention_prob,
    log_odds_ratio,
    logistic_outcome_table,
    observational_prob,
    posterior_u,
    table_from_p11,
)
from .estimation import (
    Dataset,
    FitConfig,
    FitResult,
    ProxyParams,
    fit,
    log_likelihood,
    objective_and_gradient,
    pack_params,
    penalized_objective,
    sample_dataset,
    unpack_params,
)
from .linear_gaussian import (
    AsymptoticFrame,
    InvalidScalingError,
    ObservableCov,
    StructuralParams,
    asymptotic_shift_ratio,
    equivalent_params,
    ignorance_multiplier,
    implied_outcome_variance,
    observable_covariance,
    valid_c_range,
)
from .positivity import (
    ProjectionSample,
    hoeffding_envelope,
    misclassification_rate,
    projection_cloud,
    u_hat,
)

__all__ = [
    "__version__",
    # linear-Gaussian model
    "AsymptoticFrame",
    "InvalidScalingError",
    "ObservableCov",
    "StructuralParams",
    "asymptotic_shift_ratio",
    "equivalent_params",
    "ignorance_multiplier",
    "implied_outcome_variance",
    "observable_covariance",
    "valid_c_range",
    # binary latent model
    "BinaryParams",
    "DegenerateMarginError",
    "IgnoranceInterval",
    "JointTable",
    "causal_from_table",
    "copula_density",
    "degenerate_ignorance",
    "demo_params",
    "frechet_bounds",
    "ignorance_region",
    "intervention_prob",
    "log_odds_ratio",
    "logistic_outcome_table",
    "observational_prob",
    "posterior_u",
    "table_from_p11",
    # estimation
    "Dataset",
    "FitConfig",
    "FitResult",
    "ProxyParams",
    "fit",
    "log_likelihood",
    "objective_and_gradient",
    "pack_params",
    "penalized_objective",
    "sample_dataset",
    "unpack_params",
    # positivity
    "ProjectionSample",
    "hoeffding_envelope",
    "misclassification_rate",
    "projection_cloud",
    "u_hat",
]
