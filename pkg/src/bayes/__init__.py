"""Hierarchical Bayesian model of the slope grid."""

from src.bayes.diagnostics import (
    Diagnostics,
    bfmi,
    bulk_ess,
    diagnostics,
    split_rhat,
)
from src.bayes.model import (
    BayesModel,
    BayesModelSpec,
    ParameterLayout,
    single_cell_mask,
    sum_to_zero_basis,
)
from src.bayes.nuts import (
    PosteriorDraws,
    SamplerSettings,
    Target,
    hamiltonian_drift,
    sample,
)
from src.bayes.posterior import model_spec, sample_posterior, settings_from_config
from src.bayes.ppc import PPCResult, posterior_predictive
from src.bayes.summary import compare_domain_intercepts, summarize, summarize_values

__all__ = [
    "BayesModel",
    "BayesModelSpec",
    "Diagnostics",
    "PPCResult",
    "ParameterLayout",
    "PosteriorDraws",
    "SamplerSettings",
    "Target",
    "bfmi",
    "bulk_ess",
    "compare_domain_intercepts",
    "diagnostics",
    "hamiltonian_drift",
    "model_spec",
    "posterior_predictive",
    "sample",
    "sample_posterior",
    "settings_from_config",
    "single_cell_mask",
    "split_rhat",
    "summarize",
    "summarize_values",
]
