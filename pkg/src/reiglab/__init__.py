"""Expected information gain estimation with robust post-processing.

Estimates the expected information gain (EIG) of candidate experiment
designs by nested Monte Carlo and its variational refinements, then
post-processes the sampled per-parameter divergences into worst-case
(or best-case) values over a KL ambiguity ball around the prior.
"""

from reiglab.core import RandomStream, log_mean_exp, standard_normal_draws, substream
from reiglab.estimators import (
    DivergenceSamples,
    EstimatorConfig,
    ScorerNetwork,
    ace_eig,
    divergence_samples,
    kl_per_theta,
    mine_eig,
    nmc_eig,
    train_scorer,
    vnmc_eig,
)
from reiglab.models import (
    ABTestModel,
    DiagnosticTestModel,
    PKModel,
    PreferenceModel,
    ab_design_matrix,
    design_grid,
    diagnostic_likelihood_table,
    model_from_config,
    pk_mean_response,
    preference_log_likelihood,
    sample_likelihood,
    sample_prior,
)
from reiglab.proposals import (
    AffineGaussianProposal,
    ExactPosteriorProposal,
    PriorProposal,
    propose,
    train_affine_proposal,
)
from reiglab.records import EstimateRecord, read_records_csv, write_records_csv
from reiglab.robust import (
    DualResult,
    design_gradient,
    dual_max,
    dual_min,
    reig_estimate,
    reig_joint_estimate,
    reig_max_estimate,
    subgradient_d,
)

__version__ = "0.1.0"

__all__ = [
    "ABTestModel",
    "AffineGaussianProposal",
    "DiagnosticTestModel",
    "DivergenceSamples",
    "DualResult",
    "EstimateRecord",
    "EstimatorConfig",
    "ExactPosteriorProposal",
    "PKModel",
    "PreferenceModel",
    "PriorProposal",
    "RandomStream",
    "ScorerNetwork",
    "ab_design_matrix",
    "ace_eig",
    "design_gradient",
    "design_grid",
    "diagnostic_likelihood_table",
    "divergence_samples",
    "dual_max",
    "dual_min",
    "kl_per_theta",
    "log_mean_exp",
    "mine_eig",
    "model_from_config",
    "nmc_eig",
    "pk_mean_response",
    "preference_log_likelihood",
    "propose",
    "read_records_csv",
    "reig_estimate",
    "reig_joint_estimate",
    "reig_max_estimate",
    "sample_likelihood",
    "sample_prior",
    "standard_normal_draws",
    "subgradient_d",
    "substream",
    "train_affine_proposal",
    "train_scorer",
    "vnmc_eig",
    "write_records_csv",
]
