"""Sequential probability assignment for the Gaussian location model.

Predictors with closed-form or quadrature log-densities, Monte-Carlo regret
estimates, misspecified capacity on finite alphabets, and the accompanying
closed-form quantities.
"""

__version__ = "0.1.0"

from .errors import (ContractViolation, ConvergenceError, EmptyClassError, HypothesisViolated,
                     InvalidGenerator, NumericFailure)
from .glm import GeneratorSpec, GlmSummary, ThetaBox, distance_to_box, project_enlarged, summarize
from .predictors import PredictorSpec, shtarkov_log_normalizer
from .regret import (RegretEstimate, analytic_jeffreys_regret, analytic_shtarkov_regret_terms, pac_regret,
                     realized_regret)
from .capacity import (DiscreteInstance, kemperman_capacity, misspec_capacity, saddle_certificate,
                       sandwich_certificate)
from . import theory

__all__ = [
    "ContractViolation", "ConvergenceError", "EmptyClassError", "HypothesisViolated", "InvalidGenerator",
    "NumericFailure", "GeneratorSpec", "GlmSummary", "ThetaBox", "distance_to_box", "project_enlarged",
    "summarize", "PredictorSpec", "shtarkov_log_normalizer", "RegretEstimate", "analytic_jeffreys_regret",
    "analytic_shtarkov_regret_terms", "pac_regret", "realized_regret", "DiscreteInstance",
    "kemperman_capacity", "misspec_capacity", "saddle_certificate", "sandwich_certificate", "theory",
]
