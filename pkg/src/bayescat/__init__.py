"""Bayesian computerized adaptive testing under the Rasch model.

Core pieces: item response functions (`irt`), grid posteriors and Bayes
estimators (`posterior`), item banks (`bank`), one-step-ahead selection
rules (`selection`), the session state machine (`session`), the Monte
Carlo study harness (`simulate`), numerical bound checks and asymptotic
experiments (`theory`), and an HTTP facade (`service`) with a CLI (`cli`).
"""

from .bank import Item, ItemBank, load_bank, make_dense_bank
from .errors import (
    BankError,
    BankExhaustedError,
    BayescatError,
    ConfigError,
    DomainError,
    InvalidPriorError,
    ProtocolError,
    UnsupportedEstimatorError,
)
from .irt import (
    ResponseRecord,
    ThetaBounds,
    fisher_information,
    item_information,
    log_likelihood,
    mle,
    prob_correct,
    score,
)
from .posterior import (
    AbilityGrid,
    LossSpec,
    Posterior,
    PriorSpec,
    expected_loss,
    init_posterior,
    mean,
    median,
    mode,
    prob_in_interval,
    update,
    variance,
)
from .selection import (
    RULE_NAMES,
    SelectionRule,
    evaluate_rule,
    first_item,
    plug_in_theta,
    predictive_prob_correct,
    select_bayes_risk,
    select_max_info,
    select_min_expected_posterior_variance,
    select_posterior_weighted_info,
)
from .session import Estimate, SessionConfig, SessionState

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Item",
    "ItemBank",
    "load_bank",
    "make_dense_bank",
    "BayescatError",
    "DomainError",
    "InvalidPriorError",
    "UnsupportedEstimatorError",
    "BankError",
    "BankExhaustedError",
    "ProtocolError",
    "ConfigError",
    "ResponseRecord",
    "ThetaBounds",
    "prob_correct",
    "item_information",
    "log_likelihood",
    "score",
    "fisher_information",
    "mle",
    "AbilityGrid",
    "PriorSpec",
    "LossSpec",
    "Posterior",
    "init_posterior",
    "update",
    "mean",
    "median",
    "mode",
    "variance",
    "expected_loss",
    "prob_in_interval",
    "RULE_NAMES",
    "SelectionRule",
    "evaluate_rule",
    "first_item",
    "plug_in_theta",
    "predictive_prob_correct",
    "select_max_info",
    "select_posterior_weighted_info",
    "select_min_expected_posterior_variance",
    "select_bayes_risk",
    "SessionConfig",
    "SessionState",
    "Estimate",
]
