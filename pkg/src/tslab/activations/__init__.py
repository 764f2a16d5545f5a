from .spec import (
    SEARCH_RANGES,
    ActivationSpec,
    Hyperparams,
    Kind,
    SpecParseError,
    format_activation_spec,
    grammar_help,
    parse_activation_spec,
)
from .zoo import (
    DomainError,
    activation_deriv,
    activation_eval,
    baseline_deriv,
    baseline_eval,
    deriv_map,
    eval_deriv_map,
    eval_map,
    tanhsoft1_deriv,
    tanhsoft1_eval,
    tanhsoft2_deriv,
    tanhsoft2_eval,
    tanhsoft_deriv,
    tanhsoft_eval,
)

__all__ = [
    "SEARCH_RANGES",
    "ActivationSpec",
    "DomainError",
    "Hyperparams",
    "Kind",
    "SpecParseError",
    "activation_deriv",
    "activation_eval",
    "baseline_deriv",
    "baseline_eval",
    "deriv_map",
    "eval_deriv_map",
    "eval_map",
    "format_activation_spec",
    "grammar_help",
    "parse_activation_spec",
    "tanhsoft1_deriv",
    "tanhsoft1_eval",
    "tanhsoft2_deriv",
    "tanhsoft2_eval",
    "tanhsoft_deriv",
    "tanhsoft_eval",
]
