"""Activation descriptors: hyper-parameter quadruples, tagged specs, and the
text grammar used on the command line and in config files."""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass

__all__ = [
    "Kind",
    "Hyperparams",
    "ActivationSpec",
    "SpecParseError",
    "parse_activation_spec",
    "format_activation_spec",
    "SEARCH_RANGES",
]

# Experimental ranges used by the organized search.
SEARCH_RANGES = {
    "alpha": (0.0, 3.0),  # closed
    "beta": (0.0, 2.0),  # [0, 2)
    "gamma": (0.0, 4.0),  # (0, 4)
    "delta": (0.0, 1.0),  # {0, 1}
}


class Kind(enum.IntEnum):
    # values are the kernel dispatch codes; do not renumber
    TANHSOFT = 0
    TANHSOFT1 = 1
    TANHSOFT2 = 2
    SIGMOID = 3
    TANH = 4
    RELU = 5
    LEAKY_RELU = 6
    PRELU = 7
    SWISH = 8
    ESWISH = 9
    ELISH = 10
    SOFTSIGN = 11
    ELU = 12
    SOFTPLUS = 13


def _check_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True, order=True)
class Hyperparams:
    """The (alpha, beta, gamma, delta) quadruple indexing the TanhSoft family.

    The plain constructor accepts any finite alpha, ``beta >= 0``,
    ``gamma >= 0`` (zero gives the linear degenerate case) and
    ``delta in [0, 1]``. Use :meth:`search_point` for the narrower ranges the
    grid search is restricted to.
    """

    alpha: float
    beta: float
    gamma: float
    delta: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            object.__setattr__(self, name, _check_finite(name, getattr(self, name)))
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 <= self.delta <= 1.0:
            raise ValueError(f"delta must lie in [0, 1], got {self.delta}")

    @classmethod
    def search_point(cls, alpha, beta, gamma, delta) -> "Hyperparams":
        h = cls(alpha, beta, gamma, delta)
        if not 0.0 <= h.alpha <= 3.0:
            raise ValueError(f"alpha={h.alpha} outside search range [0, 3]")
        if not 0.0 <= h.beta < 2.0:
            raise ValueError(f"beta={h.beta} outside search range [0, 2)")
        if not 0.0 < h.gamma < 4.0:
            raise ValueError(f"gamma={h.gamma} outside search range (0, 4)")
        if h.delta not in (0.0, 1.0):
            raise ValueError(f"delta={h.delta} must be 0 or 1 in the search range")
        return h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.alpha, self.beta, self.gamma, self.delta)


# name -> (kind, number of required params, defaults for optional trailing params)
_GRAMMAR: dict[str, tuple[Kind, int, tuple[float, ...]]] = {
    "tanhsoft": (Kind.TANHSOFT, 4, ()),
    "tanhsoft1": (Kind.TANHSOFT1, 1, ()),
    "tanhsoft2": (Kind.TANHSOFT2, 2, ()),
    "sigmoid": (Kind.SIGMOID, 0, ()),
    "tanh": (Kind.TANH, 0, ()),
    "relu": (Kind.RELU, 0, ()),
    "lrelu": (Kind.LEAKY_RELU, 0, (0.01,)),
    "prelu": (Kind.PRELU, 0, (0.25,)),
    "swish": (Kind.SWISH, 0, ()),
    "eswish": (Kind.ESWISH, 0, (1.375,)),
    "elish": (Kind.ELISH, 0, ()),
    "softsign": (Kind.SOFTSIGN, 0, ()),
    "elu": (Kind.ELU, 0, (1.0,)),
    "softplus": (Kind.SOFTPLUS, 0, ()),
}
_NAMES = {kind: name for name, (kind, _, _) in _GRAMMAR.items()}

_DISPLAY = {
    Kind.TANHSOFT: "TanhSoft",
    Kind.TANHSOFT1: "TanhSoft-1",
    Kind.TANHSOFT2: "TanhSoft-2",
    Kind.SIGMOID: "Sigmoid",
    Kind.TANH: "Tanh",
    Kind.RELU: "ReLU",
    Kind.LEAKY_RELU: "Leaky ReLU",
    Kind.PRELU: "PReLU",
    Kind.SWISH: "Swish",
    Kind.ESWISH: "E-Swish",
    Kind.ELISH: "ELiSH",
    Kind.SOFTSIGN: "Softsign",
    Kind.ELU: "ELU",
    Kind.SOFTPLUS: "Softplus",
}


@dataclass(frozen=True)
class ActivationSpec:
    """One activation: a kind tag plus its kind-specific parameters.

    ``params`` holds, in order: the four family hyper-parameters for
    ``TANHSOFT``; ``(alpha,)`` for ``TANHSOFT1``; ``(beta, gamma)`` for
    ``TANHSOFT2``; the negative slope for ``LEAKY_RELU``/``PRELU``; the
    scale for ``ESWISH``; alpha for ``ELU``; nothing otherwise.
    """

    kind: Kind
    params: tuple[float, ...] = ()

    def __post_init__(self):
        kind = Kind(self.kind)
        object.__setattr__(self, "kind", kind)
        name = _NAMES[kind]
        _, required, optional = _GRAMMAR[name]
        params = tuple(_check_finite(f"{name} parameter", p) for p in self.params)
        if len(params) < required or len(params) > required + len(optional):
            raise ValueError(f"{name} takes {_arity_text(name)} parameter(s), got {len(params)}")
        params = params + optional[len(params) - required :]
        object.__setattr__(self, "params", params)
        if kind in (Kind.TANHSOFT, Kind.TANHSOFT1, Kind.TANHSOFT2):
            self.hyperparams  # validates
        if kind is Kind.TANHSOFT2 and params[1] <= 0:
            raise ValueError("tanhsoft2 requires gamma > 0")
        if kind is Kind.ELU and params[0] < 0:
            raise ValueError("elu alpha must be >= 0")

    # constructors for the common cases
    @classmethod
    def family(cls, h: Hyperparams) -> "ActivationSpec":
        return cls(Kind.TANHSOFT, h.as_tuple())

    @classmethod
    def tanhsoft1(cls, alpha: float) -> "ActivationSpec":
        return cls(Kind.TANHSOFT1, (alpha,))

    @classmethod
    def tanhsoft2(cls, beta: float, gamma: float) -> "ActivationSpec":
        return cls(Kind.TANHSOFT2, (beta, gamma))

    @property
    def hyperparams(self) -> Hyperparams | None:
        """Family coordinates, or None for baselines."""
        if self.kind is Kind.TANHSOFT:
            return Hyperparams(*self.params)
        if self.kind is Kind.TANHSOFT1:
            # gamma is inert when beta = 0
            return Hyperparams(self.params[0], 0.0, 1.0, 1.0)
        if self.kind is Kind.TANHSOFT2:
            return Hyperparams(0.0, self.params[0], self.params[1], 0.0)
        return None

    def kernel_args(self) -> tuple[int, float, float, float, float]:
        """(code, p0, p1, p2, p3) as consumed by the elementwise kernels."""
        h = self.hyperparams
        if h is not None:
            return (int(Kind.TANHSOFT), *h.as_tuple())
        padded = self.params + (0.0,) * (4 - len(self.params))
        return (int(self.kind), *padded)

    @property
    def has_kink(self) -> bool:
        return self.kind in (Kind.RELU, Kind.LEAKY_RELU, Kind.PRELU, Kind.ELU)

    @property
    def display_name(self) -> str:
        base = _DISPLAY[self.kind]
        if not self.params:
            return base
        return f"{base}({','.join(_fmt(p) for p in self.params)})"

    def __str__(self) -> str:
        return format_activation_spec(self)


class SpecParseError(ValueError):
    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position} in {text!r}\n{grammar_help()}")
        self.text = text
        self.position = position


def _arity_text(name: str) -> str:
    _, required, optional = _GRAMMAR[name]
    if not optional:
        return str(required)
    return f"{required}..{required + len(optional)}"


def grammar_help() -> str:
    lines = ["activation grammar: NAME or NAME(v1,v2,...) with real values; names:"]
    for name in _GRAMMAR:
        lines.append(f"  {name:<10} {_arity_text(name)} parameter(s)")
    return "\n".join(lines)


def _fmt(v: float) -> str:
    # shortest round-tripping repr, integers without the trailing ".0"
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(v)


def format_activation_spec(spec: ActivationSpec) -> str:
    name = _NAMES[spec.kind]
    if not spec.params:
        return name
    return f"{name}({','.join(_fmt(p) for p in spec.params)})"


_TOKEN = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*")
_NUMBER = re.compile(r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*")


def parse_activation_spec(text: str) -> ActivationSpec:
    """Parse e.g. ``relu``, ``lrelu(0.01)``, ``tanhsoft(0,0.6,1,0)``."""
    m = _TOKEN.match(text)
    if not m:
        raise SpecParseError("expected an activation name", text, 0)
    name = m.group(1).lower()
    if name not in _GRAMMAR:
        raise SpecParseError(f"unknown activation {m.group(1)!r}", text, m.start(1))
    pos = m.end()
    values: list[float] = []
    if pos < len(text):
        if text[pos] != "(":
            raise SpecParseError("expected '(' or end of input", text, pos)
        pos += 1
        if text[pos:].lstrip().startswith(")"):
            pos = text.index(")", pos) + 1
        else:
            while True:
                nm = _NUMBER.match(text, pos)
                if not nm:
                    raise SpecParseError("expected a number", text, pos)
                values.append(float(nm.group(1)))
                pos = nm.end()
                if pos < len(text) and text[pos] == ",":
                    pos += 1
                    continue
                if pos < len(text) and text[pos] == ")":
                    pos += 1
                    break
                raise SpecParseError("expected ',' or ')'", text, pos)
        if text[pos:].strip():
            raise SpecParseError("trailing characters", text, pos)
    _, required, optional = _GRAMMAR[name]
    if not required <= len(values) <= required + len(optional):
        raise SpecParseError(
            f"{name} takes {_arity_text(name)} parameter(s), got {len(values)}", text, m.start(1)
        )
    try:
        return ActivationSpec(_GRAMMAR[name][0], tuple(values))
    except ValueError as exc:
        raise SpecParseError(str(exc), text, m.end(1)) from exc
