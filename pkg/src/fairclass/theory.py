"""Leading-order misclassification formulas.

All asymptotic ``(1 + o_P(1))`` factors are evaluated at exactly 1, so each
function returns a deterministic leading-order value.
"""

import math
from dataclasses import dataclass
from typing import Optional

__all__ = [
    "TheoryInputs",
    "normal_cdf",
    "theorem1_bound",
    "theorem1_worst_case",
    "theorem1_limit",
    "theorem4_error",
    "oracle_error_eq41",
    "theorem5_bound",
    "FORMULAS",
    "evaluate",
]


@dataclass(frozen=True)
class TheoryInputs:
    signal: float = 0.0
    m: Optional[int] = None
    p: Optional[int] = None
    n1: Optional[int] = None
    n2: Optional[int] = None
    b0: float = 1.0
    b: float = 0.0
    C_p: Optional[float] = None
    C0: Optional[float] = None

    def __post_init__(self):
        for name in ("m", "p", "n1", "n2"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")
        if self.b0 < 1:
            raise ValueError("b0 (largest correlation eigenvalue) must be >= 1")
        if self.signal < 0:
            raise ValueError("signal must be >= 0")


def normal_cdf(x: float) -> float:
    """Standard Gaussian distribution function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def _upper_tail(psi: float) -> float:
    return 1.0 - normal_cdf(psi)


def theorem1_bound(signal: float, p: int, n1: int, n2: int, b0: float = 1.0) -> float:
    """Upper bound on the error of the full independence rule.

    ``signal`` is alpha' D^{-1} alpha and ``b0`` the largest eigenvalue of
    the correlation matrix.
    """
    n = n1 + n2
    r = n1 * n2 / (p * n)
    num = math.sqrt(r) * signal + math.sqrt(p / (n * n1 * n2)) * (n1 - n2)
    den = 2.0 * math.sqrt(b0) * math.sqrt(1.0 + r * signal)
    return _upper_tail(num / den)


def theorem1_worst_case(C_p: float, p: int, n1: int, n2: int, b0: float = 1.0) -> float:
    """Worst-case error over the parameter space with signal floor ``C_p``."""
    n = n1 + n2
    return _upper_tail(0.5 * math.sqrt(n1 * n2 / (p * n * b0)) * C_p)


def theorem1_limit(C0: float, b0: float = 1.0) -> float:
    """Limit of the worst-case error when sqrt(n1 n2/(p n)) C_p -> C0."""
    return _upper_tail(C0 / (2.0 * math.sqrt(b0)))


def _subset_error(signal, m, n1, n2, penalty=0.0):
    n = n1 + n2
    num = signal + m * (n1 - n2) / (n1 * n2) - penalty
    den = 2.0 * math.sqrt(signal + n * m / (n1 * n2))
    return _upper_tail(num / den)


def theorem4_error(signal: float, m: int, n1: int, n2: int) -> float:
    """Error of the unit-variance rule truncated to m features whose squared
    mean differences sum to ``signal``."""
    return _subset_error(signal, m, n1, n2)


def oracle_error_eq41(signal: float, m: int, n1: int, n2: int) -> float:
    """Approximate error of the oracle-gated rule on a set of m features."""
    return _subset_error(signal, m, n1, n2)


def theorem5_bound(signal: float, m: int, b: float, n1: int, n2: int) -> float:
    """Error bound for hard thresholding at ``b`` with m retained features.

    The threshold enters as a penalty ``m b^2`` subtracted from the
    numerator, so ``b = 0`` reproduces :func:`theorem4_error`.
    """
    if b < 0:
        raise ValueError("b must be >= 0")
    return _subset_error(signal, m, n1, n2, penalty=m * b * b)


#: formula name -> (function, required TheoryInputs fields, description)
FORMULAS = {
    "thm1": (lambda t: theorem1_bound(t.signal, t.p, t.n1, t.n2, t.b0),
             ("signal", "p", "n1", "n2"), "independence-rule upper bound"),
    "thm1-worst": (lambda t: theorem1_worst_case(t.C_p, t.p, t.n1, t.n2, t.b0),
                   ("C_p", "p", "n1", "n2"), "independence-rule worst case"),
    "thm1-limit": (lambda t: theorem1_limit(t.C0, t.b0), ("C0",), "independence-rule worst-case limit"),
    "thm4": (lambda t: theorem4_error(t.signal, t.m, t.n1, t.n2),
             ("m", "n1", "n2"), "truncated nearest-centroid error"),
    "eq41": (lambda t: oracle_error_eq41(t.signal, t.m, t.n1, t.n2),
             ("m", "n1", "n2"), "oracle-gated rule error"),
    "thm5": (lambda t: theorem5_bound(t.signal, t.m, t.b, t.n1, t.n2),
             ("m", "n1", "n2"), "hard-threshold rule upper bound"),
}


def evaluate(formula: str, inputs: TheoryInputs):
    """Evaluate a named formula; returns ``(value, description)``."""
    try:
        fn, required, tag = FORMULAS[formula]
    except KeyError:
        raise ValueError(f"unknown formula {formula!r}; choose from {sorted(FORMULAS)}") from None
    missing = [k for k in required if getattr(inputs, k) is None]
    if missing:
        raise ValueError(f"{formula} needs {', '.join(missing)}")
    return fn(inputs), tag
