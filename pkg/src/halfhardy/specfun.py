"""Gamma-family special functions and the stable normalising constant.

Everything here works in binary64.  ``math.lgamma`` (a Lanczos evaluation
in CPython) supplies log-gamma; products and quotients of gammas are formed
in log space so that moderately large dimensions do not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LOG_PI = math.log(math.pi)
LOG_2 = math.log(2.0)


@dataclass(frozen=True)
class FracParams:
    """Dimension ``d`` and stability index ``alpha`` with ``0 < alpha < 2``."""

    d: int
    alpha: float

    def __post_init__(self) -> None:
        if isinstance(self.d, bool) or int(self.d) != self.d or self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d!r}")
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        object.__setattr__(self, "d", int(self.d))
        object.__setattr__(self, "alpha", float(self.alpha))


def log_gamma(x: float) -> float:
    """Return ``ln Gamma(x)`` for ``x > 0``."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x!r}")
    return math.lgamma(x)


def log_beta(a: float, b: float) -> float:
    if not (a > 0 and b > 0):
        raise ValueError(f"beta requires a > 0 and b > 0, got ({a!r}, {b!r})")
    return math.lgamma(a) + math.lgamma(b) - math.lgamma(a + b)


def beta(a: float, b: float) -> float:
    """Euler beta function ``B(a, b) = Gamma(a) Gamma(b) / Gamma(a + b)``."""
    return math.exp(log_beta(a, b))


def log_abs_gamma_neg_half(alpha: float) -> float:
    """``ln |Gamma(-alpha/2)|`` via ``|Gamma(-alpha/2)| = (2/alpha) Gamma(1 - alpha/2)``."""
    return LOG_2 - math.log(alpha) + math.lgamma(1.0 - 0.5 * alpha)


def stable_normalizer(params: FracParams) -> float:
    """Normalising constant of the fractional Laplacian kernel.

    ``A = Gamma((d + alpha)/2) / (2^-alpha pi^(d/2) |Gamma(-alpha/2)|)``.
    The negative-argument gamma is never evaluated; the reflection above
    keeps the expression finite and sign-free as ``alpha -> 0``.
    """
    d, alpha = params.d, params.alpha
    log_a = (
        math.lgamma(0.5 * (d + alpha))
        + alpha * LOG_2
        - 0.5 * d * LOG_PI
        - log_abs_gamma_neg_half(alpha)
    )
    return math.exp(log_a)


def duplication_residual(z: float) -> float:
    """``Gamma(2z) - (2 pi)^(-1/2) 2^(2z - 1/2) Gamma(z) Gamma(z + 1/2)``.

    Zero up to rounding; serves as a self-test of the gamma evaluation.
    """
    if not z > 0:
        raise ValueError(f"duplication_residual requires z > 0, got {z!r}")
    lhs = math.gamma(2.0 * z)
    rhs = 2.0 ** (2.0 * z - 0.5) / math.sqrt(2.0 * math.pi) * math.gamma(z) * math.gamma(z + 0.5)
    return lhs - rhs
