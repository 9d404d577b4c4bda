"""Closed-form Hardy constants for the half-space and the identities tying them together.

Notation used throughout the package:

``gamma(alpha, p)``
    the integral ``int_0^1 (t^p - 1)(1 - t^(alpha-p-1)) / (1-t)^(1+alpha) dt``,
    i.e. the coefficient in ``L x^p = gamma(alpha, p) x^(p - alpha)`` for the
    regional operator on the half-line.
``kappa(d, alpha)``
    the sharp Hardy constant of the half-space ``{x_d > 0}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .specfun import LOG_2, LOG_PI, FracParams, beta, log_beta, stable_normalizer

# Interpolation step for gamma_general near alpha = 1.
_INTERP_H = 1e-3
_ALPHA_ONE_BAND = 1e-4


@dataclass(frozen=True)
class PowerExponent:
    """Exponent ``p`` of the power function ``x_d^p``; requires ``-1 < p < alpha``."""

    p: float
    alpha: float

    def __post_init__(self) -> None:
        if not (0.0 < self.alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha!r}")
        if not (-1.0 < self.p < self.alpha):
            raise ValueError(f"p must lie in (-1, alpha={self.alpha}), got {self.p!r}")

    def __float__(self) -> float:
        return float(self.p)


def _as_p(p, alpha: float) -> float:
    if isinstance(p, PowerExponent):
        if p.alpha != alpha:
            raise ValueError(f"PowerExponent built for alpha={p.alpha}, used with alpha={alpha}")
        return p.p
    return PowerExponent(float(p), alpha).p


def _check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    return float(alpha)


def log_dimension_factor(d: int, alpha: float) -> float:
    """``ln[pi^((d-1)/2) Gamma((1+alpha)/2) / Gamma((alpha+d)/2)]``."""
    return 0.5 * (d - 1) * LOG_PI + math.lgamma(0.5 * (1.0 + alpha)) - math.lgamma(0.5 * (alpha + d))


def dimension_factor(d: int, alpha: float) -> float:
    return math.exp(log_dimension_factor(d, alpha))


def _half_beta_term(alpha: float) -> float:
    # B((1+alpha)/2, (2-alpha)/2) * 2^-alpha
    return math.exp(log_beta(0.5 * (1.0 + alpha), 0.5 * (2.0 - alpha)) - alpha * LOG_2)


def gamma_half(alpha: float) -> float:
    """``gamma(alpha, (alpha-1)/2) = -(1/alpha) [B((1+alpha)/2, (2-alpha)/2) 2^-alpha - 1]``.

    Non-positive for every ``alpha``; exactly ``0.0`` at ``alpha = 1``.
    """
    alpha = _check_alpha(alpha)
    if alpha == 1.0:
        return 0.0
    return -(_half_beta_term(alpha) - 1.0) / alpha


def kappa(params: FracParams) -> float:
    """Sharp Hardy constant ``kappa_{d,alpha}`` of the half-space.

    Exactly ``0.0`` at ``alpha = 1``.
    """
    if params.alpha == 1.0:
        return 0.0
    alpha = params.alpha
    return dimension_factor(params.d, alpha) * (_half_beta_term(alpha) - 1.0) / alpha


def _gamma_general_formula(alpha: float, p: float) -> float:
    b = 2.0 - alpha
    first = (p + 1.0 - alpha) * (p + 2.0 - alpha) * beta(p + 1.0, b)
    # (1 - alpha)(2 - alpha) B(1, 2 - alpha) == 1 - alpha
    middle = 1.0 - alpha
    last = p * (p - 1.0) * beta(alpha - p, b)
    return (first - middle + last) / (alpha * (alpha - 1.0))


def _gamma_at_one(p: float) -> float:
    # derivative of the numerator at alpha = 1, simplified by digamma reflection
    return 1.0 - math.pi * p / math.tan(math.pi * p)


def gamma_general(alpha: float, p) -> float:
    """``gamma(alpha, p)`` from the beta-function closed form.

    The closed form carries a removable ``1/(alpha - 1)`` singularity.  At
    ``alpha = 1`` its limit is ``1 - pi p cot(pi p)``.  For
    ``0 < |alpha - 1| < 1e-4`` the smooth product ``(alpha - p) gamma`` is
    interpolated by the quartic through ``alpha = 1 + k h``, ``h = 1e-3``,
    ``k = -2..2`` (the ``k = 0`` node exact).  When ``p`` is too close to 1
    for the left nodes, ``k = 0..4`` or ``k = 1..5`` are used instead; the
    band is narrower than ``h``, so those nodes always exceed ``p``.
    """
    alpha = _check_alpha(alpha)
    p = _as_p(p, alpha)
    if p == 0.0 or p == alpha - 1.0:
        return 0.0
    if alpha == 1.0:
        return _gamma_at_one(p)
    if abs(alpha - 1.0) >= _ALPHA_ONE_BAND:
        return _gamma_general_formula(alpha, p)

    h = _INTERP_H
    if p < 1.0 - 2.5 * h:
        offsets = (-2, -1, 0, 1, 2)
    elif p < 1.0:
        offsets = (0, 1, 2, 3, 4)
    else:
        offsets = (1, 2, 3, 4, 5)
    nodes = [1.0 + k * h for k in offsets]
    values = [
        (a - p) * (_gamma_at_one(p) if k == 0 else _gamma_general_formula(a, p)) for k, a in zip(offsets, nodes)
    ]
    total = 0.0
    for i, (ai, vi) in enumerate(zip(nodes, values)):
        weight = 1.0
        for j, aj in enumerate(nodes):
            if j != i:
                weight *= (alpha - aj) / (ai - aj)
        total += weight * vi
    return total / (alpha - p)


def killing_coefficient(params: FracParams) -> float:
    """Coefficient ``c`` with ``kappa_D(x) = A_{d,-alpha} c x_d^-alpha``."""
    return dimension_factor(params.d, params.alpha) / params.alpha


def best_constant_killed(alpha: float) -> float:
    """``Gamma((1 + alpha)/2)^2 / pi``, the sharp constant for the killed form."""
    alpha = _check_alpha(alpha)
    return math.exp(2.0 * math.lgamma(0.5 * (1.0 + alpha)) - LOG_PI)


def combined_identity_residual(params: FracParams) -> float:
    """``A (kappa + killing_coefficient) - Gamma((1+alpha)/2)^2 / pi``; zero up to rounding."""
    a = stable_normalizer(params)
    return a * (kappa(params) + killing_coefficient(params)) - best_constant_killed(params.alpha)


@dataclass(frozen=True)
class ConstantsReport:
    kappa: float
    gamma_half: float
    killing_coeff: float
    best_killed: float
    normalizer: float

    @property
    def identity_residual(self) -> float:
        return self.normalizer * (self.kappa + self.killing_coeff) - self.best_killed

    @property
    def relative_residual(self) -> float:
        return abs(self.identity_residual) / self.best_killed


def constants_report(params: FracParams) -> ConstantsReport:
    return ConstantsReport(
        kappa=kappa(params),
        gamma_half=gamma_half(params.alpha),
        killing_coeff=killing_coefficient(params),
        best_killed=best_constant_killed(params.alpha),
        normalizer=stable_normalizer(params),
    )
