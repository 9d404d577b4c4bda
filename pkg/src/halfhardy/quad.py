"""Adaptive quadrature for endpoint-singular integrals, and the integrals built on it.

The engine is a double-exponential (tanh-sinh) rule applied separately to the
two halves of ``[a, b]``.  On each half the declared endpoint behaviour
``(t - a)^beta`` is removed first by the substitution ``t - a = L s^k`` with
``k = 1/(1 + beta)``, so that exponents arbitrarily close to ``-1`` remain
tractable.  Levels are refined by step halving until successive sums agree;
if that fails the interval is bisected dyadically.

Integrands are vectorised: they receive numpy arrays.  With ``offsets=True``
they receive ``(t, t - a, b - t)`` where both offsets are computed without
cancellation, which is what callers need when the integrand itself is written
in terms of the distance to an endpoint.

In *weighted* mode the callable supplies only a regular cofactor ``g`` and the
engine integrates ``(t - a)^left (b - t)^right g(t)`` with the singular power
handled analytically by the substitution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.special import roots_jacobi

from .closedform import PowerExponent, _as_p, _check_alpha

_T_MAX = 6.0
_TINY = 1e-300
_ABS_FLOOR = 1e-15
_EPS = np.finfo(float).eps
DEFAULT_REL_TOL = 1e-10


@dataclass(frozen=True)
class QuadResult:
    value: float
    error_estimate: float
    evaluations: int

    def __add__(self, other: "QuadResult") -> "QuadResult":
        return QuadResult(
            self.value + other.value,
            self.error_estimate + other.error_estimate,
            self.evaluations + other.evaluations,
        )

    def scaled(self, factor: float) -> "QuadResult":
        return QuadResult(self.value * factor, self.error_estimate * abs(factor), self.evaluations)


ZERO = QuadResult(0.0, 0.0, 0)


@dataclass(frozen=True)
class SingularitySpec:
    """Declared endpoint behaviour ``(t - a)^left_exponent`` and ``(b - t)^right_exponent``."""

    left_exponent: float = 0.0
    right_exponent: float = 0.0

    def __post_init__(self) -> None:
        if not (self.left_exponent > -1.0 and self.right_exponent > -1.0):
            raise ValueError(
                "endpoint exponents must exceed -1, got "
                f"({self.left_exponent!r}, {self.right_exponent!r})"
            )


REGULAR = SingularitySpec()


class QuadratureError(ArithmeticError):
    """Raised when the requested tolerance was not reached; carries the best result."""

    def __init__(self, message: str, result: QuadResult):
        super().__init__(message)
        self.result = result


@lru_cache(maxsize=None)
def _level(level: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nodes new at ``level`` on (0, 1): (s, 1 - s, ds/dtau)."""
    if level == 0:
        tau = np.arange(-_T_MAX, _T_MAX + 0.5)
    else:
        step = 2.0**-level
        count = int(round(_T_MAX / step))
        k = np.arange(-count + 1, count, 2)
        tau = k * step
    u = 0.5 * math.pi * np.sinh(tau)
    s = 1.0 / (1.0 + np.exp(-2.0 * u))
    cs = 1.0 / (1.0 + np.exp(2.0 * u))
    w = math.pi * np.cosh(tau) * s * cs
    for arr in (s, cs, w):
        arr.setflags(write=False)
    return s, cs, w


class _Problem:
    def __init__(self, f, a, b, left, right, weighted, offsets):
        self.f = f
        self.a = a
        self.b = b
        self.left = left
        self.right = right
        self.weighted = weighted
        self.offsets = offsets

    def call(self, t, dl, dr):
        # nodes that collapse onto a singular endpoint may give inf; handled by the caller
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            if self.offsets:
                return np.asarray(self.f(t, dl, dr), dtype=float)
            return np.asarray(self.f(t), dtype=float)

    def half(self, anchor: float, other: float, from_left: bool, s: np.ndarray):
        """Transformed integrand on the half ``[anchor, other]`` (or reversed) at nodes ``s``."""
        a, b = self.a, self.b
        length = abs(other - anchor)
        if from_left:
            beta = self.left if anchor == a else 0.0
        else:
            beta = self.right if anchor == b else 0.0
        k = 1.0 / (1.0 + min(beta, 0.0))
        log_s = np.log(s)
        with np.errstate(under="ignore"):
            offset = length * np.exp(k * log_s) if k != 1.0 else length * s
        clipped = offset < _TINY
        offset = np.maximum(offset, _TINY)
        if from_left:
            dl = (anchor - a) + offset
            dr = (b - anchor) - offset
            t = anchor + offset
        else:
            dr = (b - anchor) + offset
            dl = (anchor - a) - offset
            t = anchor - offset
        dl = np.maximum(dl, _TINY)
        dr = np.maximum(dr, _TINY)
        values = self.call(t, dl, dr)
        if self.weighted:
            if beta < 0.0:
                far = dr if from_left else dl
                far_beta = self.right if from_left else self.left
                h = length ** (1.0 + beta) * k * values * far**far_beta
            else:
                with np.errstate(under="ignore"):
                    h = length * values * dl**self.left * dr**self.right
        elif k == 1.0:
            h = length * values
        else:
            # values * jacobian in log space: near a collapsing endpoint the
            # jacobian underflows while the values grow, the product stays finite
            log_jac = math.log(length * k) + (k - 1.0) * log_s
            with np.errstate(divide="ignore", under="ignore", over="ignore", invalid="ignore"):
                h = np.sign(values) * np.exp(np.log(np.abs(values)) + log_jac)
            h = np.where(values == 0.0, 0.0, h)
            # nodes whose abscissa did not move off the endpoint carry no information
            stuck = clipped if self.offsets else clipped | (t == anchor)
            h = np.where(stuck, np.nan, h)
        return self._drop_collapsed(h, s)

    @staticmethod
    def _drop_collapsed(h: np.ndarray, s: np.ndarray):
        """Replace non-finite values at nodes that collapsed onto the endpoint.

        The transformed integrand tends to a finite limit at the endpoint, so
        collapsed nodes take the value at the nearest valid node.  The
        returned error charge is ``4 s_cut`` times the change between the two
        nearest valid nodes, which stays large when the declared exponent is
        too pessimistic and the limit is not yet reached.
        """
        bad = ~np.isfinite(h)
        if not bad.any():
            return h, 0.0
        good = np.flatnonzero(~bad)
        if good.size < 2:
            raise FloatingPointError("integrand is non-finite at almost every node")
        s_cut = s[bad].max()
        order = good[np.argsort(s[good])]
        near, nxt = h[order[0]], h[order[1]]
        change = max(abs(near - nxt), 16.0 * _EPS * abs(near))
        return np.where(bad, near, h), 4.0 * change * s_cut

    def segment(self, c0: float, c1: float, rel_tol: float, max_level: int):
        """Tanh-sinh on ``[c0, c1]`` split at its midpoint.

        Returns (value, error, evaluations, converged).
        """
        mid = 0.5 * (c0 + c1)
        total = 0.0
        previous = None
        abs_sum = 0.0
        evaluations = 0
        dropped = 0.0
        acc = 0.0
        err = math.inf
        for level in range(max_level + 1):
            s, _, w = _level(level)
            left, lost_left = self.half(c0, mid, True, s)
            right, lost_right = self.half(c1, mid, False, s)
            evaluations += 2 * s.size
            dropped = max(dropped, lost_left + lost_right)
            contrib = np.concatenate((w * left, w * right))
            acc += contrib.sum()
            abs_sum += np.abs(contrib).sum()
            step = 2.0**-level
            total = acc * step
            rounding = 64.0 * _EPS * abs_sum * step
            if previous is not None:
                err = abs(total - previous) + rounding + dropped
                if level >= 3 and err <= max(rel_tol * abs(total), _ABS_FLOOR):
                    return total, err, evaluations, True
            previous = total
        return total, err, evaluations, False


def integrate(
    f: Callable,
    a: float,
    b: float,
    spec: SingularitySpec = REGULAR,
    rel_tol: float = DEFAULT_REL_TOL,
    *,
    weighted: bool = False,
    offsets: bool = False,
    max_level: int = 9,
    max_depth: int = 6,
) -> QuadResult:
    """Integrate ``f`` over ``[a, b]`` with declared endpoint singularities.

    Parameters
    ----------
    f : callable
        Vectorised integrand; called as ``f(t)`` or, with ``offsets=True``,
        as ``f(t, t - a, b - t)``.
    a, b : float
        Finite limits, ``a < b``.
    spec : SingularitySpec
        Endpoint exponents.  In plain mode they describe how ``f`` behaves; in
        weighted mode they define the weight multiplying ``f``.
    rel_tol : float
        Target relative accuracy; the absolute floor is ``1e-15``.

    Raises
    ------
    QuadratureError
        If neither level refinement nor dyadic bisection met the tolerance.
    """
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        raise ValueError(f"need finite a < b, got ({a!r}, {b!r})")
    if not rel_tol > 0:
        raise ValueError("rel_tol must be positive")
    problem = _Problem(f, float(a), float(b), spec.left_exponent, spec.right_exponent, weighted, offsets)

    value, err, evals, ok = problem.segment(problem.a, problem.b, rel_tol, max_level)
    if ok:
        return QuadResult(value, err, evals)

    # dyadic bisection fallback
    pending = [(problem.a, problem.b, 0)]
    value = err = 0.0
    evals_total = evals
    converged = True
    while pending:
        c0, c1, depth = pending.pop()
        m = 0.5 * (c0 + c1)
        for lo, hi in ((c0, m), (m, c1)):
            v, e, n, ok = problem.segment(lo, hi, rel_tol, max_level)
            evals_total += n
            if ok or depth + 1 >= max_depth:
                value += v
                err += e
                converged = converged and ok
            else:
                pending.append((lo, hi, depth + 1))
    result = QuadResult(value, err, evals_total)
    if not converged and err > max(rel_tol * abs(value), _ABS_FLOOR):
        raise QuadratureError(
            f"integral over [{a}, {b}] did not converge: value={value!r}, error={err!r}", result
        )
    return result


# ---------------------------------------------------------------------------
# Gauss rules for smooth pieces and algebraic end weights


@lru_cache(maxsize=None)
def _legendre(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def _jacobi_left(n: int, beta: float):
    """Nodes/weights for ``int_0^1 s^beta g(s) ds``."""
    x, w = roots_jacobi(n, 0.0, beta)
    return 0.5 * (x + 1.0), w * 0.5 ** (1.0 + beta)


def geometric_breaks(x0: float, x1: float, centre: float, ratio: float = 2.0) -> np.ndarray:
    """Split ``[x0, x1]`` so that each piece ``[c, e]`` has ``dist(e) <= ratio * dist(c)``
    measured from ``centre`` (which must lie outside ``(x0, x1)``).

    If ``centre`` coincides with an endpoint that endpoint's piece is left whole.
    """
    if centre <= x0:
        d0, d1 = x0 - centre, x1 - centre
        sign = 1.0
    elif centre >= x1:
        d0, d1 = centre - x1, centre - x0
        sign = -1.0
    else:
        raise ValueError("centre must lie outside the open interval")
    if d0 <= 0.0:
        d0_eff = d1 / 2.0**8
        dists = [0.0]
        d = d0_eff
    else:
        dists = []
        d = d0
    while d < d1:
        dists.append(d)
        d *= ratio
    dists.append(d1)
    dists = np.array(dists)
    pts = centre + sign * dists
    return np.sort(pts)


def power_weighted(
    g: Callable[[np.ndarray], np.ndarray],
    x0: float,
    x1: float,
    centre: float,
    exponent: float,
    order: int = 16,
    vanishing: int = 0,
) -> QuadResult:
    """``int_{x0}^{x1} g(x) |x - centre|^exponent dx`` for smooth ``g``.

    ``centre`` must lie outside ``(x0, x1)``.  Pieces are graded geometrically
    towards ``centre``; when ``centre`` is an endpoint the adjacent piece uses a
    Gauss-Jacobi rule carrying the algebraic weight exactly.  If ``g`` vanishes
    there to order ``vanishing``, that power moves into the weight, which
    then only needs ``exponent + vanishing > -1``.  The error estimate
    compares ``order`` with ``2 * order`` nodes.
    """
    if x1 <= x0:
        return ZERO
    breaks = geometric_breaks(x0, x1, centre)
    results = []
    for n in (order, 2 * order):
        total = 0.0
        abs_total = 0.0
        for c, e in zip(breaks[:-1], breaks[1:]):
            h = e - c
            touching_left = c == centre
            touching_right = e == centre
            if touching_left or touching_right:
                s, w = _jacobi_left(n, float(exponent + vanishing))
                if touching_left:
                    x = c + h * s
                else:
                    x = e - h * s
                vals = g(x) / (h * s) ** vanishing * w * h ** (1.0 + exponent + vanishing)
            else:
                s, w = _legendre(n)
                x = c + h * s
                vals = g(x) * np.abs(x - centre) ** exponent * w * h
            total += vals.sum()
            abs_total += np.abs(vals).sum()
        results.append((total, abs_total))
    (v1, _), (v2, abs2) = results
    err = abs(v2 - v1) + 16.0 * _EPS * abs2
    return QuadResult(v2, err, (3 * order) * (len(breaks) - 1))


# ---------------------------------------------------------------------------
# Integrals of the half-line problem


def _binom_even_part(p: float, eps: np.ndarray, terms: int = 24) -> np.ndarray:
    """``((1 - eps)^p + (1 + eps)^p - 2) / eps^2`` by its even power series (|eps| small)."""
    e2 = eps * eps
    coeff = p * (p - 1.0) / 2.0  # binom(p, 2)
    total = np.full_like(eps, coeff)
    power = np.ones_like(eps)
    for k in range(2, terms + 1):
        # binom(p, 2k) from binom(p, 2k-2)
        coeff *= (p - 2 * k + 2) * (p - 2 * k + 1) / ((2 * k - 1) * (2 * k))
        power = power * e2
        total = total + coeff * power
    return 2.0 * total


def _gamma_cofactor(alpha: float, p: float):
    q = alpha - p - 1.0
    e0 = min(0.0, p, q, p + q)

    def g(t, dl, dr):
        with np.errstate(divide="ignore"):
            logt = np.where(dl < 0.5, np.log(dl), np.log1p(-dr))
        # (t^p - 1)/(1 - t) and (1 - t^q)/(1 - t), both bounded near t = 1
        with np.errstate(over="ignore"):
            a_part = np.expm1(p * logt) / dr
            b_part = -np.expm1(q * logt) / dr
        return a_part * b_part * np.exp(-e0 * logt)

    return g, SingularitySpec(e0, 1.0 - alpha)


def gamma_by_quadrature(alpha: float, p, rel_tol: float = DEFAULT_REL_TOL) -> QuadResult:
    """``int_0^1 (t^p - 1)(1 - t^(alpha-p-1)) / (1-t)^(1+alpha) dt`` by quadrature.

    Near ``t = 1`` the integrand behaves like ``(1 - t)^(1 - alpha)``; near
    ``t = 0`` like ``t^e`` with ``e`` the least of ``0, p, alpha-p-1, alpha-1``.
    Both powers are carried as weights.
    """
    alpha = _check_alpha(alpha)
    p = _as_p(p, alpha)
    if rel_tol < 1e-12:
        raise ValueError("rel_tol below 1e-12 is not supported for this integral")
    if p == 0.0 or p == alpha - 1.0:
        return QuadResult(0.0, 0.0, 0)
    g, spec = _gamma_cofactor(alpha, p)
    return integrate(g, 0.0, 1.0, spec, rel_tol, weighted=True, offsets=True)


def pv_laplacian_power(alpha: float, p, x: float, rel_tol: float = DEFAULT_REL_TOL) -> QuadResult:
    """Principal value ``lim_eps int_{(0,inf), |y-x|>eps} (y^p - x^p)/|x-y|^(1+alpha) dy``.

    With ``y = x t`` the value is ``x^(p-alpha)`` times the same integral at
    ``x = 1``.  On ``(0, 2)`` the points ``t`` and ``2 - t`` are paired so the
    odd part of the singularity cancels; the remaining even part behaves like
    ``|1 - t|^(1 - alpha)``.  The tail ``(2, inf)`` is mapped onto ``(0, 1]``
    through ``t = 1 + 1/u``.
    """
    alpha = _check_alpha(alpha)
    p = _as_p(p, alpha)
    if not x > 0:
        raise ValueError(f"x must be positive, got {x!r}")

    pm = min(p, 0.0)

    def paired(t, dl, dr):
        eps = dr
        small = eps < 0.25
        series = _binom_even_part(p, np.where(small, eps, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            direct = (dl**p + (1.0 + eps) ** p - 2.0) / (eps * eps)
        return np.where(small, series, direct) * dl ** (-pm)

    near = integrate(
        paired, 0.0, 1.0, SingularitySpec(pm, 1.0 - alpha), rel_tol, weighted=True, offsets=True
    )

    pp = max(p, 0.0)

    def tail(u):
        # u^pp [(1 + 1/u)^p - 1]
        if pp > 0.0:
            return (1.0 + u) ** p - u**p
        return (1.0 + 1.0 / u) ** p - 1.0

    far = integrate(tail, 0.0, 1.0, SingularitySpec(alpha - 1.0 - pp, 0.0), rel_tol, weighted=True)
    return (near + far).scaled(x ** (p - alpha))


def tail_kernel_integral(
    x: float, a: float, r: float, alpha: float, rel_tol: float = DEFAULT_REL_TOL
) -> QuadResult:
    """``int_{(0,inf) minus (x-a, x+a)} y^r / |x - y|^(1+alpha) dy`` for ``-1 < r < alpha``.

    The distance ``d = |x - y|`` is split into ``(a, x)``, handled on a
    logarithmic scale, and ``(max(a, x), inf)``, compactified by ``d = D/q``.
    No truncation of the infinite range is involved.
    """
    if not (x > 0 and a > 0 and alpha > 0 and -1.0 < r < alpha):
        raise ValueError("need x > 0, a > 0, alpha > 0 and -1 < r < alpha")
    total = ZERO

    # y > x + max(a, x): d = D/q, q in (0, 1]
    big = max(a, x)
    tail = integrate(
        lambda q: (x * q + big) ** r,
        0.0,
        1.0,
        SingularitySpec(alpha - 1.0 - r, 0.0),
        rel_tol,
        weighted=True,
    )
    total = total + tail.scaled(big ** (-alpha))

    if a < x:
        # x + a < y < 2x: d = a e^theta
        span = math.log(x / a)
        total = total + integrate(
            lambda th: (x + a * np.exp(th)) ** r * (a * np.exp(th)) ** (-alpha), 0.0, span, REGULAR, rel_tol
        )
        # 0 < y < x - a, split at d = x/2
        near = max(a, 0.5 * x)
        total = total + integrate(
            lambda y: (x - y) ** (-1.0 - alpha),
            0.0,
            x - near,
            SingularitySpec(r, 0.0),
            rel_tol,
            weighted=True,
        )
        if a < 0.5 * x:
            span = math.log(0.5 * x / a)
            total = total + integrate(
                lambda th: (x - a * np.exp(th)) ** r * (a * np.exp(th)) ** (-alpha), 0.0, span, REGULAR, rel_tol
            )
    return total


# Largest tail_kernel_ratio over x in {0.1, 1, 10}, a = 10^(k/2) for k = -4..4 and
# (r, alpha) in {(0, 0.8), (0.3, 0.8), (-0.5, 1.5)}; attained at x=10, a=0.01,
# r=0.3.  As a/x -> 0 the ratio tends to 2/alpha.
TAIL_KERNEL_CONSTANT = 2.49779093658748
TAIL_KERNEL_X = (0.1, 1.0, 10.0)
TAIL_KERNEL_A = tuple(10.0 ** (k / 2) for k in range(-4, 5))
TAIL_KERNEL_CASES = ((0.0, 0.8), (0.3, 0.8), (-0.5, 1.5))


def tail_kernel_ratio(x: float, a: float, r: float, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> float:
    """Tail integral normalised by ``a^-alpha max(a, x)^r``."""
    value = tail_kernel_integral(x, a, r, alpha, rel_tol).value
    return value / (a ** (-alpha) * max(a, x) ** r)


def killing_integral_1d(x: float, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> QuadResult:
    """``int_{-inf}^0 |x - y|^(-1-alpha) dy`` (equals ``x^-alpha / alpha``).

    Compactified by ``x - y = x/u``, giving ``x^-alpha int_0^1 u^(alpha-1) du``.
    """
    if not (x > 0 and alpha > 0):
        raise ValueError("need x > 0 and alpha > 0")
    inner = integrate(lambda u: u ** (alpha - 1.0), 0.0, 1.0, SingularitySpec(alpha - 1.0, 0.0), rel_tol)
    return inner.scaled(x ** (-alpha))
