"""Dirichlet-form energies on the half-line and the Hardy inequality check.

Two independent routes to the energy

    E(u) = 1/2 int_0^inf int_0^inf (u(x) - u(y))^2 / |x - y|^(1+alpha) dx dy

are provided:

* :func:`energy_direct` splits off the support ``S = [lo, hi]``.  Pairs with
  one point outside ``S`` reduce to one-dimensional integrals with elementary
  inner kernels; pairs inside ``S`` are written in the variables ``(x, s = y - x)``
  and integrated with a Gauss-Jacobi rule at the diagonal.
* :func:`ground_state_energy` rewrites the integrand with ``w(x) = x^((alpha-1)/2)``
  and ``v = u/w``; the energy becomes ``kappa * int u^2 x^-alpha`` plus a
  non-negative remainder.

Test functions are duck-typed: anything with ``support``, ``kinks``,
``breakpoints`` and a vectorised ``__call__`` works (``GridFunction`` here,
the extremal profiles in :mod:`halfhardy.extremal`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import beta as beta_fn
from scipy.special import betainc

from .closedform import kappa as kappa_constant
from .quad import (
    DEFAULT_REL_TOL,
    ZERO,
    QuadratureError,
    QuadResult,
    SingularitySpec,
    _jacobi_left,
    _legendre,
    integrate,
    power_weighted,
)
from .specfun import FracParams

_EPS = np.finfo(float).eps
# Tolerance of the direct path when it only cross-checks the ground-state path.
COARSE_REL_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Continuous piecewise-linear function on ``[knots[0], knots[-1]]``, zero outside."""

    knots: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        knots = np.array(self.knots, dtype=float)
        values = np.array(self.values, dtype=float)
        if knots.ndim != 1 or knots.shape != values.shape:
            raise ValueError("knots and values must be 1-d arrays of equal length")
        if knots.size < 3:
            raise ValueError("a GridFunction needs at least 3 knots")
        if not np.all(np.isfinite(knots)) or not np.all(np.isfinite(values)):
            raise ValueError("knots and values must be finite")
        if knots[0] <= 0.0:
            raise ValueError("support must lie inside (0, inf): first knot must be positive")
        if np.any(np.diff(knots) <= 0.0):
            raise ValueError("knots must be strictly increasing")
        if values[0] != 0.0 or values[-1] != 0.0:
            raise ValueError("values at the first and last knot must be 0")
        knots.setflags(write=False)
        values.setflags(write=False)
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "values", values)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return np.array_equal(self.knots, other.knots) and np.array_equal(self.values, other.values)

    def __hash__(self) -> int:
        return hash((self.knots.tobytes(), self.values.tobytes()))

    def __call__(self, x):
        return np.interp(x, self.knots, self.values, left=0.0, right=0.0)

    @property
    def support(self) -> tuple[float, float]:
        return float(self.knots[0]), float(self.knots[-1])

    @property
    def kinks(self) -> np.ndarray:
        return self.knots

    @property
    def breakpoints(self) -> np.ndarray:
        return self.knots

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.knots)

    def increment(self, x, s):
        """``u(x + s) - u(x)`` for ``s >= 0``, without cancellation at small ``s``."""
        x = np.asarray(x, dtype=float)
        s = np.asarray(s, dtype=float)
        y = x + s
        slopes = np.concatenate(([0.0], self.slopes, [0.0]))
        knots = self.knots
        kx = np.searchsorted(knots, x, side="right")
        ky = np.searchsorted(knots, y, side="right")
        same = kx == ky
        # outside the support the right-hand knot is clipped; slopes there are 0
        right_of_x = knots[np.minimum(kx, knots.size - 1)]
        left_of_y = knots[np.maximum(ky - 1, 0)]
        split = (
            slopes[kx] * (right_of_x - x)
            + (self.values[np.maximum(ky - 1, 0)] - self.values[np.minimum(kx, knots.size - 1)])
            + slopes[ky] * (y - left_of_y)
        )
        return np.where(same, slopes[kx] * s, split)

    def scaled(self, factor: float) -> "GridFunction":
        return GridFunction(self.knots, factor * self.values)

    def shifted(self, offset: float) -> "GridFunction":
        return GridFunction(self.knots + offset, self.values)

    def to_json(self) -> str:
        return json.dumps({"knots": self.knots.tolist(), "values": self.values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "GridFunction":
        payload = json.loads(text)
        return cls(np.array(payload["knots"], dtype=float), np.array(payload["values"], dtype=float))


@dataclass(frozen=True)
class HardyMarginReport:
    energy: float
    weighted_norm: float
    kappa: float
    margin: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.margin >= -self.tolerance


def random_test_function(seed: int, m: int = 6, support=(0.5, 2.0), amplitude: float = 1.0) -> GridFunction:
    """Seeded piecewise-linear test function.

    ``m`` knots: the two support endpoints plus ``m - 2`` uniform interior
    knots; interior values uniform in ``[-amplitude, amplitude]``.
    """
    a, b = map(float, support)
    if m < 3 or not (0.0 < a < b) or not amplitude > 0:
        raise ValueError("need m >= 3, 0 < a < b and amplitude > 0")
    rng = np.random.default_rng(seed)
    while True:
        interior = np.sort(rng.uniform(a, b, size=m - 2))
        knots = np.concatenate(([a], interior, [b]))
        if np.all(np.diff(knots) > 0.0):
            break
    values = np.concatenate(([0.0], rng.uniform(-amplitude, amplitude, size=m - 2), [0.0]))
    return GridFunction(knots, values)


def fuzz_test_function(seed: int) -> GridFunction:
    """Test function with seed-dependent shape: 3-10 knots, support anywhere in (0.01, 11)."""
    rng = np.random.default_rng([seed, 20081])
    m = int(rng.integers(3, 11))
    a = 10.0 ** rng.uniform(-2.0, 0.0)
    b = a + 10.0 ** rng.uniform(-1.0, 1.0)
    amplitude = 10.0 ** rng.uniform(-1.0, 1.0)
    return random_test_function(seed, m, (a, b), amplitude)


# ---------------------------------------------------------------------------
# one-dimensional pieces


def _pieces(u) -> np.ndarray:
    lo, hi = u.support
    pts = np.asarray(u.breakpoints, dtype=float)
    return pts[(pts >= lo) & (pts <= hi)]


def _check_alpha(alpha: float, allow_zero: bool = False) -> float:
    low_ok = alpha >= 0.0 if allow_zero else alpha > 0.0
    if not (low_ok and alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    return float(alpha)


def _weighted_square(u, centre: float, exponent: float, order: int = 16) -> QuadResult:
    """``int_S u(x)^2 |x - centre|^exponent dx`` piece by piece.

    ``u`` vanishes at least linearly at the ends of its support, so a
    ``centre`` there lends two powers to the weight.
    """
    pts = _pieces(u)
    lo, hi = u.support
    vanishing = 2 if centre in (lo, hi) else 0
    total = ZERO
    for c, e in zip(pts[:-1], pts[1:]):
        total = total + power_weighted(lambda x: u(x) ** 2, c, e, centre, exponent, order, vanishing)
    return total


def weighted_norm(u, alpha: float) -> QuadResult:
    """``int u(x)^2 x^-alpha dx``.

    On each segment the integrand is ``u^2`` (a polynomial for a grid
    function) times ``x^-alpha``; segments are graded geometrically towards 0
    and integrated with 16- and 32-point Gauss rules, which are exact to
    rounding for that class.
    """
    alpha = _check_alpha(alpha, allow_zero=True)
    return _weighted_square(u, 0.0, -alpha)


# ---------------------------------------------------------------------------
# pairs inside the support


def _graded(points: np.ndarray, ratio: float = 2.0) -> np.ndarray:
    """Insert points so consecutive breaks ``c < e`` satisfy ``e <= ratio * c``."""
    out = [points[0]]
    for e in points[1:]:
        c = out[-1]
        while e > ratio * c:
            c = ratio * c
            out.append(c)
        out.append(e)
    return np.array(out)


def _s_breaks(kinks: np.ndarray, length: float) -> np.ndarray:
    diffs = np.abs(kinks[:, None] - kinks[None, :]).ravel()
    diffs = np.unique(diffs[(diffs > 0.0) & (diffs <= length)])
    diffs = np.unique(np.append(diffs, length))
    return np.concatenate(([0.0], _graded(diffs)))


def _difference(u, wp: float):
    """``(x, s) -> phi(x + s) - phi(x)`` for ``phi = u x^-wp``, evaluated stably."""
    if wp != 0.0 and getattr(u, "power", None) == wp and hasattr(u, "profile_increment"):
        return u.profile_increment
    increment = getattr(u, "increment", None)
    if increment is None:

        def increment(x, s):
            return u(x + s) - u(x)

    if wp == 0.0:
        return increment

    def diff(x, s):
        xw = x ** (-wp)
        # (x+s)^-wp - x^-wp = x^-wp expm1(-wp log1p(s/x))
        return increment(x, s) * xw + u(x + s) * xw * np.expm1(-wp * np.log1p(s / x))

    return diff


def _inner_profile(diff, s, graded, kinks, lo, hi, wp, x_nodes, x_weights):
    """``Q(s) = int_lo^(hi-s) (phi(x) - phi(x+s))^2 (x (x+s))^wp dx`` for each ``s``."""
    s = s[:, None]
    pts = np.concatenate((np.broadcast_to(graded, (s.shape[0], graded.size)), kinks[None, :] - s), axis=1)
    pts = np.clip(pts, lo, hi - s)
    pts.sort(axis=1)
    left = pts[:, :-1, None]
    width = (pts[:, 1:] - pts[:, :-1])[:, :, None]
    x = left + width * x_nodes
    sb = np.broadcast_to(s[:, :, None], x.shape)
    f = diff(x, sb) ** 2
    if wp != 0.0:
        f = f * (x * (x + sb)) ** wp
    terms = f * width * x_weights
    return terms.sum(axis=(1, 2)), np.abs(terms).sum(axis=(1, 2))


def _pair_integral(u, alpha: float, wp: float, x_order: int, s_order: int) -> QuadResult:
    """``int int_{lo < x < y < hi} (phi(x) - phi(y))^2 (x y)^wp / (y - x)^(1+alpha)``, ``phi = u x^-wp``.

    Written as ``int_0^L s^(-1-alpha) Q(s) ds``; ``Q`` vanishes like ``s^2`` at
    the diagonal, so the first ``s``-interval uses Gauss-Jacobi with weight
    ``s^(1-alpha)`` applied to ``Q(s)/s^2``.  ``s``-breaks are the pairwise
    distances of the kinks of ``u`` (of the graded breakpoints when ``Q`` is not
    piecewise polynomial), graded geometrically.
    """
    lo, hi = u.support
    kinks = np.asarray(u.kinks, dtype=float)
    graded = _graded(_pieces(u))
    # Q is piecewise polynomial only for a grid function with no weight
    polynomial = wp == 0.0 and isinstance(u, GridFunction)
    diff = _difference(u, wp)
    sb = _s_breaks(kinks if polynomial else graded, hi - lo)
    estimates = []
    for xo, so in ((x_order, s_order), (2 * x_order, 2 * s_order)):
        xn, xw = _legendre(xo)
        js, jw = _jacobi_left(so, 1.0 - alpha)
        ls, lw = _legendre(so)
        s_first = sb[1] * js
        w_first = jw * sb[1] ** (2.0 - alpha) / s_first**2
        c, e = sb[1:-1, None], sb[2:, None]
        s_rest = (c + (e - c) * ls).ravel()
        w_rest = ((e - c) * lw).ravel() * s_rest ** (-1.0 - alpha)
        s_all = np.concatenate((s_first, s_rest))
        w_all = np.concatenate((w_first, w_rest))
        value = 0.0
        abs_value = 0.0
        chunk = max(1, 200000 // (xo * 2 * (graded.size + kinks.size)))
        for start in range(0, s_all.size, chunk):
            sl = slice(start, start + chunk)
            q, q_abs = _inner_profile(diff, s_all[sl], graded, kinks, lo, hi, wp, xn, xw)
            value += float(np.dot(w_all[sl], q))
            abs_value += float(np.dot(np.abs(w_all[sl]), q_abs))
        estimates.append((value, abs_value, s_all.size * xo * (graded.size + kinks.size)))
    (v1, _, n1), (v2, a2, n2) = estimates
    return QuadResult(v2, abs(v2 - v1) + 64.0 * _EPS * a2, n1 + n2)


# ---------------------------------------------------------------------------
# energies


def _boundary_terms(u, alpha: float) -> QuadResult:
    """``(1/alpha) int_S u^2 [(x - lo)^-alpha + (hi - x)^-alpha] dx``."""
    lo, hi = u.support
    return (_weighted_square(u, lo, -alpha) + _weighted_square(u, hi, -alpha)).scaled(1.0 / alpha)


def energy_direct(u, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> QuadResult:
    """Energy ``1/2 int int (u(x) - u(y))^2 / |x - y|^(1+alpha)`` over the half-line.

    With ``S = [lo, hi]`` the support of ``u``, pairs with exactly one point
    outside ``S`` contribute ``int_S u^2 k_out`` where
    ``k_out(x) = [(x - lo)^-alpha - x^-alpha + (hi - x)^-alpha] / alpha``.
    """
    alpha = _check_alpha(alpha)
    piecewise_linear = isinstance(u, GridFunction)
    x_order, s_order = (3, 8) if piecewise_linear else (12, 12)
    inside = _pair_integral(u, alpha, 0.0, x_order, s_order)
    outside = _boundary_terms(u, alpha) + weighted_norm(u, alpha).scaled(-1.0 / alpha)
    result = inside + outside
    _check_tolerance(result, rel_tol, "energy_direct")
    return result


def regional_energy(u, alpha: float, interval: tuple[float, float]) -> QuadResult:
    """Energy with both points restricted to ``interval``, which must contain the support."""
    alpha = _check_alpha(alpha)
    a, b = interval
    lo, hi = u.support
    if not (0.0 <= a <= lo and hi <= b):
        raise ValueError("interval must contain the support of u")
    inside = _pair_integral(u, alpha, 0.0, *((3, 8) if isinstance(u, GridFunction) else (12, 12)))
    result = inside + _boundary_terms(u, alpha) + _weighted_square(u, a, -alpha).scaled(-1.0 / alpha)
    if math.isfinite(b):
        result = result + _weighted_square(u, b, -alpha).scaled(-1.0 / alpha)
    return result


def interval_weighted_norm(u, alpha: float, interval: tuple[float, float]) -> QuadResult:
    """``int u^2 dist(x, complement of interval)^-alpha dx``."""
    alpha = _check_alpha(alpha, allow_zero=True)
    a, b = interval
    lo, hi = u.support
    if not (0.0 <= a <= lo and hi <= b):
        raise ValueError("interval must contain the support of u")
    if not math.isfinite(b):
        return _weighted_square(u, a, -alpha)
    mid = 0.5 * (a + b)
    total = ZERO
    pts = _pieces(u)
    pts = np.unique(np.clip(np.append(pts, mid), lo, hi))
    for c, e in zip(pts[:-1], pts[1:]):
        centre = a if e <= mid else b
        vanishing = 2 if centre in (lo, hi) else 0
        total = total + power_weighted(lambda x: u(x) ** 2, c, e, centre, -alpha, 16, vanishing)
    return total


def dpf_residual(ux: float, uy: float, wx: float, wy: float) -> float:
    """Residual of the ground-state identity

    ``(ux - uy)^2 + ux^2 (wy - wx)/wx + uy^2 (wx - wy)/wy = wx wy (ux/wx - uy/wy)^2``.
    """
    if not (wx > 0 and wy > 0):
        raise ValueError("w values must be positive")
    lhs = (ux - uy) ** 2 + ux * ux * (wy - wx) / wx + uy * uy * (wx - wy) / wy
    rhs = wx * wy * (ux / wx - uy / wy) ** 2
    return lhs - rhs


def dpf_scale(ux: float, uy: float, wx: float, wy: float) -> float:
    """Magnitude of the largest term in the identity, for relative comparisons."""
    return max(
        (ux - uy) ** 2,
        abs(ux * ux * (wy - wx) / wx),
        abs(uy * uy * (wx - wy) / wy),
        wx * wy * (ux / wx - uy / wy) ** 2,
        abs(ux * ux * wy / wx),
        abs(uy * uy * wx / wy),
    )


def _incomplete_beta_neg(a: float, alpha: float, z: np.ndarray, one_minus_z: np.ndarray) -> np.ndarray:
    """``B_z(a, -alpha) = int_0^z t^(a-1) (1-t)^(-1-alpha) dt`` for ``alpha != 1``.

    Two steps of ``B_z(a, b) = (a + b)/b B_z(a, b+1) - z^a (1-z)^b / b`` lift
    the second parameter to ``2 - alpha > 0``, where the regularised
    incomplete beta function applies.
    """
    b2 = 2.0 - alpha
    top = betainc(a, b2, z) * beta_fn(a, b2)
    za = z**a
    mid = ((a + 1.0 - alpha) * top - za * one_minus_z ** (1.0 - alpha)) / (1.0 - alpha)
    return ((a - alpha) * mid - za * one_minus_z ** (-alpha)) / (-alpha)


def _outer_kernel(alpha: float, p: float, lo: float, hi: float):
    """``T(x) = int_{(0,inf) minus [lo,hi]} y^p / |x - y|^(1+alpha) dy`` for ``x`` in ``(lo, hi)``.

    Called as ``T(x, x - lo, hi - x)``.
    """
    if alpha == 1.0:
        return lambda x, dlo, dhi: 1.0 / dlo - 1.0 / x + 1.0 / dhi

    def kernel(x, dlo, dhi):
        left = _incomplete_beta_neg(p + 1.0, alpha, lo / x, dlo / x)
        right = _incomplete_beta_neg(alpha - p, alpha, x / hi, dhi / hi)
        return x ** (p - alpha) * (left + right)

    return kernel


def _outer_remainder(u, alpha: float, p: float, rel_tol: float) -> QuadResult:
    """``int_S u(x)^2 x^-p T(x) dx``: remainder pairs with one point outside the support."""
    lo, hi = u.support
    kernel = _outer_kernel(alpha, p, lo, hi)
    pts = _graded(_pieces(u))
    total = ZERO
    last = len(pts) - 2
    for i, (c, e) in enumerate(zip(pts[:-1], pts[1:])):

        def f(x, dl, dr, i=i, c=c, e=e):
            dlo = dl if i == 0 else x - lo
            dhi = dr if i == last else hi - x
            with np.errstate(over="ignore", invalid="ignore"):
                vals = u(x) ** 2 * x ** (-p) * kernel(x, dlo, dhi)
            # u^2 vanishes faster than the kernel blows up at the support ends
            return np.where(np.isfinite(vals), vals, 0.0)

        spec = SingularitySpec(2.0 - alpha if i == 0 else 0.0, 2.0 - alpha if i == last else 0.0)
        total = total + integrate(f, c, e, spec, rel_tol, offsets=True)
    return total


def remainder_parts(u, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> tuple[QuadResult, QuadResult]:
    """Half of the ground-state remainder, split as (inside pairs, outside pairs).

    The full remainder is ``int int (v(x) - v(y))^2 w(x) w(y) / |x-y|^(1+alpha)``
    with ``w = x^p``, ``p = (alpha - 1)/2``, ``v = u/w``.
    """
    alpha = _check_alpha(alpha)
    p = 0.5 * (alpha - 1.0)
    inside = _pair_integral(u, alpha, p, 12, 12)
    outside = _outer_remainder(u, alpha, p, rel_tol)
    return inside, outside


def ground_state_energy(u, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> QuadResult:
    """Energy as ``kappa * int u^2 x^-alpha`` plus half the ground-state remainder."""
    alpha = _check_alpha(alpha)
    k = kappa_constant(FracParams(1, alpha))
    norm = weighted_norm(u, alpha)
    inside, outside = remainder_parts(u, alpha, rel_tol)
    result = norm.scaled(k) + inside + outside
    _check_tolerance(result, rel_tol, "ground_state_energy")
    return result


def _check_tolerance(result: QuadResult, rel_tol: float, what: str) -> None:
    if not math.isfinite(result.value):
        raise QuadratureError(f"{what}: non-finite value", result)
    if result.error_estimate > rel_tol * abs(result.value) + 1e-15:
        raise QuadratureError(f"{what}: error estimate {result.error_estimate:g} exceeds tolerance", result)


def hardy_margin(u, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> HardyMarginReport:
    """``E(u) - kappa * int u^2 x^-alpha`` with the propagated quadrature error."""
    alpha = _check_alpha(alpha)
    k = kappa_constant(FracParams(1, alpha))
    energy = energy_direct(u, alpha, rel_tol)
    norm = weighted_norm(u, alpha)
    tolerance = energy.error_estimate + k * norm.error_estimate
    return HardyMarginReport(
        energy=energy.value,
        weighted_norm=norm.value,
        kappa=k,
        margin=energy.value - k * norm.value,
        tolerance=tolerance,
    )
