"""Extremal sequence ``u_n = v_n x^((alpha-1)/2)`` on the half-line and its Rayleigh quotients.

``v_n`` equals 1 on a plateau and 0 off a support interval.  It rises and
falls across two bands, each of ratio 2, following the quintic smoothstep
``S(t) = 6t^5 - 15t^4 + 10t^3`` in ``t = log(x / band_start) / log 2``.
``S`` is C2 with ``S' = S'' = 0`` at both ends, so ``x |v'|`` and ``x^2 |v''|``
are bounded independently of ``n``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .closedform import kappa
from .energy import COARSE_REL_TOL, DEFAULT_REL_TOL, _graded, energy_direct, remainder_parts, weighted_norm
from .quad import QuadratureError, QuadResult
from .specfun import FracParams

PROFILE = "quintic-smoothstep-log2"
ALPHA_GE_1 = "alpha_ge_1"
ALPHA_LT_1 = "alpha_lt_1"
DEFAULT_NS = (4, 16, 64, 256, 1024)
THREADS_ENV = "HALFHARDY_THREADS"

_LOG2 = math.log(2.0)
# int_0^1 S(t)^2 dt for the quintic smoothstep
SMOOTHSTEP_SQUARE_MEAN = 181.0 / 462.0


def _smoothstep(t):
    return t * t * t * (10.0 + t * (-15.0 + 6.0 * t))


def _smoothstep_d1(t):
    return 30.0 * t * t * (1.0 - t) ** 2


def _smoothstep_d2(t):
    return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)


def _smoothstep_increment(a, b):
    """``S(b) - S(a)`` as ``(b - a)`` times a symmetric polynomial; no cancellation."""
    a2, b2, ab = a * a, b * b, a * b
    s2 = a2 + ab + b2
    s3 = (a + b) * (a2 + b2)
    s4 = a2 * a2 + b2 * b2 + ab * s2
    return 10.0 * s2 - 15.0 * s3 + 6.0 * s4


@dataclass(frozen=True)
class CutoffSpec:
    """Geometry of ``v_n``: it rises on ``rise``, is 1 between, and falls on ``fall``."""

    n: int
    regime: str
    rise: tuple[float, float]
    fall: tuple[float, float]
    profile: str = PROFILE

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"n must be at least 2, got {self.n!r}")
        if self.regime not in (ALPHA_GE_1, ALPHA_LT_1):
            raise ValueError(f"unknown regime {self.regime!r}")
        a0, a1 = self.rise
        b0, b1 = self.fall
        if not (0.0 < a0 < a1 <= b0 < b1):
            raise ValueError("cutoff breakpoints must satisfy 0 < a0 < a1 <= b0 < b1")

    @property
    def plateau(self) -> tuple[float, float]:
        return self.rise[1], self.fall[0]

    @property
    def support(self) -> tuple[float, float]:
        return self.rise[0], self.fall[1]


def regime_for(alpha: float) -> str:
    return ALPHA_GE_1 if alpha >= 1.0 else ALPHA_LT_1


def cutoff_spec(n: int, alpha: float) -> CutoffSpec:
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    n = int(n)
    if regime_for(alpha) == ALPHA_GE_1:
        return CutoffSpec(n, ALPHA_GE_1, (0.5 / n, 1.0 / n), (1.0, 2.0))
    return CutoffSpec(n, ALPHA_LT_1, (0.5, 1.0), (float(n), 2.0 * n))


class _Band:
    """``x -> S(clip(log(x / start) / log(end / start)))``."""

    def __init__(self, start: float, end: float) -> None:
        self.start = start
        self.end = end
        self.log_width = math.log(end / start)

    def tau(self, x):
        return np.log(x / self.start) / self.log_width

    def __call__(self, x):
        return _smoothstep(np.clip(self.tau(x), 0.0, 1.0))

    def increment(self, x, s):
        tau = self.tau(x)
        delta = np.log1p(s / x) / self.log_width
        a = np.clip(tau, 0.0, 1.0)
        step = np.where(tau < 0.0, np.clip(tau + delta, 0.0, 1.0), np.clip(np.minimum(delta, 1.0 - tau), 0.0, None))
        return step * _smoothstep_increment(a, a + step)

    def derivative(self, x):
        t = self.tau(x)
        inside = (t > 0.0) & (t < 1.0)
        return np.where(inside, _smoothstep_d1(t) / (x * self.log_width), 0.0)

    def second_derivative(self, x):
        t = self.tau(x)
        inside = (t > 0.0) & (t < 1.0)
        lw = self.log_width
        return np.where(inside, (_smoothstep_d2(t) / lw - _smoothstep_d1(t)) / (lw * x * x), 0.0)


class Cutoff:
    """The cutoff ``v_n``; vectorised, C2, with values in ``[0, 1]``."""

    def __init__(self, spec: CutoffSpec) -> None:
        self.spec = spec
        self._rise = _Band(*spec.rise)
        self._fall = _Band(*spec.fall)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self._rise(x) - self._fall(x)

    def increment(self, x, s):
        """``v(x + s) - v(x)`` for ``s >= 0``."""
        x = np.asarray(x, dtype=float)
        return self._rise.increment(x, s) - self._fall.increment(x, s)

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self._rise.derivative(x) - self._fall.derivative(x)

    def second_derivative(self, x):
        x = np.asarray(x, dtype=float)
        return self._rise.second_derivative(x) - self._fall.second_derivative(x)

    @property
    def support(self) -> tuple[float, float]:
        return self.spec.support

    @property
    def kinks(self) -> np.ndarray:
        a0, a1 = self.spec.rise
        b0, b1 = self.spec.fall
        return np.unique(np.array([a0, a1, b0, b1]))

    @property
    def breakpoints(self) -> np.ndarray:
        return _graded(self.kinks)


def build_cutoff(n: int, alpha: float) -> Cutoff:
    """Cutoff ``v_n`` in the geometry dictated by ``alpha`` (plateau near 0 for ``alpha >= 1``)."""
    return Cutoff(cutoff_spec(n, alpha))


class ExtremalFunction:
    """``u_n(x) = v_n(x) x^p`` with ``p = (alpha - 1)/2``.

    Follows the test-function protocol of :mod:`halfhardy.energy` (``support``,
    ``kinks``, ``breakpoints``, vectorised call).  ``power`` and
    ``profile_increment`` let the ground-state path difference ``v`` directly.
    """

    def __init__(self, n: int, alpha: float) -> None:
        if not (0.0 < alpha < 2.0):
            raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
        self.alpha = float(alpha)
        self.power = 0.5 * (self.alpha - 1.0)
        self.cutoff = build_cutoff(n, alpha)
        self.spec = self.cutoff.spec

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        safe = np.clip(x, lo, hi)
        return np.where((x > lo) & (x < hi), self.cutoff(safe) * safe**self.power, 0.0)

    def increment(self, x, s):
        """``u(x + s) - u(x)``: product rule on ``v x^p`` with ``expm1`` for the power."""
        x = np.asarray(x, dtype=float)
        y = x + s
        xp = x**self.power
        dv = self.cutoff.increment(x, s)
        dw = xp * np.expm1(self.power * np.log1p(s / x))
        return dv * xp + self.cutoff(y) * dw

    def profile_increment(self, x, s):
        return self.cutoff.increment(np.asarray(x, dtype=float), s)

    @property
    def support(self) -> tuple[float, float]:
        return self.spec.support

    @property
    def kinks(self) -> np.ndarray:
        return self.cutoff.kinks

    @property
    def breakpoints(self) -> np.ndarray:
        return self.cutoff.breakpoints


def extremal_function(n: int, alpha: float) -> ExtremalFunction:
    return ExtremalFunction(n, alpha)


def lower_bound_norm(n: int, alpha: float) -> float:
    """``log n``: the plateau's share of ``int u_n^2 x^-alpha``, where the integrand is ``1/x``."""
    if n < 2:
        raise ValueError(f"n must be at least 2, got {n!r}")
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha!r}")
    return math.log(n)


def exact_weighted_norm(n: int, alpha: float) -> float:
    """``int u_n^2 x^-alpha = log n + 2 log 2 int_0^1 S^2``, since ``u_n^2 x^-alpha = v_n^2 / x``."""
    return lower_bound_norm(n, alpha) + 2.0 * _LOG2 * SMOOTHSTEP_SQUARE_MEAN


@dataclass(frozen=True)
class RayleighReport:
    n: int
    alpha: float
    energy: float
    weighted_norm: float
    quotient: float
    kappa: float
    excess: float
    remainder: float
    tolerance: float
    direct_energy: float
    profile: str = PROFILE

    @property
    def excess_times_log_n(self) -> float:
        return self.excess * math.log(self.n)

    @property
    def cross_check_gap(self) -> float:
        return abs(self.direct_energy - self.energy) / abs(self.energy)

    def row(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "energy": self.energy,
            "weighted_norm": self.weighted_norm,
            "quotient": self.quotient,
            "kappa": self.kappa,
            "excess": self.excess,
            "excess_times_log_n": self.excess_times_log_n,
            "remainder": self.remainder,
            "tolerance": self.tolerance,
            "profile": self.profile,
        }


def rayleigh_report(n: int, alpha: float, rel_tol: float = DEFAULT_REL_TOL) -> RayleighReport:
    """Rayleigh quotient of ``u_n`` by the ground-state path, cross-checked by the direct path.

    ``tolerance`` bounds the quadrature error of ``excess``.  Raises
    :class:`QuadratureError` if the two energy paths differ by more than
    ``COARSE_REL_TOL`` relative.
    """
    u = extremal_function(n, alpha)
    k = kappa(FracParams(1, alpha))
    norm = weighted_norm(u, alpha)
    inside, outside = remainder_parts(u, alpha, rel_tol)
    half_remainder = inside + outside
    energy = norm.scaled(k) + half_remainder
    direct = energy_direct(u, alpha, COARSE_REL_TOL)
    if abs(direct.value - energy.value) > COARSE_REL_TOL * abs(energy.value):
        raise QuadratureError(
            f"rayleigh_report(n={n}, alpha={alpha}): direct energy {direct.value!r} "
            f"disagrees with ground-state energy {energy.value!r}",
            energy,
        )
    quotient = energy.value / norm.value
    # d(E/N) = dE/N - E dN/N^2
    tolerance = energy.error_estimate / norm.value + abs(quotient) * norm.error_estimate / norm.value
    return RayleighReport(
        n=int(n),
        alpha=float(alpha),
        energy=energy.value,
        weighted_norm=norm.value,
        quotient=quotient,
        kappa=k,
        excess=quotient - k,
        remainder=2.0 * half_remainder.value,
        tolerance=tolerance,
        direct_energy=direct.value,
    )


def thread_count() -> int:
    """Worker threads for scans; ``HALFHARDY_THREADS`` overrides the default of 1."""
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def convergence_scan(ns=DEFAULT_NS, alpha: float = 1.5, rel_tol: float = DEFAULT_REL_TOL) -> list[RayleighReport]:
    """Rayleigh reports for increasing ``ns``, in input order."""
    ns = [int(n) for n in ns]
    if any(b <= a for a, b in zip(ns, ns[1:])):
        raise ValueError("ns must be strictly increasing")
    workers = thread_count()
    if workers == 1:
        return [rayleigh_report(n, alpha, rel_tol) for n in ns]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda n: rayleigh_report(n, alpha, rel_tol), ns))


@dataclass(frozen=True)
class ScanVerdict:
    """Optimality checks on a scan: bounded below, decreasing, ``excess * log n`` in a band."""

    above_kappa: bool
    decreasing: bool
    band_ratio: float
    band_limit: float = 10.0

    @property
    def passed(self) -> bool:
        return self.above_kappa and self.decreasing and self.band_ratio <= self.band_limit


def check_scan(reports: list[RayleighReport], band_limit: float = 10.0) -> ScanVerdict:
    excess = np.array([r.excess for r in reports])
    tol = np.array([r.tolerance for r in reports])
    scaled = np.array([r.excess_times_log_n for r in reports])
    above = bool(np.all(excess >= -tol))
    decreasing = bool(np.all(np.diff(excess) < 0.0))
    if np.all(scaled > 0.0):
        ratio = float(scaled.max() / scaled.min())
    else:
        ratio = math.inf
    return ScanVerdict(above, decreasing, ratio, band_limit)
