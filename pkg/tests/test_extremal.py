import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfhardy.closedform import kappa
from halfhardy.energy import energy_direct, weighted_norm
from halfhardy.extremal import (
    ALPHA_GE_1,
    ALPHA_LT_1,
    DEFAULT_NS,
    PROFILE,
    SMOOTHSTEP_SQUARE_MEAN,
    THREADS_ENV,
    CutoffSpec,
    build_cutoff,
    check_scan,
    convergence_scan,
    cutoff_spec,
    exact_weighted_norm,
    extremal_function,
    lower_bound_norm,
    rayleigh_report,
    regime_for,
    thread_count,
)
from halfhardy.specfun import FracParams

LOG2 = math.log(2.0)
# max of x|v'| and x^2|v''| for the quintic smoothstep in log2 coordinates,
# from an mpmath scan of S'(t)/log 2 and S''(t)/log^2 2 - S'(t)/log 2 on [0, 1]
MAX_X_DV = 2.70505320166681
MAX_X2_D2V = 13.3007157156954


def _log_grid(spec, count=20001):
    lo, hi = spec.support
    return np.exp(np.linspace(math.log(lo), math.log(hi), count))


@pytest.fixture(scope="module")
def scans():
    return {alpha: convergence_scan(DEFAULT_NS, alpha) for alpha in (0.5, 1.0, 1.5, 1.7)}


def test_regime_dispatch():
    assert regime_for(1.0) == ALPHA_GE_1
    assert regime_for(1.5) == ALPHA_GE_1
    assert regime_for(0.999) == ALPHA_LT_1
    assert cutoff_spec(8, 1.2).regime == ALPHA_GE_1
    assert cutoff_spec(8, 0.2).regime == ALPHA_LT_1


@pytest.mark.parametrize("n", [2, 4, 64, 1024])
def test_plateau_alpha_ge_1(n):
    v = build_cutoff(n, 1.5)
    assert v.spec.plateau == (1.0 / n, 1.0)
    lo, hi = v.spec.support
    assert lo >= 1.0 / (2 * n) and hi <= 2.0
    plateau = np.exp(np.linspace(math.log(1.0 / n), 0.0, 101))
    assert np.all(v(plateau) == 1.0)
    outside = np.array([1e-9, 0.25 / n, 0.5 / n, 2.0, 3.0, 1e6])
    assert np.all(v(outside) == 0.0)


def test_plateau_alpha_lt_1_n4():
    v = build_cutoff(4, 0.5)
    assert v.spec.plateau == (1.0, 4.0)
    assert v.spec.support == (0.5, 8.0)
    assert np.all(v(np.linspace(1.0, 4.0, 31)) == 1.0)
    assert np.all(v(np.array([0.1, 0.5, 8.0, 20.0])) == 0.0)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.8])
def test_cutoff_between_zero_and_one(alpha):
    v = build_cutoff(16, alpha)
    values = v(_log_grid(v.spec))
    assert values.min() >= 0.0 and values.max() <= 1.0


def test_cutoff_spec_validation():
    with pytest.raises(ValueError):
        cutoff_spec(1, 1.5)
    with pytest.raises(ValueError):
        cutoff_spec(4, 2.0)
    with pytest.raises(ValueError):
        CutoffSpec(4, "sideways", (0.5, 1.0), (4.0, 8.0))


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_derivative_bounds_independent_of_n(alpha):
    first, second = [], []
    for n in (4, 64, 1024):
        v = build_cutoff(n, alpha)
        x = _log_grid(v.spec, 200001)
        first.append(np.max(x * np.abs(v.derivative(x))))
        second.append(np.max(x**2 * np.abs(v.second_derivative(x))))
    assert first == pytest.approx([MAX_X_DV] * 3, rel=1e-6)
    assert second == pytest.approx([MAX_X2_D2V] * 3, rel=1e-6)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_derivatives_match_finite_differences(alpha):
    v = build_cutoff(16, alpha)
    x = _log_grid(v.spec, 301)[1:-1]
    h = 1e-6 * x
    fd1 = (v(x + h) - v(x - h)) / (2 * h)
    fd2 = (v.derivative(x + h) - v.derivative(x - h)) / (2 * h)
    assert np.allclose(v.derivative(x), fd1, rtol=1e-6, atol=1e-6 / x)
    assert np.allclose(v.second_derivative(x), fd2, rtol=1e-6, atol=1e-3 / x**2)  # v''' jumps at the kinks


@settings(max_examples=50, deadline=None)
@given(st.floats(-12.0, 4.0), st.floats(1e-12, 3.0), st.sampled_from([0.4, 1.0, 1.6]))
def test_increment_matches_difference(log_x, s, alpha):
    v = build_cutoff(32, alpha)
    x = np.array([math.exp(log_x)])
    assert v.increment(x, s)[0] == pytest.approx(v(x + s)[0] - v(x)[0], abs=1e-12)


def test_smoothstep_square_mean_oracle():
    step = lambda t: 6 * t**5 - 15 * t**4 + 10 * t**3
    assert SMOOTHSTEP_SQUARE_MEAN == pytest.approx(float(mpmath.quad(lambda t: step(t) ** 2, [0, 1])), rel=1e-15)


def test_extremal_is_cutoff_at_alpha_one():
    u = extremal_function(16, 1.0)
    x = _log_grid(u.spec, 501)
    assert np.array_equal(u(x), u.cutoff(x))


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_extremal_is_power_on_plateau(alpha):
    u = extremal_function(16, alpha)
    lo, hi = u.spec.plateau
    x = np.linspace(lo, hi, 101)
    assert np.allclose(u(x), x ** ((alpha - 1) / 2), rtol=1e-15)
    outside = np.array([0.5 * u.support[0], 2 * u.support[1]])
    assert np.all(u(outside) == 0.0)


@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_extremal_increment(alpha):
    u = extremal_function(16, alpha)
    x = _log_grid(u.spec, 401)[1:-1]
    for s in (1e-9, 1e-3, 0.3):
        inside = x + s < u.support[1]
        assert np.allclose(u.increment(x, s)[inside], (u(x + s) - u(x))[inside], atol=1e-12, rtol=1e-9)


def test_lower_bound_norm_values():
    assert lower_bound_norm(2, 1.5) == pytest.approx(math.log(2), rel=1e-15)
    assert lower_bound_norm(7, 1.5) == pytest.approx(2.0, abs=0.06)
    with pytest.raises(ValueError):
        lower_bound_norm(1, 1.5)


@pytest.mark.parametrize("n", [4, 16, 64, 256])
@pytest.mark.parametrize("alpha", [0.5, 1.5])
def test_weighted_norm_exact(n, alpha):
    computed = weighted_norm(extremal_function(n, alpha), alpha).value
    assert computed == pytest.approx(exact_weighted_norm(n, alpha), rel=1e-12)
    assert computed >= lower_bound_norm(n, alpha)


def test_weighted_norm_mpmath_oracle():
    # u^2 x^-alpha = v^2 / x, integrated in log x over each band
    n, alpha = 16, 1.5
    v = build_cutoff(n, alpha)
    lo, hi = v.spec.support
    pieces = [math.log(b) for b in v.kinks]
    value = mpmath.quad(lambda t: float(v(np.array([math.exp(float(t))]))[0]) ** 2, pieces)
    assert float(value) == pytest.approx(exact_weighted_norm(n, alpha), rel=1e-12)
    assert pieces[0] == pytest.approx(math.log(lo)) and pieces[-1] == pytest.approx(math.log(hi))


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_report_invariants(alpha):
    r = rayleigh_report(16, alpha)
    assert r.profile == PROFILE
    assert r.kappa == kappa(FracParams(1, alpha))
    assert r.quotient == pytest.approx(r.energy / r.weighted_norm, rel=1e-15)
    assert r.excess >= -r.tolerance
    assert r.energy == pytest.approx(r.kappa * r.weighted_norm + r.remainder / 2, abs=r.tolerance * r.weighted_norm)
    assert r.cross_check_gap < 1e-6
    row = r.row()
    assert list(row) == [
        "n", "alpha", "energy", "weighted_norm", "quotient", "kappa",
        "excess", "excess_times_log_n", "remainder", "tolerance", "profile",
    ]


def test_report_energy_matches_direct_path_tightly():
    u = extremal_function(64, 0.5)
    assert rayleigh_report(64, 0.5).energy == pytest.approx(energy_direct(u, 0.5).value, rel=1e-9)


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.7])
def test_scan_optimality(scans, alpha):
    reports = scans[alpha]
    verdict = check_scan(reports)
    assert verdict.above_kappa and verdict.decreasing
    assert verdict.band_ratio <= 10.0
    assert verdict.passed


def test_alpha_one_quotient_vanishes_like_inverse_log(scans):
    quotients = [r.quotient for r in scans[1.0]]
    assert all(b < a for a, b in zip(quotients, quotients[1:]))
    scaled = [r.quotient * math.log(r.n) for r in scans[1.0]]
    assert max(scaled) / min(scaled) < 3.0


def test_remainder_bounded(scans):
    remainders = [r.remainder for r in scans[1.5] if r.n >= 16]
    assert max(remainders) / min(remainders) <= 2.0


def test_check_scan_flags_increase(scans):
    reports = list(reversed(scans[1.5]))
    assert not check_scan(reports).decreasing


def test_scan_rejects_unsorted():
    with pytest.raises(ValueError):
        convergence_scan([16, 4], 1.5)


def test_threads_env(monkeypatch, scans):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert thread_count() == 3
    parallel = convergence_scan([4, 16, 64], 1.5)
    assert [r.excess for r in parallel] == [r.excess for r in scans[1.5][:3]]
    monkeypatch.setenv(THREADS_ENV, "0")
    with pytest.raises(ValueError):
        thread_count()
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(ValueError):
        thread_count()
