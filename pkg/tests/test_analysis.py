import itertools
import math

import numpy as np
import pytest

import greedylab as gl
from greedylab.analysis import (
    CombinatorialLimitError,
    InsufficientDataError,
    applicable_theorem,
    theorem_bounds,
)
from greedylab.greedy import IterationRecord, RunTrace


def el(coords, geometry):
    return gl.Element(np.asarray(coords, dtype=float), geometry)


def _synthetic_trace(errors, algorithm="rpga", geometry=None):
    geometry = geometry or gl.hilbert(2)
    records = [
        IterationRecord(m, 0, 0.0, 0.0, 1.0, float(e), 0.0)
        for m, e in enumerate(errors, start=1)
    ]
    return RunTrace(algorithm, geometry, records, None, "max_iter")


# ---------------------------------------------------------------------------
# fit_rate


def test_fit_rate_exact_half_power():
    ms = np.arange(1, 51)
    fit = gl.fit_rate(_synthetic_trace(ms**-0.5))
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.m_range == (1, 50)


def test_fit_rate_scaled_inverse_power():
    ms = np.arange(1, 31)
    fit = gl.fit_rate(_synthetic_trace(2.0 / ms))
    assert fit.slope == pytest.approx(-1.0, abs=1e-9)
    assert fit.intercept == pytest.approx(math.log(2.0), abs=1e-9)


def test_fit_rate_constant_trace():
    fit = gl.fit_rate(_synthetic_trace(np.full(10, 0.25)))
    assert fit.slope == pytest.approx(0.0, abs=1e-12)


def test_fit_rate_m_min_filter():
    ms = np.arange(1, 21)
    fit = gl.fit_rate(_synthetic_trace(ms**-0.5), m_min=5)
    assert fit.m_range == (5, 20)


def test_fit_rate_insufficient_records():
    with pytest.raises(InsufficientDataError):
        gl.fit_rate(_synthetic_trace([0.5, 0.25]))
    with pytest.raises(InsufficientDataError):
        gl.fit_rate(_synthetic_trace(np.arange(1, 11) ** -0.5), m_min=9)


def test_fit_rate_drops_recovered_steps():
    errors = list(np.arange(1, 11) ** -0.5) + [0.0]
    fit = gl.fit_rate(_synthetic_trace(errors))
    assert fit.m_range == (1, 10)
    assert fit.slope == pytest.approx(-0.5, abs=1e-9)


# ---------------------------------------------------------------------------
# best_mterm_oracle


def test_oracle_orthonormal_examples():
    D = gl.build_orthonormal(2)
    err, support = gl.best_mterm_oracle(el([0.6, 0.8], D.geometry), D, 1)
    assert err == pytest.approx(0.6, abs=1e-14)
    assert support == (1,)

    err0, support0 = gl.best_mterm_oracle(el([0.6, 0.8], D.geometry), D, 0)
    assert err0 == pytest.approx(1.0, abs=1e-14)
    assert support0 == ()

    err2, _ = gl.best_mterm_oracle(el([0.6, 0.8], D.geometry), D, 2)
    assert err2 <= 1e-14


def test_oracle_exact_when_m_covers_span():
    D = gl.build_random_unit(3, 6, seed=1)
    t = gl.make_a1_target(D, 2, 1.0, seed=2)
    err, _ = gl.best_mterm_oracle(t.f, D, 3)
    assert err <= 1e-10


def test_oracle_single_term_closed_form():
    # best 1-term error is min_j sqrt(||f||^2 - <f, phi_j>^2)
    D = gl.build_random_unit(4, 9, seed=3)
    f = el(np.random.default_rng(4).standard_normal(4), D.geometry)
    err, support = gl.best_mterm_oracle(f, D, 1)
    duals = D.matrix @ f.coords
    expected = math.sqrt(float(f.coords @ f.coords) - float(np.abs(duals).max()) ** 2)
    assert err == pytest.approx(expected, abs=1e-12)
    assert support == (int(np.argmax(np.abs(duals))),)


def test_oracle_general_path_against_inline_search():
    D = gl.build_random_unit(4, 7, seed=5)
    f = el(np.random.default_rng(6).standard_normal(4), D.geometry)
    err, support = gl.best_mterm_oracle(f, D, 2)
    best = math.inf
    best_support = None
    for pair in itertools.combinations(range(7), 2):
        S = D.matrix[list(pair)]
        coef = np.linalg.pinv(S.T) @ f.coords
        cand = float(np.linalg.norm(f.coords - coef @ S))
        if cand < best:
            best, best_support = cand, pair
    assert err == pytest.approx(best, abs=1e-10)
    assert support == best_support


def test_oracle_tie_breaks_lexicographic():
    D = gl.build_orthonormal(2)
    _, support = gl.best_mterm_oracle(el([0.5, 0.5], D.geometry), D, 1)
    assert support == (0,)


def test_oracle_combinatorial_guard():
    D = gl.build_random_unit(8, 50, seed=7)
    f = el(np.random.default_rng(8).standard_normal(8), D.geometry)
    with pytest.raises(CombinatorialLimitError):
        gl.best_mterm_oracle(f, D, 10)


def test_oracle_requires_hilbert():
    g = gl.lp(3, 2)
    D = gl.build_orthonormal(2, g)
    with pytest.raises(ValueError):
        gl.best_mterm_oracle(el([1.0, 0.0], g), D, 1)


def test_greedy_never_beats_oracle():
    D = gl.build_random_unit(5, 9, seed=9)
    t = gl.make_a1_target(D, 3, 2.0, seed=10)
    for trace in (gl.rpga_hilbert(t.f, D, 4), gl.oga_hilbert(t.f, D, 4)):
        for rec in trace.records:
            oracle_err, _ = gl.best_mterm_oracle(t.f, D, rec.m)
            assert rec.error >= oracle_err - 1e-10


def test_oracle_rate_on_certified_targets():
    # coefficient-tail bound: best m-term error <= M m^(-1/2) on an
    # orthonormal dictionary
    D = gl.build_orthonormal(16)
    for seed in range(5):
        t = gl.make_a1_target(D, 8, 3.0, seed=seed)
        for m in range(1, 9):
            err, _ = gl.best_mterm_oracle(t.f, D, m)
            assert err <= t.M / math.sqrt(m) + 1e-12


# ---------------------------------------------------------------------------
# check_bound


def test_check_bound_t31_example():
    D = gl.build_orthonormal(2)
    t = gl.target_from_coeffs(D, {0: 0.6, 1: 0.8})
    assert t.M == pytest.approx(1.4)
    trace = gl.rpga_hilbert(t.f, D, 10)
    report = gl.check_bound(trace, t)
    assert report.theorem == "T31"
    assert report.satisfied
    # worst margin comes from step 1: 1.4 - 0.6
    assert report.margin == pytest.approx(0.8, abs=1e-12)
    assert report.worst_m == 1


def test_check_bound_t41_equals_t31_at_constant_one():
    D = gl.build_random_unit(6, 18, seed=20)
    t = gl.make_a1_target(D, 3, 2.0, seed=21)
    ts = gl.WeaknessSequence.constant(1.0)
    trace = gl.wrpga_hilbert(t.f, D, ts, 30)
    ms = trace.ms()
    b41 = theorem_bounds("T41", ms, t.M, trace.geometry, ts)
    b31 = theorem_bounds("T31", ms, t.M, trace.geometry, None)
    assert np.allclose(b41, b31, rtol=0, atol=1e-15)
    assert gl.check_bound(trace, t).satisfied


def test_t53_bound_formula_l4():
    # q = 2, gamma = 3/2: bound_m = M (1 + (m-1)/12)^(-1/2)
    g = gl.lp(4, 4)
    ms = np.arange(1, 6)
    bounds = theorem_bounds("T53", ms, 2.0, g, None)
    assert math.isinf(bounds[0])
    expected = 2.0 * (1.0 + (ms[1:] - 1.0) / 12.0) ** -0.5
    assert np.allclose(bounds[1:], expected, rtol=1e-14)


def test_t61_bound_formula():
    g = gl.lp(1.5, 4)  # q = 3/2, Q = 3, rate = (1/3) * (2*(2/3)*(3/2))^(-2) = 1/12
    ts = gl.WeaknessSequence.constant(0.5)
    ms = np.array([2, 3, 4])
    bounds = theorem_bounds("T61", ms, 1.0, g, ts)
    expected = (0.125 + (1.0 / 12.0) * 0.125 * (ms - 1.0)) ** (1.0 / 1.5 - 1.0)
    assert np.allclose(bounds, expected, rtol=1e-13)


def test_check_bound_detects_violation():
    D = gl.build_orthonormal(4)
    t = gl.make_a1_target(D, 3, 1.0, seed=30)
    trace = gl.rpga_hilbert(t.f, D, 10)
    bad_records = list(trace.records)
    rec = bad_records[1]
    bad_records[1] = IterationRecord(rec.m, rec.atom_index, rec.dual_value, rec.lam, rec.s, 10.0, rec.sup_dual)
    bad = RunTrace("rpga", trace.geometry, bad_records, None, trace.stop_reason)
    report = gl.check_bound(bad, t)
    assert not report.satisfied
    assert report.worst_m == 2
    assert report.margin < -1e-9


def test_check_bound_geometry_mismatch():
    D = gl.build_orthonormal(3)
    t = gl.make_a1_target(D, 2, 1.0, seed=31)
    trace = gl.rpga_hilbert(t.f, D, 5)
    g = gl.lp(3, 3)
    Dp = gl.build_orthonormal(3, g)
    tp = gl.make_a1_target(Dp, 2, 1.0, seed=31)
    with pytest.raises(ValueError):
        gl.check_bound(trace, tp)


def test_check_bound_needs_ts_for_weak():
    D = gl.build_orthonormal(3)
    t = gl.make_a1_target(D, 2, 1.0, seed=32)
    trace = gl.wrpga_hilbert(t.f, D, gl.WeaknessSequence.constant(0.5), 5)
    stripped = RunTrace("wrpga", trace.geometry, trace.records, None, trace.stop_reason)
    with pytest.raises(ValueError):
        gl.check_bound(stripped, t)
    # the sequence travels with the trace by default
    assert gl.check_bound(trace, t).theorem == "T41"


def test_applicable_theorem_rejects_baselines():
    trace = _synthetic_trace([0.5, 0.4, 0.3], algorithm="pga")
    with pytest.raises(ValueError):
        applicable_theorem(trace)


def test_rpga_median_slope_guard():
    # informational regression guard: median fitted slope is at most -0.45
    slopes = []
    for seed in range(20):
        D = gl.build_random_unit(16, 64, seed=seed)
        t = gl.make_a1_target(D, 8, 2.0, seed=1000 + seed)
        trace = gl.rpga_hilbert(t.f, D, 100)
        slopes.append(gl.fit_rate(trace, m_min=2).slope)
    assert float(np.median(slopes)) <= -0.45
