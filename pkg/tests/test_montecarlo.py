import math

import pytest
from scipy.stats import norm
from statsmodels.stats.proportion import proportion_confint

from ssbounds.bounds import bound_table
from ssbounds.codec import DecodeBudgetError
from ssbounds.montecarlo import (
    analytic_tails, bound_consistency, power_check, run_trials, trial_rng, wilson_interval,
    wilson_lower, wilson_upper,
)
from ssbounds.params import capacity_bits, derive_params


def params(L=2, M=4, v=20.0, frac=0.5, d=0):
    return derive_params(L, 0.0, frac * capacity_bits(v), v, d=d, M=M)


@pytest.mark.parametrize("k,n", [(0, 10), (3, 10), (10, 100), (57, 1000), (999, 1000), (5, 5)])
def test_wilson_matches_statsmodels(k, n):
    lo, hi = proportion_confint(k, n, alpha=0.05, method="wilson")
    got = wilson_interval(k, n, 0.95)
    assert got[0] == pytest.approx(lo, abs=1e-12)
    assert got[1] == pytest.approx(hi, abs=1e-12)


def test_wilson_closed_forms():
    z = norm.ppf(0.975)
    n = 1000
    assert wilson_upper(0, n) == pytest.approx(z * z / (n + z * z), rel=1e-12)
    assert wilson_lower(0, n) == 0.0
    assert wilson_upper(n, n) == 1.0
    # the standard formula at (10, 100) gives 0.1744
    assert wilson_upper(10, 100) == pytest.approx(0.17437, abs=5e-5)


def test_wilson_errors():
    with pytest.raises(ValueError):
        wilson_upper(0, 0)
    with pytest.raises(ValueError):
        wilson_upper(5, 4)
    with pytest.raises(ValueError):
        wilson_upper(1, 4, confidence=1.0)


def test_trial_rng_isolated():
    a = trial_rng(7, 123).normal(size=4)
    b = trial_rng(7, 123).normal(size=4)
    c = trial_rng(7, 124).normal(size=4)
    assert (a == b).all() and not (a == c).all()


def test_determinism_and_thread_invariance():
    p = params()
    a = run_trials(p, "gaussian", None, 3000, 7)
    b = run_trials(p, "gaussian", None, 3000, 7)
    c = run_trials(p, "gaussian", None, 3000, 7, threads=3)
    assert a == b == c
    d = run_trials(p, "gaussian", None, 3000, 8)
    assert d.histogram != a.histogram


@pytest.mark.parametrize("kind,d", [("gaussian", None), ("binomial", 5), ("bernoulli", None)])
def test_histogram_invariants(kind, d):
    p = params(L=3, M=4, v=5.0)
    s = run_trials(p, kind, d, 2000, 1)
    for h in (s.histogram, s.histogram_ties_as_errors, s.histogram_ties_favorable):
        assert sum(h.values()) == 2000
        assert set(h) <= set(range(0, 4))
    assert s.block_errors == 2000 - s.histogram.get(0, 0)
    # ties as errors can only move mass upward
    assert s.tail_count(1, "errors") >= s.tail_count(1) >= s.tail_count(1, "favorable")


def test_huge_snr_decodes_cleanly():
    p = derive_params(2, 0.0, 0.1, 1e8, M=4)
    s = run_trials(p, "gaussian", None, 2000, 5)
    assert s.histogram == {0: 2000}


def test_budget_and_validation():
    p = derive_params(4, 0.0, 1.0, 20.0, M=64)
    with pytest.raises(DecodeBudgetError):
        run_trials(p, "gaussian", None, 10, 0)
    with pytest.raises(ValueError):
        run_trials(params(), "gaussian", None, 0, 0)
    with pytest.raises(ValueError):
        run_trials(params(), "binomial", None, 10, 0)


def test_power_check():
    p = params(L=3, M=8, v=20.0, frac=0.3)
    s = run_trials(p, "gaussian", None, 10_000, 2)
    assert s.trials * p.n >= 10 ** 5
    assert power_check(s, p.P)
    assert not power_check(s, 1.5 * p.P)


def test_l2_m4_example_against_bound():
    p = params(L=2, M=4, v=20.0, frac=0.5)
    s = run_trials(p, "gaussian", None, 10_000, 7)
    tails = analytic_tails(p, "gaussian", None)
    lo, hi = wilson_interval(s.tail_count(1, "errors"), s.trials)
    freq = s.tail_count(1, "errors") / s.trials
    assert freq <= min(1.0, math.exp(tails[1])) + (hi - lo) / 2


def test_consistency_rows_and_trivial_passes():
    p = params(L=2, M=4, v=20.0, frac=0.5)
    s = run_trials(p, "gaussian", None, 2000, 1)
    rows = bound_consistency(s, {1: 5.0, 2: -1e9})
    assert {r.ties for r in rows} == {"errors", "lexicographic", "favorable"}
    # vacuous bound passes; a bound of ~0 passes only with zero observations
    assert all(r.passed for r in rows if r.l0 == 1)
    s0 = run_trials(derive_params(2, 0.0, 0.1, 1e8, M=4), "gaussian", None, 500, 1)
    assert all(r.passed for r in bound_consistency(s0, {1: -50.0, 2: -60.0}))


def test_consistency_with_bound_table_and_mismatch():
    p = params(L=3, M=8, v=100.0, frac=0.3)
    s = run_trials(p, "gaussian", None, 1000, 4)
    rows = bound_consistency(s, bound_table(p))
    assert all(r.passed for r in rows)
    other = params(L=2, M=4, v=100.0, frac=0.3)
    with pytest.raises(ValueError):
        bound_consistency(s, bound_table(other))


def test_fixed_dictionary_mode():
    p = params(L=2, M=4, v=5.0)
    a = run_trials(p, "binomial", 3, 1000, 11, fixed_dictionary=True)
    b = run_trials(p, "binomial", 3, 1000, 11, fixed_dictionary=True)
    assert a == b and a.config["fixed_dictionary"]
