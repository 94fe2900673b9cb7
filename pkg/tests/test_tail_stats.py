import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import brentq
from scipy.stats import binom

from smilab.ensembles import EnsembleSpec, Family, ShiftSpec
from smilab.errors import ConfigError, DomainError, UnsupportedFamilyError
from smilab.tail_stats import (
    SampleSet, check_ginibre_lower, check_hagelstein, check_sst_bound, check_theorem_bound,
    clopper_pearson, counterexample_growth, draw_trials, empirical_tail, tail_report, weak_lp_norm,
)

T_GRID = [1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]


def cp_oracle(k, n, level=0.999):
    # solve the binomial tail equations directly instead of using beta quantiles
    a = 1 - level
    lo = 0.0 if k == 0 else brentq(lambda p: binom.sf(k - 1, n, p) - a, 1e-15, 1 - 1e-15, xtol=1e-15)
    hi = 1.0 if k == n else brentq(lambda p: binom.cdf(k, n, p) - a, 1e-15, 1 - 1e-15, xtol=1e-15)
    return lo, hi


def test_weak_lp_constant():
    assert weak_lp_norm(np.full(1000, 3.5)) == 3.5


def test_weak_lp_cauchy():
    ts = np.logspace(-3, 6, 20001)
    oracle = np.max(ts * (2 / np.pi) * np.arctan(1 / ts))
    assert oracle == pytest.approx(2 / np.pi, rel=1e-6)
    x = np.abs(np.random.default_rng(0).standard_cauchy(10**6))
    assert abs(weak_lp_norm(x) / oracle - 1) < 0.10


def test_weak_lp_uniform():
    x = np.random.default_rng(1).uniform(0, 1, 10**6)
    assert abs(weak_lp_norm(x) / 0.25 - 1) < 0.05


def test_weak_lp_p2():
    # X uniform on [0, 1]: sup t (1 - t)^(1/2) = 2 / (3 sqrt 3)
    x = np.random.default_rng(2).uniform(0, 1, 10**6)
    assert weak_lp_norm(x, p=2.0) == pytest.approx(2 / (3 * math.sqrt(3)), rel=0.01)


def test_weak_lp_unrestricted_is_max_over_all_order_statistics():
    v = np.random.default_rng(3).exponential(size=500)
    s = np.sort(v)
    brute = max(s[k] * (500 - k) / 500 for k in range(500))
    assert weak_lp_norm(v, min_exceedances=1) == pytest.approx(brute, rel=1e-15)
    assert weak_lp_norm(v) <= weak_lp_norm(v, min_exceedances=1)


def test_weak_lp_errors():
    with pytest.raises(DomainError):
        weak_lp_norm([])
    with pytest.raises(DomainError):
        weak_lp_norm(np.ones(10))
    with pytest.raises(DomainError):
        weak_lp_norm(np.ones(200), p=0.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.integers(-20, 20), st.integers(100, 3000))
def test_weak_lp_scale_equivariant(seed, e, n):
    x = np.abs(np.random.default_rng(seed).standard_cauchy(n))
    c = 2.0 ** e
    assert weak_lp_norm(c * x) == c * weak_lp_norm(x)


def test_clopper_pearson_examples():
    lo, hi = clopper_pearson(0, 1000)
    assert lo == 0.0
    assert hi == pytest.approx(0.0069, abs=5e-5)
    assert hi == pytest.approx(1 - 0.001 ** (1 / 1000), rel=1e-10)
    lo, hi = clopper_pearson(1000, 1000)
    assert hi == 1.0 and lo < 1.0
    lo, hi = clopper_pearson(500, 1000)
    assert lo < 0.5 < hi and hi - lo < 0.11


@pytest.mark.parametrize("k,n", [(0, 50), (1, 50), (7, 1000), (500, 1000), (999, 1000), (3, 100000)])
def test_clopper_pearson_oracle(k, n):
    got = clopper_pearson(k, n)
    want = cp_oracle(k, n)
    assert got[0] == pytest.approx(want[0], rel=1e-7, abs=1e-14)
    assert got[1] == pytest.approx(want[1], rel=1e-7, abs=1e-14)


def test_clopper_pearson_errors():
    with pytest.raises(DomainError):
        clopper_pearson(5, 4)
    with pytest.raises(DomainError):
        clopper_pearson(0, 0)


def test_empirical_tail_examples():
    s = SampleSet(np.concatenate([np.zeros(500), np.full(500, 2.0)]))
    est, lo, hi = empirical_tail(s, 1.0)
    assert est == 0.5 and lo <= 0.5 <= hi
    est, lo, hi = empirical_tail(s, 5.0)
    assert est == 0.0 and lo == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32), st.lists(st.floats(0.01, 100), min_size=2, max_size=10))
def test_empirical_tail_monotone(seed, ts):
    s = SampleSet(np.abs(np.random.default_rng(seed).standard_cauchy(500)))
    ests = [empirical_tail(s, t)[0] for t in sorted(ts)]
    assert all(a >= b for a, b in zip(ests, ests[1:]))


def test_ci_ordering_and_tightening():
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 5, K=1.0)
    batch = draw_trials(spec, 10**5, master_seed=4)
    full = batch.norm_samples()
    small = SampleSet(full.values[:1000])
    thr = 25 * np.asarray(T_GRID) / 50
    reps = [tail_report(s, T_GRID, thr, 8 / np.asarray(T_GRID), "8K/t") for s in (small, full)]
    for r in reps:
        assert np.all(r.ci_lower <= r.empirical) and np.all(r.empirical <= r.ci_upper)
        assert np.all((0 <= r.ci_lower) & (r.ci_upper <= 1))
    assert np.all(reps[1].ci_upper - reps[1].ci_lower < reps[0].ci_upper - reps[0].ci_lower)


def test_hs_dominates_operator_norm_tails():
    spec = EnsembleSpec(Family.CAUCHY, 6, K=1.0, shift=ShiftSpec.scalar_identity(2.0))
    batch = draw_trials(spec, 3000, master_seed=5, hs=True)
    op, hs = batch.norm_samples().values, batch.hs_samples().values
    assert np.all(op <= hs * (1 + 1e-10))
    for t in np.logspace(-1, 4, 30):
        assert empirical_tail(SampleSet(hs), t)[0] >= empirical_tail(SampleSet(op), t)[0]


def test_theorem_examples():
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 20, K=1.0)
    rep = check_theorem_bound(spec, 10**4, T_GRID)
    k = T_GRID.index(10.0)
    assert rep.empirical[k] <= 0.8
    assert rep.passed
    assert np.all(rep.capped_bound[np.asarray(T_GRID) <= 8] == 1.0)
    far = check_theorem_bound(spec.__class__(Family.BOUNDED_UNIFORM, 20, K=1.0,
                                             shift=ShiftSpec.counterexample_diag(1e8)), 10**4, T_GRID)
    assert far.passed


def test_theorem_shift_invariance_of_pass():
    for shift in (ShiftSpec.zero(), ShiftSpec.scalar_identity(1e6), ShiftSpec.counterexample_diag(1e6)):
        spec = EnsembleSpec(Family.BOUNDED_GAUSSIAN, 10, K=1.0, shift=shift)
        assert check_theorem_bound(spec, 2000, T_GRID, master_seed=6).passed


def test_theorem_rejections():
    with pytest.raises(UnsupportedFamilyError):
        check_theorem_bound(EnsembleSpec(Family.GINIBRE, 5), 1000, T_GRID)
    with pytest.raises(UnsupportedFamilyError):
        check_theorem_bound(EnsembleSpec(Family.LAZY_RADEMACHER, 5), 1000, T_GRID)
    with pytest.raises(ConfigError):
        check_theorem_bound(EnsembleSpec(Family.CAUCHY, 5, K=1.0), 10, T_GRID)
    with pytest.raises(ConfigError):
        check_theorem_bound(EnsembleSpec(Family.CAUCHY, 5, K=1.0), 1000, [2.0, 1.0])


def test_fail_is_reported():
    # a bound that is far too small must be refuted
    s = SampleSet(np.random.default_rng(0).exponential(size=5000))
    rep = tail_report(s, [1.0], [1.0], [0.01], "too small")
    assert not rep.passed
    assert rep.rows().__next__()["pass"] is False


def test_exclusions_fail_continuous_runs():
    s = SampleSet(np.ones(1000), excluded=5)
    rep = tail_report(s, [1.0], [2.0], [1.0], "x")
    assert np.all(rep.row_pass) and not rep.passed


def test_sst_examples():
    rep = check_sst_bound(20, ShiftSpec.zero(), 10**4, T_GRID)
    k = T_GRID.index(10.0)
    assert rep.empirical[k] <= 0.235
    assert rep.passed
    assert rep.row_pass[0] and rep.capped_bound[0] == 1.0
    assert check_sst_bound(20, ShiftSpec.scalar_identity(1000), 10**4, T_GRID).passed


def test_hagelstein_single_component():
    rep = check_hagelstein(1, 10**5)
    assert rep.ratio == pytest.approx(0.25, rel=1e-12)
    assert rep.passed


def test_hagelstein_many_components():
    for m, trials in ((4, 10**6), (100, 10**5)):
        rep = check_hagelstein(m, trials, master_seed=1)
        assert rep.ratio < 1.0
        assert len(rep.component_norms) == m


def test_counterexample_determinism_and_validation():
    a = counterexample_growth(20, [1e2, 1e3, 1e4], 300, master_seed=3)
    b = counterexample_growth(20, [1e2, 1e3, 1e4], 300, master_seed=3, workers=2)
    assert a.to_dict() == b.to_dict()
    with pytest.raises(ConfigError):
        counterexample_growth(20, [1e2, 1e3], 300)
    with pytest.raises(ConfigError):
        counterexample_growth(20, [1e2, 1e3, 5e3], 300)
    with pytest.raises(ConfigError):
        counterexample_growth(20, [1e3, 1e2, 1e4], 300)


def test_counterexample_excludes_singular_draws():
    # for n = 2 the lazy entries make D + R singular with positive probability
    rep = counterexample_growth(2, [1.0, 10.0, 100.0], 400, master_seed=0)
    assert rep.excluded > 0
    for row in rep.rows:
        assert row.trials + row.excluded == 400


def test_counterexample_growth_upper_cluster():
    # the upper half of the law has norm of order d / sqrt(n); quantile 0.6 sits inside it
    for seed in (0, 1, 2):
        rep = counterexample_growth(50, [1e2, 1e3, 1e4], 2000, master_seed=seed, quantile=0.6)
        assert rep.passed, rep.to_dict()
        assert rep.band_ratio < 1.5


def test_counterexample_lower_cluster_does_not_grow():
    # below the R[0, 0] == 0 atom the norm does not scale with d
    rep = counterexample_growth(50, [1e2, 1e3, 1e4], 2000, quantile=0.3)
    assert rep.band_ratio > 50
    assert not rep.passed


def test_ginibre_lower():
    rep = check_ginibre_lower(50, 2000)
    assert rep.asserted and rep.exceed_fraction >= 0.9 and rep.passed
    small = check_ginibre_lower(5, 1000)
    assert not small.asserted
    assert 0 <= small.exceed_fraction <= 1
    assert check_ginibre_lower(5, 1000).to_dict() == small.to_dict()
