import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smilab.ensembles import (
    EnsembleSpec, Family, SeedPath, ShiftSpec, density_bound_check,
    sample_matrix, sample_stack, shift_matrix,
)
from smilab.errors import ConfigError, UnsupportedFamilyError


def test_determinism():
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 3, K=1.0)
    a = sample_matrix(spec, SeedPath(42, 7))
    b = sample_matrix(spec, SeedPath(42, 7))
    assert a.tobytes() == b.tobytes()
    c = sample_matrix(spec, SeedPath(42, 8))
    assert not np.array_equal(a, c)


def test_stack_matches_single_draws():
    spec = EnsembleSpec(Family.CAUCHY, 4, K=2.0, shift=ShiftSpec.scalar_identity(3.0))
    stack = sample_stack(spec, 5, 10, 14)
    for k in range(4):
        assert np.array_equal(stack[k], sample_matrix(spec, SeedPath(5, 10 + k)))


def test_lazy_rademacher_frequencies():
    a = sample_matrix(EnsembleSpec(Family.LAZY_RADEMACHER, 1000), SeedPath(0, 0))
    upper = a[np.triu_indices(1000)]
    assert set(np.unique(upper)) <= {-1.0, 0.0, 1.0}
    freqs = [np.mean(upper == v) for v in (-1.0, 0.0, 1.0)]
    for got, want in zip(freqs, (0.25, 0.5, 0.25)):
        assert abs(got - want) < 0.01


def test_counterexample_shift_added():
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 50, K=2.0, shift=ShiftSpec.counterexample_diag(100))
    a = sample_matrix(spec, SeedPath(3, 0))
    assert -0.25 <= a[0, 0] <= 0.25
    diag = np.diag(a)[1:]
    assert np.all((diag >= 99.75) & (diag <= 100.25))
    off = a[~np.eye(50, dtype=bool)]
    assert np.all(np.abs(off) <= 0.25)


def test_shift_matrix_examples():
    np.testing.assert_array_equal(shift_matrix(ShiftSpec.counterexample_diag(5), 3), np.diag([0.0, 5, 5]))
    np.testing.assert_array_equal(shift_matrix(ShiftSpec.zero(), 4), np.zeros((4, 4)))
    np.testing.assert_array_equal(shift_matrix(ShiftSpec.scalar_identity(-2), 2), np.diag([-2.0, -2.0]))
    m = [[1.0, 2.0], [2.0, 5.0]]
    np.testing.assert_array_equal(shift_matrix(ShiftSpec.explicit(m), 2), m)
    with pytest.raises(ConfigError):
        shift_matrix(ShiftSpec.explicit(m), 3)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ShiftSpec.counterexample_diag(-1)
    with pytest.raises(ConfigError):
        ShiftSpec.explicit([[1.0, 2.0], [3.0, 4.0]])
    with pytest.raises(ConfigError):
        EnsembleSpec(Family.BOUNDED_UNIFORM, 3)
    with pytest.raises(ConfigError):
        EnsembleSpec(Family.CAUCHY, 3, K=-1.0)
    with pytest.raises(ConfigError):
        EnsembleSpec("not_a_family", 3, K=1.0)
    with pytest.raises(ConfigError):
        EnsembleSpec(Family.GINIBRE, 0)
    with pytest.raises(ConfigError):
        EnsembleSpec(Family.GINIBRE, 3, shift=ShiftSpec.explicit(np.eye(2)))
    with pytest.raises(ConfigError):
        SeedPath(-1, 0)


@pytest.mark.parametrize("family", [Family.BOUNDED_UNIFORM, Family.BOUNDED_GAUSSIAN, Family.CAUCHY])
def test_density_bound(family):
    rep = density_bound_check(EnsembleSpec(family, 1, K=1.0), 10**6, SeedPath(0, 0))
    assert 0.95 <= rep.max_density <= 1.05
    assert rep.passed
    if family is not Family.BOUNDED_UNIFORM:
        assert abs(rep.argmax_center) < 0.1


def test_density_scales_with_k():
    rep = density_bound_check(EnsembleSpec(Family.BOUNDED_GAUSSIAN, 1, K=4.0), 10**6, SeedPath(1, 0))
    assert 0.95 * 4 <= rep.max_density <= 1.05 * 4


def test_density_rejects_discrete():
    with pytest.raises(UnsupportedFamilyError):
        density_bound_check(EnsembleSpec(Family.LAZY_RADEMACHER, 1), 10**6, SeedPath(0, 0))


def test_independence_proxy():
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 3, K=1.0)
    stack = sample_stack(spec, 11, 0, 10**5)
    r = np.corrcoef(stack[:, 0, 1], stack[:, 0, 2])[0, 1]
    assert abs(r) < 0.02


def test_mean_shift():
    c = 7.5
    spec = EnsembleSpec(Family.BOUNDED_UNIFORM, 4, K=1.0, shift=ShiftSpec.scalar_identity(c))
    stack = sample_stack(spec, 2, 0, 10**4)
    se = math.sqrt(1.0 / 12.0 / 10**4)
    for i in range(4):
        assert abs(stack[:, i, i].mean() - c) < 3 * se


@settings(max_examples=50, deadline=None)
@given(
    st.sampled_from(list(Family)),
    st.integers(1, 12),
    st.integers(0, 2**64 - 1),
    st.integers(0, 10**9),
)
def test_symmetry_and_determinism(family, n, master, trial):
    spec = EnsembleSpec(family, n, K=None if not family.continuous else 1.5)
    a = sample_matrix(spec, SeedPath(master, trial))
    assert a.shape == (n, n)
    if family.symmetric:
        assert np.array_equal(a, a.T)
    assert np.array_equal(a, sample_matrix(spec, SeedPath(master, trial)))
