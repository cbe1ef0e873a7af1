import numpy as np
import pytest
from scipy import stats

from onebit_mc.dither import (
    DitherSpec,
    discrete_atoms,
    dynamic_range,
    generate,
    spec_from_range,
)
from onebit_mc.model import ObservationMask


def _mask(n):
    return ObservationMask.full((1, n))


def test_discrete_two_levels():
    assert discrete_atoms(2, 1.0).tolist() == [-0.5, 0.5]
    stack = generate(DitherSpec("discrete", levels=2, amplitude=1.0, seed=1), _mask(1000))
    assert set(np.unique(stack.values)) == {-0.5, 0.5}


def test_discrete_excludes_zero():
    atoms = discrete_atoms(10, 2.0)
    assert len(atoms) == 10 and 0.0 not in atoms
    assert atoms.min() == -1.0 and atoms.max() == 1.0


def test_uniform_moments():
    v = generate(DitherSpec("uniform", a=1.0, seed=7), _mask(100_000)).values.ravel()
    assert abs(v.mean()) < 0.01
    assert abs(v.var() - 1 / 3) < 0.05 / 3
    assert np.all(np.abs(v) <= 1.0)


def test_gaussian_moments():
    n, mean, var = 100_000, 0.3, 2.0
    v = generate(DitherSpec("gaussian", mean=mean, var=var, seed=3), _mask(n)).values.ravel()
    assert abs(v.mean() - mean) < 3 * np.sqrt(var / n)
    # standard error of the sample variance is var * sqrt(2 / (n - 1))
    assert abs(v.var(ddof=1) - var) < 3 * var * np.sqrt(2 / (n - 1))


def test_discrete_approaches_uniform():
    a = 1.5
    d = generate(DitherSpec("discrete", levels=100, amplitude=2 * a, seed=11), _mask(100_000))
    ks = stats.kstest(d.values.ravel(), stats.uniform(loc=-a, scale=2 * a).cdf).statistic
    assert ks < 0.02


def test_seed_reproducible_and_substreams():
    mask = _mask(50)
    a = generate(DitherSpec("gaussian", var=1.0, m=3, seed=5), mask)
    b = generate(DitherSpec("gaussian", var=1.0, m=3, seed=5), mask)
    np.testing.assert_array_equal(a.values, b.values)
    # row l does not depend on how many sequences are drawn
    c = generate(DitherSpec("gaussian", var=1.0, m=5, seed=5), mask)
    np.testing.assert_array_equal(a.values, c.values[:3])
    assert not np.array_equal(a.values[0], a.values[1])


@pytest.mark.parametrize("kw, msg", [
    (dict(scheme="uniform", a=0.0), "a > 0"),
    (dict(scheme="gaussian", var=-1.0), "var > 0"),
    (dict(scheme="discrete", levels=3, amplitude=1.0), "even M"),
    (dict(scheme="discrete", levels=0, amplitude=1.0), "even M"),
    (dict(scheme="discrete", levels=4, amplitude=0.0), "D > 0"),
    (dict(scheme="laplace"), "unknown"),
    (dict(scheme="uniform", a=1.0, m=0), "m must"),
])
def test_invalid_specs(kw, msg):
    with pytest.raises(ValueError, match=msg):
        DitherSpec(**kw)


def test_dynamic_range():
    assert dynamic_range([1.0, -3.0, 2.0]) == 3.0
    assert dynamic_range(np.zeros(4)) == 0.0
    with pytest.raises(ValueError, match="empty"):
        dynamic_range([])


def test_spec_from_range_rules():
    g = spec_from_range("gaussian", 3.0)
    assert g.var == pytest.approx(1.0) and g.mean == 0.0
    assert spec_from_range("uniform", 2.0).a == 2.0
    d = spec_from_range("discrete", 2.0, levels=10)
    assert d.amplitude == 4.0 and d.levels == 10
    with pytest.raises(ValueError, match="positive"):
        spec_from_range("gaussian", 0.0)


def test_support_invariants():
    mask = _mask(5000)
    u = generate(DitherSpec("uniform", a=0.7, m=2, seed=2), mask).values
    assert np.all(np.abs(u) <= 0.7)
    d = generate(DitherSpec("discrete", levels=6, amplitude=3.0, m=2, seed=2), mask).values
    assert set(np.unique(d)) <= set(discrete_atoms(6, 3.0))
