import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from blockboot.core import boot_mean_exact_moments, partition
from blockboot.errors import CapacityError
from blockboot.kernels import GINI, VARIANCE_HALF
from blockboot.oracle import (
    DiscreteLaw,
    exact_mean_law,
    exact_mean_law_enumerated,
    exact_ustat_law,
    long_run_variance_mc,
)
from blockboot.process_gen import make_spec

SERIES4 = np.array([1.0, 2.0, 3.0, 4.0])


def assert_valid(law):
    assert np.all(law.probs > 0)
    assert abs(law.probs.sum() - 1) < 1e-12
    assert np.all(np.diff(law.values) > 0)


def test_mean_law_worked_example():
    law = exact_mean_law(SERIES4, partition(4, 2))
    assert law.support == [(-2.0, 0.25), (0.0, 0.5), (2.0, 0.25)]


def test_mean_law_constant_series():
    law = exact_mean_law(np.full(12, 0.3), partition(12, 3))
    assert len(law.values) == 1 and law.probs[0] == 1.0
    assert law.values[0] == pytest.approx(0.0, abs=1e-14)


def test_mean_law_probabilities_are_exact_fractions():
    # block sums 1, 2, 4 are distinct with distinct subset sums: multinomial counts
    x = np.array([1.0, 2.0, 4.0])
    law = exact_mean_law(x, partition(3, 1))
    counts = {}
    for draw in itertools.product(range(3), repeat=3):
        key = sum(x[list(draw)])
        counts[key] = counts.get(key, 0) + 1
    assert len(law.values) == len(counts)
    for prob, key in zip(law.probs, sorted(counts)):
        assert Fraction(prob).limit_denominator(27) == Fraction(counts[key], 27)


@pytest.mark.parametrize("n,p", [(12, 2), (10, 3), (15, 5), (6, 1), (13, 2)])
def test_convolution_matches_enumeration(n, p, rng):
    x = rng.standard_normal(n)
    part = partition(n, p)
    conv = exact_mean_law(x, part)
    enum = exact_mean_law_enumerated(x, part)
    assert_valid(conv)
    assert_valid(enum)
    np.testing.assert_allclose(conv.values, enum.values, atol=1e-10)
    np.testing.assert_allclose(conv.probs, enum.probs, atol=1e-12)


def test_mean_law_variance_is_closed_form(rng):
    x = rng.standard_normal(17)
    part = partition(17, 4)
    law = exact_mean_law(x, part)
    assert law.mean() == pytest.approx(0.0, abs=1e-12)
    assert law.variance() == pytest.approx(boot_mean_exact_moments(x, part)[1], abs=1e-10)


def test_mean_law_capacity():
    with pytest.raises(CapacityError):
        exact_mean_law(np.arange(13.0), partition(13, 1))
    with pytest.raises(CapacityError):
        exact_mean_law_enumerated(np.arange(8.0), partition(8, 1))


def test_ustat_law_worked_example():
    law, expected = exact_ustat_law(SERIES4, partition(4, 2), GINI)
    assert expected == pytest.approx(7 / 6)
    np.testing.assert_allclose(law.values, [-1.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(law.probs, [0.5, 0.5])


def test_ustat_law_constant_and_centered(rng):
    law, _ = exact_ustat_law(np.full(9, 2.0), partition(9, 3), VARIANCE_HALF)
    assert len(law.values) == 1 and law.values[0] == pytest.approx(0.0, abs=1e-14)
    law, _ = exact_ustat_law(rng.standard_normal(10), partition(10, 2), GINI)
    assert_valid(law)
    assert abs(law.mean()) < 1e-12


def test_discrete_law_validation():
    with pytest.raises(ValueError):
        DiscreteLaw(np.array([0.0, 1.0]), np.array([0.5, 0.4]))
    with pytest.raises(ValueError):
        DiscreteLaw(np.array([1.0, 0.0]), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        DiscreteLaw(np.array([0.0, 1.0]), np.array([1.0, 0.0]))
    law = DiscreteLaw(np.array([-1.0, 2.0]), np.array([0.25, 0.75]))
    np.testing.assert_allclose(law.cdf([-2, -1, 0, 2, 3]), [0, 0.25, 0.25, 1, 1])
    assert law.to_csv().splitlines()[0] == "value,prob"


def test_lrv_iid():
    est = long_run_variance_mc(make_spec("iid_gaussian"), 256, 2000, seed=1)
    assert abs(est.value - 1.0) < 3 * est.se


def test_lrv_ar1():
    # sigma^2 = 1 / (1 - phi)^2 = 4
    est = long_run_variance_mc(make_spec("ar1", phi=0.5), 2 ** 14, 2000, seed=2)
    assert abs(est.value - 4.0) < 3 * est.se


def test_lrv_doubling_map():
    # Cov(X_1, X_{1+k}) = 2^-k / 12, so sigma^2 = 1/12 + 2 * (1/12) = 1/4
    est = long_run_variance_mc(make_spec("doubling_map"), 2 ** 12, 2000, seed=3)
    assert abs(est.value - 0.25) < 3 * est.se
    assert est.se < 0.25 * 0.05


def test_lrv_thread_independent():
    spec = make_spec("ar1", phi=0.2)
    a = long_run_variance_mc(spec, 100, 50, seed=4)
    b = long_run_variance_mc(spec, 100, 50, seed=4, threads=4)
    assert a == b
    assert math.isfinite(a.se)
