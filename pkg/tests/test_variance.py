import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfold.errors import BudgetError, InvalidParameter
from gridfold.variance import (
    ActivationField,
    enumerate_oracle,
    exact_moments,
    monte_carlo_moments,
    sample_variance_se,
    scaling_experiment,
    y_edgewise,
    y_functional,
)


def field_from(n, mask):
    return ActivationField(n, 0.5, np.asarray(mask, dtype=bool))


def test_y_examples():
    assert y_functional(field_from(4, np.zeros((4, 4)))) == 0
    assert y_functional(field_from(4, np.ones((4, 4)))) == 24
    only = np.zeros((2, 2))
    only[1, 0] = 1  # source (a=0, b=1)
    assert y_functional(field_from(2, only)) == 1


@settings(max_examples=60, deadline=None)
@given(n=st.integers(2, 7), f=st.floats(0.05, 0.95), seed=st.integers(0, 2**32 - 1))
def test_fubini_edgewise_equals_sourcewise(n, f, seed):
    fld = ActivationField.sample(n, f, seed)
    assert y_functional(fld) == y_edgewise(fld)


def test_exact_moments_examples():
    assert exact_moments(4, 0.5) == (12.0, 14.0)
    assert exact_moments(2, 0.5)[1] == 0.5
    assert exact_moments(4, Fraction(1, 2)) == (Fraction(12), Fraction(14))
    for f in (1e-9, 1 - 1e-9):
        assert exact_moments(8, f)[1] < 1e-5


@pytest.mark.parametrize("bad", [0, 1, 1.2, -0.1])
def test_f_act_open_interval(bad):
    with pytest.raises(InvalidParameter) as exc:
        exact_moments(4, bad)
    assert exc.value.field == "f_act"


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("f", [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10), Fraction(2, 7)])
def test_enumeration_matches_closed_form_exactly(n, f):
    assert enumerate_oracle(n, f) == exact_moments(n, f)


@pytest.mark.parametrize("n", [2, 3, 4])
@pytest.mark.parametrize("f", [0.1, 0.5, 0.9])
def test_enumeration_matches_closed_form_float(n, f):
    em, ev = enumerate_oracle(n, f)
    cm, cv = exact_moments(n, f)
    assert abs(em - cm) <= 1e-12 and abs(ev - cv) <= 1e-12


def test_enumeration_against_itertools_product():
    # independent brute force over explicit masks for n = 3
    n, f = 3, Fraction(1, 3)
    weights = [b for b in range(1, n) for _ in range(n)]
    dist = {}
    for bits in itertools.product((0, 1), repeat=len(weights)):
        p = Fraction(1)
        for x in bits:
            p *= f if x else 1 - f
        y = sum(w * x for w, x in zip(weights, bits))
        dist[y] = dist.get(y, 0) + p
    mean = sum(p * y for y, p in dist.items())
    var = sum(p * (y - mean) ** 2 for y, p in dist.items())
    assert enumerate_oracle(n, f) == (mean, var)


def test_enumeration_budget():
    with pytest.raises(BudgetError):
        enumerate_oracle(6, 0.5)


def test_monte_carlo_within_five_sigma():
    for n in (2, 5, 12):
        _, var = monte_carlo_moments(n, 0.3, 100_000, seed=3)
        assert abs(var - exact_moments(n, 0.3)[1]) <= 5 * sample_variance_se(n, 0.3, 100_000)


def test_monte_carlo_worker_independent():
    one = monte_carlo_moments(8, 0.2, 35_000, seed=5, workers=1)
    two = monte_carlo_moments(8, 0.2, 35_000, seed=5, workers=2)
    assert one == two
    assert monte_carlo_moments(8, 0.2, 35_000, seed=6) != one


def test_sample_variance_se_matches_simulation():
    # spread of many small-T sample variances agrees with the analytic SE
    rng = np.random.default_rng(0)
    n, f, T = 4, 0.3, 50
    w = np.repeat(np.arange(1, n), n)
    draws = (rng.random((4000, T, len(w))) < f) @ w
    s2 = draws.var(axis=1, ddof=1)
    assert s2.std() == pytest.approx(sample_variance_se(n, f, T), rel=0.05)


def test_scaling_small_rows():
    rows = scaling_experiment([2, 4], 0.5, 20_000, seed=1)
    assert rows[0].var_exact == enumerate_oracle(2, 0.5)[1]
    assert rows[1].var_exact == 14
    rec = rows[1].csv_record()
    assert list(rec) == ["n", "P", "f", "trials", "mean_hat", "mean_exact", "var_hat", "var_exact",
                         "var_over_P2", "var_over_P32"]
    assert all(abs(r.z) < 5 for r in rows)


def test_relative_concentration_decreases():
    ratios = [exact_moments(n, 0.1)[1] / exact_moments(n, 0.1)[0] ** 2 for n in (8, 16, 32, 64)]
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
