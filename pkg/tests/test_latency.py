from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfold.errors import InvalidParameter
from gridfold.latency import (
    ClusterLatencyParams,
    GridLatencyParams,
    cluster_overheads,
    divergence_experiment,
    ratio_curve,
    ratio_curve_exact,
    t_rabenseifner,
    t_recursive_doubling,
    t_ring,
)


def test_recursive_doubling():
    assert t_recursive_doubling(2, 0, 3.0, 1, 1) == 3.0
    assert t_recursive_doubling(8, 1, 1, 1, 1) == 9
    a = t_recursive_doubling(16, 10, 1, 2, 3)
    b = t_recursive_doubling(16, 20, 1, 2, 3)
    assert b - a == pytest.approx(4 * 10 * (2 + 3))
    with pytest.raises(InvalidParameter) as exc:
        t_recursive_doubling(6, 1, 1, 1, 1)
    assert exc.value.field == "p"


def test_rabenseifner():
    assert t_rabenseifner(2, 2, 0, 1, 1) == 3
    assert t_rabenseifner(8, 0, 1.5, 1, 1) == 2 * 3 * 1.5
    assert t_rabenseifner(10**9, 1, 0, 1, 0) == pytest.approx(2)


def test_ring():
    assert t_ring(4, 1024, 1e-6, 1e-9) == pytest.approx(7.536e-6, rel=1e-12)
    assert t_ring(5, 0, 2.0, 1) == 2 * 4 * 2.0


def test_ring_bandwidth_beats_doubling_for_large_messages():
    for p in (2, 4, 16, 256):
        for n in (1e6, 1e9):
            assert t_ring(p, n, 0, 1e-9) <= t_recursive_doubling(p, n, 0, 1e-9, 0)


def test_ratio_curve_example():
    c = ratio_curve_exact(1, 1, 1, 1, 1, [1, 2])
    assert c.samples[0][1] == Fraction(3, 2)
    assert float(c.samples[1][1]) == pytest.approx(1.6667, abs=1e-4)
    assert c.monotone and c.limit == 2 and c.sampled_increasing()


def test_ratio_boundary_and_decreasing():
    # (A + B) c1 == M c2 exactly: constant curve
    c = ratio_curve_exact(Fraction(1, 3), Fraction(2, 3), 1, 1, 1, [1, 2, 10, 1000])
    assert c.criterion == 0 and not c.monotone
    assert len({r for _, r in c.samples}) == 1
    d = ratio_curve_exact(1, 5, 1, 1, 1, [1, 2, 3])
    assert not d.monotone and d.sampled_decreasing()


def test_ratio_rejects_bad_inputs():
    with pytest.raises(InvalidParameter):
        ratio_curve_exact(1, 1, -1, 0, 1, [1])
    with pytest.raises(InvalidParameter):
        ratio_curve_exact(1, 1, 1, 0, 1, [0.5])


positive = st.floats(1e-3, 1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(c1=positive, c2=positive, a=positive, b=positive, m=positive)
def test_criterion_matches_sampled_shape(c1, c2, a, b, m):
    c = ratio_curve_exact(c1, c2, a, b, m, [1, 2, 4, 8, 1000])
    assert c.monotone == c.sampled_increasing()
    if c.criterion < 0:
        assert c.sampled_decreasing()


def test_grid_params_M_P():
    gp = GridLatencyParams(c1=1, c_w=2, t_edge=3, P=16)
    assert gp.M_P == 2 * 4 * 3
    gp2 = GridLatencyParams(c1=1, c_w=2, t_edge=3, P=16, merge_log=0.5)
    assert gp2.M_P == 24 + 2
    with pytest.raises(InvalidParameter):
        GridLatencyParams(c1=1, c_w=0, t_edge=1, P=4)


def test_cluster_params_and_overheads():
    cp = ClusterLatencyParams(alpha=1, beta=2, gamma=3, N=4, m0=8, c2=1)
    a, b = cluster_overheads(cp)
    assert a == 0.75 * 8 * (2 * 2 + 3) and b == 2 * 2 * 1
    # floor-size Rabenseifner all-reduce equals A_N + B_N
    assert a + b == pytest.approx(t_rabenseifner(4, 8, 1, 2, 3))
    with pytest.raises(InvalidParameter) as exc:
        ClusterLatencyParams(1, 1, 1, 4, 0, 1)
    assert exc.value.field == "m0"


def test_ratio_curve_from_params():
    gp = GridLatencyParams(c1=1, c_w=1, t_edge=1, P=4)
    cp = ClusterLatencyParams(alpha=1, beta=0, gamma=0, N=4, m0=1, c2=1)
    c = ratio_curve(gp, cp, x_grid=[1, 10])
    assert c.limit == Fraction(4, 2)
    assert ratio_curve(gp, cp, A_N=0, B_N=0, x_grid=[1]).limit == 0


def test_limit_at_large_x():
    c = ratio_curve_exact(0.7, 1.3, 2.5, 0.4, 3.1, [1e12])
    assert abs(c.samples[0][1] - c.limit) < Fraction(1e-9) * c.limit


def test_divergence_examples():
    gp = GridLatencyParams(c1=1e-6, c_w=1e-9, t_edge=1, P=1024)
    N = [2**e for e in range(4, 21)]
    res = divergence_experiment(N, 0.1, gp, 1e-6, 1e-9, 1e-10, 1024, 1e-6)
    assert res.diverges
    assert all(b.ratio > a.ratio for a, b in zip(res.rows, res.rows[1:]))
    flat = divergence_experiment(N, 0.1, gp, 0.0, 1e-9, 1e-10, 1024, 1e-6)
    assert not flat.diverges
    assert max(r.ratio for r in flat.rows) < 2 * min(r.ratio for r in flat.rows)
