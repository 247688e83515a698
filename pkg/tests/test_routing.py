import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfold.errors import InvalidParameter, NoRouteError
from gridfold.percolation import FailureField, sample_failures
from gridfold.routing import Route, deflect_route, edge_congestion, sink_trunk_loads, xy_route
from gridfold.topology import NodeId, bfs_distances, build_grid, manhattan


def _check_route(route, g, failed=frozenset()):
    assert route.path[0] == route.source and route.path[-1] == route.dest
    for u, v in route.edges:
        assert manhattan(u, v) == 1 and g.contains(v)
    assert not (set(route.path) & failed)


def test_xy_route_examples():
    g = build_grid(6)
    r = xy_route(g, (5, 3), (0, 3))
    assert r.length == 5 and all(u.y == v.y for u, v in r.edges)
    assert xy_route(g, (2, 2), (2, 2)).edges == []
    r = xy_route(g, (3, 4), (0, 0))
    assert r.length == 7
    assert [v.y for _, v in r.edges[:3]] == [4, 4, 4]
    assert [v.x for _, v in r.edges[3:]] == [0, 0, 0, 0]


def test_xy_route_outside_grid():
    with pytest.raises(InvalidParameter):
        xy_route(build_grid(3), (0, 0), (3, 0))


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.data())
def test_xy_route_length_is_manhattan(L, data):
    g = build_grid(L)
    node = st.tuples(st.integers(0, L - 1), st.integers(0, L - 1))
    s, d = data.draw(node), data.draw(node)
    r = xy_route(g, s, d)
    _check_route(r, g)
    assert r.length == manhattan(s, d)


def test_route_json():
    r = xy_route(build_grid(3), (1, 0), (0, 1))
    assert r.to_json() == "[[1, 0], [0, 0], [0, 1]]"


@pytest.mark.parametrize("n, j, load", [(6, 1, 30), (6, 5, 6), (2, 1, 2)])
def test_sink_trunk_loads(n, j, load):
    assert sink_trunk_loads(build_grid(n))[j] == load


def test_sink_trunk_formula():
    for n in range(2, 10):
        loads = sink_trunk_loads(build_grid(n))
        assert loads == {j: n * (n - j) for j in range(1, n)}


def test_sink_trunk_corner_only():
    with pytest.raises(InvalidParameter):
        sink_trunk_loads(build_grid(4), (1, 1))


def test_edge_congestion():
    g = build_grid(6)
    routes = [xy_route(g, v, (0, 0)) for v in g.nodes() if v != (0, 0)]
    load, n_max, arg = edge_congestion(routes)
    assert n_max == 30 and arg == (NodeId(0, 1), NodeId(0, 0))
    assert sum(load.values()) == sum(r.length for r in routes)
    assert edge_congestion([xy_route(g, (0, 0), (3, 0))])[1] == 1
    assert edge_congestion([xy_route(g, (0, 0), (3, 0)), xy_route(g, (0, 5), (3, 5))])[1] == 1
    assert edge_congestion([]) [1] == 0


def test_deflection_single_obstacle_example():
    g = build_grid(6)
    ff = FailureField.from_nodes(6, [(3, 3)])
    route, rec = deflect_route(g, (5, 3), (0, 3), ff)
    assert rec.nominal_len == 5 and rec.actual_len == 7 and rec.detour == 2
    assert rec.clusters_hit == 1 and rec.failed_on_route == 1
    assert route.path[2] == (4, 4)  # +y side first
    _check_route(route, g, ff.failed)


def test_deflection_without_failures_and_off_route():
    g = build_grid(6)
    for failed in ([], [(1, 1)]):
        route, rec = deflect_route(g, (5, 3), (0, 3), FailureField.from_nodes(6, failed))
        assert route.path == xy_route(g, (5, 3), (0, 3)).path
        assert rec.detour == 0 and rec.failed_on_route == 0


def test_deflection_falls_back_to_minus_y_on_top_row():
    g = build_grid(6)
    ff = FailureField.from_nodes(6, [(3, 5)])
    route, rec = deflect_route(g, (5, 5), (0, 5), ff)
    assert rec.detour == 2 and route.path[2] == (4, 4)


def test_deflection_wall_spanning_cluster():
    # a vertical wall with one gap forces a long walk
    g = build_grid(7)
    wall = [(3, y) for y in range(1, 7)]
    ff = FailureField.from_nodes(7, wall)
    route, rec = deflect_route(g, (6, 4), (0, 4), ff)
    _check_route(route, g, ff.failed)
    assert rec.actual_len >= bfs_distances(g, (0, 4), blocked=ff.failed)[(6, 4)]
    assert rec.clusters_hit == 1 and rec.failed_on_route == 1


def test_deflection_unreachable():
    g = build_grid(5)
    ring = [(1, 0), (1, 1), (0, 1)]
    with pytest.raises(NoRouteError):
        deflect_route(g, (4, 4), (0, 0), FailureField.from_nodes(5, ring))


def test_deflection_rejects_failed_endpoints():
    g = build_grid(4)
    with pytest.raises(InvalidParameter) as exc:
        deflect_route(g, (0, 0), (3, 3), FailureField.from_nodes(4, [(3, 3)]))
    assert exc.value.field == "dest"


@settings(max_examples=80, deadline=None)
@given(L=st.integers(3, 14), delta=st.floats(0.0, 0.45), seed=st.integers(0, 10**6), data=st.data())
def test_deflection_properties(L, delta, seed, data):
    g = build_grid(L)
    ff = sample_failures(L, delta, seed)
    healthy = [v for v in g.nodes() if v not in ff.failed]
    if len(healthy) < 2:
        return
    s = data.draw(st.sampled_from(healthy))
    d = data.draw(st.sampled_from(healthy))
    dist = bfs_distances(g, d, blocked=ff.failed)
    if not dist.reachable(s):
        with pytest.raises(NoRouteError):
            deflect_route(g, s, d, ff)
        return
    route, rec = deflect_route(g, s, d, ff)
    _check_route(route, g, ff.failed)
    assert rec.actual_len == route.length >= dist[s]
    assert rec.actual_len >= rec.nominal_len == manhattan(s, d)
    assert rec.clusters_hit <= rec.failed_on_route


def test_route_is_value_object():
    r = Route(NodeId(0, 0), NodeId(0, 0), (NodeId(0, 0),))
    assert r.length == 0 and r.edges == []
