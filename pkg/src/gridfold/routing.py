"""Dimension-order routes, deflection around failed sites, and edge loads.

Deflection protocol: the packet follows its XY route.  When the next hop is a
failed site it steps sideways (toward ``+y`` on horizontal legs, ``+x`` on
vertical legs) and wall-follows the obstacle, keeping it on the hand opposite
the step, until it lands on a later node of the nominal route.  A walk that
has to lean on the grid edge itself is retried on the other side and the
shorter completed walk wins.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Protocol

from .errors import InvalidParameter, NoRouteError
from .topology import GridGraph, NodeId, bfs_distances


class FailureSet(Protocol):
    failed: frozenset

    def cluster_of(self, node) -> int: ...


@dataclass(frozen=True)
class Route:
    source: NodeId
    dest: NodeId
    path: tuple[NodeId, ...]

    @property
    def length(self) -> int:
        return len(self.path) - 1

    @property
    def edges(self) -> list[tuple[NodeId, NodeId]]:
        return list(zip(self.path, self.path[1:]))

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.path])


@dataclass(frozen=True)
class DetourRecord:
    nominal_len: int
    actual_len: int
    clusters_hit: int
    failed_on_route: int
    fallback: bool = False

    @property
    def detour(self) -> int:
        return self.actual_len - self.nominal_len


def _xy_path(source, dest) -> list[NodeId]:
    (sx, sy), (dx, dy) = source, dest
    mk = tuple.__new__  # skips namedtuple arg parsing; this is the hot loop of all-to-one runs
    path = [mk(NodeId, (sx, sy))]
    if dx != sx:
        step = 1 if dx > sx else -1
        path += [mk(NodeId, (x, sy)) for x in range(sx + step, dx + step, step)]
    if dy != sy:
        step = 1 if dy > sy else -1
        path += [mk(NodeId, (dx, y)) for y in range(sy + step, dy + step, step)]
    return path


def xy_route(g: GridGraph, source, dest) -> Route:
    """Horizontal leg to the destination column, then the vertical leg."""
    for name, node in (("source", source), ("dest", dest)):
        if not g.contains(node):
            raise InvalidParameter(f"{name} {tuple(node)} outside the grid", field=name)
    return Route(NodeId(*source), NodeId(*dest), tuple(_xy_path(source, dest)))


def edge_congestion(routes: Iterable[Route]) -> tuple[Counter, int, tuple | None]:
    """Per directed edge route counts, the maximum load and one edge attaining it.

    Ties for the maximum go to the smallest edge in coordinate order.
    """
    load = Counter()
    for r in routes:
        load.update(zip(r.path, r.path[1:]))
    if not load:
        return load, 0, None
    n_max = max(load.values())
    arg = min(e for e, c in load.items() if c == n_max)
    return load, n_max, arg


def sink_trunk_loads(g: GridGraph, x_star=(0, 0)) -> dict[int, int]:
    """Loads of the sink-column edges ``e_j = ((0, j), (0, j - 1))`` under all-to-one XY routing."""
    if tuple(x_star) != (0, 0):
        raise InvalidParameter("trunk analytics are defined for the corner sink (0, 0) only", field="x_star")
    routes = (xy_route(g, v, x_star) for v in g.nodes() if v != x_star)
    load, _, _ = edge_congestion(routes)
    return {j: load[(NodeId(0, j), NodeId(0, j - 1))] for j in range(1, g.L)}


_LEFT = {(1, 0): (0, 1), (0, 1): (-1, 0), (-1, 0): (0, -1), (0, -1): (1, 0)}
_RIGHT = {v: k for k, v in _LEFT.items()}


def _wall_follow(g, failed, start, heading, hand, targets, budget):
    """Follow the obstacle boundary from ``start`` with the wall on ``hand``.

    Returns ``(steps, rejoin_index, touched_edge)`` or ``None`` if the walk loops
    or exceeds ``budget`` steps.  ``targets`` maps nominal-route nodes that count
    as a rejoin to their route index.
    """
    toward, away = (_LEFT, _RIGHT) if hand == "left" else (_RIGHT, _LEFT)
    pos, h = start, heading
    steps = []
    seen = set()
    touched_edge = False
    while len(steps) < budget:
        state = (pos, h)
        if state in seen:
            return None
        seen.add(state)
        for cand in (toward[h], h, away[h], (-h[0], -h[1])):
            nxt = NodeId(pos[0] + cand[0], pos[1] + cand[1])
            if not g.contains(nxt):
                touched_edge = True
                continue
            if nxt in failed:
                continue
            break
        else:
            return None  # boxed in
        pos, h = nxt, cand
        steps.append(pos)
        if pos in targets:
            return steps, targets[pos], touched_edge
    return None


def _detour(g, failed, nominal, i):
    """Walk around the obstacle blocking ``nominal[i] -> nominal[i + 1]``."""
    here, blocked = nominal[i], nominal[i + 1]
    h = (blocked[0] - here[0], blocked[1] - here[1])
    side = (0, 1) if h[1] == 0 else (1, 0)
    targets = {n: j for j, n in enumerate(nominal) if j > i + 1 and n not in failed}
    budget = 4 * g.P
    walks = []
    for s in (side, (-side[0], -side[1])):
        # side to the left of heading -> wall kept on the right, and vice versa
        hand = "right" if _LEFT[h] == s else "left"
        walk = _wall_follow(g, failed, here, s, hand, targets, budget)
        if walk is not None:
            if not walk[2]:
                return walk
            walks.append(walk)
    if walks:
        return min(walks, key=lambda w: len(w[0]))
    return None


def deflect_route(g: GridGraph, source, dest, failures: FailureSet) -> tuple[Route, DetourRecord]:
    """Route ``source -> dest`` around failed sites; see the module docstring."""
    failed = failures.failed
    source, dest = NodeId(*source), NodeId(*dest)
    for name, node in (("source", source), ("dest", dest)):
        if node in failed:
            raise InvalidParameter(f"{name} {tuple(node)} has failed", field=name)
    nominal = _xy_path(source, dest)
    hit = [n for n in nominal if n in failed]
    path = [source]
    fallback = False
    i = 0
    while i < len(nominal) - 1:
        if nominal[i + 1] not in failed:
            path.append(nominal[i + 1])
            i += 1
            continue
        walk = _detour(g, failed, nominal, i)
        if walk is None:
            fallback = True
            path += _healthy_shortest_path(g, failed, nominal[i], dest)[1:]
            break
        steps, j, _ = walk
        path += steps
        i = j
    record = DetourRecord(
        nominal_len=len(nominal) - 1,
        actual_len=len(path) - 1,
        clusters_hit=len({failures.cluster_of(n) for n in hit}),
        failed_on_route=len(hit),
        fallback=fallback,
    )
    return Route(source, dest, tuple(path)), record


def _healthy_shortest_path(g, failed, start, dest) -> list[NodeId]:
    field = bfs_distances(GridGraph(g.L), dest, blocked=failed)
    if not field.reachable(start):
        raise NoRouteError(f"{tuple(dest)} unreachable from {tuple(start)} in the healthy subgraph")
    path = [start]
    while path[-1] != dest:
        d = field[path[-1]]
        path.append(next(n for n in g.grid_neighbors(path[-1]) if field[n] == d - 1))
    return path

