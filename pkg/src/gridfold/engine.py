"""Synchronous cycle-level execution of transport and tree-fold schedules.

Parallel-shortest mode moves one payload per atom along its dimension-order
route (a BFS shortest path when the graph has shortcuts).  A hop takes
``t_edge`` cycles; under ``capacity_one`` each directed edge carries at most
one payload per hop round, arbitrated FIFO by arrival round, then source index.

Tree-fold mode reduces toward an origin over a BFS tree.  A node finishes once
its own local work and all child payloads are in; it then pays one ``t_merge``
for the combine and forwards after ``t_edge``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, TextIO

import numpy as np

from .errors import InvalidParameter, MonoidLawViolation
from .monoid import MonoidSpec, check_laws
from .routing import _xy_path
from .topology import GridGraph, NodeId, bfs_distances, manhattan
from .transport import DiscreteMeasure, _all_exact, graph_metric, support_radius, w1_to_dirac

CONTENTION_MODES = ("non_congesting", "capacity_one")


@dataclass(frozen=True)
class EngineConfig:
    contention: str = "non_congesting"
    t_edge: int = 1
    t_merge: int = 0
    t_cycle: float = 1.0
    k_arch: int = 0
    t_local: Mapping | None = None  # per-node local compute cycles, default 0

    def __post_init__(self):
        if self.contention not in CONTENTION_MODES:
            raise InvalidParameter(f"contention must be one of {CONTENTION_MODES}", field="contention")
        for name in ("t_edge", "t_merge", "k_arch"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise InvalidParameter(f"{name} must be a non-negative integer, got {v!r}", field=name)
        if not self.t_cycle > 0:
            raise InvalidParameter(f"t_cycle must be > 0, got {self.t_cycle}", field="t_cycle")

    def local(self, node) -> int:
        return int(self.t_local.get(NodeId(*node), 0)) if self.t_local else 0

    @property
    def max_local(self) -> int:
        return max(self.t_local.values(), default=0) if self.t_local else 0


@dataclass
class EngineState:
    cycle: int = 0
    payload_positions: dict = field(default_factory=dict)
    edge_occupancy: list = field(default_factory=list)  # one list of directed edges per hop round
    merge_log: list = field(default_factory=list)  # (cycle, node, payload ids)


@dataclass
class RunResult:
    completion_cycles: int
    wallclock_seconds: float
    per_payload_hops: dict
    transport_work: float | Fraction | int
    state: EngineState
    depth: int = 0
    used_edges: int = 0
    value: object = None


def _emit(trace: TextIO | None, record: dict):
    if trace is not None:
        trace.write(json.dumps(record, sort_keys=True) + "\n")


def shortest_route(g: GridGraph, source, dest) -> list[NodeId]:
    """XY route on bare grids; otherwise a BFS shortest path with lowest-index tie-break."""
    if not g.shortcuts:
        return _xy_path(source, dest)
    dist = bfs_distances(g, dest)
    path = [NodeId(*source)]
    while path[-1] != dest:
        d = dist[path[-1]]
        path.append(min((n for n in g.neighbors(path[-1]) if dist[n] == d - 1), key=g.index))
    return path


def run_parallel_shortest(m: DiscreteMeasure, g: GridGraph, cfg: EngineConfig, trace: TextIO | None = None) -> RunResult:
    """Send every atom's payload to the sink at once; payloads never merge."""
    sink = m.sink
    routes = [shortest_route(g, x, sink) for x, _ in m.atoms]
    state = EngineState(payload_positions={i: r[0] for i, r in enumerate(routes)})
    step = [0] * len(routes)  # hops taken
    ready = [0] * len(routes)  # round at which the payload reached its current node
    done = {i for i, r in enumerate(routes) if len(r) == 1}
    for i in sorted(done):
        state.merge_log.append((0, sink, (i,)))
    rnd = 0
    while len(done) < len(routes):
        rnd += 1
        wants: dict = {}
        for i, r in enumerate(routes):
            if i not in done:
                wants.setdefault((r[step[i]], r[step[i] + 1]), []).append(i)
        moves = []
        for edge, ids in wants.items():
            if cfg.contention == "capacity_one":
                ids = [min(ids, key=lambda i: (ready[i], i))]
            moves.extend((i, edge) for i in ids)
        moves.sort()
        occupancy = [e for _, e in moves]
        if cfg.contention == "capacity_one" and len(set(occupancy)) != len(occupancy):
            raise AssertionError(f"round {rnd}: an edge carried two payloads")
        state.edge_occupancy.append(occupancy)
        arrived = []
        for i, (_, head) in moves:
            step[i] += 1
            ready[i] = rnd
            state.payload_positions[i] = head
            if step[i] == len(routes[i]) - 1:
                done.add(i)
                arrived.append(i)
        if arrived:
            state.merge_log.append((rnd * cfg.t_edge, sink, tuple(arrived)))
        _emit(trace, {
            "cycle": rnd * cfg.t_edge,
            "moves": [[i, list(u), list(v)] for i, (u, v) in moves],
            "merges": [[list(sink), arrived]] if arrived else [],
        })
    D = rnd * cfg.t_edge
    state.cycle = D
    hops = {i: len(r) - 1 for i, r in enumerate(routes)}
    terms = [a * hops[i] for i, (_, a) in enumerate(m.atoms)]
    work = sum(terms) if _all_exact(m.atoms) else math.fsum(terms)
    return RunResult(
        completion_cycles=D,
        wallclock_seconds=(D + cfg.k_arch) * cfg.t_cycle,
        per_payload_hops=hops,
        transport_work=work,
        state=state,
        depth=rnd,
        used_edges=len({e for occ in state.edge_occupancy for e in occ}),
    )


def bfs_tree(g: GridGraph, origin, rng: np.random.Generator | None = None) -> dict:
    """Parent map of a BFS tree rooted at ``origin``.

    Among equally close neighbours the parent is the lowest index, or a
    uniformly random one when ``rng`` is given.
    """
    dist = bfs_distances(g, origin)
    parent = {}
    for v in g.nodes():
        d = dist[v]
        if d == 0 or math.isinf(d):
            continue
        cands = sorted((n for n in g.neighbors(v) if dist[n] == d - 1), key=g.index)
        parent[v] = cands[int(rng.integers(len(cands)))] if rng is not None else cands[0]
    return parent


def run_treefold(
    g: GridGraph,
    origin,
    monoid: MonoidSpec,
    values: Mapping,
    cfg: EngineConfig,
    order_seed=None,
    trace: TextIO | None = None,
) -> RunResult:
    """Reduce ``values`` onto ``origin`` along a BFS wavefront.

    Nodes missing from ``values`` hold nothing and only relay; edges whose
    subtree holds no value are never used.  ``order_seed`` randomises both the
    tree's parent choice and the order in which children are combined, which
    must not change the result for a lawful monoid.  Every combine also
    checks commutativity on its actual operands.
    """
    origin = NodeId(*origin)
    if monoid.status.kind == "unchecked":
        check_laws(monoid, n_samples=200)
    if monoid.status.kind == "failed":
        raise MonoidLawViolation(f"{monoid.name} failed {monoid.status.law}", monoid.status.witness)
    values = {NodeId(*k): v for k, v in values.items()}
    rng = np.random.default_rng(order_seed) if order_seed is not None else None
    parent = bfs_tree(g, origin, rng)
    children: dict = {}
    for v, p in parent.items():
        children.setdefault(p, []).append(v)
    dist = bfs_distances(g, origin)

    # nodes whose subtree holds a value, deepest first
    order = sorted(parent, key=lambda v: (-dist[v], g.index(v)))
    active = set(values)
    for v in order:
        if v in active:
            active.add(parent[v])

    finish, acc = {}, {}
    merges = []
    state = EngineState()
    for v in order + [origin]:
        if v not in active:
            continue
        kids = [c for c in children.get(v, []) if c in active]
        if rng is not None:
            kids = [kids[i] for i in rng.permutation(len(kids))]
        inputs = ([values[v]] if v in values else []) + [acc[c] for c in kids]
        t = max([cfg.local(v)] + [finish[c] + cfg.t_edge for c in kids])
        if len(inputs) > 1:
            out = inputs[0]
            for x in inputs[1:]:
                ab, ba = monoid.op(out, x), monoid.op(x, out)
                if ab != ba:
                    raise MonoidLawViolation(f"{monoid.name} not commutative at {tuple(v)}", (out, x))
                out = ab
            t += cfg.t_merge
            merges.append((t, v, tuple(tuple(c) for c in kids)))
        else:
            out = inputs[0] if inputs else monoid.identity
        acc[v], finish[v] = out, t
    merges.sort(key=lambda r: (r[0], g.index(r[1])))
    state.merge_log = merges
    for rec in merges:
        _emit(trace, {"cycle": rec[0], "moves": [[list(c), list(rec[1])] for c in rec[2]], "merges": [list(rec[1])]})
    used = [(c, parent[c]) for c in order if c in active]
    state.edge_occupancy = [used]
    state.payload_positions = {v: origin for v in values}
    D = finish.get(origin, 0)
    state.cycle = D
    depth = max((dist[v] for v in active), default=0)
    hops = {v: dist[v] for v in values}
    return RunResult(
        completion_cycles=D,
        wallclock_seconds=D * cfg.t_cycle,
        per_payload_hops=hops,
        transport_work=len(used),
        state=state,
        depth=int(depth),
        used_edges=len(used),
        value=acc.get(origin, monoid.identity) if values else monoid.identity,
    )


def treefold_wallclock_bound(g_diameter: int, cfg: EngineConfig) -> float:
    return (g_diameter * (cfg.t_edge + cfg.t_merge) + cfg.max_local) * cfg.t_cycle


@dataclass(frozen=True)
class AttainmentReport:
    transport_work: float | Fraction
    w1: float | Fraction
    work_equals_w1: bool
    completion_cycles: int
    depth_lower: int
    depth_slack: int
    contention: str

    @property
    def work_ratio(self) -> float:
        return 1.0 if self.w1 == 0 else float(Fraction(self.transport_work) / Fraction(self.w1))


def measure_attainment(m: DiscreteMeasure, g: GridGraph, cfg: EngineConfig) -> AttainmentReport:
    """Compare a parallel-shortest run with the transport and depth bounds."""
    metric = manhattan if not g.shortcuts else graph_metric(g)
    run = run_parallel_shortest(m, g, cfg)
    w1 = w1_to_dirac(m, metric)
    lower = int(support_radius(m, metric)) * cfg.t_edge
    return AttainmentReport(
        transport_work=run.transport_work,
        w1=w1,
        work_equals_w1=run.transport_work == w1,
        completion_cycles=run.completion_cycles,
        depth_lower=lower,
        depth_slack=run.completion_cycles - lower,
        contention=cfg.contention,
    )
