"""Lower bounds for reducing a discrete measure onto a single sink.

Three quantities are computed: transport work (W1 to a Dirac target), the
support radius, and the graph-Steiner edge cost of ``supp(mu) + {sink}``.
``w1_lp`` is a generic coupling LP kept as an independent oracle for the
closed form.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy import sparse
from scipy.sparse.csgraph import dijkstra, minimum_spanning_tree

from .errors import BudgetError, InvalidParameter
from .topology import GridGraph, NodeId, bfs_distances, distances_from, manhattan

Metric = Callable[[NodeId, NodeId], float]

MASS_TOLERANCE = 1e-12
STEINER_EXACT_MAX_TERMINALS = 12


@dataclass(frozen=True)
class DiscreteMeasure:
    """Weighted atoms ``(node, mass)`` together with the reduction sink."""

    atoms: tuple[tuple[NodeId, float], ...]
    sink: NodeId

    def __post_init__(self):
        atoms = tuple((NodeId(*node), mass) for node, mass in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "sink", NodeId(*self.sink))
        if not atoms:
            raise InvalidParameter("measure needs at least one atom", field="atoms")
        nodes = [n for n, _ in atoms]
        if len(set(nodes)) != len(nodes):
            raise InvalidParameter("atom nodes must be distinct", field="atoms")
        if any(not m > 0 for _, m in atoms):
            raise InvalidParameter("atom masses must be positive", field="masses")
        total = sum(m for _, m in atoms) if _all_exact(atoms) else math.fsum(m for _, m in atoms)
        if abs(total - 1) > MASS_TOLERANCE:
            raise InvalidParameter(f"masses sum to {total}, not 1", field="masses")

    @classmethod
    def from_masses(cls, nodes: Sequence, masses: Sequence | None, sink) -> "DiscreteMeasure":
        """Normalise raw positive masses ``m_i`` to ``a_i = m_i / sum(m)``."""
        if masses is None:
            masses = [1] * len(nodes)
        if len(masses) != len(nodes):
            raise InvalidParameter("one mass per atom required", field="masses")
        if any(not m > 0 for m in masses):
            raise InvalidParameter("atom masses must be positive", field="masses")
        exact = all(isinstance(m, (int, Fraction)) for m in masses)
        total = sum(Fraction(m) for m in masses) if exact else math.fsum(masses)
        normed = [Fraction(m) / total if exact else m / total for m in masses]
        if not exact:
            # fix the last atom so the float sum lands on 1 within tolerance
            normed[-1] = 1.0 - math.fsum(normed[:-1])
        return cls(tuple(zip(nodes, normed)), sink)

    @classmethod
    def dirac(cls, sink) -> "DiscreteMeasure":
        return cls(((sink, 1),), sink)

    @property
    def support(self) -> list[NodeId]:
        return [n for n, _ in self.atoms]

    def digest(self) -> str:
        payload = json.dumps([[list(n), str(m)] for n, m in self.atoms] + [list(self.sink)])
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def _all_exact(atoms) -> bool:
    return all(isinstance(m, (int, Fraction)) for _, m in atoms)


def graph_metric(g: GridGraph) -> Metric:
    """Hop metric of ``g`` (shortcuts included), caching one BFS per target."""

    @lru_cache(maxsize=None)
    def field(target: NodeId):
        return bfs_distances(g, target)

    def metric(u, v):
        return field(NodeId(*v))[u]

    return metric


def w1_to_dirac(m: DiscreteMeasure, metric: Metric = manhattan):
    """Sum of ``a_i * d(x_i, sink)``; the coupling to a Dirac target is unique."""
    terms = [a * metric(x, m.sink) for x, a in m.atoms]
    return sum(terms) if _all_exact(m.atoms) else math.fsum(terms)


def w1_lp(source: Sequence[tuple], target: Sequence[tuple], metric: Metric = manhattan) -> float:
    """Kantorovich W1 between two discrete measures by solving the coupling LP."""
    xs, a = zip(*source)
    ys, b = zip(*target)
    n, k = len(xs), len(ys)
    cost = np.array([[metric(x, y) for y in ys] for x in xs], dtype=float).ravel()
    A_eq = np.zeros((n + k, n * k))
    for i in range(n):
        A_eq[i, i * k:(i + 1) * k] = 1
    for j in range(k):
        A_eq[n + j, j::k] = 1
    b_eq = np.array([float(v) for v in a] + [float(v) for v in b])
    res = linprog(cost, A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"coupling LP failed: {res.message}")
    return float(res.fun)


def support_radius(m: DiscreteMeasure, metric: Metric = manhattan):
    return max(metric(x, m.sink) for x, _ in m.atoms)


@dataclass(frozen=True)
class SteinerResult:
    cost: int | None
    mst_upper: int
    exact: bool


def _terminal_indices(g: GridGraph, terminals: Iterable) -> list[int]:
    idx = []
    for t in terminals:
        if not g.contains(t):
            raise InvalidParameter(f"terminal {tuple(t)} outside the grid", field="terminals")
        i = g.index(t)
        if i not in idx:
            idx.append(i)
    if not idx:
        raise InvalidParameter("need at least one terminal", field="terminals")
    return idx


def mst_closure_bound(term_dist: np.ndarray) -> int:
    """Weight of an MST of the terminals' metric closure (a 2-approximation).

    ``term_dist`` is the terminal-to-terminal hop-distance matrix.
    """
    if len(term_dist) < 2:
        return 0
    # csgraph reads 0 as "no edge"; distinct terminals are never at distance 0
    return int(minimum_spanning_tree(term_dist).sum())


def dreyfus_wagner(g: GridGraph, terms: list[int], term_rows: np.ndarray) -> int:
    """Exact Steiner tree cost by the Dreyfus-Wagner subset recursion.

    ``best[S][v]`` is the cheapest tree joining terminal subset ``S`` and node
    ``v``; the last terminal is the root and stays out of the subsets.  The
    relaxation ``min_u best[S][u] + d(u, v)`` runs as one Dijkstra from a
    virtual source wired to every ``u`` with weight ``best[S][u] + 1``.
    """
    if len(terms) < 2:
        return 0
    k = len(terms) - 1
    full = (1 << k) - 1
    P = g.P
    base = g.csr.tocoo()
    ones = np.ones(len(base.row))
    best = np.empty((full + 1, P))
    for i in range(k):
        best[1 << i] = term_rows[i]
    for S in range(1, full + 1):
        if S & (S - 1) == 0:
            continue
        low = S & -S
        merged = np.full(P, np.inf)
        T = (S - 1) & S
        while T:
            if T & low:  # each unordered split once
                np.minimum(merged, best[T] + best[S ^ T], out=merged)
            T = (T - 1) & S
        targets = np.flatnonzero(np.isfinite(merged))
        aug = sparse.csr_matrix(
            (
                np.concatenate([ones, merged[targets] + 1]),
                (np.concatenate([base.row, np.full(len(targets), P)]), np.concatenate([base.col, targets])),
            ),
            shape=(P + 1, P + 1),
        )
        best[S] = dijkstra(aug, indices=P)[:P] - 1
    return int(round(best[full][terms[-1]]))


def steiner_cost(g: GridGraph, terminals: Iterable, heuristic_only: bool = False) -> SteinerResult:
    """Minimum edge count of a connected subgraph of ``g`` spanning ``terminals``.

    Exact up to ``STEINER_EXACT_MAX_TERMINALS`` terminals; beyond that a
    ``BudgetError`` is raised unless ``heuristic_only`` asks for the MST bound.
    """
    terms = _terminal_indices(g, terminals)
    term_rows = np.vstack(list(distances_from(g, terms)))
    term_dist = term_rows[:, terms]
    if np.isinf(term_dist).any():
        raise InvalidParameter("terminals are not mutually connected", field="terminals")
    upper = mst_closure_bound(term_dist)
    if heuristic_only:
        return SteinerResult(None, upper, False)
    if len(terms) > STEINER_EXACT_MAX_TERMINALS:
        raise BudgetError(
            f"{len(terms)} terminals exceeds the exact budget of {STEINER_EXACT_MAX_TERMINALS}",
            field="terminals",
        )
    return SteinerResult(dreyfus_wagner(g, terms, term_rows), upper, True)


def steiner_by_enumeration(g: GridGraph, terminals: Iterable) -> int:
    """Brute-force Steiner cost for tiny graphs.

    A connected subgraph on node set ``W`` needs at least ``|W| - 1`` edges and
    a spanning tree of the induced subgraph achieves it, so the optimum is the
    smallest connected induced superset of the terminals, minus one.
    """
    terms = set(_terminal_indices(g, terminals))
    others = [i for i in range(g.P) if i not in terms]
    if len(others) > 20:
        raise BudgetError("enumeration oracle limited to 20 non-terminal nodes", field="terminals")
    adj = g.adjacency
    for extra in range(len(others) + 1):
        for chosen in itertools.combinations(others, extra):
            nodes = terms.union(chosen)
            start = next(iter(nodes))
            seen, stack = {start}, [start]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w in nodes and w not in seen:
                        seen.add(w)
                        stack.append(w)
            if len(seen) == len(nodes):
                return len(nodes) - 1
    raise InvalidParameter("terminals are not mutually connected", field="terminals")


@dataclass(frozen=True)
class BoundsReport:
    w1: float
    r_mu: int
    steiner: int
    wallclock_lower_seconds: float
    L: int
    atoms_digest: str
    seed: int | None

    def to_json(self) -> str:
        d = asdict(self)
        d["w1"] = float(d["w1"])
        return json.dumps(d, sort_keys=True)


def bounds_report(
    m: DiscreteMeasure, g: GridGraph, t_edge: int = 1, t_cycle: float = 1.0, metric: Metric | None = None
) -> BoundsReport:
    if t_edge < 0:
        raise InvalidParameter("t_edge must be >= 0", field="t_edge")
    if not t_cycle > 0:
        raise InvalidParameter("t_cycle must be > 0", field="t_cycle")
    if metric is None:
        metric = manhattan if not g.shortcuts else graph_metric(g)
    r_mu = support_radius(m, metric)
    st = steiner_cost(g, m.support + [m.sink])
    return BoundsReport(
        w1=w1_to_dirac(m, metric),
        r_mu=int(r_mu),
        steiner=st.cost,
        wallclock_lower_seconds=r_mu * t_edge * t_cycle,
        L=g.L,
        atoms_digest=m.digest(),
        seed=g.seed,
    )
