"""Square grid graphs, small-world shortcut augmentation and hop metrics.

Nodes are ``NodeId(x, y)`` with ``0 <= x, y < L`` and are indexed row-major
(``y * L + x``) wherever a flat index is needed.  Distances to unreachable
nodes are ``math.inf``, never a large integer.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .errors import InvalidParameter

UNREACHABLE = math.inf


class NodeId(NamedTuple):
    x: int
    y: int


Edge = tuple[NodeId, NodeId]


def manhattan(u: Iterable[int], v: Iterable[int]) -> int:
    (ux, uy), (vx, vy) = u, v
    return abs(ux - vx) + abs(uy - vy)


@dataclass(frozen=True)
class GridGraph:
    """An ``L x L`` grid with optional undirected long-range shortcuts.

    ``shortcuts`` holds unordered pairs normalised so the lower row-major index
    comes first, sorted, deduplicated and disjoint from the grid edges.
    ``k`` and ``seed`` record how the shortcuts were sampled (``k = 0`` for a
    bare grid).
    """

    L: int
    shortcuts: tuple[Edge, ...] = ()
    k: int = 0
    seed: int | None = None

    def __post_init__(self):
        if self.L < 1:
            raise InvalidParameter(f"side length must be >= 1, got {self.L}", field="L")

    @property
    def P(self) -> int:
        return self.L * self.L

    def index(self, node) -> int:
        return node[1] * self.L + node[0]

    def node(self, index: int) -> NodeId:
        return NodeId(index % self.L, index // self.L)

    def contains(self, node) -> bool:
        return 0 <= node[0] < self.L and 0 <= node[1] < self.L

    def nodes(self) -> Iterator[NodeId]:
        for i in range(self.P):
            yield self.node(i)

    def grid_neighbors(self, node) -> list[NodeId]:
        x, y = node
        out = []
        for nx, ny in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if 0 <= nx < self.L and 0 <= ny < self.L:
                out.append(NodeId(nx, ny))
        return out

    def grid_edges(self) -> list[Edge]:
        L = self.L
        edges = []
        for y in range(L):
            for x in range(L):
                if x + 1 < L:
                    edges.append((NodeId(x, y), NodeId(x + 1, y)))
                if y + 1 < L:
                    edges.append((NodeId(x, y), NodeId(x, y + 1)))
        return edges

    def edges(self) -> list[Edge]:
        return self.grid_edges() + list(self.shortcuts)

    @property
    def n_edges(self) -> int:
        return 2 * self.L * (self.L - 1) + len(self.shortcuts)

    @cached_property
    def adjacency(self) -> list[list[int]]:
        """Neighbour lists by flat index (grid neighbours first, then shortcuts)."""
        adj = [[self.index(v) for v in self.grid_neighbors(self.node(i))] for i in range(self.P)]
        for u, v in self.shortcuts:
            iu, iv = self.index(u), self.index(v)
            adj[iu].append(iv)
            adj[iv].append(iu)
        return adj

    def neighbors(self, node) -> list[NodeId]:
        return [self.node(j) for j in self.adjacency[self.index(node)]]

    @cached_property
    def csr(self) -> sparse.csr_matrix:
        rows, cols = [], []
        for i, nbrs in enumerate(self.adjacency):
            rows.extend([i] * len(nbrs))
            cols.extend(nbrs)
        data = np.ones(len(rows), dtype=np.int8)
        return sparse.csr_matrix((data, (rows, cols)), shape=(self.P, self.P))


def build_grid(L: int) -> GridGraph:
    if not isinstance(L, (int, np.integer)) or L < 1:
        raise InvalidParameter(f"side length must be a positive integer, got {L!r}", field="L")
    return GridGraph(int(L))


def _normalise_pair(g: GridGraph, a: int, b: int) -> Edge:
    lo, hi = (a, b) if a < b else (b, a)
    return (g.node(lo), g.node(hi))


def augment_smallworld(g: GridGraph, k: int, seed: int) -> GridGraph:
    """Give every node ``k`` partners drawn uniformly from the other nodes.

    Self-pairs cannot occur; repeated pairs and pairs that coincide with grid
    edges are dropped, so the realised shortcut count can be below ``k * P``.
    """
    if k < 1:
        raise InvalidParameter(f"k must be >= 1, got {k}", field="k")
    P = g.P
    pairs = set(tuple(g.index(n) for n in e) for e in g.shortcuts)
    if P > 1:
        rng = np.random.default_rng(seed)
        draws = rng.integers(0, P - 1, size=(P, k))
        draws += draws >= np.arange(P)[:, None]
        for v in range(P):
            for w in draws[v]:
                w = int(w)
                a, b = (v, w) if v < w else (w, v)
                if manhattan(g.node(a), g.node(b)) == 1:
                    continue
                pairs.add((a, b))
    shortcuts = tuple(_normalise_pair(g, a, b) for a, b in sorted(pairs))
    return GridGraph(g.L, shortcuts, k=k, seed=seed)


@dataclass(frozen=True)
class DistanceField:
    source: NodeId
    L: int
    dist: np.ndarray = field(repr=False)

    def __getitem__(self, node) -> float | int:
        d = self.dist[node[1] * self.L + node[0]]
        return UNREACHABLE if math.isinf(d) else int(d)

    def reachable(self, node) -> bool:
        return not math.isinf(self.dist[node[1] * self.L + node[0]])

    def max_finite(self) -> int:
        finite = self.dist[np.isfinite(self.dist)]
        return int(finite.max())


def bfs_distances(g: GridGraph, source, blocked: Iterable | None = None) -> DistanceField:
    """Hop distances from ``source`` in the graph induced on ``V \\ blocked``."""
    source = NodeId(*source)
    if not g.contains(source):
        raise InvalidParameter(f"source {tuple(source)} outside the grid", field="source")
    blocked_idx = {g.index(b) for b in blocked} if blocked else set()
    s = g.index(source)
    if s in blocked_idx:
        raise InvalidParameter(f"source {tuple(source)} is blocked", field="source")
    dist = np.full(g.P, np.inf)
    dist[s] = 0
    adj = g.adjacency
    queue = deque([s])
    while queue:
        u = queue.popleft()
        du = dist[u] + 1
        for w in adj[u]:
            if dist[w] == np.inf and w not in blocked_idx:
                dist[w] = du
                queue.append(w)
    return DistanceField(source, g.L, dist)


def distances_from(g: GridGraph, sources: Iterable[int], chunk: int = 256) -> Iterator[np.ndarray]:
    """Yield BFS distance rows for flat-index sources, ``chunk`` rows at a time."""
    sources = list(sources)
    for start in range(0, len(sources), chunk):
        block = sources[start:start + chunk]
        yield csgraph.shortest_path(g.csr, method="D", unweighted=True, indices=block)


def eccentricity(g: GridGraph, v) -> float | int:
    d = bfs_distances(g, v).dist
    return UNREACHABLE if np.isinf(d).any() else int(d.max())


def _all_eccentricities(g: GridGraph) -> np.ndarray:
    return np.concatenate([rows.max(axis=1) for rows in distances_from(g, range(g.P))])


def diameter(g: GridGraph) -> float | int:
    m = _all_eccentricities(g).max()
    return UNREACHABLE if np.isinf(m) else int(m)


def radius(g: GridGraph) -> float | int:
    m = _all_eccentricities(g).min()
    return UNREACHABLE if np.isinf(m) else int(m)


def is_connected(g: GridGraph) -> bool:
    n, _ = csgraph.connected_components(g.csr, directed=False)
    return n == 1


def dumps(g: GridGraph) -> str:
    seed = "none" if g.seed is None else str(g.seed)
    lines = [f"{g.L} {g.k} {seed}"]
    lines += [f"{u.x} {u.y} {v.x} {v.y}" for u, v in g.shortcuts]
    return "\n".join(lines) + "\n"


def loads(text: str) -> GridGraph:
    lines = text.splitlines()
    if not lines:
        raise InvalidParameter("empty graph dump", field="header")
    try:
        L, k, seed = lines[0].split()
        L, k = int(L), int(k)
        seed = None if seed == "none" else int(seed)
    except ValueError as exc:
        raise InvalidParameter(f"bad graph header {lines[0]!r}", field="header") from exc
    g = GridGraph(L, k=k, seed=seed)
    shortcuts = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            x1, y1, x2, y2 = map(int, line.split())
        except ValueError as exc:
            raise InvalidParameter(f"line {lineno}: bad shortcut {line!r}", field="shortcut") from exc
        u, v = NodeId(x1, y1), NodeId(x2, y2)
        if not (g.contains(u) and g.contains(v)) or u == v:
            raise InvalidParameter(f"line {lineno}: invalid shortcut {line!r}", field="shortcut")
        shortcuts.append(_normalise_pair(g, g.index(u), g.index(v)))
    return GridGraph(L, tuple(sorted(set(shortcuts), key=lambda e: (g.index(e[0]), g.index(e[1])))), k, seed)
