"""I.i.d. site failures, failure clusters, and the subcritical detour experiment."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from .errors import InvalidParameter, NoRouteError, StatisticsError
from .routing import _xy_path, deflect_route
from .topology import GridGraph, NodeId

# numerical estimate of the square-lattice site threshold; used for warnings only
PC_SITE_ESTIMATE = 0.593

_CROSS = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class FailureField:
    """Failure mask indexed ``mask[y, x]`` (row-major, like flat node indices)."""

    L: int
    delta: float
    seed: int | None
    mask: np.ndarray = field(repr=False)

    @cached_property
    def failed(self) -> frozenset:
        ys, xs = np.nonzero(self.mask)
        return frozenset(NodeId(int(x), int(y)) for x, y in zip(xs, ys))

    @cached_property
    def labels(self) -> np.ndarray:
        """Cluster label per site, 0 for healthy sites, 1..n for clusters."""
        labels, _ = ndimage.label(self.mask, structure=_CROSS)
        return labels

    def cluster_of(self, node) -> int:
        return int(self.labels[node[1], node[0]])

    @property
    def n_clusters(self) -> int:
        return int(self.labels.max())

    @classmethod
    def from_nodes(cls, L: int, failed, delta: float = float("nan")) -> "FailureField":
        mask = np.zeros((L, L), dtype=bool)
        for x, y in failed:
            mask[y, x] = True
        return cls(L, delta, None, mask)


def sample_failures(L: int, delta: float, seed) -> FailureField:
    if not 0 <= delta <= 1:
        raise InvalidParameter(f"delta must lie in [0, 1], got {delta}", field="delta")
    if delta >= PC_SITE_ESTIMATE:
        warnings.warn(f"delta={delta} is at or above the site threshold estimate {PC_SITE_ESTIMATE}")
    rng = np.random.default_rng(seed)
    return FailureField(L, delta, seed, rng.random((L, L)) < delta)


@dataclass(frozen=True)
class Cluster:
    members: frozenset
    size: int
    perimeter: int


@dataclass(frozen=True)
class ClusterDecomposition:
    clusters: list[Cluster]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.clusters], dtype=int)


def healthy_neighbour_counts(mask: np.ndarray) -> np.ndarray:
    """Number of in-grid healthy 4-neighbours of every site."""
    healthy = np.pad(~mask, 1, constant_values=False).astype(int)
    return healthy[:-2, 1:-1] + healthy[2:, 1:-1] + healthy[1:-1, :-2] + healthy[1:-1, 2:]


def cluster_sizes_and_perimeters(ff: FailureField) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster size and perimeter arrays, index ``label - 1``.

    The perimeter counts lattice edges from a cluster site to a site outside
    the cluster; edges leaving the grid are not counted.
    """
    n = ff.n_clusters
    labels = ff.labels.ravel()
    sizes = np.bincount(labels, minlength=n + 1)[1:]
    perims = np.bincount(labels, weights=healthy_neighbour_counts(ff.mask).ravel(), minlength=n + 1)[1:]
    return sizes, perims.astype(int)


def decompose_clusters(ff: FailureField) -> ClusterDecomposition:
    sizes, perims = cluster_sizes_and_perimeters(ff)
    ys, xs = np.nonzero(ff.labels)
    members: list[list[NodeId]] = [[] for _ in range(ff.n_clusters)]
    for x, y in zip(xs, ys):
        members[ff.labels[y, x] - 1].append(NodeId(int(x), int(y)))
    return ClusterDecomposition(
        [Cluster(frozenset(m), int(s), int(p)) for m, s, p in zip(members, sizes, perims)]
    )


@dataclass(frozen=True)
class TailFit:
    c_hat: float
    ci_low: float
    ci_high: float
    n_clusters: int
    n_max: int


def _fit_decay(hist: np.ndarray, min_count: int) -> tuple[float, int] | None:
    # hist[n] = number of clusters of size n
    tail = np.cumsum(hist[::-1])[::-1]
    ns = np.arange(len(hist))
    use = (ns >= 2) & (tail >= min_count)
    if use.sum() < 2:
        return None
    slope = np.polyfit(ns[use], np.log(tail[use] / tail[1]), 1)[0]
    return -slope, int(ns[use].max())


def tail_fit(sizes, min_clusters: int = 1000, min_count: int = 5, n_boot: int = 400, seed=0) -> TailFit:
    """Exponential decay rate of ``Pr[|C| >= n]`` over cluster sizes ``n >= 2``.

    The survival function is estimated per cluster, ``log Pr`` is fitted
    linearly in ``n`` over sizes seen at least ``min_count`` times, and a
    95% percentile bootstrap (multinomial resampling of the size histogram)
    gives the interval.
    """
    sizes = np.asarray(sizes, dtype=int)
    if len(sizes) < min_clusters:
        raise StatisticsError(f"{len(sizes)} clusters sampled, need at least {min_clusters}", field="sizes")
    hist = np.bincount(sizes)
    fit = _fit_decay(hist, min_count)
    if fit is None:
        raise StatisticsError("fewer than two tail points with enough clusters", field="sizes")
    rng = np.random.default_rng(seed)
    n = len(sizes)
    boot = []
    for _ in range(n_boot):
        res = _fit_decay(rng.multinomial(n, hist / n), min_count)
        if res is not None:
            boot.append(res[0])
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return TailFit(float(fit[0]), float(lo), float(hi), n, fit[1])


@dataclass(frozen=True)
class Bucket:
    k: int
    count: int
    mean_detour: float
    se: float

    @property
    def ci(self) -> tuple[float, float]:
        return self.mean_detour - 1.96 * self.se, self.mean_detour + 1.96 * self.se


@dataclass
class DetourExperimentResult:
    L: int
    delta: float
    buckets: list[Bucket]
    c_fit: float
    c_fit_se: float
    c_envelope: float
    tail: TailFit | None
    ambient_sizes: np.ndarray = field(repr=False)
    hit_sizes: np.ndarray = field(repr=False)
    routed: int = 0
    excluded: int = 0
    fallbacks: int = 0

    @property
    def exclusion_rate(self) -> float:
        total = self.routed + self.excluded
        return self.excluded / total if total else 0.0

    def monotone_violations(self, min_count: int = 30, sigmas: float = 3.0) -> list[tuple[int, int]]:
        """Consecutive well-populated buckets whose means drop by more than ``sigmas`` SE."""
        full = [b for b in self.buckets if b.count >= min_count]
        bad = []
        for a, b in zip(full, full[1:]):
            if b.mean_detour < a.mean_detour - sigmas * math.hypot(a.se, b.se):
                bad.append((a.k, b.k))
        return bad

    def size_bias_z(self) -> float:
        """z-score of (mean route-hit cluster size - mean ambient cluster size)."""
        h, a = self.hit_sizes, self.ambient_sizes
        se = math.sqrt(h.var(ddof=1) / len(h) + a.var(ddof=1) / len(a))
        return (h.mean() - a.mean()) / se

    def summary(self) -> dict:
        return {
            "L": self.L,
            "delta": self.delta,
            "C_hat": self.c_fit,
            "C_hat_se": self.c_fit_se,
            "C_envelope": self.c_envelope,
            "c_hat": None if self.tail is None else self.tail.c_hat,
            "c_hat_ci": None if self.tail is None else [self.tail.ci_low, self.tail.ci_high],
            "routed": self.routed,
            "exclusion_rate": self.exclusion_rate,
            "fallbacks": self.fallbacks,
            "mean_hit_size": float(self.hit_sizes.mean()) if len(self.hit_sizes) else None,
            "mean_ambient_size": float(self.ambient_sizes.mean()) if len(self.ambient_sizes) else None,
        }


def _one_field(L, delta, seed_seq, pairs):
    rng = np.random.default_rng(seed_seq)
    ff = FailureField(L, delta, None, rng.random((L, L)) < delta)
    g = GridGraph(L)
    sizes, _ = cluster_sizes_and_perimeters(ff)
    healthy = np.flatnonzero(~ff.mask.ravel())
    rows, hit_sizes = [], []
    excluded = 0
    if len(healthy) < 2:
        return sizes, rows, hit_sizes, pairs
    for _ in range(pairs):
        s, d = rng.choice(healthy, size=2, replace=False)
        s, d = g.node(int(s)), g.node(int(d))
        try:
            route, rec = deflect_route(g, s, d, ff)
        except NoRouteError:
            excluded += 1
            continue
        rows.append((rec.failed_on_route, rec.detour, rec.fallback))
        labels = {ff.cluster_of(n) for n in route_nominal_failures(s, d, ff)}
        hit_sizes.extend(int(sizes[lab - 1]) for lab in sorted(labels))
    return sizes, rows, hit_sizes, excluded


def route_nominal_failures(source, dest, ff: FailureField) -> list[NodeId]:
    return [n for n in _xy_path(source, dest) if ff.mask[n[1], n[0]]]


def detour_experiment(L: int, delta: float, pairs: int, fields: int, seed, min_bucket: int = 30) -> DetourExperimentResult:
    """Route ``pairs`` uniform healthy pairs on each of ``fields`` independent failure fields.

    Detours are bucketed by ``K`` (failed sites on the nominal route).  The
    slope through the origin is a weighted least-squares fit of bucket means
    over buckets with at least ``min_bucket`` routes; ``c_envelope`` is the
    smallest slope that upper-bounds every such bucket mean.
    """
    if not 0 <= delta < 1:
        raise InvalidParameter(f"delta must lie in [0, 1), got {delta}", field="delta")
    children = np.random.SeedSequence(seed).spawn(fields)
    ambient, hit, rows = [], [], []
    excluded = 0
    for child in children:
        sizes, r, h, ex = _one_field(L, delta, child, pairs)
        ambient.append(sizes)
        rows.extend(r)
        hit.extend(h)
        excluded += ex
    ks = np.array([r[0] for r in rows], dtype=int)
    det = np.array([r[1] for r in rows], dtype=float)
    buckets = []
    for k in np.unique(ks):
        d = det[ks == k]
        se = d.std(ddof=1) / math.sqrt(len(d)) if len(d) > 1 else math.inf
        buckets.append(Bucket(int(k), len(d), float(d.mean()), float(se)))
    fit_b = [b for b in buckets if b.k >= 1 and b.count >= min_bucket]
    if fit_b:
        w = np.array([b.count for b in fit_b], dtype=float)
        k_arr = np.array([b.k for b in fit_b], dtype=float)
        m_arr = np.array([b.mean_detour for b in fit_b])
        s_arr = np.array([b.se for b in fit_b])
        c_fit = float((w * k_arr * m_arr).sum() / (w * k_arr**2).sum())
        c_fit_se = float(math.sqrt(((w * k_arr * s_arr) ** 2).sum()) / (w * k_arr**2).sum())
        c_env = float(max(m_arr / k_arr))
    else:
        c_fit = c_fit_se = c_env = 0.0
    ambient_sizes = np.concatenate(ambient) if ambient else np.array([], dtype=int)
    try:
        tail = tail_fit(ambient_sizes, seed=seed)
    except StatisticsError:
        tail = None
    return DetourExperimentResult(
        L=L,
        delta=delta,
        buckets=buckets,
        c_fit=c_fit,
        c_fit_se=c_fit_se,
        c_envelope=c_env,
        tail=tail,
        ambient_sizes=ambient_sizes,
        hit_sizes=np.array(hit, dtype=int),
        routed=len(rows),
        excluded=excluded,
        fallbacks=sum(1 for r in rows if r[2]),
    )
