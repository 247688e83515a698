"""Typical distance on grids with and without random long-range shortcuts."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .topology import GridGraph, augment_smallworld, build_grid, distances_from

ALL_PAIRS_MAX_L = 32


@dataclass(frozen=True)
class SmallWorldRow:
    L: int
    P: int
    k: int
    pairs: int
    mean_dist: float
    method: str

    @property
    def over_log2P(self) -> float:
        return self.mean_dist / math.log2(self.P)

    @property
    def over_sqrtP(self) -> float:
        return self.mean_dist / math.sqrt(self.P)

    def record(self) -> dict:
        return {
            "L": self.L,
            "P": self.P,
            "k": self.k,
            "pairs": self.pairs,
            "mean_dist": self.mean_dist,
            "mean_dist_over_log2P": self.over_log2P,
            "mean_dist_over_sqrtP": self.over_sqrtP,
            "method": self.method,
        }


def mean_distance(g: GridGraph, pairs: int, rng: np.random.Generator, all_pairs_max_L: int = ALL_PAIRS_MAX_L) -> tuple[float, int, str]:
    """Mean hop distance over ordered pairs of distinct nodes.

    Exact over all pairs up to ``all_pairs_max_L``; above that, ``pairs``
    uniform distinct pairs are sampled.
    """
    P = g.P
    if g.L <= all_pairs_max_L:
        total = 0.0
        for rows in distances_from(g, range(P)):
            total += rows.sum()
        return float(total / (P * (P - 1))), P * (P - 1), "all_pairs"
    src = rng.integers(0, P, size=pairs)
    dst = rng.integers(0, P - 1, size=pairs)
    dst += dst >= src
    order = np.argsort(src, kind="stable")
    uniq, first = np.unique(src[order], return_index=True)
    dists = np.empty(pairs)
    rows_iter = distances_from(g, uniq.tolist())
    offset = 0
    for rows in rows_iter:
        for r in range(len(rows)):
            u = offset + r
            lo = first[u]
            hi = first[u + 1] if u + 1 < len(first) else pairs
            idx = order[lo:hi]
            dists[idx] = rows[r, dst[idx]]
        offset += len(rows)
    return float(dists.mean()), pairs, "sampled"


def smallworld_experiment(L_list, k: int, pairs: int, seed, all_pairs_max_L: int = ALL_PAIRS_MAX_L) -> list[SmallWorldRow]:
    """One row per side length; ``k = 0`` is the bare-grid control.

    Each graph gets its own shortcut seed and pair-sampling stream, both
    spawned from ``seed``.
    """
    if k < 0:
        raise InvalidParameter("k must be >= 0", field="k")
    if pairs < 1:
        raise InvalidParameter("pairs must be >= 1", field="pairs")
    rows = []
    for L, child in zip(L_list, np.random.SeedSequence(seed).spawn(len(L_list))):
        graph_seed, pair_seed = child.spawn(2)
        g = build_grid(L)
        if k > 0:
            g = augment_smallworld(g, k, int(graph_seed.generate_state(1)[0]))
        mean, n, method = mean_distance(g, pairs, np.random.default_rng(pair_seed), all_pairs_max_L)
        rows.append(SmallWorldRow(L, g.P, k, n, mean, method))
    return rows


def collapse_pattern(rows: list[SmallWorldRow]) -> dict:
    """The two shape checks: ``mean/sqrt(P)`` strictly decreasing, ``mean/log2(P)`` within a factor-2 band."""
    sq = [r.over_sqrtP for r in rows]
    lg = [r.over_log2P for r in rows]
    return {
        "sqrtP_strictly_decreasing": all(b < a for a, b in zip(sq, sq[1:])),
        "log2P_band_ratio": max(lg) / min(lg),
        "log2P_within_factor_2": max(lg) / min(lg) <= 2,
        "sqrtP_relative_spread": (max(sq) - min(sq)) / (sum(sq) / len(sq)),
    }
