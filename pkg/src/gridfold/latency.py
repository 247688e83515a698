"""Alpha-beta-gamma collective costs and the cluster/grid latency ratio.

The ratio ``R(x) = (c2 + (A + B) x) / (c1 + M x)`` with ``x = 1 / f_act`` is
evaluated in exact rational arithmetic: floats convert to ``Fraction``
without rounding, so the boundary case ``(A + B) c1 = M c2`` is decided
exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import InvalidParameter


def _require_p(p: int):
    if not isinstance(p, (int, np.integer)) or p < 2:
        raise InvalidParameter(f"p must be an integer >= 2, got {p!r}", field="p")


def _log2(p: int) -> float:
    return float(p.bit_length() - 1) if p & (p - 1) == 0 else math.log2(p)


def t_recursive_doubling(p: int, n_bytes: float, alpha: float, beta: float, gamma: float) -> float:
    _require_p(p)
    if p & (p - 1):
        raise InvalidParameter(f"recursive doubling needs a power-of-two p, got {p}", field="p")
    lg = _log2(p)
    return lg * alpha + n_bytes * lg * beta + n_bytes * lg * gamma


def t_rabenseifner(p: int, n_bytes: float, alpha: float, beta: float, gamma: float) -> float:
    _require_p(p)
    frac = (p - 1) / p
    return 2 * _log2(p) * alpha + 2 * frac * n_bytes * beta + frac * n_bytes * gamma


def t_ring(p: int, n_bytes: float, alpha: float, beta: float) -> float:
    _require_p(p)
    return 2 * (p - 1) / p * n_bytes * beta + 2 * (p - 1) * alpha


@dataclass(frozen=True)
class GridLatencyParams:
    """``T_grid(f) = c1 f + M_P`` with ``M_P = c_w sqrt(P) t_edge t_cycle + merge_log log2(P)``."""

    c1: float
    c_w: float
    t_edge: float
    P: int
    t_cycle: float = 1.0
    merge_log: float = 0.0

    def __post_init__(self):
        if self.P < 1:
            raise InvalidParameter("P must be >= 1", field="P")
        if self.c1 < 0:
            raise InvalidParameter("c1 must be >= 0", field="c1")
        if not self.M_P > 0:
            raise InvalidParameter("M_P must be > 0 (check c_w, t_edge, t_cycle)", field="c_w")

    @property
    def M_P(self) -> float:
        return self.c_w * math.sqrt(self.P) * self.t_edge * self.t_cycle + self.merge_log * math.log2(self.P)

    def t_grid(self, f_act: float) -> float:
        return self.c1 * f_act + self.M_P


@dataclass(frozen=True)
class ClusterLatencyParams:
    alpha: float
    beta: float
    gamma: float
    N: int
    m0: float
    c2: float

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "c2"):
            if getattr(self, name) < 0:
                raise InvalidParameter(f"{name} must be >= 0", field=name)
        if not self.m0 > 0:
            raise InvalidParameter("m0 must be > 0", field="m0")
        if self.N < 2:
            raise InvalidParameter("N must be >= 2", field="N")


def cluster_overheads(cp: ClusterLatencyParams) -> tuple[float, float]:
    """``(A_N, B_N)``: the activation-independent bandwidth and startup terms.

    Taken from a Rabenseifner all-reduce of the floor-size message ``m0``:
    ``A_N = (N-1)/N * m0 * (2 beta + gamma)`` and ``B_N = 2 log2(N) alpha``.
    """
    frac = (cp.N - 1) / cp.N
    return frac * cp.m0 * (2 * cp.beta + cp.gamma), 2 * _log2(cp.N) * cp.alpha


def t_cluster(cp: ClusterLatencyParams, f_act: float) -> float:
    a, b = cluster_overheads(cp)
    return cp.c2 * f_act + a + b


@dataclass(frozen=True)
class RatioCurve:
    samples: tuple[tuple[Fraction, Fraction], ...]
    limit: Fraction
    monotone: bool
    criterion: Fraction  # (A + B) c1 - M c2; sign decides monotonicity

    def sampled_increasing(self) -> bool:
        r = [s[1] for s in self.samples]
        return all(b > a for a, b in zip(r, r[1:]))

    def sampled_decreasing(self) -> bool:
        r = [s[1] for s in self.samples]
        return all(b < a for a, b in zip(r, r[1:]))

    def rows(self) -> list[dict]:
        return [{"x": float(x), "R": float(r)} for x, r in self.samples]


def ratio_value(c1, c2, ab, M, x) -> Fraction:
    c1, c2, ab, M, x = map(Fraction, (c1, c2, ab, M, x))
    return (c2 + ab * x) / (c1 + M * x)


def ratio_curve_exact(c1, c2, A_N, B_N, M_P, x_grid: Sequence) -> RatioCurve:
    if A_N < 0 or B_N < 0:
        raise InvalidParameter("A_N and B_N must be >= 0", field="A_N" if A_N < 0 else "B_N")
    if any(x < 1 for x in x_grid):
        raise InvalidParameter("x = 1/f_act must be >= 1", field="x_grid")
    c1, c2, M = Fraction(c1), Fraction(c2), Fraction(M_P)
    ab = Fraction(A_N) + Fraction(B_N)
    samples = tuple((Fraction(x), ratio_value(c1, c2, ab, M, x)) for x in x_grid)
    criterion = ab * c1 - M * c2
    return RatioCurve(samples, ab / M, criterion > 0, criterion)


def ratio_curve(gp: GridLatencyParams, cp: ClusterLatencyParams, A_N=None, B_N=None, x_grid: Sequence = (1, 2, 4, 8)) -> RatioCurve:
    """``R(x)`` over ``x_grid``; ``A_N``/``B_N`` default to ``cluster_overheads(cp)``."""
    if A_N is None or B_N is None:
        a, b = cluster_overheads(cp)
        A_N = a if A_N is None else A_N
        B_N = b if B_N is None else B_N
    return ratio_curve_exact(gp.c1, cp.c2, A_N, B_N, gp.M_P, x_grid)


@dataclass(frozen=True)
class DivergenceRow:
    N: int
    ratio: float
    ratio_over_log2N: float


@dataclass(frozen=True)
class DivergenceResult:
    rows: tuple[DivergenceRow, ...]
    tail_spread: float
    r_squared: float
    diverges: bool


def relative_spread(values) -> float:
    v = np.asarray(values, float)
    return float((v.max() - v.min()) / v.mean())


def divergence_experiment(N_list, f_act: float, gp: GridLatencyParams, alpha, beta, gamma, m0, c2) -> DivergenceResult:
    """``T_cluster / T_grid`` as ``N`` grows with ``f_act`` and ``P`` held fixed.

    ``tail_spread`` is the relative spread of ``ratio / log2 N`` over the last
    half of ``N_list``; ``r_squared`` is for a linear fit of the ratio against
    ``log2 N``.  ``diverges`` needs a positive ``alpha`` and a strictly
    increasing ratio column.
    """
    if not 0 < f_act <= 1:
        raise InvalidParameter(f"f_act must lie in (0, 1], got {f_act}", field="f_act")
    rows = []
    tg = gp.t_grid(f_act)
    for N in N_list:
        cp = ClusterLatencyParams(alpha, beta, gamma, N, m0, c2)
        r = t_cluster(cp, f_act) / tg
        rows.append(DivergenceRow(N, r, r / _log2(N)))
    tail = rows[len(rows) // 2:]
    lg = np.array([_log2(r.N) for r in rows])
    ratio = np.array([r.ratio for r in rows])
    r2 = float(np.corrcoef(lg, ratio)[0, 1] ** 2) if np.ptp(ratio) > 0 else 0.0
    increasing = bool(np.all(np.diff(ratio) > 0))
    return DivergenceResult(tuple(rows), relative_spread([r.ratio_over_log2N for r in tail]), r2, alpha > 0 and increasing)
