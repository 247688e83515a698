"""Load on the sink trunk under random source activation.

Each source ``(a, b)`` of an ``n x n`` grid is active with probability ``f``.
With a corner sink and XY routing, a source in row ``b`` crosses ``b`` trunk
edges, so the summed trunk load is ``Y = sum_b b * sum_a X[a, b]``.  Row 0
contributes nothing.

Exact moments are checked three ways: closed form, brute-force enumeration of
all activation masks, and Monte Carlo.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BudgetError, InvalidParameter
from .routing import edge_congestion, xy_route
from .topology import GridGraph, NodeId

ENUMERATION_BUDGET = 20  # indicator variables
MC_CHUNK = 10_000


def _check_f(f):
    if not 0 < f < 1:
        raise InvalidParameter(f"f_act must lie in (0, 1), got {f}", field="f_act")


@dataclass(frozen=True)
class ActivationField:
    """Activation mask ``mask[b, a]`` for source ``(a, b)``."""

    n: int
    f_act: float
    mask: np.ndarray
    seed: int | None = None

    @classmethod
    def sample(cls, n: int, f_act: float, seed) -> "ActivationField":
        _check_f(f_act)
        rng = np.random.Generator(np.random.Philox(seed))
        return cls(n, f_act, rng.random((n, n)) < f_act, seed)


def y_functional(field: ActivationField) -> int:
    rows = field.mask.sum(axis=1)
    return int(np.dot(np.arange(field.n), rows))


def y_edgewise(field: ActivationField) -> int:
    """Same quantity as a sum of trunk-edge loads over the actual XY routes."""
    g = GridGraph(field.n)
    bs, as_ = np.nonzero(field.mask)
    routes = [xy_route(g, (int(a), int(b)), (0, 0)) for a, b in zip(as_, bs)]
    load, _, _ = edge_congestion(routes)
    return sum(load[(NodeId(0, j), NodeId(0, j - 1))] for j in range(1, field.n))


def exact_moments(n: int, f_act) -> tuple:
    """``(E[Y], Var[Y])``; exact ``Fraction`` values when ``f_act`` is a ``Fraction``."""
    if n < 2:
        raise InvalidParameter(f"n must be >= 2, got {n}", field="n")
    _check_f(f_act)
    mean = f_act * n * n * (n - 1) / 2
    var = f_act * (1 - f_act) * n * (n - 1) * n * (2 * n - 1) / 6
    return mean, var


def enumerate_oracle(n: int, f_act) -> tuple:
    """Moments of ``Y`` by summing over all ``2**(n(n-1))`` masks of rows 1..n-1.

    Masks are grouped by (active count, Y) with exact integer counts, so with a
    ``Fraction`` probability the result is exact.
    """
    _check_f(f_act)
    m = n * (n - 1)
    if m > ENUMERATION_BUDGET:
        raise BudgetError(f"{m} indicators exceeds the enumeration budget of {ENUMERATION_BUDGET}", field="n")
    weights = np.repeat(np.arange(1, n), n)
    masks = np.arange(1 << m, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(m)) & 1
    k = bits.sum(axis=1)
    y = bits @ weights
    keys, counts = np.unique(np.stack([k, y], axis=1), axis=0, return_counts=True)
    exact = isinstance(f_act, Fraction)
    probs = [f_act ** int(kk) * (1 - f_act) ** (m - int(kk)) * int(c) for (kk, _), c in zip(keys, counts)]
    ys = [int(yy) for _, yy in keys]
    total = sum if exact else math.fsum
    mean = total(p * yy for p, yy in zip(probs, ys))
    var = total(p * (yy - mean) ** 2 for p, yy in zip(probs, ys))
    return mean, var


def sample_variance_se(n: int, f_act: float, trials: int) -> float:
    """Standard error of the unbiased sample variance of ``Y`` over ``trials`` draws.

    Uses ``Var(s^2) = mu4 / T - sigma^4 (T - 3) / (T (T - 1))`` with the fourth
    central moment built from the cumulants of the weighted Bernoulli sum.
    """
    w = np.repeat(np.arange(1, n), n).astype(float)
    q = f_act * (1 - f_act)
    k2 = q * float((w**2).sum())
    k4 = q * (1 - 6 * q) * float((w**4).sum())
    mu4 = k4 + 3 * k2**2
    T = trials
    return math.sqrt(mu4 / T - k2**2 * (T - 3) / (T * (T - 1)))


def _chunk_moments(args) -> tuple[int, int]:
    n, f_act, size, seed_seq = args
    rng = np.random.Generator(np.random.Philox(seed_seq))
    rows = rng.binomial(n, f_act, size=(size, n - 1))
    y = rows @ np.arange(1, n, dtype=np.int64)
    return int(y.sum()), int((y * y).sum())


def monte_carlo_moments(n: int, f_act: float, trials: int, seed, workers: int = 1) -> tuple[float, float]:
    """Sample mean and unbiased variance of ``Y``.

    Row sums are drawn directly as ``Binomial(n, f)``.  Trials are split into
    fixed-size chunks with sub-seeds spawned from ``(seed, n)``, so the result
    does not depend on ``workers``.
    """
    _check_f(f_act)
    if trials < 2:
        raise InvalidParameter("need at least 2 trials", field="trials")
    sizes = [MC_CHUNK] * (trials // MC_CHUNK) + ([trials % MC_CHUNK] if trials % MC_CHUNK else [])
    seeds = np.random.SeedSequence([seed, n]).spawn(len(sizes))
    jobs = [(n, f_act, s, ss) for s, ss in zip(sizes, seeds)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            parts = list(pool.map(_chunk_moments, jobs))
    else:
        parts = [_chunk_moments(j) for j in jobs]
    s = sum(p[0] for p in parts)
    ss = sum(p[1] for p in parts)
    mean = Fraction(s, trials)
    var = (ss - s * mean) / (trials - 1)
    return float(mean), float(var)


@dataclass(frozen=True)
class ScalingRow:
    n: int
    P: int
    f: float
    trials: int
    mean_hat: float
    mean_exact: float
    var_hat: float
    var_exact: float
    var_se: float

    @property
    def var_over_P2(self) -> float:
        return self.var_hat / self.P**2

    @property
    def var_over_P32(self) -> float:
        return self.var_hat / self.P**1.5

    @property
    def z(self) -> float:
        return (self.var_hat - self.var_exact) / self.var_se

    def csv_record(self) -> dict:
        return {
            "n": self.n,
            "P": self.P,
            "f": self.f,
            "trials": self.trials,
            "mean_hat": self.mean_hat,
            "mean_exact": self.mean_exact,
            "var_hat": self.var_hat,
            "var_exact": self.var_exact,
            "var_over_P2": self.var_over_P2,
            "var_over_P32": self.var_over_P32,
        }


CSV_COLUMNS = ["n", "P", "f", "trials", "mean_hat", "mean_exact", "var_hat", "var_exact", "var_over_P2", "var_over_P32"]


def scaling_experiment(n_list, f_act: float, trials: int, seed, workers: int = 1) -> list[ScalingRow]:
    rows = []
    for n in n_list:
        mean_x, var_x = exact_moments(n, f_act)
        mean_h, var_h = monte_carlo_moments(n, f_act, trials, seed, workers)
        rows.append(ScalingRow(n, n * n, f_act, trials, mean_h, float(mean_x), var_h, float(var_x),
                               sample_variance_se(n, f_act, trials)))
    return rows


def loglog_slope(P, var) -> float:
    return float(np.polyfit(np.log(np.asarray(P, float)), np.log(np.asarray(var, float)), 1)[0])
