"""Merge operators, randomized abelian-monoid law checks and fold-tree fuzzing.

Law checks are property tests, so a pass means "no counterexample found in n
samples".  Reports say so explicitly.
"""

from __future__ import annotations

import itertools
import json
import math
import operator
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterator

import numpy as np

REPORT_SCHEMA_VERSION = 1
LAWS = ("associativity", "commutativity", "identity")

Shape = Any  # int leaf index, or a 2-tuple of shapes


@dataclass(frozen=True)
class LawStatus:
    kind: str  # "unchecked" | "passed" | "failed"
    n_samples: int = 0
    witness: tuple | None = None
    law: str | None = None


UNCHECKED = LawStatus("unchecked")


def _shrink_int(v: int) -> Iterator[int]:
    if v == 0:
        return
    yield 0
    if abs(v) > 1:
        yield v // 2 if v > 0 else -((-v) // 2)
    yield v - 1 if v > 0 else v + 1
    if v < 0:
        yield -v


@dataclass(eq=False)
class MonoidSpec:
    """A carrier (described by ``sampler``), a binary ``op`` and its ``identity``.

    ``shrink`` maps a carrier value to simpler candidates and is used to
    minimise law-violation witnesses.
    """

    name: str
    op: Callable[[Any, Any], Any]
    identity: Any
    sampler: Callable[[np.random.Generator], Any]
    carrier: str = ""
    shrink: Callable[[Any], Iterator[Any]] | None = None
    status: LawStatus = field(default=UNCHECKED)

    def combine(self, a, b):
        return self.op(a, b)


@dataclass(frozen=True)
class LawResult:
    law: str
    n_samples: int
    witness: tuple | None

    @property
    def passed(self) -> bool:
        return self.witness is None


@dataclass(frozen=True)
class LawCheck:
    monoid: str
    results: tuple[LawResult, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def witness(self, law: str) -> tuple | None:
        return next(r.witness for r in self.results if r.law == law)


def _violates(m: MonoidSpec, law: str, w: tuple) -> bool:
    op, e = m.op, m.identity
    if law == "associativity":
        a, b, c = w
        return op(op(a, b), c) != op(a, op(b, c))
    if law == "commutativity":
        a, b = w
        return op(a, b) != op(b, a)
    (a,) = w
    return op(a, e) != a or op(e, a) != a


def _minimise(m: MonoidSpec, law: str, w: tuple) -> tuple:
    if m.shrink is None:
        return w
    w = list(w)
    improved = True
    while improved:
        improved = False
        for i in range(len(w)):
            for cand in m.shrink(w[i]):
                trial = w[:i] + [cand] + w[i + 1:]
                if _violates(m, law, tuple(trial)):
                    w = trial
                    improved = True
                    break
    return tuple(w)


def check_laws(m: MonoidSpec, n_samples: int = 500, seed=0) -> LawCheck:
    """Sample ``n_samples`` triples, pairs and singletons per law.

    Each law is checked independently and reports its first counterexample,
    shrunk when the monoid supplies a shrinker.  ``m.status`` is updated.
    """
    rng = np.random.default_rng(seed)
    arity = {"associativity": 3, "commutativity": 2, "identity": 1}
    results = []
    for law in LAWS:
        witness = None
        for _ in range(n_samples):
            w = tuple(m.sampler(rng) for _ in range(arity[law]))
            if _violates(m, law, w):
                witness = _minimise(m, law, w)
                break
        results.append(LawResult(law, n_samples, witness))
    check = LawCheck(m.name, tuple(results))
    failed = next((r for r in results if not r.passed), None)
    if failed is None:
        m.status = LawStatus("passed", n_samples)
    else:
        m.status = LawStatus("failed", n_samples, failed.witness, failed.law)
    return check


@dataclass(frozen=True)
class FoldTree:
    """A full binary tree whose leaves are indices into ``leaves``.

    ``shape`` is ``None`` for the empty tree, an ``int`` for a single leaf, or
    a pair of subtrees.  Leaf indices across the shape form a permutation.
    """

    leaves: tuple
    shape: Shape

    def __post_init__(self):
        idx = sorted(_leaf_indices(self.shape)) if self.shape is not None else []
        if idx != list(range(len(self.leaves))):
            raise ValueError("tree shape must use every leaf exactly once")

    @property
    def depth(self) -> int:
        return _depth(self.shape) if self.shape is not None else 0


def _leaf_indices(shape) -> Iterator[int]:
    stack = [shape]
    while stack:
        s = stack.pop()
        if isinstance(s, tuple):
            stack.extend(s)
        else:
            yield s


def _depth(shape) -> int:
    if not isinstance(shape, tuple):
        return 0
    return 1 + max(_depth(shape[0]), _depth(shape[1]))


def fold(m: MonoidSpec, tree: FoldTree):
    if tree.shape is None:
        return m.identity

    def ev(s):
        if isinstance(s, tuple):
            return m.op(ev(s[0]), ev(s[1]))
        return tree.leaves[s]

    return ev(tree.shape)


def left_fold_tree(leaves) -> FoldTree:
    leaves = tuple(leaves)
    if not leaves:
        return FoldTree((), None)
    shape = 0
    for i in range(1, len(leaves)):
        shape = (shape, i)
    return FoldTree(leaves, shape)


def right_fold_tree(leaves, order=None) -> FoldTree:
    leaves = tuple(leaves)
    if not leaves:
        return FoldTree((), None)
    order = list(range(len(leaves))) if order is None else list(order)
    shape = order[-1]
    for i in reversed(order[:-1]):
        shape = (i, shape)
    return FoldTree(leaves, shape)


def random_tree(leaves, rng: np.random.Generator) -> FoldTree:
    """Random leaf permutation, then random adjacent merges until one root is left."""
    leaves = tuple(leaves)
    if not leaves:
        return FoldTree((), None)
    nodes: list = [int(i) for i in rng.permutation(len(leaves))]
    while len(nodes) > 1:
        i = int(rng.integers(len(nodes) - 1))
        nodes[i:i + 2] = [(nodes[i], nodes[i + 1])]
    return FoldTree(leaves, nodes[0])


def _bracketings(seq: tuple) -> Iterator[Shape]:
    if len(seq) == 1:
        yield seq[0]
        return
    for cut in range(1, len(seq)):
        for left in _bracketings(seq[:cut]):
            for right in _bracketings(seq[cut:]):
                yield (left, right)


def all_trees(leaves) -> Iterator[FoldTree]:
    """Every full binary tree over every leaf permutation (n! * Catalan(n-1) trees)."""
    leaves = tuple(leaves)
    if not leaves:
        yield FoldTree((), None)
        return
    for perm in itertools.permutations(range(len(leaves))):
        for shape in _bracketings(perm):
            yield FoldTree(leaves, shape)


def balanced_tree(leaves) -> FoldTree:
    """Halving split, depth ``ceil(log2 n)``."""
    leaves = tuple(leaves)
    if not leaves:
        return FoldTree((), None)

    def build(lo, hi):
        if hi - lo == 1:
            return lo
        mid = lo + (hi - lo + 1) // 2
        return (build(lo, mid), build(mid, hi))

    return FoldTree(leaves, build(0, len(leaves)))


@dataclass(frozen=True)
class FuzzResult:
    passed: bool
    n_trees: int
    witness: tuple | None = None  # (tree_a, tree_b, out_a, out_b)


def _compare(m: MonoidSpec, trees) -> FuzzResult:
    first = first_out = None
    n = 0
    for t in trees:
        n += 1
        out = fold(m, t)
        if first is None:
            first, first_out = t, out
        elif out != first_out:
            return FuzzResult(False, n, (first, t, first_out, out))
    return FuzzResult(True, n)


def fuzz_schedule_independence(m: MonoidSpec, leaves, n_trees: int, seed=0) -> FuzzResult:
    """Fold ``leaves`` under ``n_trees`` trees and require identical outputs.

    The first two trees are the left fold and the right fold of the reversed
    order, so any operator that is not both associative and commutative on
    three distinct leaves is caught deterministically; the rest are random.
    """
    leaves = tuple(leaves)
    rng = np.random.default_rng(seed)

    def trees():
        yield left_fold_tree(leaves)
        if n_trees > 1:
            yield right_fold_tree(leaves, order=range(len(leaves) - 1, -1, -1))
        for _ in range(n_trees - 2):
            yield random_tree(leaves, rng)

    return _compare(m, trees())


def exhaustive_schedule_independence(m: MonoidSpec, leaves) -> FuzzResult:
    if len(leaves) > 6:
        raise ValueError("exhaustive enumeration limited to 6 leaves")
    return _compare(m, all_trees(leaves))


def _tree_json(t: FoldTree) -> dict:
    return {"leaves": [repr(v) for v in t.leaves], "shape": t.shape}


def emit_law_report(m: MonoidSpec, results: LawCheck | None = None) -> dict:
    laws = []
    if results is not None:
        for r in results.results:
            laws.append({
                "law": r.law,
                "status": "passed" if r.passed else "failed",
                "n_samples": r.n_samples,
                "witness": None if r.witness is None else [repr(v) for v in r.witness],
            })
    status = "unchecked" if results is None else ("passed" if results.passed else "failed")
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "kind": "monoid-law-report",
        "evidence": "empirical evidence, not a proof term",
        "monoid": m.name,
        "carrier": m.carrier,
        "op": getattr(m.op, "__name__", repr(m.op)),
        "identity": repr(m.identity),
        "status": status,
        "laws": laws,
    }


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, default=repr)


# catalogue ---------------------------------------------------------------


def _ints(lo, hi):
    return lambda rng: int(rng.integers(lo, hi))


def _lcm(a, b):
    return math.lcm(a, b)


def _pair_add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _counter_add(a, b):
    return a + b


def _union(a, b):
    return a | b


def _min(a, b):
    return min(a, b)


def _max(a, b):
    return max(a, b)


def _add_mod7(a, b):
    return (a + b) % 7


def _bag(rng):
    return Counter(int(v) for v in rng.integers(0, 4, size=int(rng.integers(0, 4))))


def _fset(rng):
    return frozenset(int(v) for v in rng.integers(0, 8, size=int(rng.integers(0, 4))))


def _frac(rng):
    return Fraction(int(rng.integers(-50, 50)), int(rng.integers(1, 20)))


def _float(rng):
    return float(rng.uniform(-1, 1) * 10.0 ** int(rng.integers(-8, 9)))


def int_sum() -> MonoidSpec:
    return MonoidSpec("int_sum", operator.add, 0, _ints(-10**6, 10**6), "integers", _shrink_int)


def lawful_catalog() -> list[MonoidSpec]:
    """Operators that are abelian monoids on the sampled carrier."""
    return [
        int_sum(),
        MonoidSpec("int_product", operator.mul, 1, _ints(-20, 20), "integers", _shrink_int),
        MonoidSpec("nat_max", _max, 0, _ints(0, 10**6), "non-negative integers", _shrink_int),
        MonoidSpec("int_min", _min, math.inf, _ints(-10**6, 10**6), "integers with +inf", _shrink_int),
        MonoidSpec("nat_gcd", math.gcd, 0, _ints(0, 10**4), "non-negative integers", _shrink_int),
        MonoidSpec("pos_lcm", _lcm, 1, _ints(1, 60), "positive integers"),
        MonoidSpec("xor", operator.xor, 0, _ints(0, 2**16), "16-bit words", _shrink_int),
        MonoidSpec("bit_or", operator.or_, 0, _ints(0, 2**16), "16-bit words", _shrink_int),
        MonoidSpec("bit_and", operator.and_, 2**16 - 1, _ints(0, 2**16), "16-bit words", _shrink_int),
        MonoidSpec("add_mod_7", _add_mod7, 0, _ints(0, 7), "Z/7", _shrink_int),
        MonoidSpec("fraction_sum", operator.add, Fraction(0), _frac, "rationals"),
        MonoidSpec("count_and_sum", _pair_add, (0, 0), lambda rng: (1, int(rng.integers(-1000, 1000))), "(count, sum) pairs"),
        MonoidSpec("multiset_union", _counter_add, Counter(), _bag, "finite multisets of small naturals"),
        MonoidSpec("set_union", _union, frozenset(), _fset, "finite sets of small naturals"),
    ]


def int_subtraction() -> MonoidSpec:
    return MonoidSpec("int_subtraction", operator.sub, 0, _ints(-100, 100), "integers", _shrink_int)


def float_sum() -> MonoidSpec:
    return MonoidSpec("float_sum", operator.add, 0.0, _float, "IEEE-754 doubles")
