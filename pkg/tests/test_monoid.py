import json
import math
import operator

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridfold.monoid import (
    FoldTree,
    MonoidSpec,
    all_trees,
    balanced_tree,
    check_laws,
    emit_law_report,
    exhaustive_schedule_independence,
    float_sum,
    fold,
    fuzz_schedule_independence,
    int_subtraction,
    int_sum,
    lawful_catalog,
    left_fold_tree,
    random_tree,
    report_json,
)


def test_int_sum_passes():
    m = int_sum()
    assert m.status.kind == "unchecked"
    res = check_laws(m, 300)
    assert res.passed
    assert m.status.kind == "passed" and m.status.n_samples == 300


def test_subtraction_minimal_witnesses():
    m = int_subtraction()
    res = check_laws(m, 200, seed=1)
    assert not res.passed and m.status.kind == "failed"
    a, b, c = res.witness("associativity")
    assert (a - b) - c != a - (b - c)
    assert res.witness("associativity") == (0, 0, 1)
    assert res.witness("commutativity") == (0, 1)
    assert res.witness("identity") == (1,)
    # the textbook triple is also a witness
    assert operator.sub(operator.sub(1, 2), 3) == -4 and operator.sub(1, operator.sub(2, 3)) == 2


def test_float_addition_fails_associativity():
    res = check_laws(float_sum(), 2000, seed=0)
    a, b, c = res.witness("associativity")
    assert (a + b) + c != a + (b + c)
    assert res.witness("commutativity") is None


@pytest.mark.parametrize("m", lawful_catalog(), ids=lambda m: m.name)
def test_catalog_passes(m):
    assert check_laws(m, 300, seed=2).passed


def test_catalog_size():
    assert len(lawful_catalog()) >= 10


def test_fold_examples():
    m = int_sum()
    rng = np.random.default_rng(0)
    for _ in range(3):
        assert fold(m, random_tree(range(1, 9), rng)) == 36
    assert fold(m, FoldTree((), None)) == 0
    mx = next(x for x in lawful_catalog() if x.name == "nat_max")
    for t in all_trees([5, 5, 5]):
        assert fold(mx, t) == 5


def test_tree_counts_and_validity():
    # n! * Catalan(n - 1)
    for n, count in [(1, 1), (2, 2), (3, 12), (4, 120), (5, 1680)]:
        assert sum(1 for _ in all_trees(range(n))) == count
    with pytest.raises(ValueError):
        FoldTree((1, 2), (0, 0))


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 9, 100, 1000])
def test_balanced_depth(n):
    t = balanced_tree(range(n))
    assert t.depth == math.ceil(math.log2(n))
    assert fold(int_sum(), t) == sum(range(n))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=1, max_size=40), st.integers(0, 2**32 - 1))
def test_random_tree_is_full_binary_over_permutation(leaves, seed):
    t = random_tree(leaves, np.random.default_rng(seed))
    assert len(t.leaves) == len(leaves)
    assert fold(int_sum(), t) == sum(leaves)
    assert left_fold_tree(leaves).depth == len(leaves) - 1


def test_fuzz_examples():
    rng = np.random.default_rng(4)
    leaves = [int(v) for v in rng.integers(-1000, 1000, 16)]
    assert fuzz_schedule_independence(int_sum(), leaves, 1000, seed=1).passed
    res = fuzz_schedule_independence(int_subtraction(), (1, 2, 3), 2)
    assert not res.passed
    ta, tb, oa, ob = res.witness
    assert oa != ob and fold(int_subtraction(), ta) == oa and fold(int_subtraction(), tb) == ob
    assert fuzz_schedule_independence(int_subtraction(), (7,), 50).passed


@pytest.mark.parametrize("m", lawful_catalog(), ids=lambda m: m.name)
def test_exhaustive_independence(m):
    rng = np.random.default_rng(11)
    for n in range(0, 6):
        leaves = [m.sampler(rng) for _ in range(n)]
        assert exhaustive_schedule_independence(m, leaves).passed


def test_exhaustive_catches_non_commutative_associative_op():
    concat = MonoidSpec("concat", operator.add, "", lambda rng: "ab"[int(rng.integers(2))])
    assert not exhaustive_schedule_independence(concat, ["a", "b"]).passed
    assert check_laws(concat, 200).witness("associativity") is None


def test_law_report_documents():
    m = int_sum()
    unchecked = emit_law_report(m)
    assert unchecked["status"] == "unchecked" and unchecked["laws"] == []
    res = check_laws(m, 50)
    rep = emit_law_report(m, res)
    assert rep["status"] == "passed"
    assert rep["evidence"] == "empirical evidence, not a proof term"
    assert [x["law"] for x in rep["laws"]] == ["associativity", "commutativity", "identity"]
    assert all(x["status"] == "passed" and x["n_samples"] == 50 for x in rep["laws"])
    bad = emit_law_report(int_subtraction(), check_laws(int_subtraction(), 50))
    assert bad["status"] == "failed"
    assert bad["laws"][0]["witness"] == ["0", "0", "1"]
    assert json.loads(report_json(bad))["schema_version"] == 1
