import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruleflow import CostConfig, DecisionTree, Node, distance, reconstruct_target
from ruleflow.synth import random_tree
from ruleflow.tree import LOCK_RESTRICTED

UNIT = CostConfig(insert_cost=1.0, delete_cost=1.0,
                  relabel_same_attr=1.0, relabel_diff_attr=1.0)


def leaf_tree(klass=0):
    return DecisionTree([Node.leaf(klass)], 0, ["c0", "c1"])


def stub(attribute=0, threshold=0.5, true_klass=0, false_klass=1):
    nodes = [Node.leaf(true_klass), Node.leaf(false_klass),
             Node.internal(attribute, threshold, 0, 1)]
    return DecisionTree(nodes, 2, ["c0", "c1"])


# -- brute-force oracle ----------------------------------------------------------------

def _postorder(tree):
    """Nodes in false-first postorder plus each node's ancestor index set."""
    order = []
    parents_map = {}

    def walk(nid):
        node = tree.nodes[nid]
        kids = []
        if not node.is_leaf:
            kids.append(walk(node.false_child))
            kids.append(walk(node.true_child))
        idx = len(order)
        order.append(node)
        for k in kids:
            parents_map[k] = idx
        return idx

    walk(tree.root)
    anc = [set() for _ in order]
    for i in range(len(order)):
        j = parents_map.get(i)
        while j is not None:
            anc[i].add(j)
            j = parents_map.get(j)
    return order, anc


def brute_force_ted(t1, t2, cost):
    """Minimal valid-mapping cost by exhaustive search (tiny trees only)."""
    from ruleflow.ted import node_label_cost

    n1, anc1 = _postorder(t1)
    n2, anc2 = _postorder(t2)
    best = [float("inf")]
    m = len(n2)

    def valid(pairs):
        for (i1, j1), (i2, j2) in itertools.combinations(pairs, 2):
            if (i1 < i2) != (j1 < j2):
                return False
            if (i2 in anc1[i1]) != (j2 in anc2[j1]):
                return False
            if (i1 in anc1[i2]) != (j1 in anc2[j2]):
                return False
        return True

    choices = [list(range(m)) + [None] for _ in n1]
    for assign in itertools.product(*choices):
        mapped = [(i, j) for i, j in enumerate(assign) if j is not None]
        js = [j for _, j in mapped]
        if len(set(js)) != len(js) or not valid(mapped):
            continue
        c = sum(node_label_cost(n1[i], n2[j], cost) for i, j in mapped)
        c += cost.delete_cost * (len(n1) - len(mapped))
        c += cost.insert_cost * (len(n2) - len(mapped))
        best[0] = min(best[0], c)
    return best[0]


# -- fixed cases ----------------------------------------------------------------

def test_identical_trees_distance_zero():
    t = stub()
    res = distance(t, t)
    assert res.distance == 0.0
    assert res.script == []


def test_same_attribute_threshold_change_is_half():
    res = distance(stub(threshold=0.3), stub(threshold=0.6))
    assert res.distance == 0.5
    assert [op.kind for op in res.script] == ["update"]


def test_attribute_change_is_one():
    res = distance(stub(attribute=0), stub(attribute=1))
    assert res.distance == 1.0


def test_leaf_vs_stub_counts_inserts():
    res = distance(leaf_tree(0), stub())
    # grow a root test and one extra leaf: oracle value from brute force
    assert res.distance == brute_force_ted(leaf_tree(0), stub(), CostConfig())


def test_restricted_node_scales_delete_and_relabel():
    t1 = stub().with_lock(2, LOCK_RESTRICTED)
    plain = distance(stub(attribute=0), stub(attribute=1)).distance
    marked = distance(t1, stub(attribute=1)).distance
    assert marked == pytest.approx(plain * 3.0)


def test_restricted_via_argument_matches_lock():
    t1 = stub()
    via_lock = distance(t1.with_lock(2, LOCK_RESTRICTED), stub(attribute=1))
    via_arg = distance(t1, stub(attribute=1), restricted={2})
    assert via_lock.distance == via_arg.distance


# -- oracle comparison on all tiny tree pairs ----------------------------------------------------------------

def tiny_trees():
    """All strictly binary shapes with ≤ 5 nodes over 2 attrs / 2 classes."""
    out = [leaf_tree(0), leaf_tree(1)]
    for attr in (0, 1):
        for tk in (0, 1):
            out.append(stub(attr, 0.4, tk, 1 - tk))
    # five-node shapes: one child of the root is itself a stub
    for attr in (0, 1):
        inner = [Node.leaf(0), Node.leaf(1), Node.internal(1 - attr, 0.7, 0, 1)]
        nodes = inner + [Node.leaf(1), Node.internal(attr, 0.4, 2, 3)]
        out.append(DecisionTree(nodes, 4, ["c0", "c1"]))
        nodes = inner + [Node.leaf(0), Node.internal(attr, 0.4, 3, 2)]
        out.append(DecisionTree(nodes, 4, ["c0", "c1"]))
    return out


@pytest.mark.parametrize("cost", [CostConfig(), UNIT],
                         ids=["tiered", "unit"])
def test_dp_matches_bruteforce_on_all_tiny_pairs(cost):
    trees = tiny_trees()
    for t1 in trees:
        for t2 in trees:
            got = distance(t1, t2, cost).distance
            want = brute_force_ted(t1, t2, cost)
            assert got == pytest.approx(want), (t1.to_dict(), t2.to_dict())


# -- metric properties ----------------------------------------------------------------

def _rand(seed):
    return random_tree(2, 2, np.random.default_rng(seed), max_depth=3)


def test_metric_identity_and_symmetry_1000_pairs():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        a = random_tree(2, 2, rng, max_depth=3)
        b = random_tree(2, 2, rng, max_depth=3)
        assert distance(a, a, UNIT).distance == 0.0
        assert distance(a, b, UNIT).distance == \
            pytest.approx(distance(b, a, UNIT).distance)


def test_metric_triangle_inequality():
    for seed in range(300):
        rng = np.random.default_rng(10_000 + seed)
        a, b, c = (random_tree(2, 2, rng, max_depth=3) for _ in range(3))
        ab = distance(a, b, UNIT).distance
        bc = distance(b, c, UNIT).distance
        ac = distance(a, c, UNIT).distance
        assert ac <= ab + bc + 1e-9


# -- script reconstruction ----------------------------------------------------------------

@settings(max_examples=50, deadline=None)
@given(st.integers(0, 100_000))
def test_scripts_reconstruct_target(seed):
    rng = np.random.default_rng(seed)
    a = random_tree(2, 2, rng)
    b = random_tree(2, 2, rng)
    res = distance(a, b)
    rebuilt = reconstruct_target(a, res)
    assert rebuilt.equal_structure(b)


def test_script_excludes_zero_cost_matches():
    res = distance(stub(threshold=0.3), stub(threshold=0.6))
    assert all(op.cost > 0 for op in res.script)
    assert all(op.cost == 0 for op in res.matches)
    assert sum(op.cost for op in res.script) == pytest.approx(res.distance)
