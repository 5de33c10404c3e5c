import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruleflow import (AttributeSchema, DecisionTree, Node, TreeError,
                      from_jsonlogic, learn_cart, single_leaf, to_jsonlogic)
from ruleflow.synth import random_tree
from conftest import make_unit_dataset

SCHEMA = [AttributeSchema("age", "numeric", 17, 90),
          AttributeSchema("married", "binary", true_label="yes",
                          false_label="no")]


def two_node_tree(threshold=0.5):
    nodes = [Node.leaf(0), Node.leaf(1),
             Node.internal(0, threshold, true_child=0, false_child=1)]
    return DecisionTree(nodes, 2, ["c0", "c1"])


# -- structure ----------------------------------------------------------------

def test_single_leaf_shape():
    t = single_leaf(1, ["a", "b"])
    assert t.depth() == 0
    assert t.leaf_count() == 1
    assert t.evaluate(np.array([0.3])) == 1


def test_validate_rejects_cycles_and_bad_children():
    nodes = [Node.internal(0, 0.5, true_child=0, false_child=0)]
    with pytest.raises(TreeError):
        DecisionTree(nodes, 0, ["a", "b"])
    with pytest.raises(TreeError):
        DecisionTree([Node.leaf(5)], 0, ["a", "b"])


def test_depth_and_leaf_limits_enforced():
    deep = random_tree(2, 2, np.random.default_rng(1), max_depth=4)
    with pytest.raises(TreeError):
        DecisionTree(deep.nodes, deep.root, deep.class_names,
                     max_depth=0, max_leaves=16)


def test_evaluate_strictly_greater():
    t = two_node_tree(0.5)
    # exactly at the threshold goes to the false branch
    assert t.evaluate(np.array([0.5, 0.0])) == 1
    assert t.evaluate(np.array([0.5 + 1e-12, 0.0])) == 0


def test_with_threshold_and_lock_are_copies():
    t = two_node_tree()
    t2 = t.with_threshold(2, 0.7)
    assert t.nodes[2].threshold == 0.5
    assert t2.nodes[2].threshold == 0.7
    t3 = t.with_lock(2, "threshold_locked")
    assert t.nodes[2].lock == "none"
    assert t3.nodes[2].lock == "threshold_locked"
    with pytest.raises(TreeError):
        t.with_lock(0, "threshold_locked")  # leaves cannot be locked


def test_dict_roundtrip_preserves_locks():
    t = two_node_tree().with_lock(2, "restricted")
    back = DecisionTree.from_dict(json.loads(json.dumps(t.to_dict())))
    assert back.equal_structure(t)
    assert back.nodes[2].lock == "restricted"


# -- JSONLogic ----------------------------------------------------------------

def test_jsonlogic_canonical_bytes():
    t = two_node_tree(0.5)
    text = to_jsonlogic(t, SCHEMA)
    assert text == '{"if":[{">":["age",53.5]},"c0","c1"]}'
    assert to_jsonlogic(from_jsonlogic(text, SCHEMA, ["c0", "c1"]),
                        SCHEMA) == text


def test_jsonlogic_binary_threshold_is_half():
    nodes = [Node.leaf(0), Node.leaf(1),
             Node.internal(1, 0.5, true_child=0, false_child=1)]
    t = DecisionTree(nodes, 2, ["c0", "c1"])
    assert json.loads(to_jsonlogic(t, SCHEMA))["if"][0][">"] == ["married", 0.5]


@pytest.mark.parametrize("doc,msg", [
    ('{"if":[{"<":["age",30]},"c0","c1"]}', "unsupported operator"),
    ('{"if":[{">":["salary",30]},"c0","c1"]}', "unknown attribute"),
    ('{"if":[{">":["age",30]},"c0"]}', "exactly"),
    ('{"if":[{">":["age",30]},"c0","oops"]}', "unknown class"),
    ('{"if":[{">":["age",500]},"c0","c1"]}', "outside the range"),
    ('not json at all', "invalid JSON"),
])
def test_jsonlogic_diagnostics(doc, msg):
    with pytest.raises(TreeError, match=msg):
        from_jsonlogic(doc, SCHEMA, ["c0", "c1"])


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000))
def test_jsonlogic_roundtrip_random_trees(seed):
    rng = np.random.default_rng(seed)
    schema = [AttributeSchema("age", "numeric", 17, 90),
              AttributeSchema("edu", "numeric", 1, 16)]
    t = random_tree(2, 2, rng)
    back = from_jsonlogic(to_jsonlogic(t, schema), schema, t.class_names)
    assert back.equal_structure(t, tol=1e-5)


# -- CART ----------------------------------------------------------------

def test_cart_pure_set_single_leaf():
    rows = np.random.default_rng(0).uniform(size=(20, 2))
    ds = make_unit_dataset(rows, np.zeros(20), n_classes=2)
    t = learn_cart(ds)
    assert t.leaf_count() == 1
    assert t.evaluate(rows[0]) == 0


def test_cart_solves_xor_at_depth_two():
    rows = np.array([[0.1, 0.1], [0.1, 0.9], [0.9, 0.1], [0.9, 0.9]])
    labels = np.array([0, 1, 1, 0])
    ds = make_unit_dataset(rows, labels)
    t = learn_cart(ds, max_depth=2)
    assert (t.evaluate_batch(rows) == labels).all()


def test_cart_majority_tiebreak_lowest_index():
    rows = np.array([[0.2], [0.8]])
    ds = make_unit_dataset(rows, np.array([1, 0]), n_classes=2)
    t = learn_cart(ds, max_depth=0)
    assert t.leaf_count() == 1
    assert t.nodes[t.root].klass == 0


def test_cart_respects_depth_and_leaf_budget(rng):
    rows = rng.uniform(size=(300, 3))
    labels = ((rows[:, 0] > 0.5) ^ (rows[:, 1] > 0.5) ^
              (rows[:, 2] > 0.5)).astype(int)
    ds = make_unit_dataset(rows, labels)
    t = learn_cart(ds, max_depth=2, max_leaves=3)
    assert t.depth() <= 2
    assert t.leaf_count() <= 3


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_cart_never_below_majority_baseline(seed):
    rng = np.random.default_rng(seed)
    rows = rng.uniform(size=(60, 2))
    labels = rng.integers(0, 2, size=60)
    ds = make_unit_dataset(rows, labels, n_classes=2)
    t = learn_cart(ds, max_depth=3)
    acc = (t.evaluate_batch(rows) == labels).mean()
    majority = max(np.mean(labels == 0), np.mean(labels == 1))
    assert acc >= majority - 1e-12
