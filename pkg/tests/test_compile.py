import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ruleflow import ParseConfig, equivalence_check, parse, single_leaf
from ruleflow.network import NetworkError
from ruleflow.synth import random_tree
from ruleflow.tree import DecisionTree, Node


def stub(threshold=0.5):
    nodes = [Node.leaf(0), Node.leaf(1), Node.internal(0, threshold, 0, 1)]
    return DecisionTree(nodes, 2, ["c0", "c1"])


def test_single_leaf_compiles_to_constant_net(rng):
    net = parse(single_leaf(1, ["a", "b"]), 3)
    X = rng.uniform(size=(20, 3))
    assert (net.predict(X, mode="hard") == 1).all()
    assert (net.predict(X, mode="smooth") == 1).all()


def test_stub_hard_mode_matches_tree_everywhere(rng):
    tree = stub(0.37)
    net = parse(tree, 2)
    X = rng.uniform(size=(500, 2))
    assert (net.predict(X, mode="hard") == tree.evaluate_batch(X)).all()


def test_network_depth_is_tree_depth_plus_extras():
    tree = stub()
    for extra in (0, 1, 3):
        net = parse(tree, 2, ParseConfig(extra_layers=extra))
        # depth-1 tree: indicator layer + output layer + extras
        assert len(net.layers) == tree.depth() + 1 + extra


def test_padding_widens_layers():
    tree = stub()
    narrow = parse(tree, 2, ParseConfig(pad_width_factor=1.0))
    wide = parse(tree, 2, ParseConfig(pad_width_factor=3.0))
    assert wide.layers[0].weights.shape[1] >= \
        3 * narrow.layers[0].weights.shape[1] // 2


def test_bindings_and_tau_cover_each_internal_node():
    rng = np.random.default_rng(5)
    tree = random_tree(3, 2, rng)
    net = parse(tree, 3)
    internal = set(tree.internal_nodes())
    assert {b.tree_node_id for b in net.bindings} == internal
    assert len(net.tau) == len(internal)
    got = dict(net.thresholds())
    for nid in internal:
        assert got[nid] == pytest.approx(tree.nodes[nid].threshold)


def test_attribute_outside_schema_rejected():
    tree = stub()
    with pytest.raises(NetworkError):
        parse(tree, 0)


def test_equivalence_report_fields(rng):
    tree = stub(0.5)
    net = parse(tree, 2)
    X = rng.uniform(size=(300, 2))
    rep = equivalence_check(tree, net, X)
    assert rep.n_samples == 300
    assert rep.hard_agree_fraction == 1.0
    assert rep.smooth_agree_fraction >= 0.99
    assert rep.n_margin_samples <= rep.n_samples
    assert rep.counterexamples == []


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000))
def test_random_trees_hard_exact_smooth_close(seed):
    rng = np.random.default_rng(seed)
    tree = random_tree(3, 3, rng)
    net = parse(tree, 3)
    X = rng.uniform(size=(200, 3))
    rep = equivalence_check(tree, net, X)
    assert rep.hard_agree_fraction == 1.0
    assert rep.smooth_agree_fraction >= 0.99
