"""Extract a faithful proxy decision tree from a network's predictions."""

from __future__ import annotations

import numpy as np

from .data import Dataset
from .network import Network
from .tree import DecisionTree, learn_cart

DEPTH_SLACK = 0.005


def faithfulness(net: Network, tree: DecisionTree, inputs: np.ndarray) -> float:
    """Fraction of inputs where the tree and the network agree (smooth argmax)."""
    if len(inputs) == 0:
        raise ValueError("empty input set")
    net_labels = net.predict(inputs, mode="smooth")
    tree_labels = tree.evaluate_batch(inputs)
    return float(np.mean(net_labels == tree_labels))


def distill(net: Network, ds: Dataset, inputs: np.ndarray,
            max_depth: int = 4, max_leaves: int = 16,
            min_samples: int = 2) -> tuple[DecisionTree, float]:
    """CART fit on the network's own predicted labels (never the ground truth)."""
    if len(inputs) == 0:
        raise ValueError("empty input set")
    labels = np.asarray(net.predict(inputs, mode="smooth"), dtype=np.int64)
    tree = learn_cart(ds, max_depth=max_depth, max_leaves=max_leaves,
                      min_samples=min_samples, rows=inputs, labels=labels)
    return tree, faithfulness(net, tree, inputs)


def tune_depth(net: Network, ds: Dataset, inputs: np.ndarray,
               max_depth: int = 4, max_leaves: int = 16,
               slack: float = DEPTH_SLACK) -> DecisionTree:
    """Distill at each depth 1..max_depth and keep the shallowest tree whose
    faithfulness is within ``slack`` of the best.

    Pass ``slack=0.0`` to demand the most faithful tree available, e.g. when
    an exact reconstruction is known to exist.
    """
    candidates = []
    for d in range(1, max_depth + 1):
        tree, f = distill(net, ds, inputs, max_depth=d, max_leaves=max_leaves)
        candidates.append((d, tree, f))
    best = max(f for _, _, f in candidates)
    for d, tree, f in candidates:
        if f >= best - slack:
            return tree
    return candidates[-1][1]
