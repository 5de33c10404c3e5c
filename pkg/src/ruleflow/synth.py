"""Seeded synthetic tabular tasks shaped like the income and cardiac benchmarks.

The environment has no dataset downloads, so study-scale experiments run on
generators that reproduce the relevant structure: a guideline subpopulation
and a pretrained subpopulation whose label rules differ, creating controlled
human-AI misalignment.
"""

from __future__ import annotations

import numpy as np

from .data import AttributeSchema, Dataset, SplitPredicate, partition

ADULT_SCHEMA = [
    AttributeSchema("age", "numeric", 17, 90),
    AttributeSchema("education-level", "numeric", 1, 16),
    AttributeSchema("marital-status", "binary", true_label="Married",
                    false_label="Single"),
    AttributeSchema("investment-gain", "numeric", 0, 10000),
    AttributeSchema("working-hours", "numeric", 1, 99),
]
ADULT_CLASSES = ["high", "low"]

HEART_SCHEMA = [
    AttributeSchema("age", "numeric", 25, 80),
    AttributeSchema("resting-bp", "numeric", 90, 200),
    AttributeSchema("cholesterol", "numeric", 100, 400),
    AttributeSchema("max-heart-rate", "numeric", 70, 210),
]
HEART_CLASSES = ["disease", "healthy"]


def adult_like(n: int = 1200, seed: int = 0, noise: float = 0.06) -> Dataset:
    """Income-style rows over 5 attributes; the high/low rule changes with age
    so an age split yields shifted distributions."""
    rng = np.random.default_rng(seed)
    # census-style integer-valued attributes
    age = np.floor(rng.uniform(17, 91, n))
    edu = np.floor(rng.uniform(1, 17, n))
    married = (rng.random(n) < 0.55).astype(float)
    gain = np.where(rng.random(n) < 0.7, 0.0,
                    np.round(rng.uniform(0, 10000, n), -2))
    hours = np.round(np.clip(rng.normal(42, 14, n), 1, 99))

    young = age < 40
    high = np.where(
        young,
        # younger half: marriage + schooling drive income
        (married > 0.5) & (edu > 12),
        # older half: investment income opens a second route
        ((married > 0.5) & (edu > 12)) | (gain > 4000),
    )
    flip = rng.random(n) < noise
    labels = np.where(high ^ flip, 0, 1)  # class 0 = "high"

    rows = np.column_stack([
        (age - 17) / (90 - 17),
        (edu - 1) / (16 - 1),
        married,
        gain / 10000,
        (hours - 1) / (99 - 1),
    ])
    return Dataset(ADULT_SCHEMA, rows, labels, list(ADULT_CLASSES))


def adult_task(n: int = 1200, seed: int = 0) -> tuple[Dataset, Dataset]:
    """(guideline, pretrained) halves of the income-style task, split by age."""
    ds = adult_like(n, seed)
    return partition(ds, SplitPredicate("age", "<", 40.0), seed=seed)


def heart_like(n: int = 460, seed: int = 0, noise: float = 0.07) -> Dataset:
    """Cardiac-style rows over 4 attributes with a blood-pressure split."""
    rng = np.random.default_rng(seed)
    age = rng.uniform(25, 80, n)
    bp = np.clip(rng.normal(135, 22, n), 90, 200)
    chol = np.clip(rng.normal(240, 55, n), 100, 400)
    hr = np.clip(rng.normal(150, 25, n), 70, 210)

    high_bp = bp >= 140
    disease = np.where(
        high_bp,
        (chol > 260) | (age > 60),
        (hr < 130) & (age > 50),
    )
    flip = rng.random(n) < noise
    labels = np.where(disease ^ flip, 0, 1)  # class 0 = "disease"

    rows = np.column_stack([
        (age - 25) / (80 - 25),
        (bp - 90) / (200 - 90),
        (chol - 100) / (400 - 100),
        (hr - 70) / (210 - 70),
    ])
    return Dataset(HEART_SCHEMA, rows, labels, list(HEART_CLASSES))


def heart_task(n: int = 460, seed: int = 0) -> tuple[Dataset, Dataset]:
    """(guideline, pretrained) halves of the cardiac-style task, split by bp."""
    ds = heart_like(n, seed)
    return partition(ds, SplitPredicate("resting-bp", "<", 140.0), seed=seed)


def leaf_region_samples(tree, n_features: int, per_leaf: int = 25,
                        margin: float = 0.05,
                        rng: np.random.Generator | None = None):
    """Sample points covering every leaf region of a tree.

    Each leaf contributes ``per_leaf`` points drawn uniformly from the box
    its path constraints carve out of [0, 1]^m, shrunk so every point keeps
    at least ``margin`` distance from all thresholds in the tree.  Returns
    None when some leaf region cannot be covered at that margin.
    """
    if rng is None:
        rng = np.random.default_rng()
    thresholds: dict[int, list[float]] = {}
    for nid in tree.internal_nodes():
        node = tree.nodes[nid]
        thresholds.setdefault(node.attribute, []).append(node.threshold)

    points = []
    for conditions, _klass in tree.enumerate_paths():
        lo = np.zeros(n_features)
        hi = np.ones(n_features)
        for attr, thr, taken in conditions:
            if taken:
                lo[attr] = max(lo[attr], thr + margin)
            else:
                hi[attr] = min(hi[attr], thr - margin)
        if np.any(lo >= hi):
            return None
        got = tries = 0
        while got < per_leaf:
            tries += 1
            if tries > 200 * per_leaf:
                return None
            x = rng.uniform(lo, hi)
            if all(abs(x[a] - t) >= margin
                   for a, ts in thresholds.items() for t in ts):
                points.append(x)
                got += 1
    return np.array(points)


def random_tree(n_features: int, n_classes: int, rng: np.random.Generator,
                max_depth: int = 4, max_leaves: int = 16):
    """Random valid decision tree, for property tests and parse corpora."""
    from .tree import DecisionTree, Node

    nodes: list[Node] = []
    leaves = [0]

    def build(depth: int) -> int:
        if depth >= max_depth or leaves[0] + 2 > max_leaves or rng.random() < 0.3:
            nodes.append(Node.leaf(int(rng.integers(n_classes))))
            return len(nodes) - 1
        leaves[0] += 1
        fc = build(depth + 1)
        tc = build(depth + 1)
        nodes.append(Node.internal(int(rng.integers(n_features)),
                                   float(rng.uniform(0.05, 0.95)), tc, fc))
        return len(nodes) - 1

    root = build(0)
    names = [f"c{i}" for i in range(n_classes)]
    return DecisionTree(nodes, root, names, max_depth, max_leaves)
