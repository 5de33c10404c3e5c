"""Author a small rule tree, compile it into a network, and distill it back.

Walks the core round trip: a hand-written decision tree is compiled into a
trainable network whose hard-mode output reproduces the tree exactly, and a
CART distillation of that network recovers an equivalent tree.

Run with:  python demos/01_rules_to_network_and_back.py
"""

import numpy as np

from ruleflow import (DecisionTree, Node, equivalence_check, faithfulness,
                      parse, tune_depth)
from ruleflow.data import AttributeSchema, Dataset

# A three-feature loan-style schema in raw units.
SCHEMA = [
    AttributeSchema("age", "numeric", raw_min=18, raw_max=90),
    AttributeSchema("income", "numeric", raw_min=0, raw_max=200_000),
    AttributeSchema("tenure", "numeric", raw_min=0, raw_max=40),
]
CLASSES = ["approve", "deny"]

# Thresholds live in normalized [0, 1] units inside the tree; 0.25 on age
# means 18 + 0.25 * (90 - 18) = 36 years.
tree = DecisionTree(
    nodes=[
        Node.internal(attribute=0, threshold=0.25, true_child=1, false_child=4),
        Node.internal(attribute=1, threshold=0.40, true_child=2, false_child=3),
        Node.leaf(0),           # age > 36 and income > 80k  -> approve
        Node.leaf(1),           # age > 36, low income       -> deny
        Node.internal(attribute=2, threshold=0.50, true_child=5, false_child=6),
        Node.leaf(0),           # young but tenure > 20      -> approve
        Node.leaf(1),
    ],
    root=0,
    class_names=CLASSES,
)

print(f"authored tree: depth {tree.depth()}, {tree.leaf_count()} leaves")

# Compile: every internal node becomes a pair of threshold neurons, paths
# become conjunction layers, leaves are OR-ed into class outputs.
net = parse(tree, n_features=len(SCHEMA))
print(f"compiled network: {len(net.layers)} layers, "
      f"widths {[layer.weights.shape[1] for layer in net.layers]}")

rng = np.random.default_rng(0)
samples = rng.uniform(0.0, 1.0, size=(5000, len(SCHEMA)))
report = equivalence_check(tree, net, samples)
print(f"hard-mode agreement:   {report.hard_agree_fraction:.4f}")
print(f"smooth-mode agreement: {report.smooth_agree_fraction:.4f} "
      f"(on {report.n_margin_samples} off-margin samples)")

# Distill the network back into a tree. Labels come from the network's own
# smooth-mode predictions, never from ground truth, so faithfulness measures
# net-vs-tree agreement. Smooth outputs blur slightly within the margin
# around each threshold, so agreement with the original tree is near — but
# not exactly — 1.0 on uniform samples.
ds = Dataset(SCHEMA, samples, net.predict(samples, mode="hard"), CLASSES)
recovered = tune_depth(net, ds, samples, max_depth=6, max_leaves=32)
agree = (recovered.evaluate_batch(samples) == tree.evaluate_batch(samples)).mean()
print(f"recovered tree: depth {recovered.depth()}, "
      f"{recovered.leaf_count()} leaves")
print(f"faithfulness to network: {faithfulness(net, recovered, samples):.4f}")
print(f"agreement with original tree: {agree:.4f} "
      f"(disagreements sit within the smoothing margin)")
