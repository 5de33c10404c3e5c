"""Exact compilation of a decision tree into a topologically equivalent network.

Layer 1 holds a +/- steepness neuron pair per decision node (sigmoid over the
signed threshold margin).  Each deeper layer conjoins one more branch test per
surviving trace with max(0, p + q - 1) arithmetic, carries finished traces
forward through pass-through units, and the output layer sums the traces of
each class under a [0,1] clamp (the continuous-logic OR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .network import Layer, Network, NetworkError, NodeBinding
from .tree import DecisionTree


@dataclass(frozen=True)
class ParseConfig:
    steepness: float = 50.0
    pad_width_factor: float = 2.0
    extra_layers: int = 1

    def __post_init__(self):
        if self.steepness <= 0:
            raise ValueError("steepness must be positive")
        if self.pad_width_factor < 1:
            raise ValueError("pad_width_factor must be >= 1")
        if self.extra_layers < 0:
            raise ValueError("extra_layers must be >= 0")


def parse(tree: DecisionTree, n_features: int,
          cfg: ParseConfig = ParseConfig()) -> Network:
    """Compile ``tree`` into a network whose hard-mode output one-hots the
    tree's class on (almost) every input; see equivalence_check."""
    k = cfg.steepness
    n_classes = len(tree.class_names)
    depth = tree.depth()
    for nid in tree.internal_nodes():
        if not 0 <= tree.nodes[nid].attribute < n_features:
            raise NetworkError(f"attribute {tree.nodes[nid].attribute} out of schema")

    if depth == 0:
        # Constant tree: zero weights, one-hot bias at the leaf class.
        klass = tree.nodes[tree.root].klass
        layers: list[Layer] = []
        width = n_features
        for _ in range(cfg.extra_layers):
            layers.append(Layer(np.eye(width), np.zeros(width), "identity"))
        bias = np.zeros(n_classes)
        bias[klass] = 1.0
        layers.append(Layer(np.zeros((width, n_classes)), bias, "crelu"))
        return Network(layers, [], np.zeros(0), k)

    # Preorder decision-node order fixes layer-1 neuron positions.
    internals: list[int] = []

    def preo(nid: int) -> None:
        node = tree.nodes[nid]
        if node.is_leaf:
            return
        internals.append(nid)
        preo(node.true_child)
        preo(node.false_child)

    preo(tree.root)
    pair_of = {nid: p for p, nid in enumerate(internals)}

    # Symbols: ("ind", nid, branch) = layer-1 branch indicator;
    # ("conj", path) = conjunction of a branch prefix (len >= 2).
    # symbols_at[l] lists which symbols occupy layer l (1-based).
    paths = tree.enumerate_paths()
    leaf_paths: list[tuple[tuple, int]] = []  # (branch path as ((nid, dir), ...), class)

    def collect(nid: int, prefix: tuple) -> None:
        node = tree.nodes[nid]
        if node.is_leaf:
            leaf_paths.append((prefix, node.klass))
            return
        collect(node.false_child, prefix + ((nid, False),))
        collect(node.true_child, prefix + ((nid, True),))

    collect(tree.root, ())
    node_depth = {}  # 1-based depth of each internal node

    def depths(nid: int, d: int) -> None:
        node = tree.nodes[nid]
        if node.is_leaf:
            return
        node_depth[nid] = d
        depths(node.false_child, d + 1)
        depths(node.true_child, d + 1)

    depths(tree.root, 1)

    def trace_symbol(path: tuple):
        if len(path) == 1:
            nid, branch = path[0]
            return ("ind", nid, branch)
        return ("conj", path)

    all_prefixes: set[tuple] = set()
    for path, _ in leaf_paths:
        for l in range(1, len(path) + 1):
            all_prefixes.add(path[:l])

    symbols_at: list[list] = [[] for _ in range(depth + 1)]  # index 1..depth
    symbols_at[1] = [("ind", nid, br) for nid in internals for br in (True, False)]
    for layer in range(2, depth + 1):
        syms = []
        # conjunctions formed exactly at this layer
        for path in sorted(all_prefixes, key=lambda p: [pair_of[n] for n, _ in p]):
            if len(path) == layer:
                syms.append(("conj", path))
        # finished leaf traces carried forward
        for path, _ in leaf_paths:
            if len(path) < layer:
                syms.append(trace_symbol(path))
        # branch indicators still needed by deeper conjunctions
        for nid in internals:
            if node_depth[nid] > layer:
                syms.append(("ind", nid, True))
                syms.append(("ind", nid, False))
        symbols_at[layer] = syms

    pos_at = [{s: i for i, s in enumerate(symbols_at[l])}
              for l in range(len(symbols_at))]

    layers = []
    # layer 1: signed steepness weights on the tested attribute
    w1 = np.zeros((n_features, len(symbols_at[1])))
    b1 = np.zeros(len(symbols_at[1]))
    bindings = []
    tau = np.zeros(len(internals))
    for p, nid in enumerate(internals):
        node = tree.nodes[nid]
        ti = pos_at[1][("ind", nid, True)]
        fi = pos_at[1][("ind", nid, False)]
        w1[node.attribute, ti] = +k
        w1[node.attribute, fi] = -k
        b1[ti] = -k * node.threshold
        b1[fi] = +k * node.threshold
        bindings.append(NodeBinding(nid, ti, fi))
        tau[p] = node.threshold
    layers.append(Layer(w1, b1, "sigmoid"))

    for layer in range(2, depth + 1):
        prev = symbols_at[layer - 1]
        cur = symbols_at[layer]
        w = np.zeros((len(prev), len(cur)))
        b = np.zeros(len(cur))
        for j, sym in enumerate(cur):
            if sym[0] == "conj" and pos_at[layer - 1].get(sym) is None:
                path = sym[1]
                prefix = trace_symbol(path[:-1])
                nid, branch = path[-1]
                w[pos_at[layer - 1][prefix], j] = 1.0
                w[pos_at[layer - 1][("ind", nid, branch)], j] = 1.0
                b[j] = -1.0
            else:
                # pass-through: same symbol one layer earlier
                w[pos_at[layer - 1][sym], j] = 1.0
        layers.append(Layer(w, b, "relu"))

    # padding: widen hidden layers, zero weights/biases (trainable)
    if cfg.pad_width_factor > 1:
        padded = []
        prev_width = n_features
        for l in layers:
            win, wout = l.weights.shape
            new_out = math.ceil(cfg.pad_width_factor * wout)
            w = np.zeros((prev_width, new_out))
            w[:win, :wout] = l.weights
            b = np.zeros(new_out)
            b[:wout] = l.biases
            padded.append(Layer(w, b, l.activation))
            prev_width = new_out
        layers = padded

    hidden_width = layers[-1].weights.shape[1]
    for _ in range(cfg.extra_layers):
        layers.append(Layer(np.eye(hidden_width), np.zeros(hidden_width), "identity"))

    # output: per class, unit weights from its leaf-trace units, clamp to [0,1]
    wy = np.zeros((hidden_width, n_classes))
    final_pos = pos_at[depth]
    for path, klass in leaf_paths:
        wy[final_pos[trace_symbol(path)], klass] = 1.0
    layers.append(Layer(wy, np.zeros(n_classes), "crelu"))

    return Network(layers, bindings, tau, k)


@dataclass
class EquivalenceReport:
    hard_agree_fraction: float
    smooth_agree_fraction: float
    n_samples: int
    n_margin_samples: int
    counterexamples: list[np.ndarray]


def equivalence_check(tree: DecisionTree, net: Network, samples: np.ndarray,
                      margin: float = 0.05) -> EquivalenceReport:
    """Hard-mode agreement on every sample; smooth-mode argmax agreement on
    samples whose features all keep ``margin`` from every threshold."""
    truth = tree.evaluate_batch(samples)
    hard = net.predict(samples, mode="hard")
    hard_ok = hard == truth
    counterexamples = [samples[i] for i in np.flatnonzero(~hard_ok)[:10]]

    thresholds = [(tree.nodes[nid].attribute, tree.nodes[nid].threshold)
                  for nid in tree.internal_nodes()]
    if thresholds:
        good = np.ones(len(samples), dtype=bool)
        for attr, t in thresholds:
            good &= np.abs(samples[:, attr] - t) >= margin
    else:
        good = np.ones(len(samples), dtype=bool)
    if good.any():
        smooth = net.predict(samples[good], mode="smooth")
        smooth_frac = float(np.mean(smooth == truth[good]))
    else:
        smooth_frac = 1.0
    return EquivalenceReport(float(np.mean(hard_ok)), smooth_frac,
                             len(samples), int(good.sum()), counterexamples)
