"""Binary decision trees: evaluation, CART learning, JSONLogic serialization.

Trees are the shared editable medium between the user and the model.  All
thresholds live in normalized [0,1] feature space internally; the JSONLogic
wire format carries raw-unit thresholds.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .data import AttributeSchema, Dataset

DEFAULT_MAX_DEPTH = 4
DEFAULT_MAX_LEAVES = 16

LOCK_NONE = "none"
LOCK_THRESHOLD = "threshold_locked"
LOCK_RESTRICTED = "restricted"


class TreeError(ValueError):
    """Raised for malformed trees or rule documents."""


@dataclass(frozen=True)
class Node:
    """Either an internal test ``x[attribute] > threshold`` or a leaf class.

    Internal nodes have ``attribute >= 0`` and both children set; leaves have
    ``klass >= 0`` and everything else unset.
    """

    attribute: int = -1
    threshold: float = 0.0
    true_child: int = -1
    false_child: int = -1
    klass: int = -1
    lock: str = LOCK_NONE

    @property
    def is_leaf(self) -> bool:
        return self.klass >= 0

    @staticmethod
    def leaf(klass: int) -> "Node":
        return Node(klass=klass)

    @staticmethod
    def internal(attribute: int, threshold: float, true_child: int,
                 false_child: int, lock: str = LOCK_NONE) -> "Node":
        return Node(attribute=attribute, threshold=threshold,
                    true_child=true_child, false_child=false_child, lock=lock)


@dataclass
class DecisionTree:
    """Arena-backed strictly binary tree over normalized features."""

    nodes: list[Node]
    root: int
    class_names: list[str]
    max_depth: int = DEFAULT_MAX_DEPTH
    max_leaves: int = DEFAULT_MAX_LEAVES

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if not self.nodes:
            raise TreeError("tree has no nodes")
        if len(self.class_names) < 2:
            raise TreeError("need at least two classes")
        seen: set[int] = set()

        def walk(nid: int, d: int) -> None:
            if nid < 0 or nid >= len(self.nodes):
                raise TreeError(f"node id {nid} out of range")
            if nid in seen:
                raise TreeError("tree contains a cycle or shared node")
            seen.add(nid)
            node = self.nodes[nid]
            if node.is_leaf:
                if node.klass >= len(self.class_names):
                    raise TreeError(f"leaf class {node.klass} out of range")
                return
            if node.true_child < 0 or node.false_child < 0:
                raise TreeError("internal node missing a child")
            if not (0.0 <= node.threshold <= 1.0):
                raise TreeError(f"threshold {node.threshold} outside [0,1]")
            walk(node.false_child, d + 1)
            walk(node.true_child, d + 1)

        walk(self.root, 0)
        if self.depth() > self.max_depth:
            raise TreeError(f"depth {self.depth()} exceeds max {self.max_depth}")
        if self.leaf_count() > self.max_leaves:
            raise TreeError(f"{self.leaf_count()} leaves exceed max {self.max_leaves}")

    # -- structural queries -------------------------------------------------

    def depth(self) -> int:
        def d(nid: int) -> int:
            node = self.nodes[nid]
            if node.is_leaf:
                return 0
            return 1 + max(d(node.true_child), d(node.false_child))
        return d(self.root)

    def leaf_count(self) -> int:
        def c(nid: int) -> int:
            node = self.nodes[nid]
            if node.is_leaf:
                return 1
            return c(node.true_child) + c(node.false_child)
        return c(self.root)

    def internal_nodes(self) -> list[int]:
        """Internal node ids in postorder (false child first)."""
        out: list[int] = []

        def walk(nid: int) -> None:
            node = self.nodes[nid]
            if node.is_leaf:
                return
            walk(node.false_child)
            walk(node.true_child)
            out.append(nid)

        walk(self.root)
        return out

    def enumerate_paths(self) -> list[tuple[list[tuple[int, float, bool]], int]]:
        """One (conditions, class) pair per leaf; false branch enumerated first.

        Each condition is (attribute, threshold, branch_taken).
        """
        paths = []

        def walk(nid: int, conds: list[tuple[int, float, bool]]) -> None:
            node = self.nodes[nid]
            if node.is_leaf:
                paths.append((list(conds), node.klass))
                return
            walk(node.false_child, conds + [(node.attribute, node.threshold, False)])
            walk(node.true_child, conds + [(node.attribute, node.threshold, True)])

        walk(self.root, [])
        return paths

    # -- evaluation ---------------------------------------------------------

    def evaluate(self, row: np.ndarray) -> int:
        nid = self.root
        while True:
            node = self.nodes[nid]
            if node.is_leaf:
                return node.klass
            nid = node.true_child if row[node.attribute] > node.threshold else node.false_child

    def evaluate_batch(self, rows: np.ndarray) -> np.ndarray:
        out = np.empty(len(rows), dtype=np.int64)
        for i, row in enumerate(rows):
            out[i] = self.evaluate(row)
        return out

    # -- editing helpers ----------------------------------------------------

    def with_threshold(self, nid: int, threshold: float) -> "DecisionTree":
        nodes = list(self.nodes)
        nodes[nid] = replace(nodes[nid], threshold=float(threshold))
        return DecisionTree(nodes, self.root, list(self.class_names),
                            self.max_depth, self.max_leaves)

    def with_lock(self, nid: int, lock: str) -> "DecisionTree":
        if self.nodes[nid].is_leaf:
            raise TreeError("cannot lock a leaf")
        nodes = list(self.nodes)
        nodes[nid] = replace(nodes[nid], lock=lock)
        return DecisionTree(nodes, self.root, list(self.class_names),
                            self.max_depth, self.max_leaves)

    def to_dict(self) -> dict:
        """Lossless plain-dict form (keeps node ids and locks)."""
        return {
            "nodes": [
                {"klass": n.klass} if n.is_leaf else
                {"attribute": n.attribute, "threshold": n.threshold,
                 "true_child": n.true_child, "false_child": n.false_child,
                 "lock": n.lock}
                for n in self.nodes
            ],
            "root": self.root,
            "class_names": list(self.class_names),
            "max_depth": self.max_depth,
            "max_leaves": self.max_leaves,
        }

    @staticmethod
    def from_dict(doc: dict) -> "DecisionTree":
        nodes = []
        for d in doc["nodes"]:
            if "klass" in d:
                nodes.append(Node.leaf(d["klass"]))
            else:
                nodes.append(Node(d["attribute"], float(d["threshold"]),
                                  d["true_child"], d["false_child"],
                                  lock=d.get("lock", LOCK_NONE)))
        return DecisionTree(nodes, doc["root"], list(doc["class_names"]),
                            doc.get("max_depth", DEFAULT_MAX_DEPTH),
                            doc.get("max_leaves", DEFAULT_MAX_LEAVES))

    def structure_key(self) -> tuple:
        """Hashable key capturing topology + attributes (thresholds excluded)."""
        def k(nid: int):
            node = self.nodes[nid]
            if node.is_leaf:
                return ("leaf", node.klass)
            return ("node", node.attribute, k(node.false_child), k(node.true_child))
        return k(self.root)

    def equal_structure(self, other: "DecisionTree", tol: float = 1e-6) -> bool:
        """Topology, attributes, classes and thresholds all equal (to tol)."""
        def eq(a: int, b: int) -> bool:
            na, nb = self.nodes[a], other.nodes[b]
            if na.is_leaf != nb.is_leaf:
                return False
            if na.is_leaf:
                return na.klass == nb.klass
            return (na.attribute == nb.attribute
                    and abs(na.threshold - nb.threshold) <= tol
                    and eq(na.false_child, nb.false_child)
                    and eq(na.true_child, nb.true_child))
        return eq(self.root, other.root)


def single_leaf(klass: int, class_names: list[str]) -> DecisionTree:
    return DecisionTree([Node.leaf(klass)], 0, list(class_names))


# -- CART learning ----------------------------------------------------------

def _entropy(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts[counts > 0] / n
    return float(-(p * np.log2(p)).sum())


def _class_counts(labels: np.ndarray, n_classes: int) -> np.ndarray:
    return np.bincount(labels, minlength=n_classes)


def best_split(rows: np.ndarray, labels: np.ndarray, n_classes: int,
               min_samples: int) -> tuple[int, float, float] | None:
    """Highest information-gain split, or None if the node is pure or has no
    usable candidate.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values of each feature.  Zero-gain splits of impure nodes are allowed
    (XOR-style targets have no single informative split yet are perfectly
    separable one level down).  Ties go to the lowest attribute then the
    lowest threshold.
    """
    n, m = rows.shape
    if n < min_samples:
        return None
    parent = _entropy(_class_counts(labels, n_classes))
    if parent == 0.0:
        return None
    best: tuple[int, float, float] | None = None
    for a in range(m):
        vals = np.unique(rows[:, a])
        if len(vals) < 2:
            continue
        for lo, hi in zip(vals[:-1], vals[1:]):
            t = float((lo + hi) / 2.0)
            mask = rows[:, a] > t
            nt = int(mask.sum())
            if nt == 0 or nt == n:
                continue
            h = (nt * _entropy(_class_counts(labels[mask], n_classes))
                 + (n - nt) * _entropy(_class_counts(labels[~mask], n_classes))) / n
            gain = parent - h
            if best is None or gain > best[2] + 1e-12:
                best = (a, t, gain)
    return best


def learn_cart(ds: Dataset, max_depth: int = DEFAULT_MAX_DEPTH,
               max_leaves: int = DEFAULT_MAX_LEAVES, min_samples: int = 2,
               rows: np.ndarray | None = None,
               labels: np.ndarray | None = None) -> DecisionTree:
    """Greedy best-first CART with information gain.

    ``rows``/``labels`` override the dataset's own arrays so the same learner
    serves distillation (network labels) and plain supervised learning.
    Leaves take the majority label, ties broken by lowest class index.
    """
    X = ds.rows if rows is None else rows
    y = ds.labels if labels is None else labels
    if len(X) == 0:
        raise TreeError("empty training data")
    n_classes = len(ds.class_names)

    nodes: list[Node] = []

    def majority(lbls: np.ndarray) -> int:
        return int(np.argmax(_class_counts(lbls, n_classes)))

    # Best-first growth: split the frontier leaf with the largest gain until
    # the leaf budget or depth cap stops us.  Heap entries are
    # (-gain, seq, node_id, depth, split, row_index_array).
    root_id = len(nodes)
    nodes.append(Node.leaf(majority(y)))
    heap: list = []
    seq = 0
    split = best_split(X, y, n_classes, min_samples)
    if split is not None and max_depth >= 1:
        heapq.heappush(heap, (-split[2], seq, root_id, 0, split, np.arange(len(X))))
    n_leaves = 1

    while heap and n_leaves < max_leaves:
        _, _, nid, depth, (attr, thr, _gain), idx = heapq.heappop(heap)
        mask = X[idx, attr] > thr
        idx_t, idx_f = idx[mask], idx[~mask]
        tc = len(nodes)
        nodes.append(Node.leaf(majority(y[idx_t])))
        fc = len(nodes)
        nodes.append(Node.leaf(majority(y[idx_f])))
        nodes[nid] = Node.internal(attr, thr, tc, fc)
        n_leaves += 1
        for child_id, child_idx in ((fc, idx_f), (tc, idx_t)):
            if depth + 1 >= max_depth:
                continue
            s = best_split(X[child_idx], y[child_idx], n_classes, min_samples)
            if s is not None:
                seq += 1
                heapq.heappush(heap, (-s[2], seq, child_id, depth + 1, s, child_idx))

    return DecisionTree(nodes, root_id, list(ds.class_names),
                        max_depth=max(max_depth, DEFAULT_MAX_DEPTH),
                        max_leaves=max(max_leaves, DEFAULT_MAX_LEAVES))


# -- JSONLogic wire format ----------------------------------------------------

def _format_raw(value: float) -> float | int:
    r = round(value, 6)
    if abs(r - round(r)) < 1e-9:
        return int(round(r))
    return r


def _raw_threshold(attr: AttributeSchema, t_norm: float):
    if attr.kind == "numeric":
        return _format_raw(attr.raw_min + t_norm * (attr.raw_max - attr.raw_min))
    return _format_raw(t_norm)


def _norm_threshold(attr: AttributeSchema, raw: float) -> float:
    if attr.kind == "numeric":
        return (float(raw) - attr.raw_min) / (attr.raw_max - attr.raw_min)
    return float(raw)


def to_jsonlogic(tree: DecisionTree, schema: list[AttributeSchema]) -> str:
    """Serialize as nested {"if":[{">":[name, raw_t]}, true, false]} text.

    Key order and separators are canonical so equal trees produce identical
    bytes.
    """
    def build(nid: int):
        node = tree.nodes[nid]
        if node.is_leaf:
            return tree.class_names[node.klass]
        attr = schema[node.attribute]
        return {"if": [{">": [attr.name, _raw_threshold(attr, node.threshold)]},
                       build(node.true_child), build(node.false_child)]}

    return json.dumps(build(tree.root), separators=(",", ":"))


def from_jsonlogic(doc: str | dict | list, schema: list[AttributeSchema],
                   class_names: list[str],
                   max_depth: int = DEFAULT_MAX_DEPTH,
                   max_leaves: int = DEFAULT_MAX_LEAVES) -> DecisionTree:
    """Parse the JSONLogic subset: "if" over ">" tests and class-name leaves."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise TreeError(f"invalid JSON: {e}") from e
    by_name = {a.name: i for i, a in enumerate(schema)}
    nodes: list[Node] = []

    def build(obj) -> int:
        if isinstance(obj, str):
            if obj not in class_names:
                raise TreeError(f"unknown class label {obj!r}")
            nodes.append(Node.leaf(class_names.index(obj)))
            return len(nodes) - 1
        if not isinstance(obj, dict) or set(obj.keys()) != {"if"}:
            raise TreeError(f"expected an \"if\" object or class label, got {obj!r}")
        args = obj["if"]
        if not isinstance(args, list) or len(args) != 3:
            raise TreeError("\"if\" must have exactly [condition, true, false]")
        cond, tbr, fbr = args
        if not isinstance(cond, dict) or len(cond) != 1:
            raise TreeError(f"malformed condition {cond!r}")
        op, operands = next(iter(cond.items()))
        if op != ">":
            raise TreeError(f"unsupported operator {op!r}")
        if not isinstance(operands, list) or len(operands) != 2:
            raise TreeError("\">\" needs [attribute, threshold]")
        name, raw = operands
        if name not in by_name:
            raise TreeError(f"unknown attribute {name!r}")
        if not isinstance(raw, (int, float)) or isinstance(raw, bool):
            raise TreeError(f"threshold must be a number, got {raw!r}")
        aidx = by_name[name]
        t = _norm_threshold(schema[aidx], float(raw))
        if not (0.0 <= t <= 1.0) or not math.isfinite(t):
            raise TreeError(f"threshold {raw} outside the range of {name!r}")
        tc = build(tbr)
        fc = build(fbr)
        nodes.append(Node.internal(aidx, t, tc, fc))
        return len(nodes) - 1

    root = build(doc)
    return DecisionTree(nodes, root, list(class_names), max_depth, max_leaves)
