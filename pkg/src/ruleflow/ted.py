"""Weighted Zhang-Shasha tree edit distance with edit-script recovery.

Trees are ordered with the false branch before the true branch; node order is
left-to-right postorder.  Delete and relabel costs of restricted source nodes
are scaled by a multiplier so optimization is biased away from touching them.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tree import LOCK_RESTRICTED, DecisionTree, Node, TreeError

COST_TOL = 1e-9
THRESH_TOL = 1e-6


@dataclass(frozen=True)
class CostConfig:
    insert_cost: float = 1.0
    delete_cost: float = 1.0
    relabel_same_attr: float = 0.5
    relabel_diff_attr: float = 1.0
    restricted_multiplier: float = 3.0

    def __post_init__(self):
        if min(self.insert_cost, self.delete_cost, self.relabel_same_attr,
               self.relabel_diff_attr) < 0:
            raise ValueError("costs must be non-negative")
        if self.restricted_multiplier < 1:
            raise ValueError("restricted_multiplier must be >= 1")


def node_label_cost(a: Node, b: Node, cost: CostConfig) -> float:
    """Relabel cost between two node labels (ignoring children)."""
    if a.is_leaf and b.is_leaf:
        return 0.0 if a.klass == b.klass else cost.relabel_diff_attr
    if a.is_leaf != b.is_leaf:
        return cost.relabel_diff_attr
    if a.attribute != b.attribute:
        return cost.relabel_diff_attr
    if abs(a.threshold - b.threshold) <= THRESH_TOL:
        return 0.0
    return cost.relabel_same_attr


def describe_node(node: Node, class_names: list[str]) -> dict:
    if node.is_leaf:
        return {"kind": "leaf", "class": class_names[node.klass]}
    return {"kind": "internal", "attribute": node.attribute,
            "threshold": round(float(node.threshold), 9)}


@dataclass(frozen=True)
class EditOp:
    """One recovered operation; paths are F/T direction strings from the root."""

    kind: str  # "insert" | "remove" | "update" | "match"
    cost: float
    source_path: str | None = None  # path in t1 (remove/update/match)
    target_path: str | None = None  # path in t2 (insert/update/match)
    before: dict | None = None
    after: dict | None = None

    def to_json(self) -> dict:
        return {"kind": self.kind, "cost": self.cost,
                "source_path": self.source_path, "target_path": self.target_path,
                "before": self.before, "after": self.after}


@dataclass
class TedResult:
    distance: float
    script: list[EditOp]          # insert/remove/update only
    matches: list[EditOp] = field(default_factory=list)  # zero-cost pairs

    def all_ops(self) -> list[EditOp]:
        return self.script + self.matches


class _Annotated:
    """Postorder arrays required by the Zhang-Shasha DP."""

    def __init__(self, tree: DecisionTree):
        self.nodes: list[Node] = []
        self.nids: list[int] = []
        self.paths: list[str] = []
        self.lmds: list[int] = []
        self.restricted: list[bool] = []

        def walk(nid: int, path: str) -> int:
            node = tree.nodes[nid]
            if node.is_leaf:
                idx = len(self.nodes)
                self.nodes.append(node)
                self.nids.append(nid)
                self.paths.append(path)
                self.lmds.append(idx)
                self.restricted.append(False)
                return idx
            f = walk(node.false_child, path + "F")
            walk(node.true_child, path + "T")
            idx = len(self.nodes)
            self.nodes.append(node)
            self.nids.append(nid)
            self.paths.append(path)
            self.lmds.append(self.lmds[f])
            self.restricted.append(node.lock == LOCK_RESTRICTED)
            return idx

        walk(tree.root, "")
        seen: dict[int, int] = {}
        for i, l in enumerate(self.lmds):
            seen[l] = i
        self.keyroots = sorted(seen.values())


def distance(t1: DecisionTree, t2: DecisionTree,
             cost: CostConfig = CostConfig(),
             restricted: set[int] | None = None) -> TedResult:
    """Zhang-Shasha DP over keyroots with operation backtrace.

    ``restricted`` optionally overrides which t1 nodes (by arena id) carry the
    restricted multiplier; by default nodes with a "restricted" lock do.
    """
    A, B = _Annotated(t1), _Annotated(t2)
    if restricted is not None:
        A.restricted = [(nid in restricted and not node.is_leaf)
                        for nid, node in zip(A.nids, A.nodes)]
    class_names = t1.class_names
    n, m = len(A.nodes), len(B.nodes)

    def mult(i: int) -> float:
        return cost.restricted_multiplier if A.restricted[i] else 1.0

    def c_del(i: int) -> float:
        return cost.delete_cost * mult(i)

    def c_ins(j: int) -> float:
        return cost.insert_cost

    def c_rel(i: int, j: int) -> float:
        return node_label_cost(A.nodes[i], B.nodes[j], cost) * mult(i)

    def op_remove(i: int) -> EditOp:
        return EditOp("remove", c_del(i), source_path=A.paths[i],
                      before=describe_node(A.nodes[i], class_names))

    def op_insert(j: int) -> EditOp:
        return EditOp("insert", c_ins(j), target_path=B.paths[j],
                      after=describe_node(B.nodes[j], t2.class_names))

    def op_pair(i: int, j: int) -> EditOp:
        c = c_rel(i, j)
        return EditOp("update" if c > COST_TOL else "match", c,
                      source_path=A.paths[i], target_path=B.paths[j],
                      before=describe_node(A.nodes[i], class_names),
                      after=describe_node(B.nodes[j], t2.class_names))

    treedists = np.zeros((n, m))
    tree_ops: list[list[list[EditOp]]] = [[[] for _ in range(m)] for _ in range(n)]

    def treedist(i: int, j: int) -> None:
        Al, Bl = A.lmds, B.lmds
        p = i - Al[i] + 2
        q = j - Bl[j] + 2
        fd = np.zeros((p, q))
        fops: list[list[list[EditOp]]] = [[[] for _ in range(q)] for _ in range(p)]
        ioff = Al[i] - 1
        joff = Bl[j] - 1
        for x in range(1, p):
            fd[x][0] = fd[x - 1][0] + c_del(x + ioff)
            fops[x][0] = fops[x - 1][0] + [op_remove(x + ioff)]
        for y in range(1, q):
            fd[0][y] = fd[0][y - 1] + c_ins(y + joff)
            fops[0][y] = fops[0][y - 1] + [op_insert(y + joff)]
        for x in range(1, p):
            for y in range(1, q):
                xi, yj = x + ioff, y + joff
                if Al[i] == Al[xi] and Bl[j] == Bl[yj]:
                    costs = (fd[x - 1][y] + c_del(xi),
                             fd[x][y - 1] + c_ins(yj),
                             fd[x - 1][y - 1] + c_rel(xi, yj))
                    k = int(np.argmin(costs))
                    fd[x][y] = costs[k]
                    if k == 0:
                        fops[x][y] = fops[x - 1][y] + [op_remove(xi)]
                    elif k == 1:
                        fops[x][y] = fops[x][y - 1] + [op_insert(yj)]
                    else:
                        fops[x][y] = fops[x - 1][y - 1] + [op_pair(xi, yj)]
                    treedists[xi][yj] = fd[x][y]
                    tree_ops[xi][yj] = fops[x][y]
                else:
                    u = Al[xi] - 1 - ioff
                    v = Bl[yj] - 1 - joff
                    costs = (fd[x - 1][y] + c_del(xi),
                             fd[x][y - 1] + c_ins(yj),
                             fd[u][v] + treedists[xi][yj])
                    k = int(np.argmin(costs))
                    fd[x][y] = costs[k]
                    if k == 0:
                        fops[x][y] = fops[x - 1][y] + [op_remove(xi)]
                    elif k == 1:
                        fops[x][y] = fops[x][y - 1] + [op_insert(yj)]
                    else:
                        fops[x][y] = fops[u][v] + tree_ops[xi][yj]

    for i in A.keyroots:
        for j in B.keyroots:
            treedist(i, j)

    ops = tree_ops[n - 1][m - 1]
    script = [o for o in ops if o.kind != "match"]
    matches = [o for o in ops if o.kind == "match"]
    d = float(treedists[n - 1][m - 1])
    if d <= COST_TOL:
        d = 0.0
        script = []
    return TedResult(d, script, matches)


def reconstruct_target(t1: DecisionTree, result: TedResult) -> DecisionTree:
    """Rebuild t2 from t1 plus the recovered script and match set.

    Every t2 node is named exactly once across the insert/update/match entries
    via its target path; labels come from the "after" description (or, for
    matches, the untouched t1 node).
    """
    by_path: dict[str, dict] = {}
    for op in result.all_ops():
        if op.kind == "remove":
            continue
        desc = op.after if op.after is not None else op.before
        by_path[op.target_path] = desc
    if "" not in by_path:
        raise TreeError("script does not define a target root")

    nodes: list[Node] = []

    def build(path: str) -> int:
        desc = by_path[path]
        if desc["kind"] == "leaf":
            nodes.append(Node.leaf(t1.class_names.index(desc["class"])))
            return len(nodes) - 1
        fc = build(path + "F")
        tc = build(path + "T")
        nodes.append(Node.internal(desc["attribute"], desc["threshold"], tc, fc))
        return len(nodes) - 1

    root = build("")
    return DecisionTree(nodes, root, list(t1.class_names),
                        max_depth=64, max_leaves=1 << 16)
