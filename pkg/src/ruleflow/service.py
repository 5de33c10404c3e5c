"""HTTP gateway: datasets, rule-editing sessions, enhancement, simulation.

State is kept as one JSON file per dataset/session under a data directory
(env var RULEFLOW_DATA_DIR), so a restarted server reproduces identical
metrics from disk.  Enhancement holds a per-session lock; a second request
while one is running gets 409.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from concurrent.futures import TimeoutError as FuturesTimeout
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException
from pydantic import BaseModel, Field

from .data import (TAG_GUIDELINE, TAG_PRETRAINED, TAG_TEST, TAG_TRAIN,
                   AttributeSchema, DataError, Dataset, SplitPredicate,
                   dataset_from_doc, dataset_to_doc, load_csv, merge,
                   partition, schema_from_doc)
from .distill import distill, faithfulness
from .enhance import (Constraints, EnhanceError, diff_history,
                      enhance_thresholds, enhance_topology,
                      make_guideline_tree, train_fresh_network)
from .network import Network, TrainConfig
from .ted import distance
from .tree import DecisionTree, TreeError, from_jsonlogic, to_jsonlogic

DEFAULT_DATA_DIR = "./ruleflow_data"
DEFAULT_ENHANCE_TIMEOUT = 120.0  # seconds; override with RULEFLOW_ENHANCE_TIMEOUT


# -- request bodies ----------------------------------------------------------------

class DatasetIn(BaseModel):
    csv: str
    schema_: list[dict] = Field(alias="schema")
    label_column: str
    class_names: list[str] | None = None

    model_config = {"populate_by_name": True}


class SessionIn(BaseModel):
    dataset: str
    split: dict  # {"attribute", "comparator", "raw_threshold"}
    seed: int = 0


class ConstraintsIn(BaseModel):
    prediction_similarity: int = 50
    structure_similarity: int = 50
    locked_nodes: list[int] = Field(default_factory=list)
    restricted_nodes: list[int] = Field(default_factory=list)


class EnhanceIn(BaseModel):
    mode: str  # "values" | "flowchart"
    constraints: ConstraintsIn = Field(default_factory=ConstraintsIn)
    epochs: int = 15
    learning_rate: float = 5e-3
    seed: int = 0


class AcceptIn(BaseModel):
    scope: str | list[int] = "all"


class SimulateIn(BaseModel):
    n: int | None = None
    case_ids: list[int] | None = None
    seed: int = 0


# -- persistence ----------------------------------------------------------------

class Store:
    """JSON-file persistence with an in-memory cache and per-session locks."""

    def __init__(self, data_dir: str):
        self.root = Path(data_dir)
        (self.root / "datasets").mkdir(parents=True, exist_ok=True)
        (self.root / "sessions").mkdir(parents=True, exist_ok=True)
        self._cache: dict[str, dict] = {}
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _path(self, kind: str, oid: str) -> Path:
        return self.root / kind / f"{oid}.json"

    def save(self, kind: str, oid: str, doc: dict) -> None:
        path = self._path(kind, oid)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(doc), encoding="utf-8")
        tmp.replace(path)
        self._cache[f"{kind}/{oid}"] = doc

    def load(self, kind: str, oid: str) -> dict:
        key = f"{kind}/{oid}"
        if key not in self._cache:
            path = self._path(kind, oid)
            if not path.exists():
                raise HTTPException(404, f"unknown {kind[:-1]} {oid!r}")
            self._cache[key] = json.loads(path.read_text(encoding="utf-8"))
        return self._cache[key]

    def session_lock(self, sid: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(sid, threading.Lock())


# -- metric helpers ----------------------------------------------------------------

def _split_accuracy(tree: DecisionTree, ds: Dataset, dist: str) -> dict:
    out = {}
    for split in (TAG_TRAIN, TAG_TEST):
        sub = ds.select(dist=dist, split=split)
        out[split] = float((tree.evaluate_batch(sub.rows) == sub.labels).mean()) \
            if len(sub) else None
    return out


def _session_metrics(doc: dict) -> dict:
    ds = dataset_from_doc(doc["dataset_snapshot"])
    user = DecisionTree.from_dict(doc["user_tree"])
    guideline = DecisionTree.from_dict(doc["guideline_tree"])
    ai = DecisionTree.from_dict(doc["ai_tree"])
    net = Network.from_checkpoint(doc["checkpoint"])
    train_p = ds.select(dist=TAG_PRETRAINED, split=TAG_TRAIN)
    return {
        "user_tree": {TAG_GUIDELINE: _split_accuracy(user, ds, TAG_GUIDELINE),
                      TAG_PRETRAINED: _split_accuracy(user, ds, TAG_PRETRAINED)},
        "ai_tree": {TAG_GUIDELINE: _split_accuracy(ai, ds, TAG_GUIDELINE),
                    TAG_PRETRAINED: _split_accuracy(ai, ds, TAG_PRETRAINED)},
        "faithfulness": faithfulness(net, ai, train_p.rows),
        "ted_ai_to_guideline": distance(guideline, ai).distance,
        "ted_ai_to_user": distance(user, ai).distance,
    }


def _raw_row(schema: list[AttributeSchema], row: np.ndarray) -> dict:
    out = {}
    for a, v in zip(schema, row):
        if a.kind == "binary":
            out[a.name] = a.true_label if v > 0.5 else a.false_label
        else:
            raw = a.raw_min + float(v) * (a.raw_max - a.raw_min)
            out[a.name] = round(raw, 6)
    return out


# -- app ----------------------------------------------------------------

def create_app(data_dir: str | None = None) -> FastAPI:
    store = Store(data_dir or os.environ.get("RULEFLOW_DATA_DIR",
                                             DEFAULT_DATA_DIR))
    app = FastAPI(title="ruleflow gateway")
    app.state.store = store
    progress: dict[str, dict] = {}
    app.state.progress = progress
    timeout = float(os.environ.get("RULEFLOW_ENHANCE_TIMEOUT",
                                   DEFAULT_ENHANCE_TIMEOUT))

    @app.post("/datasets", status_code=201)
    def post_dataset(body: DatasetIn):
        try:
            schema = schema_from_doc(body.schema_)
            ds = load_csv(body.csv, schema, body.label_column, body.class_names)
        except (DataError, TypeError, ValueError) as e:
            raise HTTPException(400, str(e))
        did = uuid.uuid4().hex[:12]
        store.save("datasets", did, dataset_to_doc(ds))
        return {"id": did, "rows": len(ds), "class_names": ds.class_names}

    @app.post("/sessions", status_code=201)
    def post_session(body: SessionIn):
        ds_doc = store.load("datasets", body.dataset)
        ds = dataset_from_doc(ds_doc)
        try:
            pred = SplitPredicate(body.split["attribute"],
                                  body.split["comparator"],
                                  float(body.split["raw_threshold"]))
            guideline_ds, pretrained_ds = partition(ds, pred, seed=body.seed)
        except (KeyError, DataError) as e:
            raise HTTPException(400, f"bad split predicate: {e}")
        working = merge(guideline_ds, pretrained_ds)
        gtree, _ = make_guideline_tree(guideline_ds, seed=body.seed)
        net = train_fresh_network(pretrained_ds, epochs=5, seed=body.seed)
        train_p = pretrained_ds.select(split=TAG_TRAIN)
        ai_tree, _ = distill(net, pretrained_ds, train_p.rows)
        sid = uuid.uuid4().hex[:12]
        doc = {
            "id": sid,
            "dataset": body.dataset,
            "dataset_snapshot": dataset_to_doc(working),
            "seed": body.seed,
            "guideline_tree": gtree.to_dict(),
            "user_tree": gtree.to_dict(),
            "ai_tree": ai_tree.to_dict(),
            "checkpoint": net.to_checkpoint(),
            "last_script": [],
            "history": [],
        }
        store.save("sessions", sid, doc)
        return {"id": sid,
                "rules": to_jsonlogic(gtree, working.schema),
                "metrics": _session_metrics(doc)}

    @app.get("/sessions/{sid}/rules")
    def get_rules(sid: str):
        doc = store.load("sessions", sid)
        ds = dataset_from_doc(doc["dataset_snapshot"])
        return {"rules": to_jsonlogic(DecisionTree.from_dict(doc["user_tree"]),
                                      ds.schema)}

    @app.put("/sessions/{sid}/rules")
    def put_rules(sid: str, body: dict = Body(...)):
        doc = store.load("sessions", sid)
        ds = dataset_from_doc(doc["dataset_snapshot"])
        if "rules" not in body:
            raise HTTPException(422, "body must carry a \"rules\" field")
        try:
            tree = from_jsonlogic(body["rules"], ds.schema, ds.class_names)
        except TreeError as e:
            raise HTTPException(422, str(e))
        with store.session_lock(sid):
            doc["user_tree"] = tree.to_dict()
            doc["history"].append({"timestamp": time.time(), "actor": "user",
                                   "ops": [], "note": "rules replaced"})
            store.save("sessions", sid, doc)
        return {"rules": to_jsonlogic(tree, ds.schema),
                "metrics": _session_metrics(doc)}

    @app.post("/sessions/{sid}/enhance")
    def post_enhance(sid: str, body: EnhanceIn):
        doc = store.load("sessions", sid)
        if body.mode not in ("values", "flowchart"):
            raise HTTPException(422, f"unknown mode {body.mode!r}")
        lock = store.session_lock(sid)
        if not lock.acquire(blocking=False):
            raise HTTPException(409, "an enhancement is already running")
        try:
            ds = dataset_from_doc(doc["dataset_snapshot"])
            user = DecisionTree.from_dict(doc["user_tree"])
            cons = Constraints(body.constraints.prediction_similarity,
                               body.constraints.structure_similarity,
                               set(body.constraints.locked_nodes),
                               set(body.constraints.restricted_nodes))
            cfg = TrainConfig(learning_rate=body.learning_rate,
                              epochs=body.epochs, seed=body.seed)
            pretrained = ds.select(dist=TAG_PRETRAINED)
            progress[sid] = {"running": True, "mode": body.mode,
                             "epochs_total": cfg.epochs, "epochs_done": 0,
                             "history": []}

            def note_epoch(done: int, parts: dict) -> None:
                progress[sid]["epochs_done"] = done
                progress[sid]["history"].append(parts)

            def run():
                if body.mode == "values":
                    return enhance_thresholds(user, pretrained, cfg, cons,
                                              on_epoch=note_epoch)
                return enhance_topology(user, pretrained, cfg, cons,
                                        on_epoch=note_epoch)

            pool = ThreadPoolExecutor(max_workers=1)
            try:
                res = pool.submit(run).result(timeout=timeout)
            except FuturesTimeout:
                raise HTTPException(504,
                                    f"enhancement exceeded {timeout:.0f} s")
            except (EnhanceError, TreeError) as e:
                raise HTTPException(422, str(e))
            finally:
                pool.shutdown(wait=False)
            doc["ai_tree"] = res.tree.to_dict()
            doc["checkpoint"] = res.network.to_checkpoint()
            ops = [op.to_json() for op in res.script]
            doc["last_script"] = ops
            doc["history"].append({"timestamp": time.time(), "actor": "ai",
                                   "ops": ops, "note": f"enhance {body.mode}"})
            store.save("sessions", sid, doc)
            return {"tree": to_jsonlogic(res.tree, ds.schema),
                    "script": ops,
                    "ted": res.ted.distance,
                    "warning": res.warning,
                    "loss_history": res.history,
                    "metrics": _session_metrics(doc)}
        finally:
            if sid in progress:
                progress[sid]["running"] = False
            lock.release()

    @app.post("/sessions/{sid}/accept")
    def post_accept(sid: str, body: AcceptIn):
        doc = store.load("sessions", sid)
        ds = dataset_from_doc(doc["dataset_snapshot"])
        with store.session_lock(sid):
            ai = DecisionTree.from_dict(doc["ai_tree"])
            if body.scope == "all":
                merged = ai
                taken = doc["last_script"]
            else:
                user = DecisionTree.from_dict(doc["user_tree"])
                merged, taken = _accept_some(user, doc["last_script"],
                                             body.scope)
            doc["user_tree"] = merged.to_dict()
            doc["history"].append({"timestamp": time.time(), "actor": "user",
                                   "ops": taken, "note": "accept"})
            store.save("sessions", sid, doc)
        return {"rules": to_jsonlogic(DecisionTree.from_dict(doc["user_tree"]),
                                      ds.schema),
                "metrics": _session_metrics(doc)}

    @app.post("/sessions/{sid}/simulate")
    def post_simulate(sid: str, body: SimulateIn):
        doc = store.load("sessions", sid)
        ds = dataset_from_doc(doc["dataset_snapshot"])
        test = ds.select(dist=TAG_PRETRAINED, split=TAG_TEST)
        net = Network.from_checkpoint(doc["checkpoint"])
        if body.case_ids is not None:
            ids = body.case_ids
            if any(i < 0 or i >= len(test) for i in ids):
                raise HTTPException(422, "case id out of range")
        else:
            n = body.n or 20
            if n > len(test):
                raise HTTPException(422, f"only {len(test)} test cases exist")
            rng = np.random.default_rng(body.seed)
            ids = rng.choice(len(test), size=n, replace=False).tolist()
        preds = net.predict(test.rows[ids])
        return {"cases": [
            {"id": int(i),
             "values": _raw_row(ds.schema, test.rows[i]),
             "ai_prediction": ds.class_names[int(p)],
             "ground_truth": ds.class_names[int(test.labels[i])]}
            for i, p in zip(ids, preds)]}

    @app.get("/sessions/{sid}/progress")
    def get_progress(sid: str):
        store.load("sessions", sid)  # 404 on unknown session
        return progress.get(sid, {"running": False, "epochs_done": 0,
                                  "epochs_total": 0, "history": []})

    @app.get("/sessions/{sid}/history")
    def get_history(sid: str):
        return {"history": store.load("sessions", sid)["history"]}

    @app.get("/sessions/{sid}/metrics")
    def get_metrics(sid: str):
        return _session_metrics(store.load("sessions", sid))

    @app.get("/sessions/{sid}/diff")
    def get_diff(sid: str):
        doc = store.load("sessions", sid)
        user = DecisionTree.from_dict(doc["user_tree"])
        ai = DecisionTree.from_dict(doc["ai_tree"])
        return {"ops": [op.to_json() for op in diff_history(user, ai)]}

    return app


def _accept_some(user: DecisionTree, script: list[dict],
                 indices: list[int]) -> tuple[DecisionTree, list[dict]]:
    """Apply a subset of the last AI script to the user tree.

    Only threshold updates can be merged selectively; structural ops need
    accept-all because partial inserts/removals leave an invalid tree.
    """
    taken = []
    tree = user
    for i in indices:
        if i < 0 or i >= len(script):
            raise HTTPException(422, f"op index {i} out of range")
        op = script[i]
        if op["kind"] != "update":
            raise HTTPException(
                422, "only update ops can be accepted selectively; "
                     "use scope \"all\" for structural edits")
        nid = _node_at_path(tree, op["source_path"])
        tree = tree.with_threshold(nid, _threshold_of(op["after"]))
        taken.append(op)
    return tree, taken


def _node_at_path(tree: DecisionTree, path: str) -> int:
    nid = tree.root
    for step in path:
        node = tree.nodes[nid]
        if node.is_leaf:
            raise HTTPException(422, "op path no longer matches the user tree")
        nid = node.true_child if step == "T" else node.false_child
    return nid


def _threshold_of(label: dict) -> float:
    if not isinstance(label, dict) or "threshold" not in label:
        raise HTTPException(422, "op carries no threshold to apply")
    return float(label["threshold"])
