"""Drive the full HTTP gateway end to end, in process.

Ingests a CSV, opens a session (which pre-generates guideline rules and a
pretrained network), replaces the rules, runs both enhancement modes,
accepts the AI's edits, and simulates test cases — the same call sequence
the web UI makes.

Run with:  python demos/03_gateway_walkthrough.py
"""

import json
import tempfile

from fastapi.testclient import TestClient

from ruleflow.data import schema_to_doc
from ruleflow.service import create_app
from ruleflow.synth import ADULT_SCHEMA, adult_like


def render_csv(ds):
    lines = [",".join([a.name for a in ds.schema] + ["income"])]
    for row, y in zip(ds.rows, ds.labels):
        vals = []
        for a, v in zip(ds.schema, row):
            if a.kind == "binary":
                vals.append(a.true_label if v > 0.5 else a.false_label)
            else:
                vals.append(str(a.raw_min + float(v) * (a.raw_max - a.raw_min)))
        lines.append(",".join(vals + [ds.class_names[int(y)]]))
    return "\n".join(lines)


USER_RULES = {"if": [{">": ["marital-status", 0.5]},
                     {"if": [{">": ["education-level", 13]}, "high", "low"]},
                     {"if": [{">": ["investment-gain", 0]},
                             {"if": [{">": ["education-level", 13]},
                                     {"if": [{">": ["age", 30]},
                                             "high", "low"]},
                                     "low"]},
                             "low"]}]}

client = TestClient(create_app(tempfile.mkdtemp(prefix="ruleflow-demo-")))

# 1. Ingest a dataset.
ds = adult_like(1200, seed=0)
r = client.post("/datasets", json={
    "csv": render_csv(ds), "schema": schema_to_doc(ADULT_SCHEMA),
    "label_column": "income", "class_names": ["high", "low"]})
dataset_id = r.json()["id"]
print(f"dataset {dataset_id}: {r.json()['rows']} rows")

# 2. Open a session split along age < 40. The server derives guideline rules
#    and trains + distills the pretrained network before answering.
r = client.post("/sessions", json={
    "dataset": dataset_id,
    "split": {"attribute": "age", "comparator": "<", "raw_threshold": 40},
    "seed": 0})
session = r.json()["id"]
print(f"session {session}: starting rules {r.json()['rules'][:60]}...")

# 3. Replace the rules with a hand-authored tree (raw-unit thresholds).
r = client.put(f"/sessions/{session}/rules", json={"rules": USER_RULES})
metrics = r.json()["metrics"]
print("user tree accuracy:",
      json.dumps(metrics["user_tree"], indent=None))

# 4. Enhance values (thresholds only), then the full flowchart.
for mode in ("values", "flowchart"):
    r = client.post(f"/sessions/{session}/enhance",
                    json={"mode": mode, "epochs": 10,
                          "constraints": {"prediction_similarity": 50,
                                          "structure_similarity": 50}})
    body = r.json()
    kinds = [op["kind"] for op in body["script"]]
    print(f"enhance {mode}: TED {body['ted']}, "
          f"{len(kinds)} edit ops {sorted(set(kinds))}")
    prog = client.get(f"/sessions/{session}/progress").json()
    print(f"  progress: {prog['epochs_done']}/{prog['epochs_total']} epochs, "
          f"running={prog['running']}")

# 5. Accept all AI edits; the diff collapses to empty.
client.post(f"/sessions/{session}/accept", json={"scope": "all"})
print("after accept, diff ops:",
      client.get(f"/sessions/{session}/diff").json()["ops"])

# 6. Simulate 5 test cases the way the UI's simulation panel does.
r = client.post(f"/sessions/{session}/simulate", json={"n": 5, "seed": 0})
for case in r.json()["cases"]:
    print(f"  case {case['id']}: ai={case['ai_prediction']:<5} "
          f"truth={case['ground_truth']:<5} "
          f"age={case['values']['age']:.0f}")

print("history:", [(h["actor"], h["note"])
                   for h in client.get(f"/sessions/{session}/history").json()["history"]])
