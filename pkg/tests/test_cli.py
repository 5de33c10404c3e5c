import json

import numpy as np
import pytest
from click.testing import CliRunner

from ruleflow.cli import main
from ruleflow.data import schema_to_doc
from ruleflow.synth import ADULT_SCHEMA, adult_like

from test_service import render_csv


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    ds = adult_like(1200, seed=0)
    (root / "adult.csv").write_text(render_csv(ds), encoding="utf-8")
    (root / "schema.json").write_text(json.dumps(schema_to_doc(ADULT_SCHEMA)),
                                      encoding="utf-8")
    return root


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def ingested(workspace, runner):
    out = workspace / "data.json"
    res = runner.invoke(main, ["ingest", "--csv", str(workspace / "adult.csv"),
                               "--schema", str(workspace / "schema.json"),
                               "--label-column", "income",
                               "--class-names", "high,low",
                               "--out", str(out)])
    assert res.exit_code == 0, res.output
    return out


@pytest.fixture(scope="module")
def pipeline(workspace, runner, ingested):
    """guideline -> rules + tagged data, parse -> checkpoint."""
    tagged = workspace / "tagged.json"
    res = runner.invoke(main, ["guideline", "--data", str(ingested),
                               "--split", "age<40", "--out", str(tagged)])
    assert res.exit_code == 0, res.output
    rules = workspace / "rules.json"
    rules.write_text(res.output.strip(), encoding="utf-8")
    ckpt = workspace / "net.json"
    res = runner.invoke(main, ["parse", "--rules", str(rules),
                               "--data", str(ingested), "--out", str(ckpt)])
    assert res.exit_code == 0, res.output
    return {"tagged": tagged, "rules": rules, "ckpt": ckpt}


def test_ingest_reports_shape(runner, workspace, ingested):
    doc = json.loads(ingested.read_text(encoding="utf-8"))
    assert len(doc["rows"]) == 1200
    assert doc["class_names"] == ["high", "low"]


def test_ingest_bad_csv_exits_2(runner, workspace):
    bad = workspace / "bad.csv"
    bad.write_text("age,married\n,", encoding="utf-8")
    res = runner.invoke(main, ["ingest", "--csv", str(bad),
                               "--schema", str(workspace / "schema.json"),
                               "--label-column", "income",
                               "--out", str(workspace / "nope.json")])
    assert res.exit_code == 2
    assert "error:" in res.output


def test_guideline_prints_jsonlogic(pipeline):
    text = pipeline["rules"].read_text(encoding="utf-8")
    assert json.loads(text)["if"]


def test_parse_emits_checkpoint(pipeline):
    doc = json.loads(pipeline["ckpt"].read_text(encoding="utf-8"))
    assert doc["steepness"] == 50
    assert len(doc["layers"]) >= 2


def test_distill_roundtrips_rules(runner, pipeline, ingested):
    res = runner.invoke(main, ["distill", "--checkpoint",
                               str(pipeline["ckpt"]),
                               "--data", str(ingested), "--depth", "4"])
    assert res.exit_code == 0, res.output
    assert json.loads(res.output.strip())


def test_eval_metric_block(runner, pipeline):
    res = runner.invoke(main, ["eval", "--rules", str(pipeline["rules"]),
                               "--data", str(pipeline["tagged"]),
                               "--checkpoint", str(pipeline["ckpt"]),
                               "--guideline-rules", str(pipeline["rules"])])
    assert res.exit_code == 0, res.output
    block = json.loads(res.output)
    assert block["ted_to_guideline"] == 0.0
    assert 0.0 <= block["faithfulness"] <= 1.0
    for dist in ("guideline", "pretrained"):
        for split in ("train", "test"):
            v = block["accuracy"][dist][split]
            assert v is None or 0.0 <= v <= 1.0


def test_enhance_values_stdout(runner, pipeline):
    res = runner.invoke(main, ["enhance", "--mode", "values",
                               "--rules", str(pipeline["rules"]),
                               "--data", str(pipeline["tagged"]),
                               "--epochs", "5"])
    assert res.exit_code == 0, res.output
    body = json.loads(res.output)
    assert set(body) == {"rules", "script", "ted", "metrics", "warning"}
    assert all(op["kind"] == "update" for op in body["script"])


def test_enhance_bad_rules_exits_2(runner, pipeline, workspace):
    bad = workspace / "badrules.json"
    bad.write_text('{"if":[{"<":["age",30]},"high","low"]}', encoding="utf-8")
    res = runner.invoke(main, ["enhance", "--mode", "values",
                               "--rules", str(bad),
                               "--data", str(pipeline["tagged"])])
    assert res.exit_code == 2


def test_bench_finetune_csv(runner, pipeline):
    res = runner.invoke(main, ["bench-finetune", "--data",
                               str(pipeline["tagged"]),
                               "--fractions", "0,1", "--seeds", "1",
                               "--epochs", "3"])
    assert res.exit_code == 0, res.output
    lines = res.output.strip().splitlines()
    assert lines[0].split(",")[:2] == ["seed", "fraction"]
    assert len(lines) == 3
