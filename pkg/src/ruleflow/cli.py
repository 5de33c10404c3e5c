"""Command-line front end: thin shells over the library operations.

Exit codes: 0 success, 2 validation failure.  Dataset files use the JSON
form of ``dataset_to_doc``; networks use the checkpoint format; rules are
JSONLogic text.
"""

from __future__ import annotations

import csv as csv_mod
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data import (TAG_GUIDELINE, TAG_PRETRAINED, TAG_TEST, TAG_TRAIN,
                   DataError, SplitPredicate, dataset_from_doc,
                   dataset_to_doc, load_csv, merge, partition,
                   schema_from_doc)
from .compile import ParseConfig, parse as parse_tree
from .distill import distill, faithfulness, tune_depth
from .enhance import (Constraints, EnhanceError, enhance_thresholds,
                      enhance_topology, finetune_baseline,
                      make_guideline_tree, train_fresh_network)
from .network import Network, NetworkError, TrainConfig
from .ted import distance
from .tree import DecisionTree, TreeError, from_jsonlogic, to_jsonlogic

_ERRORS = (DataError, TreeError, EnhanceError, NetworkError,
           KeyError, ValueError, OSError)


def _fail(e: Exception) -> None:
    click.echo(f"error: {e}", err=True)
    sys.exit(2)


def _read_dataset(path: str):
    return dataset_from_doc(json.loads(Path(path).read_text(encoding="utf-8")))


def _read_rules(path: str, ds):
    return from_jsonlogic(Path(path).read_text(encoding="utf-8"),
                          ds.schema, ds.class_names)


def _split_predicate(text: str) -> SplitPredicate:
    for comp in ("<=", ">=", "<", ">"):
        if comp in text:
            name, raw = text.split(comp, 1)
            return SplitPredicate(name.strip(), comp, float(raw))
    raise DataError(f"split must look like 'age<40', got {text!r}")


@click.group()
def main():
    """Editable rule explanations backed by trainable networks."""


@main.command()
@click.option("--csv", "csv_path", required=True, type=click.Path(exists=True))
@click.option("--schema", "schema_path", required=True,
              type=click.Path(exists=True))
@click.option("--label-column", required=True)
@click.option("--class-names", default=None,
              help="Comma-separated; defaults to sorted labels found.")
@click.option("--out", required=True, type=click.Path())
def ingest(csv_path, schema_path, label_column, class_names, out):
    """Normalize a CSV against a schema into a dataset JSON file."""
    try:
        schema = schema_from_doc(
            json.loads(Path(schema_path).read_text(encoding="utf-8")))
        names = class_names.split(",") if class_names else None
        ds = load_csv(Path(csv_path).read_text(encoding="utf-8"),
                      schema, label_column, names)
    except _ERRORS as e:
        _fail(e)
    Path(out).write_text(json.dumps(dataset_to_doc(ds)), encoding="utf-8")
    click.echo(json.dumps({"rows": len(ds), "class_names": ds.class_names}))


@main.command()
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--split", required=True, help="Predicate such as 'age<40'.")
@click.option("--seed", default=0, type=int)
@click.option("--out", default=None, type=click.Path(),
              help="Write the partitioned (tagged) dataset here.")
def guideline(data_path, split, seed, out):
    """Partition a dataset and print guideline rules for its guideline half."""
    try:
        ds = _read_dataset(data_path)
        g, p = partition(ds, _split_predicate(split), seed=seed)
        tree, _ = make_guideline_tree(g, seed=seed)
    except _ERRORS as e:
        _fail(e)
    if out:
        Path(out).write_text(json.dumps(dataset_to_doc(merge(g, p))),
                             encoding="utf-8")
    click.echo(to_jsonlogic(tree, ds.schema))


@main.command("parse")
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--steepness", default=50.0, type=float)
@click.option("--out", default=None, type=click.Path())
def parse_cmd(rules_path, data_path, steepness, out):
    """Compile JSONLogic rules into an equivalent network checkpoint."""
    try:
        ds = _read_dataset(data_path)
        tree = _read_rules(rules_path, ds)
        net = parse_tree(tree, len(ds.schema), ParseConfig(steepness=steepness))
    except _ERRORS as e:
        _fail(e)
    text = net.to_checkpoint()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        click.echo(text)


@main.command("distill")
@click.option("--checkpoint", "ckpt_path", required=True,
              type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--depth", default=4, type=int)
@click.option("--tune/--no-tune", default=False,
              help="Pick the smallest depth within tolerance of the best.")
def distill_cmd(ckpt_path, data_path, depth, tune):
    """Extract a faithful JSONLogic tree from a network checkpoint."""
    try:
        ds = _read_dataset(data_path)
        net = Network.from_checkpoint(Path(ckpt_path).read_text(encoding="utf-8"))
        if tune:
            tree = tune_depth(net, ds, ds.rows, max_depth=depth)
        else:
            tree, _ = distill(net, ds, ds.rows, max_depth=depth)
    except _ERRORS as e:
        _fail(e)
    click.echo(to_jsonlogic(tree, ds.schema))


@main.command("enhance")
@click.option("--mode", type=click.Choice(["values", "flowchart"]),
              required=True)
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--prediction-similarity", default=50, type=int)
@click.option("--structure-similarity", default=50, type=int)
@click.option("--lock", "locked", multiple=True, type=int,
              help="Node id whose threshold must not move (repeatable).")
@click.option("--restrict", "restricted", multiple=True, type=int,
              help="Node id whose removal/relabel is penalized (repeatable).")
@click.option("--epochs", default=15, type=int)
@click.option("--learning-rate", default=5e-3, type=float)
@click.option("--seed", default=0, type=int)
def enhance_cmd(mode, rules_path, data_path, prediction_similarity,
                structure_similarity, locked, restricted, epochs,
                learning_rate, seed):
    """Retrain the compiled rules on the dataset and print the result."""
    try:
        ds = _read_dataset(data_path)
        tree = _read_rules(rules_path, ds)
        cons = Constraints(prediction_similarity, structure_similarity,
                           set(locked), set(restricted))
        cfg = TrainConfig(learning_rate=learning_rate, epochs=epochs, seed=seed)
        fn = enhance_thresholds if mode == "values" else enhance_topology
        res = fn(tree, ds, cfg, cons)
    except _ERRORS as e:
        _fail(e)
    click.echo(json.dumps({
        "rules": json.loads(to_jsonlogic(res.tree, ds.schema)),
        "script": [op.to_json() for op in res.script],
        "ted": res.ted.distance,
        "metrics": res.metrics,
        "warning": res.warning,
    }))


@main.command("eval")
@click.option("--rules", "rules_path", required=True, type=click.Path(exists=True))
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--checkpoint", "ckpt_path", default=None,
              type=click.Path(exists=True))
@click.option("--guideline-rules", "g_path", default=None,
              type=click.Path(exists=True))
def eval_cmd(rules_path, data_path, ckpt_path, g_path):
    """Print the accuracy / faithfulness / distance metric block as JSON."""
    try:
        ds = _read_dataset(data_path)
        tree = _read_rules(rules_path, ds)
        block: dict = {"accuracy": {}}
        for dist in (TAG_GUIDELINE, TAG_PRETRAINED):
            block["accuracy"][dist] = {}
            for split in (TAG_TRAIN, TAG_TEST):
                sub = ds.select(dist=dist, split=split)
                block["accuracy"][dist][split] = (
                    float((tree.evaluate_batch(sub.rows) == sub.labels).mean())
                    if len(sub) else None)
        if ckpt_path:
            net = Network.from_checkpoint(
                Path(ckpt_path).read_text(encoding="utf-8"))
            block["faithfulness"] = faithfulness(net, tree, ds.rows)
        if g_path:
            gtree = _read_rules(g_path, ds)
            block["ted_to_guideline"] = distance(gtree, tree).distance
    except _ERRORS as e:
        _fail(e)
    click.echo(json.dumps(block))


@main.command("bench-finetune")
@click.option("--data", "data_path", required=True, type=click.Path(exists=True))
@click.option("--fractions", default="0,0.1,0.25,0.5,0.75,1.0")
@click.option("--seeds", default=5, type=int)
@click.option("--epochs", default=10, type=int)
def bench_finetune(data_path, fractions, seeds, epochs):
    """Emit the direct fine-tuning trade-off curve as CSV on stdout."""
    try:
        ds = _read_dataset(data_path)
        g = ds.select(dist=TAG_GUIDELINE)
        p = ds.select(dist=TAG_PRETRAINED)
        if len(g) == 0 or len(p) == 0:
            raise DataError("dataset carries no guideline/pretrained tags; "
                            "run the guideline command with --out first")
        fracs = [float(f) for f in fractions.split(",")]
        rows = []
        for seed in range(seeds):
            oracle, _ = make_guideline_tree(g, seed=seed)
            net = train_fresh_network(p, epochs=5, seed=seed)
            ptree, _ = distill(net, p, p.select(split=TAG_TRAIN).rows)
            pts = finetune_baseline(net, g, p, oracle, ptree, fracs,
                                    TrainConfig(epochs=epochs, seed=seed))
            rows += [(seed, pt.fraction, pt.guideline_accuracy,
                      pt.pretrained_accuracy, pt.ted_to_guideline,
                      pt.ted_to_pretrained) for pt in pts]
    except _ERRORS as e:
        _fail(e)
    buf = io.StringIO()
    w = csv_mod.writer(buf)
    w.writerow(["seed", "fraction", "guideline_accuracy",
                "pretrained_accuracy", "ted_to_guideline", "ted_to_pretrained"])
    w.writerows(rows)
    click.echo(buf.getvalue().rstrip("\n"))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", default=8000, type=int)
@click.option("--data-dir", default=None, type=click.Path())
def serve(host, port, data_dir):
    """Run the HTTP gateway."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
