"""Tabular dataset loading, normalization, distribution splits, and metrics."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import wasserstein_distance

KL_EPS = 1e-9

TAG_GUIDELINE = "guideline"
TAG_PRETRAINED = "pretrained"
TAG_TRAIN = "train"
TAG_TEST = "test"


class DataError(ValueError):
    """Raised for malformed schemas, CSV content, or degenerate selections."""


@dataclass(frozen=True)
class AttributeSchema:
    """One column: numeric with a raw range, or a binary categorical."""

    name: str
    kind: str  # "numeric" | "binary"
    raw_min: float = 0.0
    raw_max: float = 1.0
    true_label: str = ""
    false_label: str = ""

    def __post_init__(self):
        if not self.name:
            raise DataError("attribute name must be non-empty")
        if self.kind not in ("numeric", "binary"):
            raise DataError(f"unknown attribute kind {self.kind!r}")
        if self.kind == "numeric" and not self.raw_min < self.raw_max:
            raise DataError(f"{self.name}: raw_min must be < raw_max")


def check_schema(schema: list[AttributeSchema]) -> None:
    names = [a.name for a in schema]
    if len(set(names)) != len(names):
        raise DataError("duplicate attribute names in schema")


@dataclass
class Dataset:
    """Normalized rows in [0,1]^m with class labels and per-row split tags.

    Immutable by convention after construction; all derived views copy.
    """

    schema: list[AttributeSchema]
    rows: np.ndarray
    labels: np.ndarray
    class_names: list[str]
    dist_tags: np.ndarray = field(default=None)  # TAG_GUIDELINE | TAG_PRETRAINED
    split_tags: np.ndarray = field(default=None)  # TAG_TRAIN | TAG_TEST

    def __post_init__(self):
        check_schema(self.schema)
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.rows.ndim != 2 or self.rows.shape[1] != len(self.schema):
            raise DataError("row width does not match schema")
        if len(self.labels) != len(self.rows):
            raise DataError("labels and rows disagree in length")
        if len(self.class_names) < 2:
            raise DataError("need at least two classes")
        if len(self.labels) and (self.labels.min() < 0
                                 or self.labels.max() >= len(self.class_names)):
            raise DataError("label index out of range")
        if self.rows.size and (self.rows.min() < -1e-9 or self.rows.max() > 1 + 1e-9):
            raise DataError("normalized values must lie in [0,1]")
        if self.dist_tags is None:
            self.dist_tags = np.full(len(self.rows), TAG_PRETRAINED, dtype=object)
        if self.split_tags is None:
            self.split_tags = np.full(len(self.rows), TAG_TRAIN, dtype=object)

    def __len__(self) -> int:
        return len(self.rows)

    def select(self, dist: str | None = None, split: str | None = None) -> "Dataset":
        mask = np.ones(len(self.rows), dtype=bool)
        if dist is not None:
            mask &= self.dist_tags == dist
        if split is not None:
            mask &= self.split_tags == split
        return Dataset(self.schema, self.rows[mask], self.labels[mask],
                       list(self.class_names), self.dist_tags[mask],
                       self.split_tags[mask])


@dataclass(frozen=True)
class DistShiftReport:
    per_feature_wasserstein: list[float]
    mean_wasserstein: float
    label_kl: float


def normalize_value(attr: AttributeSchema, raw: str | float) -> float:
    if attr.kind == "binary":
        s = str(raw).strip()
        if s == attr.true_label:
            return 1.0
        if s == attr.false_label:
            return 0.0
        raise DataError(f"{attr.name}: unknown binary label {s!r}")
    try:
        v = float(raw)
    except (TypeError, ValueError):
        raise DataError(f"{attr.name}: non-numeric value {raw!r}") from None
    t = (v - attr.raw_min) / (attr.raw_max - attr.raw_min)
    if not 0.0 <= t <= 1.0:
        raise DataError(f"{attr.name}: value {v} outside range "
                        f"[{attr.raw_min}, {attr.raw_max}]")
    return t


def denormalize_threshold(attr: AttributeSchema, t: float) -> float:
    """Inverse of the load-time min-max scaling, for UI display in raw units."""
    if attr.kind != "numeric":
        raise DataError(f"{attr.name}: denormalize applies to numeric attributes only")
    return attr.raw_min + t * (attr.raw_max - attr.raw_min)


def load_csv(text: str, schema: list[AttributeSchema], label_column: str,
             class_names: list[str] | None = None) -> Dataset:
    """Parse UTF-8 comma-separated text with a header row.

    Numeric columns are min-max normalized by the schema's raw range; binary
    columns map their two labels to {0,1}.  A malformed cell rejects the whole
    file with the offending 1-based data row index.
    """
    check_schema(schema)
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError("empty file") from None
    header = [h.strip() for h in header]
    col_of = {h: i for i, h in enumerate(header)}
    for a in schema:
        if a.name not in col_of:
            raise DataError(f"missing column {a.name!r}")
    if label_column not in col_of:
        raise DataError(f"missing label column {label_column!r}")

    rows: list[list[float]] = []
    raw_labels: list[str] = []
    for ridx, rec in enumerate(reader, start=1):
        if not rec or all(not c.strip() for c in rec):
            continue
        try:
            rows.append([normalize_value(a, rec[col_of[a.name]]) for a in schema])
        except (DataError, IndexError) as e:
            raise DataError(f"row {ridx}: {e}") from None
        raw_labels.append(rec[col_of[label_column]].strip())
    if not rows:
        raise DataError("no data rows")

    if class_names is None:
        class_names = sorted(set(raw_labels))
    by_name = {c: i for i, c in enumerate(class_names)}
    try:
        labels = np.array([by_name[l] for l in raw_labels], dtype=np.int64)
    except KeyError as e:
        raise DataError(f"label {e.args[0]!r} not in class names") from None
    return Dataset(schema, np.array(rows), labels, list(class_names))


@dataclass(frozen=True)
class SplitPredicate:
    """Raw-unit predicate selecting the guideline half of a dataset."""

    attribute: str
    comparator: str  # ">" | ">=" | "<" | "<=" | "=="
    raw_threshold: float

    def mask(self, ds: Dataset) -> np.ndarray:
        names = [a.name for a in ds.schema]
        if self.attribute not in names:
            raise DataError(f"unknown attribute {self.attribute!r}")
        aidx = names.index(self.attribute)
        attr = ds.schema[aidx]
        if attr.kind == "numeric":
            t = (self.raw_threshold - attr.raw_min) / (attr.raw_max - attr.raw_min)
        else:
            t = self.raw_threshold
        col = ds.rows[:, aidx]
        ops = {">": col > t, ">=": col >= t, "<": col < t,
               "<=": col <= t, "==": np.isclose(col, t)}
        if self.comparator not in ops:
            raise DataError(f"unknown comparator {self.comparator!r}")
        return ops[self.comparator]


def partition(ds: Dataset, predicate: SplitPredicate, seed: int = 0,
              test_fraction: float = 0.2) -> tuple[Dataset, Dataset]:
    """Tag matching rows guideline and the rest pretrained, then split
    each half train/test with a seeded shuffle.  Returns (guideline, pretrained).
    """
    mask = predicate.mask(ds)
    if mask.all() or not mask.any():
        raise DataError("empty partition: predicate selects all or no rows")

    def tag_half(sub_mask: np.ndarray, dist: str) -> Dataset:
        idx = np.flatnonzero(sub_mask)
        rng = np.random.default_rng(seed)
        perm = rng.permutation(len(idx))
        n_test = max(1, int(round(test_fraction * len(idx)))) if len(idx) > 1 else 0
        split = np.full(len(idx), TAG_TRAIN, dtype=object)
        split[perm[:n_test]] = TAG_TEST
        return Dataset(ds.schema, ds.rows[idx], ds.labels[idx],
                       list(ds.class_names),
                       np.full(len(idx), dist, dtype=object), split)

    return tag_half(mask, TAG_GUIDELINE), tag_half(~mask, TAG_PRETRAINED)


def merge(a: Dataset, b: Dataset) -> Dataset:
    if [x.name for x in a.schema] != [x.name for x in b.schema]:
        raise DataError("schemas differ")
    return Dataset(a.schema, np.vstack([a.rows, b.rows]),
                   np.concatenate([a.labels, b.labels]), list(a.class_names),
                   np.concatenate([a.dist_tags, b.dist_tags]),
                   np.concatenate([a.split_tags, b.split_tags]))


def dist_shift(a: Dataset, b: Dataset) -> DistShiftReport:
    """Per-feature Wasserstein-1 on normalized values + label KL(P_a || P_b)."""
    if [x.name for x in a.schema] != [x.name for x in b.schema]:
        raise DataError("schemas differ")
    if len(a) == 0 or len(b) == 0:
        raise DataError("empty dataset")
    per = [float(wasserstein_distance(a.rows[:, j], b.rows[:, j]))
           for j in range(len(a.schema))]
    k = len(a.class_names)
    pa = (np.bincount(a.labels, minlength=k) + KL_EPS).astype(float)
    pb = (np.bincount(b.labels, minlength=k) + KL_EPS).astype(float)
    pa /= pa.sum()
    pb /= pb.sum()
    kl = float(np.sum(pa * np.log(pa / pb)))
    return DistShiftReport(per, float(np.mean(per)), max(kl, 0.0))


def accuracy(predict, ds: Dataset, dist: str | None = None,
             split: str | None = None) -> float:
    """Fraction of rows (optionally filtered by tags) where predict(row)==label."""
    sub = ds.select(dist=dist, split=split)
    if len(sub) == 0:
        raise DataError("empty selection")
    hits = sum(1 for row, y in zip(sub.rows, sub.labels) if predict(row) == y)
    return hits / len(sub)


def schema_to_doc(schema: list[AttributeSchema]) -> list[dict]:
    """Plain-dict schema form for JSON files and HTTP bodies."""
    return [{"name": a.name, "kind": a.kind, "raw_min": a.raw_min,
             "raw_max": a.raw_max, "true_label": a.true_label,
             "false_label": a.false_label} for a in schema]


def schema_from_doc(doc: list[dict]) -> list[AttributeSchema]:
    return [AttributeSchema(**d) for d in doc]


def dataset_to_doc(ds: Dataset) -> dict:
    """Lossless plain-dict dataset form (rows, labels and tags)."""
    return {"schema": schema_to_doc(ds.schema), "rows": ds.rows.tolist(),
            "labels": ds.labels.tolist(), "class_names": list(ds.class_names),
            "dist_tags": [str(t) for t in ds.dist_tags],
            "split_tags": [str(t) for t in ds.split_tags]}


def dataset_from_doc(doc: dict) -> Dataset:
    return Dataset(schema_from_doc(doc["schema"]), np.array(doc["rows"]),
                   np.array(doc["labels"], dtype=np.int64),
                   list(doc["class_names"]),
                   np.array(doc["dist_tags"], dtype=object),
                   np.array(doc["split_tags"], dtype=object))
