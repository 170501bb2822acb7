"""Configs, reports and dataset glue for the CLI stages.

Every run report embeds the effective config, its hash and the seeds, so
any report can be regenerated from its own contents. Timings are wall
clock and are the one non-reproducible block.
"""

import csv
import hashlib
import json
import time

import numpy as np

from . import spectra
from .errors import ValidationError
from .transforms import apply_input_transform


def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def config_hash(config):
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def make_report(stage, config, metrics, timings):
    return {
        "schema_version": 1,
        "kind": "run_report",
        "stage": stage,
        "config": config,
        "config_hash": config_hash(config),
        "metrics": metrics,
        "timings": timings,
    }


def write_json(path, doc):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


class StageTimer:
    """Accumulates named wall-clock segments."""

    def __init__(self):
        self.timings = {}
        self._t0 = time.perf_counter()

    def mark(self, name):
        now = time.perf_counter()
        self.timings[name] = round(now - self._t0, 6)
        self._t0 = now


def to_jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj


def load_xy(path, transform=None, class_names=None):
    """Dataset CSV -> (raw counts, transformed inputs, labels, class names).

    class_names, when given (e.g. from a checkpoint), pins the label
    index mapping; unseen labels are a validation error.
    """
    hists = spectra.read_dataset_csv(path)
    raw = np.stack([h.counts for h in hists]).astype(float)
    labels = [h.label for h in hists]
    if class_names is None:
        class_names = sorted(set(labels))
    index = {name: i for i, name in enumerate(class_names)}
    missing = sorted(set(labels) - set(index))
    if missing:
        raise ValidationError(f"{path}: labels {missing} not in class set {class_names}")
    y = np.array([index[l] for l in labels], dtype=np.int64)
    x = apply_input_transform(transform, raw) if transform is not None else None
    return raw, x, y, list(class_names)


def write_metrics_csv(path, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss", "accuracy"])
        for row in trace:
            writer.writerow([row["epoch"], repr(row["loss"]), repr(row["accuracy"])])


def write_curve_csv(path, header, rows):
    """Generic plottable curve output (x, y pairs or wider)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
