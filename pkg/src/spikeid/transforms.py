"""Input transform pipeline recorded in model headers.

A transform dict is {"scale": "per_sample_max", "steps": [...]}; steps
run in order before scaling. The classifier accepts raw, smoothed or
projected inputs interchangeably; the recorded dict is what keeps ANN
evaluation and SNN rate coding on the same preprocessing.
"""

import numpy as np

from . import preprocess
from .ann import normalize_input
from .errors import ValidationError

_BASIS_CACHE = {}


def transform_has_projection(transform):
    return any(step.get("op") == "project" for step in transform.get("steps", []))


def apply_input_transform(transform, counts):
    """Apply recorded preprocessing steps plus input scaling.

    counts: (n,) or (batch, n). Returns float array.
    """
    x = np.asarray(counts, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    for step in transform.get("steps", []):
        op = step.get("op")
        if op == "smooth":
            cfg = preprocess.SmootherConfig(window_half_width=step["window_half_width"],
                                            degree=step["degree"])
            x = np.stack([preprocess.smooth(row, cfg) for row in x])
        elif op == "stabilize":
            x = preprocess.stabilize(x)
        elif op == "project":
            path = step["basis_file"]
            if path not in _BASIS_CACHE:
                _BASIS_CACHE[path] = preprocess.load_basis(path)
            basis = _BASIS_CACHE[path]
            x = np.stack([preprocess.project(row, basis) for row in x])
        else:
            raise ValidationError(f"unknown input transform step {op!r}")
    scale = transform.get("scale", "per_sample_max")
    if scale == "per_sample_max":
        x = normalize_input(x)
    elif scale not in (None, "none"):
        raise ValidationError(f"unknown input scale {scale!r}")
    return x[0] if single else x
