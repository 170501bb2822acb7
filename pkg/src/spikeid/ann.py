"""Small 1-D convolutional classifier for energy histograms.

Two conv layers and a dense softmax head, trained by backpropagation.
The reference geometry (input 3238, 16 filters, kernels 8 and 11 with
strides 1 and 4) yields layer unit counts 51696-12896-6; a scale factor
shrinks the filter count for fast runs. Everything is float64 numpy;
training is deterministic per seed.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericError, ValidationError

ACTIVATIONS = ("relu", "softmax", "none")


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv1d | dense | flatten
    in_channels: int = 0
    out_channels: int = 0
    kernel_size: int = 0
    stride: int = 1
    in_units: int = 0
    out_units: int = 0
    activation: str = "none"

    def __post_init__(self):
        if self.kind not in ("conv1d", "dense", "flatten"):
            raise ValidationError(f"unknown layer kind {self.kind!r}")
        if self.activation not in ACTIVATIONS:
            raise ValidationError(f"unknown activation {self.activation!r}")
        if self.kind == "conv1d" and (self.kernel_size < 1 or self.stride < 1):
            raise ValidationError("conv1d needs kernel_size >= 1 and stride >= 1")


def conv_out_len(in_len, kernel, stride):
    out = (in_len - kernel) // stride + 1
    if out < 1:
        raise ValidationError(
            f"conv geometry infeasible: in_len {in_len}, kernel {kernel}, stride {stride}")
    return out


@dataclass
class NetworkModel:
    layers: list
    params: list  # aligned with layers; (w, b) for conv/dense, None for flatten
    input_len: int
    n_classes: int
    class_names: list = field(default_factory=list)
    input_transform: dict = field(default_factory=lambda: {"scale": "per_sample_max",
                                                           "steps": []})

    def __post_init__(self):
        if self.n_classes < 2:
            raise ValidationError("n_classes must be >= 2")
        for i, spec in enumerate(self.layers):
            if spec.activation == "softmax" and i != len(self.layers) - 1:
                raise ValidationError("softmax is only allowed on the final layer")
        for p in self.params:
            if p is not None and not (np.all(np.isfinite(p[0])) and np.all(np.isfinite(p[1]))):
                raise ValidationError("parameters must be finite")
        self.shapes()  # validates adjacent compatibility

    def shapes(self):
        """Per-layer output shapes; (channels, length) or (units,)."""
        shape = (1, self.input_len)
        out = []
        for spec in self.layers:
            if spec.kind == "conv1d":
                if len(shape) != 2 or shape[0] != spec.in_channels:
                    raise ValidationError(
                        f"conv1d expects {spec.in_channels} channels, got shape {shape}")
                shape = (spec.out_channels,
                         conv_out_len(shape[1], spec.kernel_size, spec.stride))
            elif spec.kind == "flatten":
                shape = (int(np.prod(shape)),)
            else:
                n_in = shape[0] if len(shape) == 1 else int(np.prod(shape))
                if n_in != spec.in_units:
                    raise ValidationError(
                        f"dense expects {spec.in_units} inputs, got {n_in}")
                shape = (spec.out_units,)
            out.append(shape)
        if shape != (self.n_classes,):
            raise ValidationError(f"final shape {shape} != n_classes {self.n_classes}")
        return out

    def unit_counts(self):
        """Units per parameterized layer (51696-12896-6 for the
        reference geometry)."""
        return [int(np.prod(s)) for spec, s in zip(self.layers, self.shapes())
                if spec.kind != "flatten"]

    def parameter_count(self):
        return sum(p[0].size + p[1].size for p in self.params if p is not None)

    def macs(self):
        """Weight multiplies of one forward pass; fixed per architecture."""
        total = 0
        for spec, out_shape in zip(self.layers, self.shapes()):
            if spec.kind == "conv1d":
                total += out_shape[1] * spec.out_channels * spec.in_channels * spec.kernel_size
            elif spec.kind == "dense":
                total += spec.in_units * spec.out_units
        return total


def _he_init(rng, shape, fan_in):
    return rng.normal(0.0, np.sqrt(2.0 / fan_in), size=shape)


def init_params(layers, input_len, rng_seed):
    rng = np.random.default_rng(rng_seed)
    params = []
    for spec in layers:
        if spec.kind == "conv1d":
            fan_in = spec.in_channels * spec.kernel_size
            w = _he_init(rng, (spec.out_channels, spec.in_channels, spec.kernel_size), fan_in)
            b = np.zeros(spec.out_channels)
            params.append((w, b))
        elif spec.kind == "dense":
            w = _he_init(rng, (spec.out_units, spec.in_units), spec.in_units)
            b = np.zeros(spec.out_units)
            params.append((w, b))
        else:
            params.append(None)
    return params


def build_reference_architecture(input_len, n_classes, scale=1.0, rng_seed=0):
    """Conv1D(1->16f, k8 s1) ReLU -> Conv1D(16f->16f, k11 s4) ReLU ->
    Flatten -> Dense -> Softmax; filters scaled by `scale` (min 2)."""
    if input_len < 32:
        raise ValidationError("input_len must be >= 32")
    if not 0 < scale <= 1:
        raise ValidationError("scale must be in (0, 1]")
    f = max(2, int(round(16 * scale)))
    len1 = conv_out_len(input_len, 8, 1)
    len2 = conv_out_len(len1, 11, 4)
    layers = [
        LayerSpec("conv1d", in_channels=1, out_channels=f, kernel_size=8,
                  stride=1, activation="relu"),
        LayerSpec("conv1d", in_channels=f, out_channels=f, kernel_size=11,
                  stride=4, activation="relu"),
        LayerSpec("flatten"),
        LayerSpec("dense", in_units=len2 * f, out_units=n_classes,
                  activation="softmax"),
    ]
    params = init_params(layers, input_len, rng_seed)
    return NetworkModel(layers=layers, params=params, input_len=input_len,
                        n_classes=n_classes)


def normalize_input(counts):
    """Per-sample max scaling to [0, 1]; shared with the SNN rate code."""
    x = np.asarray(counts, dtype=float)
    peak = x.max(axis=-1, keepdims=True)
    return np.where(peak > 0, x / np.where(peak > 0, peak, 1.0), 0.0)


def _softmax(z):
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _conv_windows(x, kernel, stride):
    # x (B, C, L) -> (B, C, out_len, kernel)
    return np.lib.stride_tricks.sliding_window_view(x, kernel, axis=2)[:, :, ::stride, :]


def _forward_pass(model, x, keep=False):
    """Batched forward; x (B, input_len). Returns (output, cache)."""
    if x.ndim != 2 or x.shape[1] != model.input_len:
        raise ValidationError(f"input shape {x.shape} != (B, {model.input_len})")
    if not np.all(np.isfinite(x)):
        raise ValidationError("input must be finite")
    a = x[:, None, :]
    cache = []
    for spec, p in zip(model.layers, model.params):
        entry = {"spec": spec, "input": a if keep else None}
        if spec.kind == "conv1d":
            w, b = p
            win = _conv_windows(a, spec.kernel_size, spec.stride)
            z = np.einsum("fct,bcot->bfo", w, win) + b[None, :, None]
            entry["windows"] = win if keep else None
        elif spec.kind == "flatten":
            z = a.reshape(a.shape[0], -1)
        else:
            w, b = p
            z = a.reshape(a.shape[0], -1) @ w.T + b[None, :]
        if spec.activation == "relu":
            entry["z"] = z if keep else None
            a = np.maximum(z, 0.0)
        elif spec.activation == "softmax":
            entry["z"] = z if keep else None
            a = _softmax(z)
        else:
            a = z
        entry["out"] = a if keep else None
        cache.append(entry)
    return a, cache


def forward(model, x):
    """Class probability vector for a single input."""
    out, _ = _forward_pass(model, np.asarray(x, dtype=float)[None, :])
    return out[0]


def forward_batch(model, x):
    out, _ = _forward_pass(model, np.asarray(x, dtype=float))
    return out


def layer_activations(model, x):
    """Post-activation outputs of every parameterized layer over a batch
    (the dense head yields its pre-softmax linear output)."""
    _, cache = _forward_pass(model, np.asarray(x, dtype=float), keep=True)
    acts = []
    for entry in cache:
        spec = entry["spec"]
        if spec.kind == "flatten":
            continue
        acts.append(entry["z"] if spec.activation == "softmax" else entry["out"])
    return acts


def grad(model, x, y):
    """Gradients of mean cross-entropy over the batch.

    Returns (grads aligned with params, loss, probs)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ValidationError("batch is empty")
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValidationError("labels out of range")
    probs, cache = _forward_pass(model, x, keep=True)
    b = x.shape[0]
    loss = float(-np.mean(np.log(np.clip(probs[np.arange(b), y], 1e-300, None))))
    delta = probs.copy()
    delta[np.arange(b), y] -= 1.0
    delta /= b
    grads = [None] * len(model.layers)
    for i in range(len(model.layers) - 1, -1, -1):
        entry = cache[i]
        spec = entry["spec"]
        if spec.activation == "relu":
            delta = delta * (entry["z"] > 0)
        if spec.kind == "dense":
            w, _ = model.params[i]
            a_in = entry["input"]
            flat_in = a_in.reshape(a_in.shape[0], -1)
            grads[i] = (delta.T @ flat_in, delta.sum(axis=0))
            delta = (delta @ w).reshape(a_in.shape)
        elif spec.kind == "conv1d":
            w, _ = model.params[i]
            win = entry["windows"]
            dw = np.einsum("bfo,bcot->fct", delta, win)
            db = delta.sum(axis=(0, 2))
            grads[i] = (dw, db)
            a_in = entry["input"]
            dx = np.zeros_like(a_in)
            out_len = delta.shape[2]
            idx_base = spec.stride * np.arange(out_len)
            for t in range(spec.kernel_size):
                dx[:, :, idx_base + t] += np.einsum("bfo,fc->bco", delta, w[:, :, t])
            delta = dx
        else:  # flatten
            prev_shape = entry["input"].shape
            delta = delta.reshape(prev_shape)
    return grads, loss, probs


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs: int = 30
    batch_size: int = 32
    optimizer: str = "adam"  # adam | sgd | sgd_momentum
    momentum: float = 0.9
    rng_seed: int = 0

    def __post_init__(self):
        if self.learning_rate < 0 or self.epochs < 1 or self.batch_size < 1:
            raise ValidationError("hyperparameters must be positive")
        if self.optimizer not in ("adam", "sgd", "sgd_momentum"):
            raise ValidationError(f"unknown optimizer {self.optimizer!r}")


def train(model, x, y, cfg: TrainConfig):
    """Mini-batch training; deterministic per seed (fixed shuffle and
    reduction order). Returns (model, trace) where trace has one row per
    epoch with loss and accuracy."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValidationError("labels out of range")
    rng = np.random.default_rng(np.random.SeedSequence((int(cfg.rng_seed), 1)))
    params = [((p[0].copy(), p[1].copy()) if p is not None else None)
              for p in model.params]
    model = NetworkModel(layers=model.layers, params=params,
                         input_len=model.input_len, n_classes=model.n_classes,
                         class_names=list(model.class_names),
                         input_transform=dict(model.input_transform))
    adam_m = [((np.zeros_like(p[0]), np.zeros_like(p[1])) if p else None) for p in params]
    adam_v = [((np.zeros_like(p[0]), np.zeros_like(p[1])) if p else None) for p in params]
    step = 0
    trace = []
    n = x.shape[0]
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            grads, loss, probs = grad(model, x[batch], y[batch])
            if not np.isfinite(loss):
                raise NumericError(
                    f"loss became non-finite at epoch {epoch}, step {step}")
            epoch_loss += loss * len(batch)
            correct += int(np.sum(probs.argmax(axis=1) == y[batch]))
            step += 1
            for i, g in enumerate(grads):
                if g is None:
                    continue
                w, b = model.params[i]
                if cfg.optimizer == "adam":
                    for arr, garr, m, v in ((w, g[0], adam_m[i][0], adam_v[i][0]),
                                            (b, g[1], adam_m[i][1], adam_v[i][1])):
                        m *= 0.9
                        m += 0.1 * garr
                        v *= 0.999
                        v += 0.001 * garr * garr
                        mhat = m / (1.0 - 0.9 ** step)
                        vhat = v / (1.0 - 0.999 ** step)
                        arr -= cfg.learning_rate * mhat / (np.sqrt(vhat) + 1e-8)
                elif cfg.optimizer == "sgd_momentum":
                    for arr, garr, m in ((w, g[0], adam_m[i][0]), (b, g[1], adam_m[i][1])):
                        m *= cfg.momentum
                        m += garr
                        arr -= cfg.learning_rate * m
                else:
                    w -= cfg.learning_rate * g[0]
                    b -= cfg.learning_rate * g[1]
        trace.append({"epoch": epoch, "loss": epoch_loss / n, "accuracy": correct / n})
    return model, trace


def evaluate(model, x, y):
    """Accuracy, confusion matrix (rows = true class) and per-class
    precision/recall."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    if x.shape[0] == 0:
        raise ValidationError("empty evaluation set")
    if np.any(y < 0) or np.any(y >= model.n_classes):
        raise ValidationError("labels out of range")
    probs = forward_batch(model, x)
    pred = probs.argmax(axis=1)
    k = model.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (y, pred), 1)
    col = confusion.sum(axis=0)
    row = confusion.sum(axis=1)
    diag = np.diag(confusion)
    precision = np.where(col > 0, diag / np.maximum(col, 1), 0.0)
    recall = np.where(row > 0, diag / np.maximum(row, 1), 0.0)
    return {
        "accuracy": float(np.trace(confusion) / confusion.sum()),
        "confusion": confusion,
        "precision": precision,
        "recall": recall,
        "predictions": pred,
    }


def save_checkpoint(path, model: NetworkModel):
    doc = {
        "schema_version": 1,
        "kind": "ann_checkpoint",
        "input_len": model.input_len,
        "n_classes": model.n_classes,
        "class_names": list(model.class_names),
        "input_transform": model.input_transform,
        "unit_counts": model.unit_counts(),
        "layers": [dict(vars(spec)) for spec in model.layers],
        "params": [
            None if p is None else {
                "w_shape": list(p[0].shape), "w": p[0].ravel().tolist(),
                "b": p[1].tolist(),
            } for p in model.params
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_checkpoint(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "ann_checkpoint":
        raise ValidationError(f"{path}: not an ANN checkpoint")
    layers = [LayerSpec(**entry) for entry in doc["layers"]]
    params = []
    for p in doc["params"]:
        if p is None:
            params.append(None)
        else:
            w = np.array(p["w"], dtype=float).reshape(p["w_shape"])
            params.append((w, np.array(p["b"], dtype=float)))
    return NetworkModel(layers=layers, params=params,
                        input_len=doc["input_len"], n_classes=doc["n_classes"],
                        class_names=doc.get("class_names", []),
                        input_transform=doc.get("input_transform", {}))
