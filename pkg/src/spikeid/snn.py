"""Rate-coded spiking networks converted from trained ANNs.

Conversion uses data-based weight normalization: per-layer activation
percentiles over a calibration set rescale weights so unit normalized
activation corresponds to the input rate scale, plus one global synapse
gain derived from the LIF rate transfer (leaky neurons need more drive
than non-leaky ones to reach the coding rate; the gain makes normalized
activation 1.0 fire at input_max_rate). Simulation runs current-based
LIF neurons layer by layer over the presentation, in float or
fixed-point mode, and meters synaptic events against the frame-based
MAC cost.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import ann as ann_mod
from . import kernels
from .encode import histogram_to_rates
from .errors import ConversionError, NumericError, ValidationError
from .spectra import EnergyHistogram
from .transforms import apply_input_transform, transform_has_projection


@dataclass(frozen=True)
class LIFParams:
    tau_m_ms: float = 20.0
    tau_syn_ms: float = 5.0
    v_rest: float = 0.0
    v_reset: float = 0.0
    v_thresh: float = 1.0
    refractory_ms: float = 0.0
    dt_ms: float = 1.0
    reset_mode: str = "hard"  # hard -> v_reset, soft -> subtract threshold

    def __post_init__(self):
        if self.tau_m_ms <= 0 or self.tau_syn_ms <= 0 or self.dt_ms <= 0:
            raise ValidationError("time constants and dt must be > 0")
        if not self.v_thresh > self.v_reset >= self.v_rest:
            raise ValidationError("need v_thresh > v_reset >= v_rest")
        if self.refractory_ms < 0:
            raise ValidationError("refractory must be >= 0")
        if self.dt_ms > self.tau_syn_ms / 2:
            raise ValidationError("need dt <= tau_syn/2")
        if self.reset_mode not in ("hard", "soft"):
            raise ValidationError("reset_mode must be 'hard' or 'soft'")

    @property
    def syn_decay(self):
        return float(np.exp(-self.dt_ms / self.tau_syn_ms))

    @property
    def leak_step(self):
        return self.dt_ms / self.tau_m_ms


@dataclass(frozen=True)
class ConversionConfig:
    norm_percentile: float = 99.9
    presentation_ms: float = 500.0
    input_max_rate_hz: float = 1000.0

    def __post_init__(self):
        if not 90 < self.norm_percentile <= 100:
            raise ValidationError("norm_percentile must be in (90, 100]")
        if self.presentation_ms <= 0 or self.input_max_rate_hz <= 0:
            raise ValidationError("presentation and max rate must be > 0")


@dataclass(frozen=True)
class QuantizationConfig:
    weight_bits: int = 8
    potential_bits: int = 16
    rounding: str = "nearest_even"

    def __post_init__(self):
        if not 2 <= self.weight_bits <= 16:
            raise ValidationError("weight_bits must be in [2, 16]")
        if not 8 <= self.potential_bits <= 32:
            raise ValidationError("potential_bits must be in [8, 32]")
        if self.rounding != "nearest_even":
            raise ValidationError("only nearest_even rounding is supported")


@dataclass
class SpikingLayer:
    kind: str  # conv1d | dense
    w: np.ndarray
    bias_step: np.ndarray
    in_shape: tuple
    out_shape: tuple
    stride: int = 1
    # fixed-point mode
    w_int: np.ndarray | None = None
    bias_int: np.ndarray | None = None
    weight_scale: float = 0.0
    drive_m: int = 0

    @property
    def n_units(self):
        return int(np.prod(self.out_shape))

    @property
    def n_inputs(self):
        return int(np.prod(self.in_shape))


@dataclass
class SpikingNetwork:
    layers: list
    lif: LIFParams
    input_len: int
    n_classes: int
    input_max_rate_hz: float
    norm_lambdas: list
    synapse_gain: float
    current_gain: float
    ann_macs: int
    class_names: list = field(default_factory=list)
    input_transform: dict = field(default_factory=dict)
    mode: str = "float"
    quantization: QuantizationConfig | None = None
    default_presentation_ms: float = 500.0

    def parameter_count(self):
        return sum(l.w.size + l.bias_step.size for l in self.layers)

    def fanouts(self):
        """Fan-out per spike source feeding each layer (input sources
        first); used for synaptic-event accounting."""
        outs = []
        for layer in self.layers:
            if layer.kind == "conv1d":
                c, l = layer.in_shape
                f, o = layer.out_shape
                k = layer.w.shape[2]
                s = layer.stride
                p = np.arange(l)
                a = p - k + 1
                o_min = np.where(a <= 0, 0, (a + s - 1) // s)
                o_max = np.minimum(p // s, o - 1)
                cover = np.maximum(0, o_max - o_min + 1)
                outs.append(np.tile(cover * f, c).astype(np.int64))
            else:
                outs.append(np.full(layer.n_inputs, layer.n_units, dtype=np.int64))
        return outs


def _thresh_int(q: QuantizationConfig):
    return 1 << (q.potential_bits - 4)


def convert(model: ann_mod.NetworkModel, calibration_set, cfg: ConversionConfig,
            lif: LIFParams | None = None):
    """Convert a trained ReLU ANN to a rate-coded spiking network.

    calibration_set: raw histogram counts (N, input_len). Per-layer
    activation percentiles lambda_l rescale weights by
    lambda_{l-1}/lambda_l and biases by 1/lambda_l (lambda_0 = 1: inputs
    are already scaled to [0, 1] and the rate code maps 1.0 to
    input_max_rate). The softmax head becomes a spike-count readout;
    biases become constant per-step charge injection.
    """
    lif = lif or LIFParams()
    calib = np.asarray(calibration_set, dtype=float)
    if calib.ndim != 2 or calib.shape[0] < 1:
        raise ValidationError("calibration set must be a non-empty (N, input_len) array")
    param_specs = [s for s in model.layers if s.kind != "flatten"]
    for i, spec in enumerate(param_specs):
        want = "softmax" if i == len(param_specs) - 1 else "relu"
        if spec.activation != want:
            raise ConversionError(
                f"layer {i} ({spec.kind}) has activation {spec.activation!r}; "
                f"conversion requires ReLU hidden layers and a softmax head")
    if transform_has_projection(model.input_transform):
        raise ValidationError(
            "cannot rate-code PCA-projected inputs (coordinates can be negative)")

    xn = apply_input_transform(model.input_transform, calib)
    acts = ann_mod.layer_activations(model, xn)
    lambdas = [1.0]
    for i, act in enumerate(acts):
        pos = act if i < len(acts) - 1 else np.maximum(act, 0.0)
        lam = float(np.percentile(pos, cfg.norm_percentile))
        if lam <= 0.0:
            raise ConversionError(
                f"dead layer {i} ({param_specs[i].kind}): activation percentile "
                f"{cfg.norm_percentile} is {lam}")
        lambdas.append(lam)

    r = cfg.input_max_rate_hz
    dt = lif.dt_ms
    q = 1000.0 / (lif.tau_m_ms * r)
    current_gain = 1.0 / (1.0 - np.exp(-q))
    syn_gain = current_gain * (1.0 - lif.syn_decay) * 1000.0 / (r * dt)
    bias_gain = current_gain * (1.0 - lif.syn_decay)

    shapes = model.shapes()
    in_shapes = [(1, model.input_len)]
    for spec, shp in zip(model.layers, shapes):
        in_shapes.append(shp)
    layers = []
    idx = 0
    for spec, p, out_shape, in_shape in zip(model.layers, model.params,
                                            shapes, in_shapes[:-1]):
        if spec.kind == "flatten":
            continue
        w, b = p
        w_hat = w * (lambdas[idx] / lambdas[idx + 1])
        b_hat = b / lambdas[idx + 1]
        layers.append(SpikingLayer(
            kind=spec.kind,
            w=syn_gain * w_hat,
            bias_step=bias_gain * b_hat,
            in_shape=tuple(in_shape),
            out_shape=tuple(out_shape),
            stride=spec.stride,
        ))
        idx += 1

    return SpikingNetwork(
        layers=layers, lif=lif, input_len=model.input_len,
        n_classes=model.n_classes, input_max_rate_hz=r,
        norm_lambdas=lambdas, synapse_gain=float(syn_gain),
        current_gain=float(current_gain), ann_macs=model.macs(),
        class_names=list(model.class_names),
        input_transform=dict(model.input_transform),
        default_presentation_ms=cfg.presentation_ms,
    )


@dataclass
class NetworkState:
    v: list
    isyn: list
    refrac: list

    @classmethod
    def allocate(cls, net: SpikingNetwork):
        if net.mode == "fixed":
            v = [np.zeros(l.n_units, dtype=np.int64) for l in net.layers]
            return cls(v=v, isyn=[], refrac=[])
        v = [np.full(l.n_units, net.lif.v_rest) for l in net.layers]
        isyn = [np.zeros(l.n_units) for l in net.layers]
        refrac = [np.zeros(l.n_units, dtype=np.int64) for l in net.layers]
        return cls(v=v, isyn=isyn, refrac=refrac)


def _run_layer(net, li, state, spikes_in):
    """Advance layer li over all timesteps of spikes_in (T, n_in).

    Returns (spike train (T, n_units) uint8, counts, saturation events).
    """
    layer = net.layers[li]
    lif = net.lif
    t_steps = spikes_in.shape[0]
    spikes_out = np.zeros((t_steps, layer.n_units), dtype=np.uint8)
    counts = np.zeros(layer.n_units, dtype=np.int64)
    soft = lif.reset_mode == "soft"
    if net.mode == "fixed":
        q = net.quantization
        thresh = _thresh_int(q)
        sat_hi = (1 << (q.potential_bits - 1)) - 1
        sat_lo = -(1 << (q.potential_bits - 1))
        decay_m = int(round((1.0 - lif.leak_step) * 32768.0))
        if layer.kind == "conv1d":
            c, l = layer.in_shape
            sat = kernels.conv_layer_run_fixed(
                spikes_in, layer.w_int, layer.bias_int, layer.stride, c, l,
                decay_m, layer.drive_m, thresh, sat_lo, sat_hi, soft,
                state.v[li], spikes_out, counts)
        else:
            sat = kernels.dense_layer_run_fixed(
                spikes_in, layer.w_int, layer.bias_int,
                decay_m, layer.drive_m, thresh, sat_lo, sat_hi, soft,
                state.v[li], spikes_out, counts)
        return spikes_out, counts, int(sat)
    refrac_steps = int(round(lif.refractory_ms / lif.dt_ms))
    args = (lif.syn_decay, lif.leak_step, lif.v_rest, lif.v_thresh,
            lif.v_reset, refrac_steps, soft,
            state.v[li], state.isyn[li], state.refrac[li], spikes_out, counts)
    if layer.kind == "conv1d":
        c, l = layer.in_shape
        kernels.conv_layer_run(spikes_in, layer.w, layer.bias_step,
                               layer.stride, c, l, *args)
    else:
        kernels.dense_layer_run(spikes_in, layer.w, layer.bias_step, *args)
    return spikes_out, counts, 0


def _check_finite(state, where):
    for li, arr in enumerate(state.v):
        vals = arr.astype(float)
        bad = np.nonzero(~np.isfinite(vals))[0]
        if bad.size:
            raise NumericError(
                f"non-finite membrane potential {where} (layer {li}, "
                f"neuron {int(bad[0])})")


def step(net: SpikingNetwork, state: NetworkState, input_spikes):
    """One timestep: feed input spike indicators, return the spike
    indicator vector of every layer at this step."""
    row = np.ascontiguousarray(np.asarray(input_spikes, dtype=np.uint8))[None, :]
    out = []
    for li in range(len(net.layers)):
        train, _, _ = _run_layer(net, li, state, row)
        row = train
        out.append(train[0])
    _check_finite(state, "after step")
    return out


def input_spike_train(rates_hz, t_steps, dt_ms, rng_seed):
    """Bernoulli-per-step Poisson input spikes, (T, n) uint8."""
    rates = np.asarray(rates_hz, dtype=float)
    p = rates * dt_ms / 1000.0
    if np.any(p < 0) or np.any(p > 1.0):
        raise ValidationError("input spike probability outside [0, 1]")
    rng = np.random.default_rng(rng_seed)
    return (rng.random((t_steps, rates.size)) < p).astype(np.uint8)


def simulate(net: SpikingNetwork, rates, presentation_ms, rng_seed):
    """Run one presentation of Poisson-encoded input.

    Returns output spike counts, per-layer totals and mean rates, the
    synaptic event count (spikes x fan-out, input sources included), a
    per-step population raster summary, and the output-layer raster.
    """
    rate_vec = rates.rates_hz if hasattr(rates, "rates_hz") else np.asarray(rates, dtype=float)
    if rate_vec.shape != (net.input_len,):
        raise ValidationError(
            f"rates length {rate_vec.shape} != input layer size {net.input_len}")
    dt = net.lif.dt_ms
    t_steps = int(round(presentation_ms / dt))
    if t_steps < 1:
        raise ValidationError("presentation shorter than one timestep")
    train = input_spike_train(rate_vec, t_steps, dt, rng_seed)
    state = NetworkState.allocate(net)
    fanouts = net.fanouts()
    synops = 0
    saturation = 0
    layer_counts = []
    layer_step_counts = []
    source_counts = train.sum(axis=0, dtype=np.int64)
    cur = train
    for li in range(len(net.layers)):
        synops += int(source_counts @ fanouts[li])
        spikes_out, counts, sat = _run_layer(net, li, state, cur)
        saturation += sat
        layer_counts.append(counts)
        layer_step_counts.append(spikes_out.sum(axis=1, dtype=np.int64))
        source_counts = counts
        cur = spikes_out
    out_train = cur
    out_events = [(float(t * dt), int(i))
                  for t, i in zip(*np.nonzero(out_train))]
    seconds = t_steps * dt / 1000.0
    mean_rates = [float(c.sum() / (c.size * seconds)) for c in layer_counts]
    _check_finite(state, "after run")
    return {
        "output_counts": layer_counts[-1].copy(),
        "layer_spike_counts": layer_counts,
        "layer_total_spikes": [int(c.sum()) for c in layer_counts],
        "layer_mean_rates_hz": mean_rates,
        "input_total_spikes": int(train.sum()),
        "synops": int(synops),
        "saturation_events": int(saturation),
        "raster_summary": layer_step_counts,
        "output_raster_ms": out_events,
        "presentation_ms": float(presentation_ms),
        "dt_ms": float(dt),
        "t_steps": t_steps,
        "mode": net.mode,
        "backend": kernels.BACKEND,
    }


def classify(net: SpikingNetwork, hist, presentation_ms=None, rng_seed=0):
    """Spike-count readout. Ties break to the lowest class index and are
    flagged; an all-silent output layer raises the no-decision flag but
    still reports the lowest-index argmax."""
    counts = hist.counts if isinstance(hist, EnergyHistogram) else np.asarray(hist)
    x = apply_input_transform(net.input_transform, counts)
    rates = histogram_to_rates(x, net.input_max_rate_hz)
    pres = presentation_ms if presentation_ms is not None else net.default_presentation_ms
    result = simulate(net, rates, pres, rng_seed)
    out = result["output_counts"]
    pred = int(np.argmax(out))
    top = np.sort(out)[::-1]
    tie = bool(out.size > 1 and top[0] == top[1] and top[0] > 0)
    no_decision = bool(out.sum() == 0)
    return {
        "predicted": pred,
        "class_name": net.class_names[pred] if net.class_names else str(pred),
        "output_counts": out,
        "confidence": int(top[0] - top[1]) if out.size > 1 else int(top[0]),
        "tie": tie,
        "no_decision": no_decision,
        "synops": result["synops"],
        "result": result,
    }


def evaluate(net: SpikingNetwork, x, y, presentation_ms, rng_seed=0, limit=None):
    """Accuracy and confusion of the spike-count readout over a dataset.

    Per-sample input spikes derive from (rng_seed, sample index), so
    parallel per-sample evaluation equals the serial run."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=np.int64)
    n = x.shape[0] if limit is None else min(limit, x.shape[0])
    if n == 0:
        raise ValidationError("empty evaluation set")
    k = net.n_classes
    confusion = np.zeros((k, k), dtype=np.int64)
    predictions = np.empty(n, dtype=np.int64)
    flags = {"ties": 0, "no_decision": 0}
    synops_total = 0
    for i in range(n):
        seed = np.random.SeedSequence((int(rng_seed), int(i)))
        res = classify(net, x[i], presentation_ms, seed)
        predictions[i] = res["predicted"]
        confusion[y[i], res["predicted"]] += 1
        flags["ties"] += int(res["tie"])
        flags["no_decision"] += int(res["no_decision"])
        synops_total += res["synops"]
    accuracy = float(np.trace(confusion) / confusion.sum())
    return {
        "accuracy": accuracy,
        "confusion": confusion,
        "predictions": predictions,
        "n": int(n),
        "flags": flags,
        "mean_synops": synops_total / n,
        "presentation_ms": float(presentation_ms),
        "mode": net.mode,
    }


def rate_activation_correlation(net: SpikingNetwork, model: ann_mod.NetworkModel,
                                x, presentation_ms=1000.0, rng_seed=0):
    """Per-layer Pearson correlation between ANN activations and SNN
    firing rates over a calibration batch (rate coding fidelity)."""
    x = np.asarray(x, dtype=float)
    xn = apply_input_transform(net.input_transform, x)
    acts = ann_mod.layer_activations(model, xn)
    acts = [a if i < len(acts) - 1 else np.maximum(a, 0.0) for i, a in enumerate(acts)]
    seconds = presentation_ms / 1000.0
    snn_rates = [[] for _ in net.layers]
    for i in range(x.shape[0]):
        seed = np.random.SeedSequence((int(rng_seed), 3, int(i)))
        rates = histogram_to_rates(xn[i], net.input_max_rate_hz)
        res = simulate(net, rates, presentation_ms, seed)
        for li, counts in enumerate(res["layer_spike_counts"]):
            snn_rates[li].append(counts / seconds)
    corr = []
    for li in range(len(net.layers)):
        a = np.stack([acts[li][i].ravel() for i in range(x.shape[0])]).ravel()
        r = np.stack(snn_rates[li]).ravel()
        if a.std() == 0 or r.std() == 0:
            corr.append(0.0)
        else:
            corr.append(float(np.corrcoef(a, r)[0, 1]))
    return corr


def quantize(net: SpikingNetwork, qcfg: QuantizationConfig):
    """Fixed-point variant: weights to weight_bits two's complement with
    per-layer scale max|w|/(2^{bits-1}-1), membrane in potential_bits,
    synapse collapsed to instantaneous charge injection (the exponential
    kernel's integral 1/(1-decay) is folded into the weights) and
    refractory forced to 0."""
    if net.mode != "float":
        raise ValidationError("quantize expects a float-mode network")
    qmax = (1 << (qcfg.weight_bits - 1)) - 1
    one_minus_d = 1.0 - net.lif.syn_decay
    fb = qcfg.potential_bits - 4
    h = net.lif.leak_step
    layers = []
    for layer in net.layers:
        w_inst = layer.w / one_minus_d
        bias_inst = layer.bias_step / one_minus_d
        wmax = float(np.max(np.abs(w_inst))) if w_inst.size else 0.0
        scale = wmax / qmax if wmax > 0 else 1.0
        w_int = np.clip(np.rint(w_inst / scale), -qmax, qmax).astype(np.int64)
        bias_int = np.rint(bias_inst / scale).astype(np.int64)
        drive_m = int(round(h * scale * (1 << fb) * 32768.0))
        if drive_m < 1:
            raise ConversionError(
                "potential_bits too small: drive multiplier underflows to 0")
        layers.append(replace(layer, w_int=w_int, bias_int=bias_int,
                              weight_scale=scale, drive_m=drive_m))
    lif = replace(net.lif, refractory_ms=0.0)
    return SpikingNetwork(
        layers=layers, lif=lif, input_len=net.input_len,
        n_classes=net.n_classes, input_max_rate_hz=net.input_max_rate_hz,
        norm_lambdas=list(net.norm_lambdas), synapse_gain=net.synapse_gain,
        current_gain=net.current_gain, ann_macs=net.ann_macs,
        class_names=list(net.class_names),
        input_transform=dict(net.input_transform),
        mode="fixed", quantization=qcfg,
        default_presentation_ms=net.default_presentation_ms,
    )


def linear_fit_r2(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    coeffs = np.polyfit(xs, ys, 1)
    pred = np.polyval(coeffs, xs)
    ss_res = float(np.sum((ys - pred) ** 2))
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0, coeffs


def rate_sweep(net: SpikingNetwork, counts, rates_hz, presentation_ms, rng_seed=0):
    """Synaptic ops as a function of the input rate scale; returns
    [(rate_hz, synops), ...] using one derived seed per point."""
    x = apply_input_transform(net.input_transform, np.asarray(counts))
    points = []
    for i, r in enumerate(rates_hz):
        seed = np.random.SeedSequence((int(rng_seed), 7, int(i)))
        if r == 0:
            rates = np.zeros(net.input_len)
        else:
            rates = histogram_to_rates(x, float(r)).rates_hz
        res = simulate(net, rates, presentation_ms, seed)
        points.append((float(r), int(res["synops"])))
    return points


def event_cost_report(result, ann_macs, sweep=None):
    """Frame-vs-event compute cost: the ANN MAC count is fixed per
    architecture while synaptic ops follow the event rate."""
    synops = int(result["synops"])
    report = {
        "snn_synaptic_ops": synops,
        "ann_macs": int(ann_macs),
        "snn_to_ann_ratio": synops / ann_macs if ann_macs else float("nan"),
        "presentation_ms": result.get("presentation_ms"),
        "mode": result.get("mode"),
    }
    if sweep is not None:
        r2, coeffs = linear_fit_r2([p[0] for p in sweep], [p[1] for p in sweep])
        report["ops_vs_input_rate"] = [list(p) for p in sweep]
        report["ops_vs_rate_r2"] = r2
        report["ops_vs_rate_slope"] = float(coeffs[0])
    return report


def save_network(path, net: SpikingNetwork):
    doc = {
        "schema_version": 1,
        "kind": "spiking_network",
        "mode": net.mode,
        "lif": dict(vars(net.lif)),
        "input_len": net.input_len,
        "n_classes": net.n_classes,
        "input_max_rate_hz": net.input_max_rate_hz,
        "norm_lambdas": net.norm_lambdas,
        "synapse_gain": net.synapse_gain,
        "current_gain": net.current_gain,
        "ann_macs": net.ann_macs,
        "class_names": list(net.class_names),
        "input_transform": net.input_transform,
        "default_presentation_ms": net.default_presentation_ms,
        "quantization": None if net.quantization is None else dict(vars(net.quantization)),
        "layers": [{
            "kind": l.kind,
            "stride": l.stride,
            "in_shape": list(l.in_shape),
            "out_shape": list(l.out_shape),
            "w_shape": list(l.w.shape),
            "w": l.w.ravel().tolist(),
            "bias_step": l.bias_step.tolist(),
            "w_int": None if l.w_int is None else l.w_int.ravel().tolist(),
            "bias_int": None if l.bias_int is None else l.bias_int.tolist(),
            "weight_scale": l.weight_scale,
            "drive_m": l.drive_m,
        } for l in net.layers],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_network(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("kind") != "spiking_network":
        raise ValidationError(f"{path}: not a spiking network file")
    layers = []
    for entry in doc["layers"]:
        w = np.array(entry["w"], dtype=float).reshape(entry["w_shape"])
        w_int = entry.get("w_int")
        layers.append(SpikingLayer(
            kind=entry["kind"],
            w=w,
            bias_step=np.array(entry["bias_step"], dtype=float),
            in_shape=tuple(entry["in_shape"]),
            out_shape=tuple(entry["out_shape"]),
            stride=entry["stride"],
            w_int=None if w_int is None else np.array(w_int, dtype=np.int64).reshape(entry["w_shape"]),
            bias_int=None if entry.get("bias_int") is None else np.array(entry["bias_int"], dtype=np.int64),
            weight_scale=entry.get("weight_scale", 0.0),
            drive_m=entry.get("drive_m", 0),
        ))
    qdoc = doc.get("quantization")
    return SpikingNetwork(
        layers=layers,
        lif=LIFParams(**doc["lif"]),
        input_len=doc["input_len"],
        n_classes=doc["n_classes"],
        input_max_rate_hz=doc["input_max_rate_hz"],
        norm_lambdas=doc["norm_lambdas"],
        synapse_gain=doc["synapse_gain"],
        current_gain=doc["current_gain"],
        ann_macs=doc["ann_macs"],
        class_names=doc.get("class_names", []),
        input_transform=doc.get("input_transform", {}),
        mode=doc.get("mode", "float"),
        quantization=None if qdoc is None else QuantizationConfig(**qdoc),
        default_presentation_ms=doc.get("default_presentation_ms", 500.0),
    )
