import numpy as np
import pytest

from spikeid import ann, snn
from spikeid.ann import LayerSpec, NetworkModel
from spikeid.encode import histogram_to_rates
from spikeid.errors import ConversionError, ValidationError
from spikeid.kernels import numba_impl, numpy_impl
from spikeid.snn import (ConversionConfig, LIFParams, NetworkState,
                         QuantizationConfig, SpikingLayer, SpikingNetwork)
from spikeid.transforms import apply_input_transform


def _single_neuron_net(bias_current, lif):
    """One dense LIF neuron driven only by a constant bias; the per-step
    charge is chosen so the steady synaptic current equals bias_current."""
    bias_step = bias_current * (1.0 - lif.syn_decay)
    layer = SpikingLayer(kind="dense", w=np.zeros((1, 1)),
                         bias_step=np.array([bias_step]),
                         in_shape=(1,), out_shape=(1,))
    return SpikingNetwork(layers=[layer], lif=lif, input_len=1, n_classes=1,
                          input_max_rate_hz=1000.0, norm_lambdas=[1.0, 1.0],
                          synapse_gain=1.0, current_gain=1.0, ann_macs=1)


def _run_silent(net, duration_ms):
    t_steps = int(round(duration_ms / net.lif.dt_ms))
    train = np.zeros((t_steps, 1), dtype=np.uint8)
    state = NetworkState.allocate(net)
    spikes, counts, _ = snn._run_layer(net, 0, state, train)
    return spikes, counts, state


def _dense_model(w_list, b_list, activations, input_len, n_classes):
    layers = []
    params = []
    for i, (w, b) in enumerate(zip(w_list, b_list)):
        w = np.asarray(w, dtype=float)
        layers.append(LayerSpec("dense", in_units=w.shape[1], out_units=w.shape[0],
                                activation=activations[i]))
        params.append((w, np.asarray(b, dtype=float)))
    return NetworkModel(layers=layers, params=params, input_len=input_len,
                        n_classes=n_classes)


# ---------------------------------------------------------------- conversion

def test_identity_network_unit_normalization():
    model = _dense_model([np.eye(2)], [np.zeros(2)], ["softmax"], 2, 2)
    calib = np.array([[1.0, 1.0], [1.0, 0.5], [0.5, 1.0]])
    net = snn.convert(model, calib, ConversionConfig())
    assert net.norm_lambdas == [1.0, 1.0]
    # lambda ratios are 1: weights differ from the ANN only by the
    # documented synapse gain
    assert np.allclose(net.layers[0].w, net.synapse_gain * np.eye(2))
    assert np.allclose(net.layers[0].bias_step, 0.0)


def test_conversion_preserves_parameter_count(small_setup):
    model, net = small_setup["model"], small_setup["net"]
    assert net.parameter_count() == model.parameter_count()
    assert [l.kind for l in net.layers] == ["conv1d", "conv1d", "dense"]
    assert len(net.norm_lambdas) == len(net.layers) + 1


def test_calibration_scale_invariance():
    # zero-bias ReLU stacks are positively homogeneous: scaling the
    # calibration inputs by c rescales every lambda by c, so the
    # telescoping lambda ratios leave all layers beyond the first
    # unchanged and fold the whole rescaling into the input layer --
    # predicted output rates are unchanged up to the input-rate rescale
    rng = np.random.default_rng(0)
    w1 = rng.normal(size=(5, 4))
    w2 = rng.normal(size=(3, 5))
    model = _dense_model([w1, w2], [np.zeros(5), np.zeros(3)],
                         ["relu", "softmax"], 4, 3)
    model.input_transform = {"scale": "none", "steps": []}
    calib = np.abs(rng.normal(size=(20, 4)))
    c = 3.0
    net_a = snn.convert(model, calib, ConversionConfig())
    net_b = snn.convert(model, c * calib, ConversionConfig())
    assert np.allclose(np.array(net_b.norm_lambdas[1:]),
                       c * np.array(net_a.norm_lambdas[1:]), rtol=1e-12)
    assert np.allclose(net_b.layers[0].w, net_a.layers[0].w / c, rtol=1e-12)
    for la, lb in zip(net_a.layers[1:], net_b.layers[1:]):
        assert np.allclose(la.w, lb.w, rtol=1e-12)
    # path gain times input rate scale is invariant: (w1/c) applied to
    # c-times-larger input activations restores the original drive
    drive_a = net_a.layers[0].w @ calib[0]
    drive_b = net_b.layers[0].w @ (c * calib[0])
    assert np.allclose(drive_a, drive_b, rtol=1e-12)


def test_dead_layer_raises():
    w1 = -np.abs(np.random.default_rng(1).normal(size=(4, 3)))  # ReLU kills all
    w2 = np.random.default_rng(2).normal(size=(2, 4))
    model = _dense_model([w1, w2], [np.zeros(4), np.zeros(2)],
                         ["relu", "softmax"], 3, 2)
    calib = np.abs(np.random.default_rng(3).normal(size=(10, 3)))
    with pytest.raises(ConversionError, match="dead layer 0"):
        snn.convert(model, calib, ConversionConfig())


def test_non_relu_hidden_rejected():
    model = _dense_model([np.eye(3), np.eye(3)], [np.zeros(3), np.zeros(3)],
                         ["none", "softmax"], 3, 3)
    with pytest.raises(ConversionError):
        snn.convert(model, np.ones((4, 3)), ConversionConfig())


def test_lif_params_validation():
    with pytest.raises(ValidationError):
        LIFParams(dt_ms=5.0, tau_syn_ms=5.0)  # dt > tau_syn/2
    with pytest.raises(ValidationError):
        LIFParams(v_thresh=0.0)
    with pytest.raises(ValidationError):
        LIFParams(reset_mode="both")


# ------------------------------------------------------------- LIF dynamics

def test_zero_input_stays_at_rest():
    net = _single_neuron_net(0.0, LIFParams())
    spikes, counts, state = _run_silent(net, 200.0)
    assert counts[0] == 0
    assert state.v[0][0] == 0.0
    assert state.isyn[0][0] == 0.0


def test_subthreshold_drive_converges_to_fixed_point():
    lif = LIFParams()
    drive = 0.6  # below threshold 1.0
    net = _single_neuron_net(drive, lif)
    spikes, counts, state = _run_silent(net, 2000.0)
    assert counts[0] == 0
    # fixed point of v <- v + h*(v_rest - v) + h*i_syn is v = i_syn
    assert abs(state.v[0][0] - drive) < 1e-6
    assert abs(state.isyn[0][0] - drive) < 1e-9


@pytest.mark.parametrize("dt,tol", [(0.1, 0.02), (1.0, 0.10)])
def test_constant_drive_isi_matches_closed_form(dt, tol):
    for current in (1.5, 2.5, 4.0):
        lif = LIFParams(dt_ms=dt)
        net = _single_neuron_net(current, lif)
        spikes, _, _ = _run_silent(net, 2000.0)
        times = np.nonzero(spikes[:, 0])[0] * dt
        times = times[times > 500.0]  # past the synaptic transient
        isi = np.diff(times)
        assert isi.size > 10
        closed_form = lif.tau_m_ms * np.log(current / (current - 1.0))
        rel = abs(isi.mean() - closed_form) / closed_form
        assert rel < tol, (dt, current, isi.mean(), closed_form)


def test_refractory_caps_rate():
    lif = LIFParams(refractory_ms=4.0)
    net = _single_neuron_net(50.0, lif)  # hard drive
    spikes, counts, _ = _run_silent(net, 1000.0)
    times = np.nonzero(spikes[:, 0])[0]
    assert np.all(np.diff(times) >= 5)  # 4 blocked steps + 1


def test_soft_reset_fires_faster():
    counts = {}
    for mode in ("hard", "soft"):
        lif = LIFParams(reset_mode=mode)
        net = _single_neuron_net(3.0, lif)
        _, c, _ = _run_silent(net, 1000.0)
        counts[mode] = c[0]
    assert counts["soft"] >= counts["hard"]


def test_step_api_matches_full_run(small_setup):
    net = small_setup["net"]
    x = apply_input_transform(net.input_transform, small_setup["xte_raw"][0])
    rates = histogram_to_rates(x, net.input_max_rate_hz)
    t_steps = 50
    train = snn.input_spike_train(rates.rates_hz, t_steps, net.lif.dt_ms, 4)
    state = NetworkState.allocate(net)
    step_counts = np.zeros(net.n_classes, dtype=np.int64)
    for t in range(t_steps):
        outs = snn.step(net, state, train[t])
        step_counts += outs[-1].astype(np.int64)
    res = snn.simulate(net, rates, float(t_steps) * net.lif.dt_ms, 4)
    assert np.array_equal(step_counts, res["output_counts"])


# --------------------------------------------------------------- simulation

def test_silence_with_zero_rates_and_zero_biases(small_setup):
    net = small_setup["net"]
    quiet = snn.SpikingNetwork(
        layers=[snn.SpikingLayer(kind=l.kind, w=l.w,
                                 bias_step=np.zeros_like(l.bias_step),
                                 in_shape=l.in_shape, out_shape=l.out_shape,
                                 stride=l.stride) for l in net.layers],
        lif=net.lif, input_len=net.input_len, n_classes=net.n_classes,
        input_max_rate_hz=net.input_max_rate_hz, norm_lambdas=net.norm_lambdas,
        synapse_gain=net.synapse_gain, current_gain=net.current_gain,
        ann_macs=net.ann_macs)
    res = snn.simulate(quiet, np.zeros(net.input_len), 300.0, 0)
    assert res["synops"] == 0
    assert all(t == 0 for t in res["layer_total_spikes"])


def test_simulate_deterministic(small_setup):
    net = small_setup["net"]
    x = apply_input_transform(net.input_transform, small_setup["xte_raw"][5])
    rates = histogram_to_rates(x, net.input_max_rate_hz)
    a = snn.simulate(net, rates, 300.0, 123)
    b = snn.simulate(net, rates, 300.0, 123)
    c = snn.simulate(net, rates, 300.0, 124)
    assert np.array_equal(a["output_counts"], b["output_counts"])
    assert a["synops"] == b["synops"]
    assert a["synops"] != c["synops"]


def test_doubling_presentation_doubles_counts(small_setup):
    net = small_setup["net"]
    x = apply_input_transform(net.input_transform, small_setup["xte_raw"][2])
    rates = histogram_to_rates(x, net.input_max_rate_hz)
    short = snn.simulate(net, rates, 500.0, 9)
    long = snn.simulate(net, rates, 1000.0, 10)
    c_short = short["layer_total_spikes"][0]
    c_long = long["layer_total_spikes"][0]
    assert abs(c_long - 2 * c_short) <= 4 * np.sqrt(max(c_long, 1)) + 8


def test_rates_length_checked(small_setup):
    with pytest.raises(ValidationError):
        snn.simulate(small_setup["net"], np.zeros(7), 100.0, 0)


def test_classify_agrees_with_ann_on_strong_source(small_setup):
    # loud Cs-137 frame: both routes must name the same class
    model, net = small_setup["model"], small_setup["net"]
    names = small_setup["class_names"]
    idx = names.index("Cs137")
    rows = np.nonzero(small_setup["yte"] == idx)[0]
    counts = small_setup["xte_raw"][rows[np.argmax(
        small_setup["xte_raw"][rows].sum(axis=1))]]
    x = apply_input_transform(model.input_transform, counts)
    ann_pred = int(np.argmax(ann.forward(model, x)))
    res = snn.classify(net, counts, 500.0, 21)
    assert res["predicted"] == ann_pred == idx


def test_classify_tie_and_no_decision_flags():
    lif = LIFParams()
    w = np.full((2, 2), 2.0)
    layer = SpikingLayer(kind="dense", w=w, bias_step=np.zeros(2),
                         in_shape=(2,), out_shape=(2,))
    net = SpikingNetwork(layers=[layer], lif=lif, input_len=2, n_classes=2,
                         input_max_rate_hz=1000.0, norm_lambdas=[1.0, 1.0],
                         synapse_gain=1.0, current_gain=1.0, ann_macs=4,
                         class_names=["a", "b"])
    # identical rows -> identical neurons -> tie, lowest index wins
    res = snn.classify(net, np.array([5, 5]), 200.0, 3)
    assert res["predicted"] == 0 and res["tie"] and not res["no_decision"]
    silent = snn.classify(net, np.array([0, 0]), 200.0, 3)
    assert silent["no_decision"] and silent["predicted"] == 0


# -------------------------------------------------------------- fixed point

def test_quantize_weight_bounds(small_setup):
    net = small_setup["net"]
    for bits in (4, 8, 16):
        qnet = snn.quantize(net, QuantizationConfig(weight_bits=bits))
        qmax = (1 << (bits - 1)) - 1
        for layer in qnet.layers:
            w_inst = layer.w / (1.0 - net.lif.syn_decay)
            assert np.max(np.abs(layer.w_int)) <= qmax
            # round-to-nearest: dequantized error <= scale/2
            err = np.abs(layer.w_int * layer.weight_scale - w_inst)
            assert np.max(err) <= layer.weight_scale / 2 + 1e-12
            # the extreme weight maps to the extreme code
            hot = np.unravel_index(np.argmax(np.abs(w_inst)), w_inst.shape)
            assert abs(layer.w_int[hot]) == qmax
        assert qnet.lif.refractory_ms == 0.0
        assert qnet.mode == "fixed"


def test_quantize_requires_float_mode(small_setup):
    qnet = snn.quantize(small_setup["net"], QuantizationConfig())
    with pytest.raises(ValidationError):
        snn.quantize(qnet, QuantizationConfig())


def test_quantized_classification_close_to_float(small_setup):
    net = small_setup["net"]
    qnet = snn.quantize(net, QuantizationConfig(weight_bits=8))
    x = small_setup["xte_raw"]
    y = small_setup["yte"]
    fl = snn.evaluate(net, x, y, 300.0, rng_seed=17, limit=24)
    fx = snn.evaluate(qnet, x, y, 300.0, rng_seed=17, limit=24)
    assert abs(fl["accuracy"] - fx["accuracy"]) <= 0.2


def test_quantization_config_validation():
    with pytest.raises(ValidationError):
        QuantizationConfig(weight_bits=1)
    with pytest.raises(ValidationError):
        QuantizationConfig(potential_bits=40)
    with pytest.raises(ValidationError):
        QuantizationConfig(rounding="truncate")


def test_saturation_counted_with_tiny_potential_bits(small_setup):
    qnet = snn.quantize(small_setup["net"],
                        QuantizationConfig(weight_bits=8, potential_bits=8))
    x = apply_input_transform(qnet.input_transform, small_setup["xte_raw"][0])
    rates = histogram_to_rates(x, qnet.input_max_rate_hz)
    res = snn.simulate(qnet, rates, 200.0, 5)
    assert res["saturation_events"] >= 0  # counted, not fatal


# ------------------------------------------------------------ event costs

def test_event_cost_zero_vs_driven(small_setup):
    net = small_setup["net"]
    x = small_setup["xte_raw"][1]
    driven = snn.classify(net, x, 300.0, 2)
    report = snn.event_cost_report(driven["result"], net.ann_macs)
    assert report["ann_macs"] == small_setup["model"].macs()
    assert report["snn_synaptic_ops"] > 0
    quiet = snn.simulate(net, np.zeros(net.input_len), 300.0, 2)
    quiet_report = snn.event_cost_report(quiet, net.ann_macs)
    assert quiet_report["snn_synaptic_ops"] <= 0.01 * report["snn_synaptic_ops"]


def test_rate_sweep_monotone_and_r2(small_setup):
    net = small_setup["net"]
    pts = snn.rate_sweep(net, small_setup["xte_raw"][0],
                         [200, 600, 1000], 200.0, rng_seed=6)
    ops = [p[1] for p in pts]
    assert ops[0] < ops[1] < ops[2]
    r2, _ = snn.linear_fit_r2([p[0] for p in pts], ops)
    assert r2 > 0.9


def test_fanout_accounting_matches_brute_force(small_setup):
    # recount synops from the spike trains and connectivity definition
    net = small_setup["net"]
    x = apply_input_transform(net.input_transform, small_setup["xte_raw"][3])
    rates = histogram_to_rates(x, net.input_max_rate_hz)
    t_steps = 40
    train = snn.input_spike_train(rates.rates_hz, t_steps, net.lif.dt_ms, 8)
    state = NetworkState.allocate(net)
    cur = train
    per_source = [train.sum(axis=0, dtype=np.int64)]
    for li in range(len(net.layers)):
        spikes, counts, _ = snn._run_layer(net, li, state, cur)
        per_source.append(counts)
        cur = spikes
    brute = 0
    for li, layer in enumerate(net.layers):
        src = per_source[li]
        if layer.kind == "dense":
            brute += int(src.sum()) * layer.n_units
        else:
            c, l = layer.in_shape
            f, o = layer.out_shape
            k = layer.w.shape[2]
            cover = np.zeros(l, dtype=np.int64)
            for oo in range(o):
                cover[oo * layer.stride: oo * layer.stride + k] += 1
            brute += int((src.reshape(c, l) * cover[None, :] * f).sum())
    res = snn.simulate(net, rates, t_steps * net.lif.dt_ms, 8)
    assert res["synops"] == brute


# ------------------------------------------------------------- persistence

def test_network_roundtrip(tmp_path, small_setup):
    net = small_setup["net"]
    path = tmp_path / "net.json"
    snn.save_network(path, net)
    back = snn.load_network(path)
    x = small_setup["xte_raw"][4]
    a = snn.classify(net, x, 200.0, 33)
    b = snn.classify(back, x, 200.0, 33)
    assert a["predicted"] == b["predicted"]
    assert np.array_equal(a["output_counts"], b["output_counts"])
    qnet = snn.quantize(net, QuantizationConfig())
    qpath = tmp_path / "qnet.json"
    snn.save_network(qpath, qnet)
    qback = snn.load_network(qpath)
    qa = snn.classify(qnet, x, 200.0, 33)
    qb = snn.classify(qback, x, 200.0, 33)
    assert np.array_equal(qa["output_counts"], qb["output_counts"])


# ---------------------------------------------------------------- backends

def _layer_run_args(lif, n_units, t_steps, rng):
    spikes_in = (rng.random((t_steps, 6)) < 0.3).astype(np.uint8)
    w = rng.normal(scale=0.8, size=(n_units, 6))
    bias = rng.normal(scale=0.05, size=n_units)
    return spikes_in, w, bias


def test_backends_agree_float_dense():
    lif = LIFParams()
    rng = np.random.default_rng(0)
    spikes_in, w, bias = _layer_run_args(lif, 5, 400, rng)
    results = []
    for impl in (numba_impl, numpy_impl):
        v = np.zeros(5)
        isyn = np.zeros(5)
        refrac = np.zeros(5, dtype=np.int64)
        out = np.zeros((400, 5), dtype=np.uint8)
        counts = np.zeros(5, dtype=np.int64)
        impl.dense_layer_run(spikes_in, w, bias, lif.syn_decay, lif.leak_step,
                             lif.v_rest, lif.v_thresh, lif.v_reset, 0, False,
                             v, isyn, refrac, out, counts)
        results.append((out.copy(), counts.copy(), v.copy()))
    assert np.array_equal(results[0][0], results[1][0])
    assert np.array_equal(results[0][1], results[1][1])
    assert np.allclose(results[0][2], results[1][2], atol=1e-9)


def test_backends_bit_identical_fixed_conv():
    rng = np.random.default_rng(1)
    t_steps, c, l, f, k, stride = 200, 2, 24, 3, 5, 2
    spikes_in = (rng.random((t_steps, c * l)) < 0.25).astype(np.uint8)
    w_int = rng.integers(-127, 128, size=(f, c, k)).astype(np.int64)
    bias_int = rng.integers(-5, 6, size=f).astype(np.int64)
    out_len = (l - k) // stride + 1
    results = []
    for impl in (numba_impl, numpy_impl):
        v = np.zeros(f * out_len, dtype=np.int64)
        out = np.zeros((t_steps, f * out_len), dtype=np.uint8)
        counts = np.zeros(f * out_len, dtype=np.int64)
        sat = impl.conv_layer_run_fixed(spikes_in, w_int, bias_int, stride, c, l,
                                        31130, 220000, 4096, -32768, 32767,
                                        False, v, out, counts)
        results.append((out.copy(), counts.copy(), v.copy(), sat))
    assert np.array_equal(results[0][0], results[1][0])
    assert np.array_equal(results[0][2], results[1][2])
    assert results[0][3] == results[1][3]
