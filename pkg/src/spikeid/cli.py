"""spikeid command line.

Subcommands mirror the design-flow stages: synth, train, convert,
simulate, evaluate, encode-demo, report. Every subcommand takes --seed,
--config (JSON defaults for any flag) and --out. Exit codes: 0 success,
2 validation error, 3 numeric failure.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import ann, encode, pipeline, snn, spectra
from .errors import NumericError, ValidationError
from .transforms import apply_input_transform


def _pick(value, config, key, default):
    if value is not None:
        return value
    if config and key in config:
        return config[key]
    return default


def _load_config(path):
    if path is None:
        return {}
    try:
        doc = pipeline.load_json(path)
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}")
    if not isinstance(doc, dict):
        raise ValidationError(f"config {path} must hold a JSON object")
    return doc


def _parse_floats(text):
    return [float(v) for v in str(text).split(",") if v != ""]


def _require_file(path, what):
    if path is None:
        raise ValidationError(f"missing required {what}")
    if not Path(path).exists():
        raise ValidationError(f"{what} not found: {path}")
    return path


def cmd_synth(args):
    cfg = _load_config(args.config)
    out_dir = Path(_pick(args.out, cfg, "out", "."))
    seed = int(_pick(args.seed, cfg, "seed", 0))
    bins = int(_pick(args.bins, cfg, "bins", 512))
    per_cell = int(_pick(args.per_cell, cfg, "per_cell", 20))
    split = float(_pick(args.split, cfg, "split", 0.5))
    integration = float(_pick(args.integration, cfg, "integration", 1.0))
    source_rate = float(_pick(args.source_rate, cfg, "source_rate", 20000.0))
    distances = _parse_floats(_pick(args.distances, cfg, "distances",
                                    ",".join(str(d) for d in spectra.DEFAULT_DISTANCES_M)))
    phantom_mode = _pick(args.phantom, cfg, "phantom", "both")
    phantom = {"both": (False, True), "on": (True,), "off": (False,)}.get(phantom_mode)
    if phantom is None:
        raise ValidationError(f"--phantom must be both/on/off, got {phantom_mode}")
    templates_path = _pick(args.templates, cfg, "templates", None)
    if templates_path is not None:
        _require_file(templates_path, "templates file")
    templates, ambient = spectra.load_templates(templates_path)
    if args.ambient_rate is not None and ambient is not None:
        ambient = (ambient[0], float(args.ambient_rate))
    det = spectra.DetectorModel(n_calibrated_bins=bins)
    grid = spectra.default_acq_grid(distances=distances, phantom=phantom,
                                    integration_time_s=integration,
                                    source_rate_ref=source_rate)
    timer = pipeline.StageTimer()
    train, test = spectra.generate_dataset(templates, det, grid, per_cell,
                                           split, seed, ambient=ambient)
    timer.mark("generate")
    out_dir.mkdir(parents=True, exist_ok=True)
    train_path, test_path = out_dir / "train.csv", out_dir / "test.csv"
    spectra.write_dataset_csv(train_path, train)
    spectra.write_dataset_csv(test_path, test)
    timer.mark("write")
    if args.emit_expected:
        rows = []
        centers = det.bin_centers_kev
        for name in sorted(templates):
            lam = spectra.expected_spectrum(templates[name], det, grid[0],
                                            ambient=ambient)
            rows.extend((name, repr(float(e)), repr(float(v)))
                        for e, v in zip(centers, lam))
        pipeline.write_curve_csv(args.emit_expected,
                                 ["label", "energy_kev", "expected_counts"], rows)
    per_class = len(train) // len(templates)
    print(f"wrote {train_path} ({len(train)} rows) and {test_path} ({len(test)} rows)")
    print(f"classes: {', '.join(sorted(templates))}")
    print(f"geometries: {len(grid)} (distances {distances}, phantom {phantom_mode}), "
          f"{per_cell} per cell, ~{per_class} train rows per class")
    return 0


def _transform_from_flags(args, cfg):
    steps = []
    smooth_arg = _pick(args.smooth, cfg, "smooth", None)
    if smooth_arg:
        parts = [int(v) for v in str(smooth_arg).split(",")]
        if len(parts) != 2:
            raise ValidationError("--smooth expects WINDOW_HALF_WIDTH,DEGREE")
        steps.append({"op": "smooth", "window_half_width": parts[0], "degree": parts[1]})
    if _pick(args.stabilize, cfg, "stabilize", False):
        steps.append({"op": "stabilize"})
    return {"scale": "per_sample_max", "steps": steps}


def cmd_train(args):
    from . import preprocess

    cfg = _load_config(args.config)
    data_path = _require_file(_pick(args.data, cfg, "data", None), "training dataset")
    out_path = _pick(args.out, cfg, "out", "model.json")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    epochs = int(_pick(args.epochs, cfg, "epochs", 30))
    lr = float(_pick(args.lr, cfg, "lr", 1e-3))
    batch = int(_pick(args.batch, cfg, "batch", 32))
    optimizer = _pick(args.optimizer, cfg, "optimizer", "adam")
    scale = float(_pick(args.scale, cfg, "scale", 0.25))
    pca_k = _pick(args.pca, cfg, "pca", None)

    transform = _transform_from_flags(args, cfg)
    timer = pipeline.StageTimer()
    raw, x, y, class_names = pipeline.load_xy(data_path, transform)
    if pca_k is not None:
        if args.basis_out is None:
            raise ValidationError("--pca requires --basis-out for the basis file")
        pre = apply_input_transform({"scale": "none", "steps": transform["steps"]}, raw)
        basis = preprocess.fit_pca(pre, int(pca_k))
        preprocess.save_basis(args.basis_out, basis)
        transform["steps"] = transform["steps"] + [
            {"op": "project", "basis_file": str(args.basis_out)}]
        x = apply_input_transform(transform, raw)
    timer.mark("load")

    model = ann.build_reference_architecture(x.shape[1],
                                         n_classes=len(class_names),
                                         scale=scale, rng_seed=seed)
    model.class_names = class_names
    model.input_transform = transform
    train_cfg = ann.TrainConfig(learning_rate=lr, epochs=epochs,
                                batch_size=batch, optimizer=optimizer,
                                rng_seed=seed)
    model, trace = ann.train(model, x, y, train_cfg)
    timer.mark("train")

    ann.save_checkpoint(out_path, model)
    metrics_path = _pick(args.metrics, cfg, "metrics", None)
    if metrics_path:
        pipeline.write_metrics_csv(metrics_path, trace)
    metrics = {
        "final_train_loss": trace[-1]["loss"],
        "final_train_accuracy": trace[-1]["accuracy"],
        "epochs": epochs,
        "unit_counts": model.unit_counts(),
        "parameter_count": model.parameter_count(),
        "ann_macs": model.macs(),
    }
    test_path = _pick(args.test, cfg, "test", None)
    if test_path:
        _require_file(test_path, "test dataset")
        _, xt, yt, _ = pipeline.load_xy(test_path, transform, class_names)
        res = ann.evaluate(model, xt, yt)
        metrics["test_accuracy"] = res["accuracy"]
        metrics["confusion"] = pipeline.to_jsonable(res["confusion"])
    timer.mark("evaluate")
    report_path = _pick(args.report, cfg, "report", None)
    run_config = {
        "stage": "train", "data": str(data_path), "seed": seed, "epochs": epochs,
        "lr": lr, "batch": batch, "optimizer": optimizer, "scale": scale,
        "transform": transform, "classes": class_names,
    }
    if report_path:
        pipeline.write_json(report_path,
                            pipeline.make_report("train", run_config, metrics,
                                                 timer.timings))
    print(f"checkpoint written to {out_path}; layer units {metrics['unit_counts']}")
    print(f"train accuracy {metrics['final_train_accuracy']:.4f}"
          + (f", test accuracy {metrics['test_accuracy']:.4f}" if "test_accuracy" in metrics else ""))
    return 0


def cmd_convert(args):
    cfg = _load_config(args.config)
    model_path = _require_file(_pick(args.model, cfg, "model", None), "ANN checkpoint")
    calib_path = _require_file(_pick(args.calib, cfg, "calib", None), "calibration dataset")
    out_path = _pick(args.out, cfg, "out", "snn.json")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    calib_n = int(_pick(args.calib_n, cfg, "calib_n", 64))
    percentile = float(_pick(args.percentile, cfg, "percentile", 99.9))
    presentation = float(_pick(args.presentation, cfg, "presentation", 500.0))
    max_rate = float(_pick(args.max_rate, cfg, "max_rate", 1000.0))

    timer = pipeline.StageTimer()
    model = ann.load_checkpoint(model_path)
    raw, _, _, _ = pipeline.load_xy(calib_path, None)
    rng = np.random.default_rng(np.random.SeedSequence((seed, 5)))
    pick = rng.permutation(raw.shape[0])[:calib_n]
    calib = raw[np.sort(pick)]
    lif = snn.LIFParams(
        tau_m_ms=float(_pick(args.tau_m, cfg, "tau_m", 20.0)),
        tau_syn_ms=float(_pick(args.tau_syn, cfg, "tau_syn", 5.0)),
        dt_ms=float(_pick(args.dt, cfg, "dt", 1.0)),
        reset_mode=_pick(args.reset, cfg, "reset", "hard"),
    )
    conv_cfg = snn.ConversionConfig(norm_percentile=percentile,
                                    presentation_ms=presentation,
                                    input_max_rate_hz=max_rate)
    net = snn.convert(model, calib, conv_cfg, lif)
    weight_bits = _pick(args.weight_bits, cfg, "weight_bits", None)
    if weight_bits is not None:
        qcfg = snn.QuantizationConfig(
            weight_bits=int(weight_bits),
            potential_bits=int(_pick(args.potential_bits, cfg, "potential_bits", 16)))
        net = snn.quantize(net, qcfg)
    timer.mark("convert")
    snn.save_network(out_path, net)
    print(f"converted network ({net.mode} mode) written to {out_path}")
    print(f"normalization factors: {[round(l, 6) for l in net.norm_lambdas]}, "
          f"synapse gain {net.synapse_gain:.4f}")
    return 0


def cmd_simulate(args):
    cfg = _load_config(args.config)
    snn_path = _require_file(_pick(args.snn, cfg, "snn", None), "spiking network")
    data_path = _require_file(_pick(args.data, cfg, "data", None), "dataset")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    index = int(_pick(args.index, cfg, "index", 0))
    presentation = _pick(args.presentation, cfg, "presentation", None)

    timer = pipeline.StageTimer()
    net = snn.load_network(snn_path)
    raw, _, y, class_names = pipeline.load_xy(data_path, None, net.class_names or None)
    if not 0 <= index < raw.shape[0]:
        raise ValidationError(f"--index {index} outside dataset of {raw.shape[0]} rows")
    pres = float(presentation) if presentation is not None else net.default_presentation_ms
    res = snn.classify(net, raw[index], pres, np.random.SeedSequence((seed, int(index))))
    timer.mark("simulate")
    sim = res.pop("result")
    sweep = None
    if args.rate_sweep:
        rates = _parse_floats(args.rate_sweep)
        sweep = snn.rate_sweep(net, raw[index], rates, pres, rng_seed=seed)
        if args.sweep_csv:
            pipeline.write_curve_csv(args.sweep_csv, ["input_max_rate_hz", "synops"],
                                     [(r, s) for r, s in sweep])
        timer.mark("rate_sweep")
    cost = snn.event_cost_report(sim, net.ann_macs, sweep=sweep)
    if args.raster:
        events = [encode.SpikeEvent(t * 1000.0, ch, 1)
                  for t, ch in sim["output_raster_ms"]]
        encode.write_event_csv(args.raster, encode.EventStream(events))
    run_config = {
        "stage": "simulate", "snn": str(snn_path), "data": str(data_path),
        "index": index, "seed": seed, "presentation_ms": pres, "mode": net.mode,
    }
    metrics = pipeline.to_jsonable({
        "predicted": res["predicted"],
        "class_name": res["class_name"],
        "true_label": class_names[y[index]] if net.class_names else int(y[index]),
        "output_counts": res["output_counts"],
        "tie": res["tie"],
        "no_decision": res["no_decision"],
        "layer_total_spikes": sim["layer_total_spikes"],
        "layer_mean_rates_hz": sim["layer_mean_rates_hz"],
        "input_total_spikes": sim["input_total_spikes"],
        "saturation_events": sim["saturation_events"],
        "event_cost": cost,
    })
    out_path = _pick(args.out, cfg, "out", None)
    if out_path:
        pipeline.write_json(out_path, pipeline.make_report("simulate", run_config,
                                                           metrics, timer.timings))
    print(f"sample {index}: true {metrics['true_label']}, predicted "
          f"{res['class_name']} (counts {[int(c) for c in res['output_counts']]})")
    print(f"synops {cost['snn_synaptic_ops']} vs ann_macs {cost['ann_macs']} "
          f"(ratio {cost['snn_to_ann_ratio']:.4g})")
    return 0


def cmd_evaluate(args):
    cfg = _load_config(args.config)
    data_path = _require_file(_pick(args.data, cfg, "data", None), "dataset")
    seed = int(_pick(args.seed, cfg, "seed", 0))
    n = _pick(args.n, cfg, "n", None)
    out_path = _pick(args.out, cfg, "out", None)
    model_path = _pick(args.model, cfg, "model", None)
    snn_path = _pick(args.snn, cfg, "snn", None)
    if model_path is None and snn_path is None:
        raise ValidationError("evaluate needs --model and/or --snn")
    timer = pipeline.StageTimer()
    metrics = {}
    run_config = {"stage": "evaluate", "data": str(data_path), "seed": seed,
                  "n": None if n is None else int(n)}
    if model_path:
        _require_file(model_path, "ANN checkpoint")
        model = ann.load_checkpoint(model_path)
        raw, x, y, _ = pipeline.load_xy(data_path, model.input_transform,
                                        model.class_names or None)
        if n is not None:
            x, y = x[:int(n)], y[:int(n)]
        res = ann.evaluate(model, x, y)
        metrics["ann"] = pipeline.to_jsonable({
            "accuracy": res["accuracy"], "confusion": res["confusion"],
            "precision": res["precision"], "recall": res["recall"], "n": len(y),
        })
        run_config["model"] = str(model_path)
        timer.mark("ann")
        print(f"ANN accuracy {res['accuracy']:.4f} on {len(y)} samples")
    if snn_path:
        _require_file(snn_path, "spiking network")
        net = snn.load_network(snn_path)
        raw, _, y, _ = pipeline.load_xy(data_path, None, net.class_names or None)
        pres = float(_pick(args.presentation, cfg, "presentation",
                           net.default_presentation_ms))
        limit = None if n is None else int(n)
        res = snn.evaluate(net, raw, y, pres, rng_seed=seed, limit=limit)
        metrics["snn"] = pipeline.to_jsonable({
            "accuracy": res["accuracy"], "confusion": res["confusion"],
            "n": res["n"], "flags": res["flags"], "mean_synops": res["mean_synops"],
            "presentation_ms": pres, "mode": net.mode,
        })
        run_config["snn"] = str(snn_path)
        run_config["presentation_ms"] = pres
        timer.mark("snn")
        print(f"SNN ({net.mode}) accuracy {res['accuracy']:.4f} on {res['n']} samples "
              f"at {pres:g} ms")
    if out_path:
        pipeline.write_json(out_path, pipeline.make_report("evaluate", run_config,
                                                           metrics, timer.timings))
    return 0


def cmd_encode_demo(args):
    cfg = _load_config(args.config)
    energy = float(_pick(args.energy, cfg, "energy", 661.7))
    levels = int(_pick(args.levels, cfg, "levels", 16))
    model = encode.PulseModel()
    bank = encode.default_bank(model, k=levels)
    wave = encode.synth_pulse(energy, model)
    stream = encode.threshold_encode(wave, bank, model)
    decoded = encode.decode_energy(stream, bank, model)
    out_path = _pick(args.out, cfg, "out", None)
    if out_path:
        encode.write_event_csv(out_path, stream)
    print(f"pulse energy {energy:g} keV -> {len(stream)} events over "
          f"{levels} thresholds")
    for e in stream:
        print(f"  t={e.time_us:9.4f} us  channel={e.channel:2d}  polarity={e.polarity:+d}")
    flag = " (below first threshold)" if decoded.below_first_threshold else ""
    print(f"decoded energy: {decoded.energy_kev:.1f} keV{flag}")
    return 0


def cmd_report(args):
    cfg = _load_config(args.config)
    runs = args.runs or []
    if not runs:
        raise ValidationError("report needs at least one --runs file")
    out_path = _pick(args.out, cfg, "out", None)
    rows = []
    for path in runs:
        _require_file(path, "run report")
        doc = pipeline.load_json(path)
        if doc.get("kind") != "run_report":
            raise ValidationError(f"{path}: not a run report")
        flat = {"config_hash": doc["config_hash"], "stage": doc["stage"], "file": path}
        def _walk(prefix, obj):
            for k, v in obj.items():
                if isinstance(v, dict):
                    _walk(f"{prefix}{k}.", v)
                elif isinstance(v, (int, float, str, bool)):
                    flat[f"{prefix}{k}"] = v
        _walk("", doc.get("metrics", {}))
        rows.append(flat)
    keys = ["config_hash", "stage", "file"]
    extra = sorted({k for row in rows for k in row} - set(keys))
    header = keys + extra
    table = [[row.get(k, "") for k in header] for row in rows]
    if out_path:
        pipeline.write_curve_csv(out_path, header, table)
    widths = [max(len(str(h)), *(len(str(r[i])) for r in table)) for i, h in enumerate(header)]
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in table:
        print("  ".join(str(v).ljust(w) for v, w in zip(r, widths)))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="spikeid",
        description="Event-based radioisotope identification pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--seed", type=int, default=None, help="root RNG seed (default 0)")
        p.add_argument("--config", default=None, help="JSON file with flag defaults")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    add_common(p)
    p.add_argument("--bins", type=int, default=None, help="calibrated bins (default 512)")
    p.add_argument("--per-cell", dest="per_cell", type=int, default=None,
                   help="histograms per (class, geometry) cell (default 20)")
    p.add_argument("--split", type=float, default=None, help="train fraction (default 0.5)")
    p.add_argument("--templates", default=None, help="template set JSON (default packaged)")
    p.add_argument("--distances", default=None, help="comma list of distances in m")
    p.add_argument("--phantom", default=None, choices=["both", "on", "off"])
    p.add_argument("--integration", type=float, default=None, help="seconds per frame")
    p.add_argument("--source-rate", dest="source_rate", type=float, default=None,
                   help="full-spectrum counts/s at 0.10 m")
    p.add_argument("--ambient-rate", dest="ambient_rate", type=float, default=None,
                   help="ambient background counts/s")
    p.add_argument("--emit-expected", dest="emit_expected", default=None,
                   help="write per-class expected spectra CSV (plottable)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("train", help="train the convolutional classifier")
    add_common(p)
    p.add_argument("--data", default=None, help="training dataset CSV")
    p.add_argument("--test", default=None, help="test dataset CSV (reports accuracy)")
    p.add_argument("--metrics", default=None, help="per-epoch metrics CSV")
    p.add_argument("--report", default=None, help="run report JSON")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch", type=int, default=None)
    p.add_argument("--optimizer", default=None, choices=["adam", "sgd", "sgd_momentum"])
    p.add_argument("--scale", type=float, default=None,
                   help="filter-count scale in (0,1] (default 0.25)")
    p.add_argument("--smooth", default=None, help="enable smoother: HALF_WIDTH,DEGREE")
    p.add_argument("--stabilize", action="store_true", default=None,
                   help="apply the variance-stabilizing transform")
    p.add_argument("--pca", type=int, default=None, help="project to K components")
    p.add_argument("--basis-out", dest="basis_out", default=None,
                   help="where to write the PCA basis (required with --pca)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("convert", help="convert a trained ANN to a spiking network")
    add_common(p)
    p.add_argument("--model", default=None, help="ANN checkpoint JSON")
    p.add_argument("--calib", default=None, help="calibration dataset CSV")
    p.add_argument("--calib-n", dest="calib_n", type=int, default=None,
                   help="calibration sample count (default 64)")
    p.add_argument("--percentile", type=float, default=None,
                   help="activation normalization percentile (default 99.9)")
    p.add_argument("--presentation", type=float, default=None,
                   help="default presentation ms recorded in the network (default 500)")
    p.add_argument("--max-rate", dest="max_rate", type=float, default=None,
                   help="input Poisson max rate Hz (default 1000)")
    p.add_argument("--tau-m", dest="tau_m", type=float, default=None)
    p.add_argument("--tau-syn", dest="tau_syn", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--reset", default=None, choices=["hard", "soft"])
    p.add_argument("--weight-bits", dest="weight_bits", type=int, default=None,
                   help="also quantize to fixed point with this many weight bits")
    p.add_argument("--potential-bits", dest="potential_bits", type=int, default=None)
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("simulate", help="run one sample through the spiking network")
    add_common(p)
    p.add_argument("--snn", default=None, help="spiking network JSON")
    p.add_argument("--data", default=None, help="dataset CSV")
    p.add_argument("--index", type=int, default=None, help="sample row (default 0)")
    p.add_argument("--presentation", type=float, default=None)
    p.add_argument("--raster", default=None, help="write output-layer raster CSV")
    p.add_argument("--rate-sweep", dest="rate_sweep", default=None,
                   help="comma list of input max rates for the cost curve")
    p.add_argument("--sweep-csv", dest="sweep_csv", default=None,
                   help="write the ops-vs-rate curve CSV (plottable)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="accuracy/confusion on a dataset")
    add_common(p)
    p.add_argument("--model", default=None, help="ANN checkpoint JSON")
    p.add_argument("--snn", default=None, help="spiking network JSON")
    p.add_argument("--data", default=None, help="dataset CSV")
    p.add_argument("--n", type=int, default=None, help="evaluate only the first N rows")
    p.add_argument("--presentation", type=float, default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("encode-demo", help="pulse -> threshold events -> decoded energy")
    add_common(p)
    p.add_argument("--energy", type=float, default=None, help="pulse energy keV")
    p.add_argument("--levels", type=int, default=None, help="threshold count (default 16)")
    p.set_defaults(func=cmd_encode_demo)

    p = sub.add_parser("report", help="compare run reports keyed by config hash")
    add_common(p)
    p.add_argument("--runs", nargs="+", default=None, help="run report JSON files")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 2
    except NumericError as exc:
        print(f"numeric failure [{args.command}]: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
