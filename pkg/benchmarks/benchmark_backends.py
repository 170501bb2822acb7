#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallback.

Times the layer-run kernels (float and fixed point) and a full network
presentation at several sizes. The active backend for normal runs is
chosen by SPIKEID_BACKEND; this script imports both implementations
directly.

Usage:
    python3 benchmarks/benchmark_backends.py
    python3 benchmarks/benchmark_backends.py --presentations 500 --repeats 5
    python3 benchmarks/benchmark_backends.py --output results.json
"""

import argparse
import json
import time

import numpy as np

from spikeid import ann, snn
from spikeid.kernels import numba_impl, numpy_impl
from spikeid.snn import ConversionConfig, LIFParams, QuantizationConfig


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def _make_net(input_len, scale, seed=0):
    rng = np.random.default_rng(seed)
    model = ann.build_reference_architecture(input_len, 6, scale=scale, rng_seed=seed)
    calib = rng.random((32, input_len))
    return snn.convert(model, calib, ConversionConfig(), LIFParams())


def bench_conv_kernel(repeats):
    print("\nconv layer kernel, float (T=500)")
    print(f"{'in_len':>8} {'filters':>8} {'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    rows = []
    for in_len, f in ((512, 4), (1024, 8), (3238, 16)):
        rng = np.random.default_rng(1)
        t_steps, k, stride = 500, 8, 1
        spikes = (rng.random((t_steps, in_len)) < 0.1).astype(np.uint8)
        w = rng.normal(scale=0.3, size=(f, 1, k))
        bias = np.zeros(f)
        out_len = (in_len - k) // stride + 1
        lif = LIFParams()

        def run(impl):
            v = np.zeros(f * out_len)
            isyn = np.zeros(f * out_len)
            refrac = np.zeros(f * out_len, dtype=np.int64)
            out = np.zeros((t_steps, f * out_len), dtype=np.uint8)
            counts = np.zeros(f * out_len, dtype=np.int64)
            impl.conv_layer_run(spikes, w, bias, stride, 1, in_len,
                                lif.syn_decay, lif.leak_step, lif.v_rest,
                                lif.v_thresh, lif.v_reset, 0, False,
                                v, isyn, refrac, out, counts)

        run(numba_impl)  # JIT warmup
        t_nb = _time(lambda: run(numba_impl), repeats)
        t_np = _time(lambda: run(numpy_impl), repeats)
        print(f"{in_len:>8} {f:>8} {t_nb * 1e3:>12.2f} {t_np * 1e3:>12.2f} "
              f"{t_np / t_nb:>8.1f}x")
        rows.append({"in_len": in_len, "filters": f,
                     "numba_s": t_nb, "numpy_s": t_np})
    return rows


def bench_presentation(presentations, repeats):
    print("\nfull-network presentation (rate-coded input, 6-class)")
    print(f"{'bins':>6} {'scale':>6} {'mode':>6} {'T (ms)':>7} "
          f"{'numba (ms)':>12} {'numpy (ms)':>12} {'speedup':>9}")
    rows = []
    import spikeid.kernels as kernels_pkg
    for bins, scale in ((512, 0.25), (3238, 1.0)):
        net = _make_net(bins, scale)
        qnet = snn.quantize(net, QuantizationConfig(weight_bits=8))
        rng = np.random.default_rng(2)
        rates = 1000.0 * rng.random(bins) * (rng.random(bins) < 0.2)
        for mode, the_net in (("float", net), ("fixed", qnet)):
            for pres in presentations:
                times = {}
                for name, impl in (("numba", numba_impl), ("numpy", numpy_impl)):
                    kernels_pkg.impl = impl
                    kernels_pkg.conv_layer_run = impl.conv_layer_run
                    kernels_pkg.dense_layer_run = impl.dense_layer_run
                    kernels_pkg.conv_layer_run_fixed = impl.conv_layer_run_fixed
                    kernels_pkg.dense_layer_run_fixed = impl.dense_layer_run_fixed
                    snn.simulate(the_net, rates, 10.0, 0)  # warmup
                    times[name] = _time(
                        lambda: snn.simulate(the_net, rates, float(pres), 0), repeats)
                print(f"{bins:>6} {scale:>6} {mode:>6} {pres:>7} "
                      f"{times['numba'] * 1e3:>12.1f} {times['numpy'] * 1e3:>12.1f} "
                      f"{times['numpy'] / times['numba']:>8.1f}x")
                rows.append({"bins": bins, "scale": scale, "mode": mode,
                             "presentation_ms": pres,
                             "numba_s": times["numba"], "numpy_s": times["numpy"]})
    return rows


def main():
    parser = argparse.ArgumentParser(description="numba vs numpy kernel benchmark")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--presentations", type=int, nargs="+", default=[100, 500])
    parser.add_argument("--output", default=None, help="JSON results file")
    args = parser.parse_args()

    print("spikeid kernel benchmark (best of "
          f"{args.repeats} repeats per measurement)")
    results = {
        "conv_kernel": bench_conv_kernel(args.repeats),
        "presentation": bench_presentation(args.presentations, args.repeats),
    }
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(results, fh, indent=2)
        print(f"\nresults written to {args.output}")


if __name__ == "__main__":
    main()
