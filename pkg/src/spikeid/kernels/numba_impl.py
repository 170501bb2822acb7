"""Numba-compiled simulation kernels (hot path).

Each kernel advances one layer through T timesteps given the full input
spike train, mutating the neuron state arrays in place. Feedforward
topology makes per-layer full-duration processing equivalent to lockstep
stepping. Signatures mirror ``numpy_impl``; cache=True makes compilation
a one-off per environment.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv_layer_run(spikes_in, w, bias_step, stride, in_ch, in_len,
                   d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
                   soft_reset, v, isyn, refrac, spikes_out, counts_out):
    """LIF conv layer over T steps.

    spikes_in (T, in_ch*in_len) uint8; w (out_ch, in_ch, k);
    v/isyn float64 and refrac int64 of length out_ch*out_len;
    spikes_out (T, out_ch*out_len) uint8 and counts_out int64 filled.
    """
    T = spikes_in.shape[0]
    out_ch, _, k = w.shape
    out_len = (in_len - k) // stride + 1
    for t in range(T):
        row = spikes_in[t]
        for f in range(out_ch):
            for o in range(out_len):
                base = o * stride
                inj = bias_step[f]
                for c in range(in_ch):
                    coff = c * in_len
                    for tap in range(k):
                        if row[coff + base + tap] != 0:
                            inj += w[f, c, tap]
                i = f * out_len + o
                isyn[i] = isyn[i] * d_syn + inj
                if refrac[i] > 0:
                    refrac[i] -= 1
                    v[i] = v_reset
                    spikes_out[t, i] = 0
                    continue
                v[i] = v[i] + h * (v_rest - v[i]) + h * isyn[i]
                if v[i] >= v_thresh:
                    spikes_out[t, i] = 1
                    counts_out[i] += 1
                    if soft_reset:
                        v[i] -= v_thresh
                    else:
                        v[i] = v_reset
                    refrac[i] = refrac_steps
                else:
                    spikes_out[t, i] = 0


@njit(cache=True)
def dense_layer_run(spikes_in, w, bias_step,
                    d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
                    soft_reset, v, isyn, refrac, spikes_out, counts_out):
    """LIF dense layer over T steps; w (out, in)."""
    T = spikes_in.shape[0]
    n_out, n_in = w.shape
    for t in range(T):
        row = spikes_in[t]
        for i in range(n_out):
            inj = bias_step[i]
            for j in range(n_in):
                if row[j] != 0:
                    inj += w[i, j]
            isyn[i] = isyn[i] * d_syn + inj
            if refrac[i] > 0:
                refrac[i] -= 1
                v[i] = v_reset
                spikes_out[t, i] = 0
                continue
            v[i] = v[i] + h * (v_rest - v[i]) + h * isyn[i]
            if v[i] >= v_thresh:
                spikes_out[t, i] = 1
                counts_out[i] += 1
                if soft_reset:
                    v[i] -= v_thresh
                else:
                    v[i] = v_reset
                refrac[i] = refrac_steps
            else:
                spikes_out[t, i] = 0


@njit(cache=True)
def conv_layer_run_fixed(spikes_in, w_int, bias_int, stride, in_ch, in_len,
                         decay_m, drive_m, thresh, sat_lo, sat_hi,
                         soft_reset, v, spikes_out, counts_out):
    """Fixed-point conv layer over T steps (instantaneous charge
    injection, no refractory). Integer-exact; returns saturation count.

    v int64; weight scale and dt/tau_m are folded into drive_m as a
    Q15 multiplier: dv = (sum(w_int*x) + bias_int) * drive_m >> 15.
    """
    T = spikes_in.shape[0]
    out_ch, _, k = w_int.shape
    out_len = (in_len - k) // stride + 1
    saturated = 0
    for t in range(T):
        row = spikes_in[t]
        for f in range(out_ch):
            for o in range(out_len):
                base = o * stride
                iacc = bias_int[f]
                for c in range(in_ch):
                    coff = c * in_len
                    for tap in range(k):
                        if row[coff + base + tap] != 0:
                            iacc += w_int[f, c, tap]
                i = f * out_len + o
                vv = (v[i] * decay_m) >> 15
                vv += (iacc * drive_m) >> 15
                if vv < sat_lo:
                    vv = sat_lo
                    saturated += 1
                elif vv > sat_hi:
                    vv = sat_hi
                    saturated += 1
                if vv >= thresh:
                    spikes_out[t, i] = 1
                    counts_out[i] += 1
                    if soft_reset:
                        vv -= thresh
                    else:
                        vv = 0
                else:
                    spikes_out[t, i] = 0
                v[i] = vv
    return saturated


@njit(cache=True)
def dense_layer_run_fixed(spikes_in, w_int, bias_int,
                          decay_m, drive_m, thresh, sat_lo, sat_hi,
                          soft_reset, v, spikes_out, counts_out):
    T = spikes_in.shape[0]
    n_out, n_in = w_int.shape
    saturated = 0
    for t in range(T):
        row = spikes_in[t]
        for i in range(n_out):
            iacc = bias_int[i]
            for j in range(n_in):
                if row[j] != 0:
                    iacc += w_int[i, j]
            vv = (v[i] * decay_m) >> 15
            vv += (iacc * drive_m) >> 15
            if vv < sat_lo:
                vv = sat_lo
                saturated += 1
            elif vv > sat_hi:
                vv = sat_hi
                saturated += 1
            if vv >= thresh:
                spikes_out[t, i] = 1
                counts_out[i] += 1
                if soft_reset:
                    vv -= thresh
                else:
                    vv = 0
            else:
                spikes_out[t, i] = 0
            v[i] = vv
    return saturated
