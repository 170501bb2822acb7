"""Pure-numpy implementations of the simulation kernels.

Same contracts as ``numba_impl``; selected via SPIKEID_BACKEND=numpy.
The synaptic drive is computed for all T steps in one einsum, then the
membrane recursion runs as a vectorized per-step loop. Float results may
differ from the numba backend in the last ulps (BLAS accumulation
order); the fixed-point kernels are bit-identical.
"""

import numpy as np


def _lif_scan(inj_all, d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
              soft_reset, v, isyn, refrac, spikes_out, counts_out):
    T = inj_all.shape[0]
    for t in range(T):
        isyn *= d_syn
        isyn += inj_all[t]
        blocked = refrac > 0
        if blocked.any():
            refrac[blocked] -= 1
            v[blocked] = v_reset
            free = ~blocked
            v[free] = v[free] + h * (v_rest - v[free]) + h * isyn[free]
        else:
            free = None
            v += h * (v_rest - v) + h * isyn
        fired = v >= v_thresh
        if free is not None:
            fired &= free
        if soft_reset:
            v[fired] -= v_thresh
        else:
            v[fired] = v_reset
        refrac[fired] = refrac_steps
        spikes_out[t, fired] = 1
        counts_out[fired] += 1


def conv_layer_run(spikes_in, w, bias_step, stride, in_ch, in_len,
                   d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
                   soft_reset, v, isyn, refrac, spikes_out, counts_out):
    T = spikes_in.shape[0]
    k = w.shape[2]
    x = spikes_in.reshape(T, in_ch, in_len).astype(np.float64)
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=2)[:, :, ::stride, :]
    inj_all = np.einsum("fct,bcot->bfo", w, win).reshape(T, -1)
    inj_all += np.repeat(bias_step, inj_all.shape[1] // bias_step.shape[0])
    _lif_scan(inj_all, d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
              soft_reset, v, isyn, refrac, spikes_out, counts_out)


def dense_layer_run(spikes_in, w, bias_step,
                    d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
                    soft_reset, v, isyn, refrac, spikes_out, counts_out):
    inj_all = spikes_in.astype(np.float64) @ w.T + bias_step
    _lif_scan(inj_all, d_syn, h, v_rest, v_thresh, v_reset, refrac_steps,
              soft_reset, v, isyn, refrac, spikes_out, counts_out)


def _lif_scan_fixed(iacc_all, decay_m, drive_m, thresh, sat_lo, sat_hi,
                    soft_reset, v, spikes_out, counts_out):
    T = iacc_all.shape[0]
    saturated = 0
    for t in range(T):
        vv = (v * decay_m) >> 15
        vv += (iacc_all[t] * drive_m) >> 15
        sat = (vv < sat_lo) | (vv > sat_hi)
        saturated += int(np.count_nonzero(sat))
        np.clip(vv, sat_lo, sat_hi, out=vv)
        fired = vv >= thresh
        if soft_reset:
            vv[fired] -= thresh
        else:
            vv[fired] = 0
        spikes_out[t, fired] = 1
        counts_out[fired] += 1
        v[:] = vv
    return saturated


def conv_layer_run_fixed(spikes_in, w_int, bias_int, stride, in_ch, in_len,
                         decay_m, drive_m, thresh, sat_lo, sat_hi,
                         soft_reset, v, spikes_out, counts_out):
    T = spikes_in.shape[0]
    k = w_int.shape[2]
    x = spikes_in.reshape(T, in_ch, in_len).astype(np.int64)
    win = np.lib.stride_tricks.sliding_window_view(x, k, axis=2)[:, :, ::stride, :]
    iacc_all = np.einsum("fct,bcot->bfo", w_int, win).reshape(T, -1)
    iacc_all += np.repeat(bias_int, iacc_all.shape[1] // bias_int.shape[0])
    return _lif_scan_fixed(iacc_all, decay_m, drive_m, thresh, sat_lo, sat_hi,
                           soft_reset, v, spikes_out, counts_out)


def dense_layer_run_fixed(spikes_in, w_int, bias_int,
                          decay_m, drive_m, thresh, sat_lo, sat_hi,
                          soft_reset, v, spikes_out, counts_out):
    iacc_all = spikes_in.astype(np.int64) @ w_int.T + bias_int
    return _lif_scan_fixed(iacc_all, decay_m, drive_m, thresh, sat_lo, sat_hi,
                           soft_reset, v, spikes_out, counts_out)
