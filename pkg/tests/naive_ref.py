"""Independent nested-loop reference implementations used as oracles.

Pure-python arithmetic, no shared code with the production forward pass.
"""

import math


def naive_forward(model, x):
    """Forward pass with explicit loops; returns the probability list."""
    a = [[float(v) for v in x]]  # channel-major: list of channel rows
    for spec, p in zip(model.layers, model.params):
        if spec.kind == "conv1d":
            w = p[0].tolist()
            b = p[1].tolist()
            out_len = (len(a[0]) - spec.kernel_size) // spec.stride + 1
            out = []
            for f in range(spec.out_channels):
                row = []
                for o in range(out_len):
                    acc = b[f]
                    for c in range(spec.in_channels):
                        for t in range(spec.kernel_size):
                            acc += w[f][c][t] * a[c][o * spec.stride + t]
                    row.append(acc)
                out.append(row)
            a = out
        elif spec.kind == "flatten":
            a = [v for row in a for v in row]
        else:
            w = p[0].tolist()
            b = p[1].tolist()
            flat = a if not isinstance(a[0], list) else [v for row in a for v in row]
            a = []
            for i in range(spec.out_units):
                acc = b[i]
                for j in range(spec.in_units):
                    acc += w[i][j] * flat[j]
                a.append(acc)
        if spec.activation == "relu":
            if isinstance(a[0], list):
                a = [[v if v > 0 else 0.0 for v in row] for row in a]
            else:
                a = [v if v > 0 else 0.0 for v in a]
        elif spec.activation == "softmax":
            m = max(a)
            e = [math.exp(v - m) for v in a]
            s = sum(e)
            a = [v / s for v in e]
    return a


def naive_argmax_accuracy(probs_rows, labels):
    """Brute-force per-sample argmax recount."""
    correct = 0
    for probs, label in zip(probs_rows, labels):
        best, best_v = 0, probs[0]
        for i, v in enumerate(probs):
            if v > best_v:
                best, best_v = i, v
        correct += int(best == int(label))
    return correct / len(labels)
