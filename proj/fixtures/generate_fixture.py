#!/usr/bin/env python3
"""Generate the committed MLP fixture: a bias-free 2-layer net (16->8->3)
trained on three Gaussian blobs, quantized to 6-bit weights and 6-bit
unsigned activations.

The integer inference pipeline below mirrors the simulator exactly
(round-half-even scale shift, relu, saturate to the activation range), so the
accuracy asserted here is the digital baseline the acceptance suite compares
against. Rerunning the script reproduces both files byte for byte.
"""

import json
import pathlib

import numpy as np

HERE = pathlib.Path(__file__).resolve().parent
SEED = 20240817
N_PER_CLASS = 200
FEATURES = 16
HIDDEN = 8
CLASSES = 3
INPUT_BITS = 6
WEIGHT_BITS = 6
ACT_MAX = (1 << INPUT_BITS) - 1
W_CLIP = (1 << (WEIGHT_BITS - 1)) - 1  # symmetric +-31


def make_blobs(rng):
    while True:
        centers = rng.uniform(12.0, 52.0, size=(CLASSES, FEATURES))
        d01 = np.linalg.norm(centers[0] - centers[1])
        d02 = np.linalg.norm(centers[0] - centers[2])
        d12 = np.linalg.norm(centers[1] - centers[2])
        if min(d01, d02, d12) > 55.0:
            break
    xs, ys = [], []
    for c in range(CLASSES):
        pts = rng.normal(centers[c], 6.0, size=(N_PER_CLASS, FEATURES))
        xs.append(pts)
        ys.append(np.full(N_PER_CLASS, c))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    perm = rng.permutation(len(y))
    x = np.clip(np.rint(x[perm]), 0, ACT_MAX).astype(np.int64)
    return x, y[perm].astype(np.int64)


def train(x, y, rng):
    """Full-batch momentum SGD on softmax cross-entropy, no biases."""
    xn = x.astype(np.float64) / 64.0
    w1 = rng.normal(0, 0.5, size=(FEATURES, HIDDEN))
    w2 = rng.normal(0, 0.5, size=(HIDDEN, CLASSES))
    v1 = np.zeros_like(w1)
    v2 = np.zeros_like(w2)
    onehot = np.eye(CLASSES)[y]
    lr, mom = 0.5, 0.9
    for step in range(4000):
        h_raw = xn @ w1
        h = np.maximum(h_raw, 0.0)
        logits = h @ w2
        z = logits - logits.max(axis=1, keepdims=True)
        p = np.exp(z)
        p /= p.sum(axis=1, keepdims=True)
        g_logits = (p - onehot) / len(y)
        g_w2 = h.T @ g_logits
        g_h = g_logits @ w2.T
        g_h[h_raw <= 0] = 0.0
        g_w1 = xn.T @ g_h
        v1 = mom * v1 - lr * g_w1
        v2 = mom * v2 - lr * g_w2
        w1 += v1
        w2 += v2
        if step == 3000:
            lr *= 0.1
    return w1, w2


def quantize(w):
    scale = W_CLIP / np.abs(w).max()
    return np.clip(np.rint(w * scale), -W_CLIP, W_CLIP).astype(np.int64)


def round_shift_half_even(v, shift):
    if shift == 0:
        return v
    q = v >> shift
    r = v - (q << shift)
    half = 1 << (shift - 1)
    out = np.where(r > half, q + 1, q)
    return np.where(r == half, q + (q & 1), out)


def int_forward(x, w1q, s1, w2q):
    raw = x @ w1q
    h = round_shift_half_even(raw, s1)
    h = np.clip(h, 0, ACT_MAX)
    return h @ w2q


def main():
    rng = np.random.default_rng(SEED)
    x, y = make_blobs(rng)
    w1, w2 = train(x, y, rng)

    xn = x.astype(np.float64) / 64.0
    float_acc = (np.argmax(np.maximum(xn @ w1, 0) @ w2, axis=1) == y).mean()

    w1q = quantize(w1)
    w2q = quantize(w2)
    max_raw = (x @ w1q).max()
    s1 = max(0, int(np.ceil(np.log2(max_raw / ACT_MAX))))
    int_acc = (np.argmax(int_forward(x, w1q, s1, w2q), axis=1) == y).mean()
    print(f"float accuracy {float_acc:.4f}, integer accuracy {int_acc:.4f}, "
          f"scale_shift {s1}")
    assert float_acc >= 0.95, "blobs should be comfortably separable"
    assert int_acc >= 0.93, "quantization should not break the classifier"

    model = {
        "schema_version": 1,
        "input_bits": INPUT_BITS,
        "layers": [
            {
                "rows": FEATURES,
                "cols": HIDDEN,
                "bits": WEIGHT_BITS,
                "signed": True,
                "scale_shift": s1,
                "activation": "relu",
                "weights": w1q.flatten().tolist(),
            },
            {
                "rows": HIDDEN,
                "cols": CLASSES,
                "bits": WEIGHT_BITS,
                "signed": True,
                "scale_shift": 0,
                "activation": "none",
                "weights": w2q.flatten().tolist(),
            },
        ],
    }
    model_path = HERE / "mlp_16x8x3.json"
    model_path.write_text(json.dumps(model, indent=2) + "\n")

    lines = ["# schema_version=1",
             ",".join([f"f{i}" for i in range(FEATURES)] + ["label"])]
    for row, label in zip(x, y):
        lines.append(",".join(str(v) for v in row) + f",{label}")
    data_path = HERE / "blobs3.csv"
    data_path.write_text("\n".join(lines) + "\n")
    print(f"wrote {model_path.name} and {data_path.name} "
          f"({len(y)} samples, {CLASSES} classes)")


if __name__ == "__main__":
    main()
