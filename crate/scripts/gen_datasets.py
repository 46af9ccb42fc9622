#!/usr/bin/env python3
"""Generate the bundled synthetic LIBSVM datasets under data/.

Three small binary-classification problems with different geometry:

* synth-dense:  dense Gaussian features, mild conditioning
* synth-scale:  per-column scales spanning four orders of magnitude
* synth-sparse: ~12% density with a few rare columns

Labels come from a planted linear model with a small flip rate so the
problems are not separable.  Deterministic: fixed seed, fixed formatting.
"""

import os

import numpy as np

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "data")
SEED = 20240816
FLIP_RATE = 0.08


def write_libsvm(path, x, y):
    lines = []
    for row, label in zip(x, y):
        parts = [f"{int(label):+d}"]
        for j in np.flatnonzero(row):
            parts.append(f"{j + 1}:{row[j]:.6g}")
        lines.append(" ".join(parts))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def plant_labels(rng, x, w):
    margin = x @ w
    y = np.where(margin >= 0.0, 1, -1)
    flips = rng.random(len(y)) < FLIP_RATE
    y[flips] = -y[flips]
    return y


def synth_dense(rng):
    n, d = 200, 30
    x = rng.standard_normal((n, d))
    w = rng.standard_normal(d)
    return x, plant_labels(rng, x, w)


def synth_scale(rng):
    n, d = 240, 40
    base = rng.standard_normal((n, d))
    scales = 10.0 ** rng.uniform(-1.5, 1.5, size=d)
    x = base * scales
    # Plant the signal in the unscaled features so the solution weights
    # span the inverse scales.
    w = rng.standard_normal(d)
    y = plant_labels(rng, base, w)
    return x, y


def synth_sparse(rng):
    n, d = 300, 60
    x = np.zeros((n, d))
    for i in range(n):
        nnz = rng.integers(5, 10)
        cols = rng.choice(d, size=nnz, replace=False)
        x[i, cols] = rng.standard_normal(nnz)
    # Thin out the last ten columns so per-column curvature varies widely.
    for j in range(d - 10, d):
        rows = np.flatnonzero(x[:, j])
        keep = rows[: max(2, len(rows) // 8)]
        mask = np.ones(n, dtype=bool)
        mask[keep] = False
        x[mask, j] = 0.0
    w = rng.standard_normal(d)
    return x, plant_labels(rng, x, w)


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    rng = np.random.default_rng(SEED)
    for name, gen in [
        ("synth-dense", synth_dense),
        ("synth-scale", synth_scale),
        ("synth-sparse", synth_sparse),
    ]:
        x, y = gen(rng)
        path = os.path.join(OUT_DIR, f"{name}.libsvm")
        write_libsvm(path, x, y)
        nnz = int(np.count_nonzero(x))
        print(f"{name}: {x.shape[0]} samples, {x.shape[1]} features, {nnz} nonzeros")


if __name__ == "__main__":
    main()
