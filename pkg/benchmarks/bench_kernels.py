#!/usr/bin/env python3
"""Benchmark the compiled kernel lane against the NumPy fallback.

Times the three hot kernels on a realistically sized model (the packaged
cohort schema: 19 encoded features, 10 trees of depth 5) and prints a table
with per-lane timings and the speedup. Run after ``python setup.py
build_ext --inplace`` (or an installed build):

    python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import time

import numpy as np

from xaicross import _kernels
from xaicross.gbt import Hyperparams, train
from xaicross.pipeline import encode
from xaicross.schema import default_schema
from xaicross.synth import generate_synthetic_cohort


def build_model():
    schema = default_schema()
    table = generate_synthetic_cohort(4000, 0, schema,
                                      {"financ_Medicare": 2.5, "age": 0.03},
                                      intercept=-3.5)
    matrix = encode(table, schema)
    model = train(matrix, Hyperparams())
    return model, matrix


def time_call(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    try:
        lanes = [("pure", _kernels.get("pure")), ("compiled", _kernels.get("compiled"))]
    except ImportError:
        print("compiled lane not built; run 'python setup.py build_ext --inplace'")
        return 1

    model, matrix = build_model()
    flat = model._flat()
    rng = np.random.default_rng(0)
    X = matrix.values[:2000]
    x = matrix.values[0]
    background = matrix.values[:100]
    d = model.n_features
    ids = rng.choice(1 << d, size=4096, replace=False)
    masks = ((ids[:, None] >> np.arange(d)[None, :]) & 1).astype(np.uint8)
    perms = rng.permuted(np.tile(np.arange(d, dtype=np.int32), (200, 1)), axis=1)

    cases = [
        ("predict_raw (2000 rows)",
         lambda mod: mod.predict_raw(*flat, model.base_score, X)),
        ("coalition_values (4096 masks x 100 bg)",
         lambda mod: mod.coalition_values(*flat, model.base_score, x, background,
                                          masks, True)),
        ("permutation_contributions (200 perms x 100 bg)",
         lambda mod: mod.permutation_contributions(*flat, model.base_score, x,
                                                   background, perms, True)),
    ]

    print(f"{'kernel':48s}{'pure':>12s}{'compiled':>12s}{'speedup':>10s}")
    for label, call in cases:
        timings = {}
        for name, mod in lanes:
            timings[name] = time_call(lambda: call(mod), args.repeat)
        speedup = timings["pure"] / timings["compiled"]
        print(f"{label:48s}{timings['pure'] * 1e3:>10.2f}ms"
              f"{timings['compiled'] * 1e3:>10.2f}ms{speedup:>9.1f}x")

    # equality spot check so the comparison stays honest
    a = lanes[0][1].predict_raw(*flat, model.base_score, X)
    b = lanes[1][1].predict_raw(*flat, model.base_score, X)
    assert np.allclose(a, b, atol=1e-12)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
