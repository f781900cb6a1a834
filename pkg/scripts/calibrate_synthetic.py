"""Calibration run for the synthetic end-to-end experiment.

Trains the full model and the three single-resolution variants on the
default synthetic task and prints accuracy/kappa per variant, plus the
per-epoch validation curve of the full model.
"""

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roadgrade import data, grading, graphs, metrics, model, synth


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--roads", type=int, default=12)
    parser.add_argument("--weeks", type=int, default=5)
    parser.add_argument("--variants", nargs="*",
                        default=["full", "hour", "day", "week"])
    args = parser.parse_args()

    t0 = time.time()
    net, series = synth.generate_synthetic(args.roads, args.weeks, args.seed)
    horizon = 1
    windows = (24, 7, 3)
    n_samples = series.t - horizon - data.first_anchor(horizon, windows)
    sizes = (round(n_samples * 0.6), round(n_samples * 0.2),
             n_samples - round(n_samples * 0.6) - round(n_samples * 0.2))
    fit_end = data.first_anchor(horizon, windows) + sizes[0] + horizon
    normalized = data.minmax_normalize(series, (0, fit_end))
    grades, _, _ = grading.label_series(normalized.values, 5, seed=args.seed)
    print(f"[{time.time()-t0:6.1f}s] labels done, split {sizes}")

    graph_set = graphs.GraphSet.build(net, series, (0, fit_end))
    print(f"[{time.time()-t0:6.1f}s] graphs done")
    samples = data.enumerate_samples(normalized, grades.values, horizon,
                                     windows)
    train_set, val_set, test_set = data.split(samples, sizes)
    truth = np.stack([s.target for s in test_set])

    resolutions = {"full": ("hour", "day", "week"), "hour": ("hour",),
                   "day": ("day",), "week": ("week",)}
    for variant in args.variants:
        config = model.ModelConfig(
            n_roads=args.roads, n_grades=5, heads=3,
            resolutions=resolutions[variant], epochs=args.epochs)
        state = model.init_state(config, seed=args.seed)
        t1 = time.time()
        log = model.train(state, train_set, val_set, graph_set)
        preds, _ = model.predict_many(state, test_set, graph_set)
        acc = metrics.accuracy(preds, truth)
        kap = metrics.quadratic_weighted_kappa(preds, truth, 5)
        best = max(e.val_accuracy for e in log)
        print(f"[{time.time()-t0:6.1f}s] {variant:5s} "
              f"train={time.time()-t1:6.1f}s acc={acc:.4f} kappa={kap:.4f} "
              f"best_val={best:.4f}")
        if variant == "full":
            curve = [f"{e.val_accuracy:.3f}" for e in log[::10]]
            print("        val curve (every 10):", " ".join(curve))


if __name__ == "__main__":
    main()
