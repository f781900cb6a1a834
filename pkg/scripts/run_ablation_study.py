"""Ablation study: full model vs single-resolution variants across horizons."""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roadgrade import pipeline


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default="out/ablation_study")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--horizons", type=int, nargs="+", default=[1, 3, 6])
    parser.add_argument("--epochs", type=int, default=120)
    args = parser.parse_args()

    out = Path(args.out)
    cfg = pipeline.RunConfig(
        network=str(out / "network.csv"),
        measurements=str(out / "measurements.csv"),
        out_dir=str(out),
        seed=args.seed,
        horizons=tuple(args.horizons),
        synth_weeks=6,
        epochs=args.epochs,
        train_size=240, val_size=80, test_size=80,
    )
    pipeline.run_synth(cfg)
    pipeline.run_ablate(cfg)
    table = json.loads((out / "ablation.json").read_text())

    horizons = sorted({row["horizon"] for row in table["rows"]})
    header = "variant " + " ".join(f"| {h:>2d}h acc  kappa " for h in horizons)
    print(header)
    print("-" * len(header))
    for variant in ("full", "hourly", "daily", "weekly"):
        cells = []
        for h in horizons:
            row = next(r for r in table["rows"]
                       if r["variant"] == variant and r["horizon"] == h)
            cells.append(f"| {row['accuracy']:.3f}  {row['kappa']:.3f} ")
        print(f"{variant:7s} " + " ".join(cells))


if __name__ == "__main__":
    main()
