#!/usr/bin/env python3
"""Run the adiabatic-error / LR-speed sweep on the bundled 11-level model.

Writes fig1.csv, per-run JSON summaries, and two log-log SVG plots into the
output directory.  All outputs are byte-reproducible for a fixed config.
"""

import argparse

from lrlab.experiment import ExperimentConfig, run_fig1


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="out/fig1", help="output directory")
    ap.add_argument("--grid", type=int, default=2001, help="grid points per run")
    ap.add_argument("--tol", type=float, default=1e-9, help="integrator tolerance")
    ap.add_argument("--threshold", type=float, default=6e-4,
                    help="amplitude threshold for crossing detection")
    ap.add_argument("--T", type=float, nargs="+",
                    default=[12.5, 25.0, 50.0, 100.0, 200.0, 400.0],
                    help="total evolution times")
    args = ap.parse_args()

    config = ExperimentConfig(
        T_values=tuple(args.T),
        threshold=args.threshold,
        grid_points=args.grid,
        integrator_tol=args.tol,
        output_dir=args.out,
    )
    records, failures, paths = run_fig1(config)

    print(f"{'T':>8}  {'v_lr':>12}  {'delta_ad':>12}  {'gap_min':>9}")
    for r in records:
        print(
            f"{r.T:>8g}  {r.v_lr_empirical:>12.6g}  {r.delta_ad:>12.6g}  "
            f"{r.gap_min:>9.6g}"
        )
    for T, message in sorted(failures.items()):
        print(f"{T:>8g}  FAILED: {message}")
    print()
    for p in paths:
        print(f"wrote {p}")
    return 0 if not failures else 2


if __name__ == "__main__":
    raise SystemExit(main())
