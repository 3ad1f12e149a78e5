#!/usr/bin/env python3
"""Measure filter/train wall-clock across synthetic graph sizes and fit the
training-time scaling. Prints the per-size table plus the linear-fit R^2 of
train time vs node count and the log-log slope of training peak memory."""

import argparse

import numpy as np

from rwsl.pipeline import bench_rows_to_csv, bench_scalability


def linear_fit_r2(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    ss_res = float((resid**2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="10000,30000,100000")
    parser.add_argument("--edge-factor", type=float, default=20.0)
    parser.add_argument("--feat-dim", type=int, default=100)
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default="bench.csv")
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    rows = bench_scalability(sizes, args.edge_factor, args.feat_dim, args.epochs,
                             repeats=args.repeats, seed=args.seed)
    bench_rows_to_csv(rows, args.out)
    for row in rows:
        print(row)
    ok = [r for r in rows if r["status"] == "ok"]
    if len(ok) >= 2:
        ns = [r["n_nodes"] for r in ok]
        r2 = linear_fit_r2(ns, [r["train_s"] for r in ok])
        mem_slope = np.polyfit(np.log([r["n_nodes"] for r in ok]),
                               np.log([r["train_peak_mb"] for r in ok]), 1)[0]
        print(f"train_s vs n: R^2 = {r2:.4f}")
        print(f"train peak memory log-log slope = {mem_slope:.3f} (sublinear < 1)")
    print(f"CSV -> {args.out}")


if __name__ == "__main__":
    main()
