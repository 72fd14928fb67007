"""Spread of final-9000 realized rates and tracked feature means across seeds."""

import argparse

import numpy as np

from fairtrack import experiments


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kind", default="static", choices=["static", "dynamic"])
    ap.add_argument("--epsilon", type=float, default=0.05)
    ap.add_argument("--seeds", type=int, nargs="+", default=list(range(5)))
    ap.add_argument("--sampler", default="sobol", choices=["sobol", "random"])
    args = ap.parse_args(argv)

    table = []
    for seed in args.seeds:
        res = experiments.run_synthetic(args.kind, args.epsilon, seed, feature_sampler=args.sampler)
        m = res.realized()
        row = [getattr(m[z], k) for k in ("fpr", "fnr", "acc") for z in (0, 1)]
        means = np.concatenate([res.tracker.features.states[z].m for z in (0, 1)])
        table.append(row)
        print(f"seed {seed}: fpr {row[0]:.3f} {row[1]:.3f}  fnr {row[2]:.3f} {row[3]:.3f}  "
              f"acc {row[4]:.3f} {row[5]:.3f}  m {np.round(means, 2)}  "
              f"fair theta {np.round(res.mean_theta('fair'), 3)}")
    t = np.array(table)
    print("mean   " + " ".join(f"{v:.3f}" for v in t.mean(axis=0)))
    print("stdev  " + " ".join(f"{v:.3f}" for v in t.std(axis=0, ddof=1)))


if __name__ == "__main__":
    main()
