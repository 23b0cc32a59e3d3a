"""Consistency experiment: bootstrap vs sampling law over a grid of n.

Example::

    python3 scripts/run_consistency.py --family ar1 --phi 0.5 --statistic mean
    python3 scripts/run_consistency.py --family iid_gaussian --statistic gini -B 20000 -M 20000
"""
from __future__ import annotations

import argparse

from blockboot.core import ScheduleParams
from blockboot.empirics import consistency_experiment
from blockboot.process_gen import make_spec


def build_spec(args):
    params = {}
    if args.family == "ar1":
        params["phi"] = args.phi
    elif args.family == "garch11":
        params.update(alpha0=args.alpha0, alpha1=args.alpha1, alpha2=args.alpha2)
    return make_spec(args.family, **params)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--family", default="ar1")
    ap.add_argument("--phi", type=float, default=0.5)
    ap.add_argument("--alpha0", type=float, default=0.1)
    ap.add_argument("--alpha1", type=float, default=0.1)
    ap.add_argument("--alpha2", type=float, default=0.8)
    ap.add_argument("--statistic", default="mean")
    ap.add_argument("--n-grid", default="512,2048,8192")
    ap.add_argument("--eps", type=float, default=1 / 3)
    ap.add_argument("-c", type=float, default=1.0)
    ap.add_argument("-B", type=int, default=2000)
    ap.add_argument("-M", type=int, default=2000)
    ap.add_argument("-R", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--out", default=None, help="CSV path; table goes to stdout otherwise")
    args = ap.parse_args(argv)

    n_grid = [int(v) for v in args.n_grid.split(",")]
    report = consistency_experiment(build_spec(args), args.statistic, n_grid,
                                    ScheduleParams(args.eps, args.c), args.B, args.M, args.R,
                                    args.seed, threads=args.threads)
    if args.out:
        report.to_csv(args.out)
    print(f"{'n':>6} {'p':>4} {'k':>5} {'median KS':>10} {'Var*':>9} {'target':>9} {'time':>7}")
    for row in report.rows:
        print(f"{row.n:>6} {row.p:>4} {row.k:>5} {row.ks_distance:>10.4f} "
              f"{row.boot_var_mean:>9.4f} {row.target_sigma2:>9.4f} {row.wall_time:>6.1f}s")


if __name__ == "__main__":
    main()
