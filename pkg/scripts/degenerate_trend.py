"""Size of the scaled degenerate part sqrt(n) U_n(h2) as n grows."""
from __future__ import annotations

import argparse

from blockboot.empirics import degenerate_part_trend
from blockboot.kernels import get_kernel
from blockboot.process_gen import make_spec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kernel", default="variance_half")
    ap.add_argument("--family", default="iid_gaussian")
    ap.add_argument("--phi", type=float, default=0.3)
    ap.add_argument("--n-grid", default="512,2048,8192")
    ap.add_argument("-M", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    spec = make_spec("ar1", phi=args.phi) if args.family == "ar1" else make_spec(args.family)
    rows = degenerate_part_trend(spec, get_kernel(args.kernel),
                                 [int(v) for v in args.n_grid.split(",")], args.M, args.seed)
    print(f"{'n':>6} {'variance':>12} {'second moment':>14}")
    for r in rows:
        print(f"{r.n:>6} {r.variance:>12.3e} {r.second_moment:>14.3e}")


if __name__ == "__main__":
    main()
