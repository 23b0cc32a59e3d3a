"""Compare bootstrap closed forms with exact enumerated laws on a small series."""
from __future__ import annotations

import argparse

import numpy as np

from blockboot.core import boot_mean_exact_moments, boot_ustat_exact_expectation, partition
from blockboot.kernels import get_kernel
from blockboot.oracle import exact_mean_law, exact_ustat_law


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("values", nargs="*", type=float, default=[1.0, 2.0, 3.0, 4.0])
    ap.add_argument("-p", type=int, default=2)
    ap.add_argument("--kernel", default="gini")
    args = ap.parse_args(argv)

    x = np.array(args.values)
    part = partition(x.size, args.p)
    e_star, var_star = boot_mean_exact_moments(x, part)
    law = exact_mean_law(x, part)
    print(f"mean pivot: closed-form Var* {var_star:.12g}, exact law variance {law.variance():.12g}")
    print(f"E* mean {e_star:.12g}; support size {law.values.size}")
    kernel = get_kernel(args.kernel)
    ulaw, expected = exact_ustat_law(x, part, kernel)
    print(f"{kernel.label}: E*[U*] closed form {boot_ustat_exact_expectation(x, part, kernel):.12g}, "
          f"enumerated {expected:.12g}")
    print(ulaw.to_csv(), end="")


if __name__ == "__main__":
    main()
