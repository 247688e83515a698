"""Print the grid/cluster latency ratio over x for one parameter set, exactly.

    python3 scripts/ratio_table.py --c1 1 --c2 1 --A 1 --B 1 --M 1 --x 1 2 4 8
"""

import argparse
from fractions import Fraction

from gridfold.latency import ratio_curve_exact


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    for name in ("c1", "c2", "A", "B", "M"):
        p.add_argument(f"--{name}", type=Fraction, required=True)
    p.add_argument("--x", type=Fraction, nargs="+", default=[Fraction(2) ** e for e in range(11)])
    a = p.parse_args()
    curve = ratio_curve_exact(a.c1, a.c2, a.A, a.B, a.M, a.x)
    print("x\tratio")
    for x, r in curve.samples:
        print(f"{float(x):g}\t{float(r):.9g}")
    trend = "increasing" if curve.monotone else "decreasing" if curve.criterion < 0 else "constant"
    print(f"# limit {float(curve.limit):.9g}; criterion sign says {trend}")


if __name__ == "__main__":
    main()
