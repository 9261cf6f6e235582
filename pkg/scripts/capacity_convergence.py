"""Capacity estimates and brackets against closed forms as the point budget grows."""
import argparse
import math

from closedrange.geometry import CompactSet, Disc, Polygon, Segment
from closedrange.logcap import capacity

SHAPES = {
    "disc": (CompactSet.from_pieces([Disc(0j, 1.0)]), 1.0),
    "segment": (CompactSet.from_pieces([Segment(-2 + 0j, 2 + 0j)]), 1.0),
    "square": (CompactSet.from_pieces([Polygon((0j, 1 + 0j, 1 + 1j, 1j))]),
               math.gamma(0.25) ** 2 / (4 * math.pi ** 1.5)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--budgets", type=int, nargs="+", default=[16, 32, 64, 128, 256])
    args = ap.parse_args()
    print(f"{'shape':>8} {'n':>5} {'lower':>10} {'estimate':>10} {'upper':>10} {'exact':>10} {'rel err':>9}")
    for name, (K, exact) in SHAPES.items():
        for n in args.budgets:
            r = capacity(K, n)
            print(f"{name:>8} {n:5d} {r.lower:10.6f} {r.estimate:10.6f} {r.upper:10.6f} {exact:10.6f} "
                  f"{abs(r.estimate - exact) / exact:9.1e}")


if __name__ == "__main__":
    main()
