"""Escape ladder for the arctan slit lattice: local lambda1 and cell capacities far out."""
import argparse
import warnings

from closedrange.scenes import arctan_lattice
from closedrange.spectral import ReducedOrderWarning, lambda1_richardson
from closedrange.witness import select_cell_compacts


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rungs", type=float, nargs="+", default=[5.0, 20.0, 80.0])
    ap.add_argument("--cells", type=int, nargs="+", default=[-10, -10 ** 3, -10 ** 5, -10 ** 7])
    ap.add_argument("--h", type=float, default=1 / 128, help="finest spacing; Richardson uses 2h and h")
    args = ap.parse_args()
    scene = arctan_lattice()
    print("local lambda1 on the disc of radius 2 centred at (-m, 0)")
    warnings.simplefilter("ignore", ReducedOrderWarning)
    for m in args.rungs:
        c = complex(-m, 0)
        pad = 2.0 + 2 * args.h
        r = lambda1_richardson(scene.restricted_to_disc(c, 2.0), (c.real - pad, c.real + pad, -pad, pad),
                               (2 * args.h, args.h))
        print(f"  m = {m:6g}: {r.best:.4f}")
    print("cell capacity lower bounds (M = 1, delta = 0.05)")
    for j in args.cells:
        w = select_cell_compacts(scene, 1.0, 0.05, window=(j, j, 0, 0), strict=False)
        cc = w.cell_caps.get((j, 0))
        print(f"  cell {j:>10}: {cc.lower:.4f}" if cc is not None else f"  cell {j:>10}: polar")


if __name__ == "__main__":
    main()
