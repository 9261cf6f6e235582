"""Unit disc minus a centred slit: capacity and lambda1 as the slit shrinks."""
import argparse

from scipy.special import jn_zeros

from closedrange.geometry import CompactSet, Segment
from closedrange.scenes import unit_disc
from closedrange.spectral import eigenvalue_stability_experiment

BOX = (-1.0625, 1.0625, -1.0625, 1.0625)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lengths", type=float, nargs="+", default=[0.5, 0.1, 0.02])
    ap.add_argument("--h", type=float, default=1 / 128, help="finest spacing; Richardson uses 2h and h")
    args = ap.parse_args()
    ref = float(jn_zeros(0, 1)[0]) ** 2
    slits = [CompactSet.from_pieces([Segment(complex(-L / 2, 0), complex(L / 2, 0))]) for L in args.lengths]
    t = eigenvalue_stability_experiment(unit_disc(), slits, args.h, box=BOX, reference=ref)
    print(f"{'L':>8} {'cap':>10} {'L/4':>10} {'lambda1':>10} {'gap':>8}")
    for L, r in zip(args.lengths, t.rows):
        print(f"{L:8.4f} {r.capacity:10.6f} {L / 4:10.6f} {r.lambda1:10.4f} {(r.lambda1 - ref) / ref:8.1%}")
    print(f"unit disc reference {ref:.4f}; decreasing {t.decreasing}; converged {t.converged}")


if __name__ == "__main__":
    main()
