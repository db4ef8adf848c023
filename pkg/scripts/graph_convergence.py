"""Scale-r cone on kNN graphs over uniform samples of the unit square, against pi/2."""
import argparse
import math

import numpy as np

from anglecone import SlopeOptions, WeightedGraph, angle_cone


def fixture(pts):
    near = lambda c: int(np.argmin(np.linalg.norm(pts - np.asarray(c), axis=1)))
    return near((0.8, 0.5)), near((0.5, 0.5)), near((0.5, 0.8))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, nargs="+", default=[1000, 5000, 20000])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--radii", type=float, nargs="+", default=[0.05, 0.1])
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    print("n_points,r,mean_signed_err,median_abs_err,frac_within_0.15,mean_width")
    for n in args.points:
        for r in args.radii:
            errs, widths = [], []
            for seed in range(args.seeds):
                pts = np.random.default_rng(seed).random((n, 2))
                g = WeightedGraph.from_points(pts, k=args.k)
                c = angle_cone(g, *fixture(pts), opts=SlopeOptions(scale_r=r))
                errs.append(c.midpoint - math.pi / 2)
                widths.append(c.width)
            e = np.array(errs)
            print(f"{n},{r},{e.mean():.4f},{np.median(abs(e)):.4f},{np.mean(abs(e) <= 0.15):.2f},"
                  f"{np.mean(widths):.4f}")


if __name__ == "__main__":
    main()
