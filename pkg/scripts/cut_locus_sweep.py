"""Cone width along a meridian on the unit sphere as x approaches the antipode of q."""
import argparse
import math

import numpy as np

from anglecone import Sphere, SlopeOptions, angle_cone


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=12)
    ap.add_argument("--dirs", type=int, default=2048)
    args = ap.parse_args()

    sp = Sphere()
    p, q = np.array([0.0, 1.0, 0.0]), np.array([0.0, 0.0, -1.0])
    opts = SlopeOptions(dirs=args.dirs)
    print("gap_to_antipode,angle_minus,angle_plus,width")
    # x slides toward the north pole, which is cut for q
    for gap in np.geomspace(0.5, 1e-4, args.steps).tolist() + [0.0]:
        x = np.array([math.sin(gap), 0.0, math.cos(gap)])
        c = angle_cone(sp, p, x, q, opts=opts)
        print(f"{gap:.3e},{c.angle_minus:.6f},{c.angle_plus:.6f},{c.width:.6f}")


if __name__ == "__main__":
    main()
