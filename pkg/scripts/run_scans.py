"""Single-valuedness, symmetry and cone-vs-Honda scans on the square and the sphere."""
import argparse
import json
from pathlib import Path

from anglecone import Sphere, euclidean
from anglecone.mmscan import scan_equivalence, scan_single_valuedness, scan_symmetry

FIXTURES = {
    "square": (euclidean(2), [0.2, 0.3], [0.8, 0.6], 1e-3),
    "sphere": (Sphere(), [1.0, 0.0, 0.0], [0.0, 0.6, 0.8], 2e-2),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", type=Path, default=Path("scan_results"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    summary = {}
    for name, (sp, p, q, tol) in FIXTURES.items():
        reps = {
            "single": scan_single_valuedness(sp, p, q, args.n, seed=args.seed),
            "symmetry": scan_symmetry(sp, p, q, args.n, seed=args.seed),
            "equivalence": scan_equivalence(sp, p, q, args.n, seed=args.seed, tol=tol),
        }
        for mode, rep in reps.items():
            (args.out / f"{name}_{mode}.csv").write_text(rep.csv_text())
            summary[f"{name}/{mode}"] = rep.summary()
    print(json.dumps(summary, indent=2, sort_keys=True, default=str))


if __name__ == "__main__":
    main()
