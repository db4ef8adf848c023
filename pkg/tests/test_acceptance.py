"""Acceptance criteria 1-11, each at its stated tolerance.

Every test records one PASS/FAIL line; conftest prints them in the terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v``.
"""
import json
import math
import time

import numpy as np
import pytest

from anglecone import (Sphere, SlopeOptions, WeightedGraph, angle_cone, angle_pxp,
                       compare_cone_vs_honda, distance_field, euclidean, euclidean_angle, homothety_check,
                       normed, pairing, pairing_sign_dual, slope)
from anglecone.cli import main
from anglecone.mmscan import scan_single_valuedness, scan_symmetry, symmetry_passes

pytestmark = pytest.mark.acceptance

LINES = []


def report(n, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {n:2d}: {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def unit(v):
    return v / np.linalg.norm(v)


def random_triples(rng, dim, n, sep=0.05):
    out = []
    while len(out) < n:
        p, x, q = rng.uniform(-1, 1, size=(3, dim))
        if min(np.linalg.norm(p - x), np.linalg.norm(q - x), np.linalg.norm(p - q)) >= sep:
            out.append((p, x, q))
    return out


def sphere_triples(rng, n, margin=0.2):
    sp, out = Sphere(), []
    while len(out) < n:
        p, x, q = (unit(v) for v in rng.normal(size=(3, 3)))
        ds = [sp.distance(a, b) for a, b in ((p, x), (x, q), (p, q))]
        if min(ds) > margin and max(ds[:2]) < math.pi - margin:
            out.append((p, x, q))
    return out


def test_criterion_01_euclidean_oracle():
    rng = np.random.default_rng(101)
    worst_w = worst_m = 0.0
    for dim in (2, 3):
        for p, x, q in random_triples(rng, dim, 100):
            c = angle_cone(euclidean(dim), p, x, q)
            worst_w = max(worst_w, c.width)
            worst_m = max(worst_m, abs(c.midpoint - euclidean_angle(p, x, q)))
    report(1, worst_w <= 1e-6 and worst_m <= 1e-5,
           f"200 triples in R^2/R^3, max width {worst_w:.2e} (<=1e-6), max midpoint error {worst_m:.2e} (<=1e-5)")


def bracket_detail(c, pe):
    ok = (c.angle_minus <= 0.05 and c.angle_plus >= math.pi - 0.05
          and 0.95 <= pe.d_plus <= 1.0 and -1.0 <= pe.d_minus <= -0.95)
    detail = (f"cone [{c.angle_minus:.4f}, {c.angle_plus:.4f}], "
              f"d_plus {pe.d_plus:.6f} in [0.95,1], d_minus {pe.d_minus:.6f} in [-1,-0.95]")
    return ok, detail


def test_criterion_02_sphere_cut_locus():
    sp, p, x, q = Sphere(), np.array([1.0, 0, 0]), np.array([0, 0, 1.0]), np.array([0, 0, -1.0])
    opts = SlopeOptions(dirs=2048)
    c = angle_cone(sp, p, x, q, opts=opts)
    pe = pairing(sp, distance_field(p), distance_field(q), x, opts=opts)
    ok, detail = bracket_detail(c, pe)
    report(2, ok, "sphere north pole / south pole: " + detail)


def test_criterion_03_linf_corner():
    sp, p, x, q = normed(2, "inf"), np.array([1.0, 0]), np.array([1.0, 1.0]), np.array([0, 1.0])
    c = angle_cone(sp, p, x, q)
    pe = pairing(sp, distance_field(p), distance_field(q), x)
    ok, detail = bracket_detail(c, pe)
    report(3, ok, "L-infinity plane corner: " + detail)


def test_criterion_04_homothety():
    rng = np.random.default_rng(104)
    fixtures = [(euclidean(2), [1.0, 0], [0, 0], [0, 1.0])]
    fixtures += [(euclidean(3), *t) for t in random_triples(rng, 3, 2)]
    fixtures += [(Sphere(), *t) for t in sphere_triples(rng, 2)]
    fixtures.append((Sphere(), [1.0, 0, 0], [0, 0, 1.0], [0, 0, -1.0]))
    worst = 0.0
    for sp, p, x, q in fixtures:
        for lam in (0.5, 2.0, 10.0):
            r = homothety_check(sp, lam, p, x, q)
            worst = max(worst, r["delta_angle_minus"], r["delta_angle_plus"])
    report(4, worst <= 1e-9, f"{len(fixtures)} fixtures x lambda in {{0.5,2,10}}, max shift {worst:.2e} (<=1e-9)")


def test_criterion_05_pxp():
    rng = np.random.default_rng(105)
    cases = [(euclidean(2), *rng.uniform(-1, 1, (2, 2))) for _ in range(5)]
    cases += [(euclidean(3), *rng.uniform(-1, 1, (2, 3))) for _ in range(5)]
    cases += [(Sphere(), p, x) for p, x, _ in sphere_triples(rng, 5)]
    worst_w = worst_a = worst_s = 0.0
    s_lo = math.inf
    for sp, p, x in cases:
        c = angle_pxp(sp, p, x)
        s = slope(sp, distance_field(p), x).value
        worst_w, worst_a = max(worst_w, c.width), max(worst_a, c.angle_plus)
        s_lo, worst_s = min(s_lo, s), max(worst_s, s)
    ok = worst_w <= 1e-6 and worst_a <= 1e-2 and 0.9999 <= s_lo and worst_s <= 1 + 1e-9
    report(5, ok, f"{len(cases)} cases, max width {worst_w:.2e}, max angle {worst_a:.2e}, "
                  f"slope in [{s_lo:.10f}, {worst_s:.10f}]")


def random_case(rng):
    kind = rng.integers(0, 5)
    if kind == 0:
        sp, pt = euclidean(2), lambda: rng.uniform(-1, 1, 2)
    elif kind == 1:
        sp, pt = euclidean(3), lambda: rng.uniform(-1, 1, 3)
    elif kind == 2:
        sp, pt = normed(2, [1.0, 3.0, math.inf][rng.integers(0, 3)]), lambda: rng.uniform(-1, 1, 2)
    elif kind == 3:
        sp, pt = Sphere(), lambda: unit(rng.normal(size=3))
    else:
        sp, pt = GRAPH, lambda: int(rng.integers(0, GRAPH.n_nodes))
    while True:
        a, b, c, x = pt(), pt(), pt(), pt()
        try:
            if min(sp.distance(x, z) for z in (a, b, c)) > 0.1:
                break
        except Exception:
            continue
    w = rng.uniform(-1.5, 1.5, size=2)
    f = w[0] * distance_field(a) + w[1] * distance_field(c)
    g = distance_field(b)
    opts = SlopeOptions(dirs=512, seed=int(rng.integers(0, 1000)), scale_r=0.2 if sp.is_graph else None)
    return sp, f, g, x, opts


GRAPH = WeightedGraph.from_points(np.random.default_rng(7).random((300, 2)), k=6)


def test_criterion_06_structural_identities():
    rng = np.random.default_rng(106)
    bad = {"order": 0, "schwarz": 0, "duality": 0, "self": 0}
    for _ in range(200):
        sp, f, g, x, opts = random_case(rng)
        neg, pos = pairing_sign_dual(sp, f, g, x, opts=opts)
        sf, sg = slope(sp, f, x, opts).value, slope(sp, g, x, opts).value
        bad["order"] += pos.d_minus > pos.d_plus + 1e-9
        bad["schwarz"] += max(abs(pos.d_plus), abs(pos.d_minus)) > sf * sg + 1e-4
        bad["duality"] += (abs(neg.d_plus + pos.d_minus) > 1e-6) or (abs(neg.d_minus + pos.d_plus) > 1e-6)
        gg = pairing(sp, g, g, x, opts=opts)
        bad["self"] += max(abs(gg.d_plus - sg ** 2), abs(gg.d_minus - sg ** 2)) > 1e-6
    report(6, not any(bad.values()), f"200 random (space, f, g, x) cases, violations {bad}")


def test_criterion_07_honda_equivalence():
    rng = np.random.default_rng(107)
    worst_e = 0.0
    for i in range(50):
        dim = 2 + i % 2
        p, x, q = random_triples(rng, dim, 1)[0]
        worst_e = max(worst_e, compare_cone_vs_honda(euclidean(dim), p, x, q).abs_diff)
    worst_s = max(compare_cone_vs_honda(Sphere(), *t).abs_diff for t in sphere_triples(rng, 50))
    report(7, worst_e <= 1e-3 and worst_s <= 2e-2,
           f"50 Euclidean max |cone-honda| {worst_e:.2e} (<=1e-3), 50 sphere {worst_s:.2e} (<=2e-2)")


@pytest.mark.slow
def test_criterion_08_single_valued_scans():
    t0 = time.perf_counter()
    e = scan_single_valuedness(euclidean(2), [0.2, 0.3], [0.8, 0.6], 1000, seed=108).summary()
    te = time.perf_counter() - t0
    t0 = time.perf_counter()
    s = scan_single_valuedness(Sphere(), [1.0, 0, 0], [0, 0.6, 0.8], 1000, seed=108).summary()
    ts = time.perf_counter() - t0
    ok = e["multivalued_fraction"] <= 0.01 and s["multivalued_fraction"] <= 0.02
    report(8, ok, f"n=1000 multivalued fraction: square {e['multivalued_fraction']:.3f} (<=0.01, "
                  f"95% upper {e['multivalued_fraction_upper95']:.4f}, {te:.0f}s), sphere "
                  f"{s['multivalued_fraction']:.3f} (<=0.02, 95% upper {s['multivalued_fraction_upper95']:.4f}, "
                  f"{ts:.0f}s)")


@pytest.mark.slow
def test_criterion_09_symmetry():
    e = scan_symmetry(euclidean(2), [0.2, 0.3], [0.8, 0.6], 200, seed=109)
    s = scan_symmetry(Sphere(), [1.0, 0, 0], [0, 0.6, 0.8], 200, seed=109)
    de, ds = e.summary()["max_symmetry_deviation"], s.summary()["max_symmetry_deviation"]
    ok = symmetry_passes(e, 1e-4) and symmetry_passes(s, 1e-2)
    report(9, bool(ok), f"200 samples each, max |cone(pxq)-cone(qxp)|: square {de:.2e} (<=1e-4), "
                        f"sphere {ds:.2e} (<=1e-2)")


CLI_CASES = {
    "angle": ["--p", "1,0,0", "--x", "0.6,0,0.8", "--q", "0,0.6,0.8"],
    "pairing": ["--p", "1,0,0", "--x", "0.6,0,0.8", "--q", "0,0.6,0.8"],
    "slope": ["--p", "1,0,0", "--x", "0.6,0,0.8"],
    "honda": ["--p", "1,0,0", "--x", "0,0,1", "--q", "0,0,-1"],
    "compare": ["--p", "1,0,0", "--x", "0.6,0,0.8", "--q", "0,0.6,0.8"],
    "scan": ["--p", "1,0,0", "--q", "0,0.6,0.8", "--n", "12", "--mode", "equivalence"],
    "verify": [],
    "rescale-check": ["--p", "1,0,0", "--x", "0.6,0,0.8", "--q", "0,0.6,0.8", "--lambda", "10"],
}


def test_criterion_10_cli_determinism(tmp_path):
    space = tmp_path / "sphere.json"
    space.write_text(json.dumps({"kind": "sphere", "radius": 1.0}))
    differing = []
    for cmd, extra in CLI_CASES.items():
        for fmt in ("json", "csv"):
            blobs = []
            for run in range(2):
                out = tmp_path / f"{cmd}-{fmt}-{run}" / f"out.{fmt}"
                code = main([cmd, "--space", str(space), *extra, "--seed", "5", "--format", fmt,
                             "--out", str(out)])
                assert code == 0, (cmd, fmt)
                blobs.append(b"".join(p.read_bytes() for p in sorted(out.parent.iterdir())))
            if blobs[0] != blobs[1]:
                differing.append(f"{cmd}/{fmt}")
    report(10, not differing, f"{len(CLI_CASES)} subcommands x 2 formats, byte-identical reruns; "
                              f"differing: {differing or 'none'}")


def test_criterion_11_graph_diagnostic():
    rng = np.random.default_rng(0)
    pts = rng.random((5000, 2))
    g = WeightedGraph.from_points(pts, k=8)
    near = lambda c: int(np.argmin(np.linalg.norm(pts - np.asarray(c), axis=1)))
    p, x, q = near((0.8, 0.5)), near((0.5, 0.5)), near((0.5, 0.8))
    c = angle_cone(g, p, x, q, opts=SlopeOptions(scale_r=0.05))
    err = abs(c.midpoint - math.pi / 2)
    report(11, err <= 0.15, f"kNN(k=8) graph over 5000 points, r=0.05: cone [{c.angle_minus:.3f}, "
                            f"{c.angle_plus:.3f}], |midpoint - pi/2| = {err:.3f} (<=0.15)")
