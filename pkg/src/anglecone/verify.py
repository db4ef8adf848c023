"""Invariant suite run by ``anglecone verify``: structural identities of the
pairing, the length-space floor, p = q cones, homothety invariance and the
model fixtures, each reported as pass, fail or skip."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .angle import HOMOTHETY_TOL, TAU, angle_cone, angle_cones, angle_pxp, euclidean_angle, homothety_check
from .calculus import EpsSchedule, SlopeOptions, distance_field, local_data, pairings_from_local, slope
from .spaces import MetricSpace, measure_sample

ORDER_TOL = 1e-9
SCHWARZ_TOL = 1e-4
DUALITY_TOL = 1e-6
SELF_TOL = 1e-6
FLOOR_TOL = 1e-4
ORACLE_TOL = 1e-5
SYMMETRY_TOL = 1e-4
FIXTURE_TOL = 0.05


@dataclass
class CheckResult:
    name: str
    status: str  # "pass" | "fail" | "skip"
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "status": self.status, "detail": self.detail}


def _check(name, ok, detail):
    return CheckResult(name, "pass" if ok else "fail", detail)


def generic_triples(space: MetricSpace, n: int, seed: int = 0, sep: float = 0.1):
    """Triples with pairwise separation ``sep`` (relative to the diameter scale),
    kept away from cut loci on the sphere."""
    out, k = [], 0
    while len(out) < n and k < 50:
        pts = measure_sample(space, None, 3 * n, seed + 7919 * k)
        k += 1
        for i in range(0, len(pts) - 2, 3):
            p, x, q = pts[i], pts[i + 1], pts[i + 2]
            if space.is_graph:
                if len({int(p), int(x), int(q)}) < 3:
                    continue
            else:
                ds = [space.distance(a, b) for a, b in ((p, x), (x, q), (p, q))]
                if min(ds) < sep * _unit(space):
                    continue
                if space.kind == "sphere":
                    far = math.pi * space.radius - sep * _unit(space)
                    if space.distance(x, p) > far or space.distance(x, q) > far:
                        continue
            out.append((p, x, q))
            if len(out) == n:
                break
    return out


def _unit(space):
    if space.kind == "sphere":
        return space.radius
    return getattr(space, "scale", 1.0)


def _strictly_convex(space) -> bool:
    if space.is_graph:
        return False
    return not (space.kind == "normed_p" and space.p in (1.0, math.inf))


def _hilbertian(space) -> bool:
    return space.kind in ("euclidean", "sphere") or (space.kind == "normed_p" and space.p == 2)


def run_suite(space: MetricSpace, sched: EpsSchedule | None = None, opts: SlopeOptions | None = None,
              tau: float = TAU, seed: int = 0, n_cases: int = 8) -> list[CheckResult]:
    sched = sched or EpsSchedule()
    opts = opts or SlopeOptions()
    results: list[CheckResult] = []
    if space.is_graph and opts.scale_r is None:
        return [CheckResult("all", "skip", "graphs need --scale-r for slope estimates")]
    triples = generic_triples(space, n_cases, seed)

    # length-space floor |D r_z| = 1
    if space.is_graph:
        results.append(CheckResult("length_space_slope", "skip", "graph metric is not a length space"))
    else:
        vals = [slope(space, distance_field(p), x, opts).value for p, x, _ in triples]
        ok = all(1 - FLOOR_TOL <= v <= 1 + 1e-9 for v in vals)
        results.append(_check("length_space_slope", ok, f"slopes in [{min(vals)!r}, {max(vals)!r}]"))

    # pairing identities from one shared local computation per triple
    worst = {"order": -math.inf, "schwarz": -math.inf, "duality": 0.0, "self": 0.0}
    for p, x, q in triples:
        f, g = distance_field(p), distance_field(q)
        loc = local_data(space, [f, g], x, opts)
        pos, neg, selfp = pairings_from_local(loc, [(f, g), (-f, g), (g, g)], sched)
        worst["order"] = max(worst["order"], pos.d_minus - pos.d_plus)
        bound = pos.slope_f * pos.slope_g
        worst["schwarz"] = max(worst["schwarz"], abs(pos.d_plus) - bound, abs(pos.d_minus) - bound)
        worst["duality"] = max(worst["duality"], abs(neg.d_plus + pos.d_minus), abs(neg.d_minus + pos.d_plus))
        s2 = selfp.slope_g ** 2
        worst["self"] = max(worst["self"], abs(selfp.d_plus - s2), abs(selfp.d_minus - s2))
    results.append(_check("pairing_order", worst["order"] <= ORDER_TOL, f"max d_minus - d_plus = {worst['order']!r}"))
    results.append(_check("schwarz_bound", worst["schwarz"] <= SCHWARZ_TOL,
                          f"max |d| - slope_f*slope_g = {worst['schwarz']!r}"))
    results.append(_check("sign_duality", worst["duality"] <= DUALITY_TOL, f"max deviation {worst['duality']!r}"))
    results.append(_check("self_pairing", worst["self"] <= SELF_TOL, f"max |D g(grad g) - |Dg|^2| {worst['self']!r}"))

    # p = q cones
    if space.is_graph:
        results.append(CheckResult("angle_pxp", "skip", "scale-r slope of r_p is not 1 on graphs"))
    else:
        cones = [angle_pxp(space, p, x, sched, opts) for p, x, _ in triples]
        w = max(c.width for c in cones)
        a = max(c.angle_plus for c in cones)
        results.append(_check("angle_pxp", w <= 1e-6 and a <= 1e-2, f"max width {w!r}, max angle {a!r}"))

    # homothety invariance
    p, x, q = triples[0]
    deltas = []
    for lam in (0.5, 2.0, 10.0):
        r = homothety_check(space, lam, p, x, q, sched, opts)
        deltas.append(max(r["delta_angle_minus"], r["delta_angle_plus"]))
    results.append(_check("homothety", max(deltas) <= HOMOTHETY_TOL, f"max endpoint shift {max(deltas)!r}"))

    # checks that rely on strict convexity / Hilbertian structure
    cones = [angle_cones(space, p, x, q, sched, opts) for p, x, q in triples]
    if _strictly_convex(space):
        w = max(max(a.width, b.width) for a, b in cones)
        results.append(_check("single_valued_generic", w <= tau, f"max width {w!r} (tau {tau})"))
    else:
        results.append(CheckResult("single_valued_generic", "skip", "metric is not strictly convex"))
    if _hilbertian(space):
        dev = max(abs(a.midpoint - b.midpoint) for a, b in cones)
        results.append(_check("symmetry", dev <= SYMMETRY_TOL, f"max |pxq - qxp| {dev!r}"))
    else:
        results.append(CheckResult("symmetry", "skip", "metric is not Hilbertian"))
    if space.kind == "euclidean" or (space.kind == "normed_p" and space.p == 2):
        err = max(abs(a.midpoint - euclidean_angle(p, x, q)) for (a, _), (p, x, q) in zip(cones, triples))
        results.append(_check("inner_product_oracle", err <= ORACLE_TOL, f"max error {err!r}"))

    # model fixtures with multivalued cones
    if space.kind == "sphere":
        c = angle_cone(space, [1.0, 0, 0], [0, 0, 1.0], [0, 0, -1.0], sched, opts)
        ok = c.angle_minus <= FIXTURE_TOL and c.angle_plus >= math.pi - FIXTURE_TOL
        results.append(_check("cut_locus_multivalued", ok, f"cone [{c.angle_minus!r}, {c.angle_plus!r}]"))
    if space.kind == "normed_p" and space.p == math.inf and space.dimension == 2:
        c = angle_cone(space, [1.0, 0], [1.0, 1.0], [0, 1.0], sched, opts)
        ok = c.angle_minus <= FIXTURE_TOL and c.angle_plus >= math.pi - FIXTURE_TOL
        results.append(_check("linf_multivalued", ok, f"cone [{c.angle_minus!r}, {c.angle_plus!r}]"))
    return results


def all_passed(results) -> bool:
    return not any(r.status == "fail" for r in results)

