"""Scans over points drawn from the reference measure: how often the angle
cone is multivalued, how far pxq and qxp disagree, and how far cones sit from
the geodesic angle."""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import beta

from .angle import TAU, angle_cones
from .calculus import EpsSchedule, SlopeOptions
from .geodesics import honda_angle, honda_ladder
from .spaces import MetricSpace, measure_sample

REJECT_TOL = 1e-9
HONDA_TOL = 1e-3


def thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("ANGLECONE_THREADS", "1")))
    except ValueError:
        return 1


def clopper_pearson_upper(k: int, n: int, conf: float = 0.95) -> float:
    if n == 0:
        return 1.0
    if k >= n:
        return 1.0
    return float(beta.ppf(conf, k + 1, n - k))


@dataclass
class SampleRecord:
    sample_id: int
    x: object
    cone_pxq: object
    cone_qxp: object
    honda: float | None = None
    flags: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return max(self.cone_pxq.width, self.cone_qxp.width)


@dataclass
class ScanReport:
    space_id: str
    mode: str
    p: object
    q: object
    n_requested: int
    records: list
    rejected: list
    tau: float
    seed: int
    settings: dict
    honda_tol: float = HONDA_TOL
    hilbertian: bool = True

    def summary(self) -> dict:
        n = len(self.records)
        multi = sum(r.width > self.tau for r in self.records)
        single = [r for r in self.records if r.width <= self.tau]
        sym = [abs(r.cone_pxq.midpoint - r.cone_qxp.midpoint) for r in single]
        out = {
            "space": self.space_id,
            "mode": self.mode,
            "n_requested": self.n_requested,
            "n_recorded": n,
            "n_rejected": len(self.rejected),
            "tau": self.tau,
            "seed": self.seed,
            "multivalued_fraction": multi / n if n else 0.0,
            "multivalued_fraction_upper95": clopper_pearson_upper(multi, n),
            "max_symmetry_deviation": max(sym) if sym else 0.0,
            "n_single_valued": len(single),
            "symmetry_checked": self.hilbertian,
            "settings": self.settings,
        }
        hs = [r for r in self.records if r.honda is not None]
        if hs:
            exceed = sum(abs(r.cone_pxq.midpoint - r.honda) > self.honda_tol for r in hs)
            out["honda_tolerance"] = self.honda_tol
            out["honda_exceed_fraction"] = exceed / len(hs)
            out["honda_exceed_fraction_upper95"] = clopper_pearson_upper(exceed, len(hs))
            out["max_honda_difference"] = max(abs(r.cone_pxq.midpoint - r.honda) for r in hs)
        return out

    CSV_HEADER = ("sample_id", "coords", "width", "angle_mid_pxq", "angle_mid_qxp", "honda", "flags")

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.CSV_HEADER)
        for r in self.records:
            coords = str(r.x) if isinstance(r.x, (int, np.integer)) else " ".join(repr(float(v)) for v in r.x)
            w.writerow([r.sample_id, coords, repr(r.width), repr(r.cone_pxq.midpoint),
                        repr(r.cone_qxp.midpoint), "" if r.honda is None else repr(r.honda),
                        "|".join(r.flags)])
        return buf.getvalue()

    def json_text(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _record(space, p, q, i, x, sched, opts, want_honda, t_ladder):
    pxq, qxp = angle_cones(space, p, x, q, sched, opts)
    flags = []
    for name, c in (("pxq", pxq), ("qxp", qxp)):
        if c.clamped:
            flags.append(f"{name}_clamped")
        if c.zero_gradient:
            flags.append(f"{name}_zero_gradient")
        if c.pairing is not None and not c.pairing.converged:
            flags.append(f"{name}_unstable")
    h = None
    if want_honda:
        est = honda_angle(space, p, x, q, t_ladder)
        h = est.angle
        if not est.converged:
            flags.append("honda_nonconvergent")
    return SampleRecord(i, x, pxq, qxp, h, flags)


def _scan(space: MetricSpace, p, q, n, mode, tau, sched, opts, seed, want_honda=False, t_ladder=None,
          points=None, region=None, honda_tol=HONDA_TOL) -> ScanReport:
    sched = sched or EpsSchedule()
    opts = opts or SlopeOptions()
    p, q = space.check_point(p), space.check_point(q)
    if points is None:
        pts = measure_sample(space, region, n, seed)
    else:
        pts = [space.check_point(a) for a in points]
        n = len(pts)
    keep, rejected = [], []
    for i, x in enumerate(pts):
        x = space.check_point(x)
        if space.distance(x, p) <= REJECT_TOL or space.distance(x, q) <= REJECT_TOL:
            rejected.append(i)
        else:
            keep.append((i, x))
    if space.is_graph:
        # warm the shared trees before any worker reads them
        space.tree(p)
        space.tree(q)
    work = lambda item: _record(space, p, q, item[0], item[1], sched, opts, want_honda, t_ladder)  # noqa: E731
    workers = thread_cap()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(work, keep))
    else:
        records = [work(item) for item in keep]
    settings = {**opts.settings(), "eps_max": sched.eps_max, "eps_min": sched.eps_min,
                "eps_factor": sched.factor}
    if t_ladder is not None:
        settings["honda_t"] = [float(t) for t in t_ladder]
    hilbertian = space.kind in ("euclidean", "sphere") or (space.kind == "normed_p" and space.p == 2)
    return ScanReport(space.describe(), mode, p, q, n, records, rejected, tau, seed, settings,
                      honda_tol, hilbertian)


def scan_single_valuedness(space, p, q, n, tau=TAU, sched=None, opts=None, seed=0, points=None, region=None):
    return _scan(space, p, q, n, "single_valuedness", tau, sched, opts, seed, points=points, region=region)


def scan_symmetry(space, p, q, n, sched=None, opts=None, seed=0, tau=TAU, points=None, region=None):
    """Symmetry deviations are reported for any space; only Hilbertian models
    (Euclidean, sphere) carry a pass/fail expectation."""
    return _scan(space, p, q, n, "symmetry", tau, sched, opts, seed, points=points, region=region)


def scan_equivalence(space, p, q, n, sched=None, t_ladder=None, opts=None, seed=0, tol=HONDA_TOL, tau=TAU,
                     points=None, region=None):
    ts = honda_ladder() if t_ladder is None else np.asarray(t_ladder, dtype=float)
    return _scan(space, p, q, n, "equivalence", tau, sched, opts, seed, want_honda=True, t_ladder=ts,
                 points=points, region=region, honda_tol=tol)


def symmetry_passes(report: ScanReport, tol: float) -> bool | None:
    if not report.hilbertian:
        return None
    return report.summary()["max_symmetry_deviation"] <= tol

