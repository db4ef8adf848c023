"""Unit-speed geodesics and the geodesic (Honda) angle used to cross-check
angle cones."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .angle import DEGENERATE_TOL, angle_cone
from .calculus import EpsSchedule, SlopeOptions
from .errors import AngleConeError, DegenerateInputError
from .spaces import MetricSpace

HONDA_T_MAX = 1e-2
HONDA_T_MIN = 1e-6
HONDA_FACTOR = 0.5
QUOTIENT_SLACK = 0.01
OSCILLATION_TOL = 0.01


def honda_ladder(t_max=HONDA_T_MAX, t_min=HONDA_T_MIN, factor=HONDA_FACTOR) -> np.ndarray:
    n = int(math.floor(math.log(t_min / t_max) / math.log(factor) + 1e-9)) + 1
    return t_max * factor ** np.arange(n)


@dataclass(frozen=True)
class GeodesicTrace:
    """Unit-speed minimising geodesic from x to z; call with arc length t."""

    space: MetricSpace
    x: object
    z: object
    branch: int
    length: float

    def __call__(self, t: float):
        if not -1e-12 <= t <= self.length * (1 + 1e-12):
            raise AngleConeError(f"arc length {t} outside [0, {self.length}]")
        if t <= 0:
            return self.x
        if t >= self.length:
            return self.z
        return self.space.geodesic_point(self.x, self.z, t, self.branch)


def geodesic(space: MetricSpace, x, z, branch: int = 0) -> GeodesicTrace:
    space._need("has_geodesics", "geodesics")
    x, z = space.check_point(x), space.check_point(z)
    length = space.distance(x, z)
    if length <= DEGENERATE_TOL:
        raise DegenerateInputError("geodesic endpoints coincide")
    nb = space.geodesic_branches(x, z)
    if not 0 <= branch < nb:
        raise AngleConeError(f"branch {branch} out of range: {nb} minimiser(s) available")
    return GeodesicTrace(space, x, z, int(branch), length)


def n_branches(space: MetricSpace, x, z) -> int:
    return space.geodesic_branches(space.check_point(x), space.check_point(z))


@dataclass
class HondaAngleEstimate:
    angle: float
    trace: list = field(default_factory=list)
    converged: bool = True
    branches: tuple = (0, 0)
    out_of_range: bool = False
    scale_dependent: bool = False
    angle_min: float | None = None
    angle_max: float | None = None

    def to_dict(self):
        return {"angle": self.angle, "converged": self.converged, "branches": list(self.branches),
                "out_of_range": self.out_of_range, "scale_dependent": self.scale_dependent,
                "angle_min": self.angle_min, "angle_max": self.angle_max,
                "t": [t for t, _ in self.trace], "quotient": [q for _, q in self.trace]}


def honda_quotients(space, gp: GeodesicTrace, gq: GeodesicTrace, ts) -> np.ndarray:
    """(2t^2 - d^2(gp(t), gq(t))) / (2t^2) along the ladder."""
    out = []
    for t in ts:
        if t >= min(gp.length, gq.length):
            d = space.distance(gp(t), gq(t))
        else:
            d = space.geodesic_separation(gp.x, gp.z, gq.z, t, gp.branch, gq.branch)
        out.append((2 * t * t - d * d) / (2 * t * t))
    return np.array(out)


def _estimate(space, gp, gq, ts) -> HondaAngleEstimate:
    q = honda_quotients(space, gp, gq, ts)
    out = bool(np.any(q < -1 - QUOTIENT_SLACK) or np.any(q > 1 + QUOTIENT_SLACK))
    tail = q[-3:]
    converged = (not out) and float(tail.max() - tail.min()) <= OSCILLATION_TOL
    value = q[-1]
    scale = np.maximum(1.0, np.abs(q[1:]))
    stable = np.flatnonzero(np.abs(np.diff(q)) <= 1e-6 * scale)
    if stable.size:
        value = q[stable[-1] + 1]
    angle = math.acos(min(1.0, max(-1.0, float(value))))
    trace = [(float(t), float(v)) for t, v in zip(ts, q)]
    return HondaAngleEstimate(angle, trace, converged, (gp.branch, gq.branch), out, space.is_graph)


def honda_angle(space: MetricSpace, p, x, q, t_ladder=None, branches=(0, 0)) -> HondaAngleEstimate:
    """Geodesic angle at x between p and q from the single-parameter limit.

    ``branches`` selects a pair of minimisers, or ``"all"`` to sweep every pair
    and report the extreme angles alongside the (0, 0) estimate.
    """
    space._need("has_geodesics", "geodesics")
    p, x, q = (space.check_point(a) for a in (p, x, q))
    if space.distance(x, p) <= DEGENERATE_TOL or space.distance(x, q) <= DEGENERATE_TOL:
        raise DegenerateInputError("x coincides with p or q")
    ts = honda_ladder() if t_ladder is None else np.asarray(t_ladder, dtype=float)
    reach = min(space.distance(x, p), space.distance(x, q))
    ts = ts[ts <= reach]
    if ts.size == 0:
        raise AngleConeError("t ladder does not fit inside the geodesics")
    if branches == "all":
        pairs = list(itertools.product(range(n_branches(space, x, p)), range(n_branches(space, x, q))))
    else:
        pairs = [tuple(branches)]
    ests = [_estimate(space, geodesic(space, x, p, bp), geodesic(space, x, q, bq), ts) for bp, bq in pairs]
    head = ests[0]
    if len(ests) > 1:
        angles = [e.angle for e in ests]
        head.angle_min, head.angle_max = min(angles), max(angles)
    return head


def alexandrov_grid(space, p, x, q, ts) -> np.ndarray:
    """Diagnostic: (s^2 + t^2 - d^2(gp(s), gq(t))) / (2 s t) over an (s, t) grid."""
    gp, gq = geodesic(space, x, p), geodesic(space, x, q)
    ts = np.asarray(ts, dtype=float)
    out = np.empty((len(ts), len(ts)))
    for i, s in enumerate(ts):
        for j, t in enumerate(ts):
            d = space.distance(gp(s), gq(t))
            out[i, j] = (s * s + t * t - d * d) / (2 * s * t)
    return out


@dataclass
class Comparison:
    p: object
    x: object
    q: object
    cone_mid: float
    cone_width: float
    honda: float
    abs_diff: float
    passed: bool
    flags: list = field(default_factory=list)

    CSV_HEADER = ("p", "x", "q", "cone_mid", "cone_width", "honda", "abs_diff", "flags")

    def csv_row(self):
        def fmt(a):
            if isinstance(a, (int, np.integer)):
                return str(int(a))
            return " ".join(repr(float(v)) for v in np.asarray(a).ravel())
        return [fmt(self.p), fmt(self.x), fmt(self.q), repr(self.cone_mid), repr(self.cone_width),
                repr(self.honda), repr(self.abs_diff), "|".join(self.flags)]

    def to_dict(self):
        return dict(zip(self.CSV_HEADER, self.csv_row()), passed=self.passed)


def compare_cone_vs_honda(space: MetricSpace, p, x, q, sched: EpsSchedule | None = None, t_ladder=None,
                          opts: SlopeOptions | None = None, tol: float = 1e-3) -> Comparison:
    """Angle cone midpoint against the geodesic angle at the same triple."""
    cone = angle_cone(space, p, x, q, sched, opts)
    h = honda_angle(space, p, x, q, t_ladder)
    diff = abs(cone.midpoint - h.angle)
    flags = []
    if not h.converged:
        flags.append("honda_nonconvergent")
    if cone.clamped:
        flags.append("clamped")
    if cone.zero_gradient:
        flags.append("zero_gradient")
    if h.scale_dependent:
        flags.append("scale_dependent")
    return Comparison(space.check_point(p), space.check_point(x), space.check_point(q),
                      cone.midpoint, cone.width, h.angle, diff, diff <= tol, flags)
