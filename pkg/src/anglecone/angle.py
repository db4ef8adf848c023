"""Angle cones [arccos D^+ r_p(grad r_q), arccos D^- r_p(grad r_q)] and the
checkable properties they satisfy (p = q, homotheties)."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .calculus import (EpsSchedule, PairingEstimate, SlopeOptions, distance_field, local_data,
                       pairing_from_local, pairings_from_local, slope)
from .errors import AngleConeError, DegenerateInputError
from .spaces import MetricSpace, rescale

TAU = 0.05
DEGENERATE_TOL = 1e-12
HOMOTHETY_TOL = 1e-9


@dataclass
class AngleCone:
    angle_minus: float
    angle_plus: float
    c_plus: float
    c_minus: float
    clamped: bool = False
    reordered: bool = False
    zero_gradient: bool = False
    pairing: PairingEstimate | None = None

    @classmethod
    def from_c(cls, c_plus: float, c_minus: float, pairing=None, zero_gradient=False) -> "AngleCone":
        cp = min(1.0, max(-1.0, c_plus))
        cm = min(1.0, max(-1.0, c_minus))
        clamped = (cp != c_plus) or (cm != c_minus)
        reordered = cm > cp
        if reordered:
            # estimator noise only; the true values satisfy c_minus <= c_plus
            cp = cm = 0.5 * (cp + cm)
        return cls(math.acos(cp), math.acos(cm), cp, cm, clamped, reordered, zero_gradient, pairing)

    @property
    def width(self) -> float:
        return self.angle_plus - self.angle_minus

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.angle_plus + self.angle_minus)

    def single_valued(self, tau: float = TAU) -> bool:
        return self.width <= tau

    def to_dict(self) -> dict:
        return {"angle_minus": self.angle_minus, "angle_plus": self.angle_plus,
                "c_plus": self.c_plus, "c_minus": self.c_minus, "clamped": self.clamped,
                "width": self.width, "reordered": self.reordered, "zero_gradient": self.zero_gradient}


def _check_triple(space, p, x, q):
    p, x, q = (space.check_point(a) for a in (p, x, q))
    if space.distance(x, p) <= DEGENERATE_TOL or space.distance(x, q) <= DEGENERATE_TOL:
        raise DegenerateInputError("x coincides with p or q; the angle cone is not defined there")
    return p, x, q


def _with_refs(opts, *pts):
    return replace(opts, refs=tuple(opts.refs) + tuple(pts))


def cone_from_pairing(pe: PairingEstimate) -> AngleCone:
    return AngleCone.from_c(pe.d_plus, pe.d_minus, pe, pe.zero_gradient)


def angle_cone(space: MetricSpace, p, x, q, sched: EpsSchedule | None = None,
               opts: SlopeOptions | None = None) -> AngleCone:
    """Angle cone of (p, x, q) from the pairing of r_p against grad r_q at x."""
    sched = sched or EpsSchedule()
    opts = opts or SlopeOptions()
    p, x, q = _check_triple(space, p, x, q)
    if space.distance(p, q) == 0:
        return angle_pxp(space, p, x, sched, opts)
    rp, rq = distance_field(p), distance_field(q)
    loc = local_data(space, [rp, rq], x, _with_refs(opts, p, q))
    return cone_from_pairing(pairing_from_local(loc, rp, rq, sched))


def angle_cones(space, p, x, q, sched=None, opts=None) -> tuple[AngleCone, AngleCone]:
    """(cone of pxq, cone of qxp), sharing the probe data at x."""
    sched = sched or EpsSchedule()
    opts = opts or SlopeOptions()
    p, x, q = _check_triple(space, p, x, q)
    if space.distance(p, q) == 0:
        c = angle_pxp(space, p, x, sched, opts)
        return c, c
    rp, rq = distance_field(p), distance_field(q)
    loc = local_data(space, [rp, rq], x, _with_refs(opts, p, q))
    pxq, qxp = pairings_from_local(loc, [(rp, rq), (rq, rp)], sched)
    return cone_from_pairing(pxq), cone_from_pairing(qxp)


def angle_pxp(space: MetricSpace, p, x, sched=None, opts=None) -> AngleCone:
    """Cone of (p, x, p): c_plus = c_minus = |D r_p|(x)^2."""
    opts = opts or SlopeOptions()
    p = space.check_point(p)
    x = space.check_point(x)
    if space.distance(x, p) <= DEGENERATE_TOL:
        raise DegenerateInputError("x coincides with p")
    s = slope(space, distance_field(p), x, _with_refs(opts, p)).value
    if s <= opts.slope_zero_tol:
        return AngleCone.from_c(0.0, 0.0, zero_gradient=True)
    c = s * s
    return AngleCone.from_c(c, c)


def homothety_check(space: MetricSpace, lam: float, p, x, q, sched=None, opts=None) -> dict:
    """Compare the cone on ``space`` with the cone on the metric scaled by ``lam``
    (step ladders and graph scale scaled alike, same seed)."""
    if not lam > 0:
        raise AngleConeError("lambda must be positive")
    opts = opts or SlopeOptions()
    base = angle_cone(space, p, x, q, sched, opts)
    scaled = angle_cone(rescale(space, lam), p, x, q, sched, opts.scaled(lam))
    d_minus = abs(base.angle_minus - scaled.angle_minus)
    d_plus = abs(base.angle_plus - scaled.angle_plus)
    return {"lambda": lam, "cone": base.to_dict(), "cone_rescaled": scaled.to_dict(),
            "delta_angle_minus": d_minus, "delta_angle_plus": d_plus,
            "passed": bool(d_minus <= HOMOTHETY_TOL and d_plus <= HOMOTHETY_TOL)}


def euclidean_angle(p, x, q) -> float:
    """Inner-product angle at x in R^d (reference oracle)."""
    u = np.asarray(p, float) - x
    v = np.asarray(q, float) - x
    c = u @ v / (np.linalg.norm(u) * np.linalg.norm(v))
    return math.acos(min(1.0, max(-1.0, c)))
