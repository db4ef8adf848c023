"""Slopes of Lipschitz fields and the one-sided pairings D^{+/-} f(grad g).

Fields are finite linear combinations of distance functions plus a
constant.  On spaces with a tangent sampler the slope is the supremum over
unit-speed probe directions of the one-sided directional derivative, each
derivative obtained by Richardson extrapolation of the difference quotients
along a geometric step ladder.  On graphs the slope is taken at a fixed
scale r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AngleConeError, CapabilityError, EstimationError
from .spaces import MetricSpace, direction_array

STABILITY_RTOL = 1e-6
MONOTONE_TOL = 1e-6
_MAX_ORDER = 4
_SAFE = 2.0
_CONVERGED = 1e-6
_EPS_PREFIX = 6
_GRID = 9
_SHRINK = 4.0
_MIN_WIDTH = 1e-8


# --------------------------------------------------------------------------
# fields


class ScalarField:
    """sum_i coef_i * d(z_i, .) + const."""

    __slots__ = ("terms", "const")

    def __init__(self, terms=(), const: float = 0.0):
        self.terms = tuple((float(c), z) for c, z in terms)
        self.const = float(const)

    def __repr__(self):
        parts = [f"{c:g}*r[{_fmt_point(z)}]" for c, z in self.terms]
        if self.const or not parts:
            parts.append(f"{self.const:g}")
        return "ScalarField(" + " + ".join(parts) + ")"

    def __add__(self, other):
        if isinstance(other, ScalarField):
            return ScalarField(self.terms + other.terms, self.const + other.const)
        return ScalarField(self.terms, self.const + float(other))

    __radd__ = __add__

    def __mul__(self, k):
        k = float(k)
        return ScalarField([(k * c, z) for c, z in self.terms], k * self.const)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField([(-c, z) for c, z in self.terms], -self.const)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    @property
    def refs(self):
        return [z for _, z in self.terms]

    def __call__(self, space: MetricSpace, pts):
        """Evaluate at a batch of points (trailing coordinate axis) or node ids."""
        if space.is_graph:
            pts = np.asarray(pts, dtype=int)
            out = np.full(pts.shape, self.const)
        else:
            pts = np.asarray(pts, dtype=float)
            out = np.full(pts.shape[:-1], self.const)
        for c, z in self.terms:
            out = out + c * space.distances(space.check_point(z), pts)
        return out

    def at(self, space: MetricSpace, x) -> float:
        x = space.check_point(x)
        return float(self(space, [x])[0])

    def weights(self, leaves, space) -> np.ndarray:
        """Coefficient vector of this field over a list of leaf points."""
        w = np.zeros(len(leaves))
        for c, z in self.terms:
            w[_leaf_index(leaves, z, space)] += c
        return w


def distance_field(z) -> ScalarField:
    """r_z = d(z, .)"""
    return ScalarField([(1.0, z)])


def constant(c: float) -> ScalarField:
    return ScalarField((), c)


def _fmt_point(z):
    if isinstance(z, (int, np.integer)):
        return str(int(z))
    return ",".join(f"{v:g}" for v in np.asarray(z).ravel())


def _same(space, a, b) -> bool:
    if space.is_graph:
        return int(a) == int(b)
    return np.array_equal(np.asarray(a, dtype=float), np.asarray(b, dtype=float))


def _leaf_index(leaves, z, space):
    for i, l in enumerate(leaves):
        if _same(space, l, z):
            return i
    raise KeyError(z)


def _collect_leaves(space, fields, extra=()):
    leaves = []
    for z in [z for f in fields for z in f.refs] + list(extra):
        z = space.check_point(z)
        if not any(_same(space, l, z) for l in leaves):
            leaves.append(z)
    return leaves


# --------------------------------------------------------------------------
# schedules and options


@dataclass(frozen=True)
class EpsSchedule:
    eps_max: float = 1e-1
    eps_min: float = 1e-6
    factor: float = 0.5

    def __post_init__(self):
        if not (self.eps_max > 0 and self.eps_min > 0):
            raise AngleConeError("eps bounds must be positive")
        if not self.eps_min < self.eps_max:
            raise AngleConeError("eps_min must be smaller than eps_max")
        if not 0 < self.factor < 1:
            raise AngleConeError("eps factor must lie in (0, 1)")

    def ladder(self) -> np.ndarray:
        n = int(math.floor(math.log(self.eps_min / self.eps_max) / math.log(self.factor) + 1e-9)) + 1
        return self.eps_max * self.factor ** np.arange(n)


@dataclass(frozen=True)
class SlopeOptions:
    """Probe budget and step ladder.

    ``refs`` are extra reference points whose toward/away directions are added
    to every direction sample; the reference points of the fields involved are
    always added.  ``sector`` restricts probes to the tangent half-space
    ``<v, sector> >= 0``.
    """

    dirs: int = 2048
    t_max: float = 1e-2
    t_min: float = 1e-7
    t_factor: float = 0.5
    scale_r: float | None = None
    seed: int = 0
    refs: tuple = ()
    refine: bool = True
    sector: tuple | None = None
    slope_zero_tol: float = 1e-9

    def __post_init__(self):
        if self.dirs < 1:
            raise AngleConeError("dirs must be >= 1")
        if not (self.t_max > 0 and self.t_min > 0 and self.t_min < self.t_max):
            raise AngleConeError("need 0 < t_min < t_max")
        if not 0 < self.t_factor < 1:
            raise AngleConeError("t factor must lie in (0, 1)")
        if self.scale_r is not None and not self.scale_r > 0:
            raise AngleConeError("scale r must be positive")

    def t_ladder(self) -> np.ndarray:
        n = int(math.floor(math.log(self.t_min / self.t_max) / math.log(self.t_factor) + 1e-9)) + 1
        return self.t_max * self.t_factor ** np.arange(n)

    def scaled(self, lam: float) -> "SlopeOptions":
        """Ladders and scale measured in the metric multiplied by ``lam``."""
        return replace(self, t_max=self.t_max * lam, t_min=self.t_min * lam,
                       scale_r=None if self.scale_r is None else self.scale_r * lam)

    def settings(self) -> dict:
        return {"dirs": self.dirs, "t_max": self.t_max, "t_min": self.t_min, "t_factor": self.t_factor,
                "scale_r": self.scale_r, "seed": self.seed, "refine": self.refine}


# --------------------------------------------------------------------------
# estimates


@dataclass
class SlopeEstimate:
    value: float
    backend: str
    scale: float | None = None
    direction_values: np.ndarray = field(default_factory=lambda: np.empty(0), repr=False)
    converged: bool = True
    clamped: bool = False

    def to_dict(self):
        return {"value": self.value, "backend": self.backend, "scale": self.scale,
                "converged": self.converged, "clamped": self.clamped, "n_directions": int(self.direction_values.size)}


@dataclass
class PairingEstimate:
    d_plus: float
    d_minus: float
    trace: list = field(default_factory=list)
    converged: bool = True
    monotone: bool = True
    slope_f: float = math.nan
    slope_g: float = math.nan
    zero_gradient: bool = False
    backend: str = "analytic_directional"
    reordered: bool = False
    clamped: bool = False

    def to_dict(self):
        return {"d_plus": self.d_plus, "d_minus": self.d_minus, "converged": self.converged,
                "reordered": self.reordered, "clamped": self.clamped,
                "monotone": self.monotone, "slope_f": self.slope_f, "slope_g": self.slope_g,
                "zero_gradient": self.zero_gradient, "backend": self.backend,
                "eps": [e for e, _ in self.trace], "quotient": [q for _, q in self.trace]}


# --------------------------------------------------------------------------
# local first-order data at a point


def one_sided_derivatives(space, x, leaves, dirs, ts):
    """Richardson-extrapolated one-sided derivatives of each leaf distance
    along each direction.  Returns (derivs, errs), each of shape (L, n)."""
    ts = np.asarray(ts, dtype=float)
    pts = space.step(x, dirs, ts)
    m, n = pts.shape[:2]
    quot = np.empty((len(leaves), m, n))
    for i, z in enumerate(leaves):
        base = space.distances(z, x[None])[0]
        quot[i] = (space.distances(z, pts) - base) / ts[:, None]
    f = ts[1] / ts[0] if m > 1 else 0.5
    best = quot[:, 0].copy()
    err = np.full(best.shape, np.inf)
    active = np.ones(best.shape, dtype=bool)
    prev = [quot[:, 0]]
    for i in range(1, m):
        row = [quot[:, i]]
        row_err = np.full(best.shape, np.inf)
        for j in range(1, min(i, _MAX_ORDER) + 1):
            fj = f**j
            val = (row[j - 1] - fj * prev[j - 1]) / (1.0 - fj)
            e = np.maximum(np.abs(val - row[j - 1]), np.abs(val - prev[j - 1]))
            better = active & (e < err)
            best = np.where(better, val, best)
            err = np.where(better, e, err)
            row_err = np.minimum(row_err, e)
            row.append(val)
        # once round-off dominates a converged tableau, later rows only look accurate by chance
        active &= ~((row_err > _SAFE * err) & (err <= _CONVERGED))
        if not active.any():
            break
        prev = row
    if m == 1:
        err[:] = 0.0
    return best, err


def _snap(v: float) -> float:
    return float(f"{v:.12g}")


def _snap_ladder(opts: SlopeOptions, unit: float) -> np.ndarray:
    if unit == 1.0:
        return opts.t_ladder()
    return replace(opts, t_max=_snap(opts.t_max / unit), t_min=_snap(opts.t_min / unit)).t_ladder()


class LocalData:
    """Directional derivatives of a set of distance functions at one point,
    with on-demand refinement of the supremum over directions."""

    def __init__(self, space: MetricSpace, x, leaves, opts: SlopeOptions):
        self.space = space
        self.x = space.check_point(x)
        self.leaves = leaves
        self.opts = opts
        if space.has_tangent_sampler:
            self.backend = "analytic_directional"
            # probe in unit scale: a rescaled metric with a rescaled ladder then
            # evaluates bit-identical quotients (slopes are scale-free)
            space, unit = space.unscaled()
            self.space = space
            self.ts = _snap_ladder(opts, unit)
            refs = list(leaves) + [space.check_point(z) for z in opts.refs]
            dirs, _ = direction_array(space, self.x, opts.dirs, opts.seed, refs)
            dirs = self._in_sector(dirs)
            if len(dirs) == 0:
                raise EstimationError("no probe direction survives the sector restriction")
            self.dirs = dirs
            self.D, self.err = self._derivs(dirs)
            self._basis = space.tangent_basis(self.x)
            k = self._basis.shape[0]
            gap = 2 * math.pi / opts.dirs if k == 2 else (4 * math.pi / opts.dirs) ** (1.0 / max(k - 1, 1))
            self.width0 = min(0.5, 4.0 * gap)
        elif space.is_graph:
            if opts.scale_r is None:
                raise CapabilityError("graph slopes need a scale r (--scale-r)")
            self.backend = "graph_scale"
            ys, dy = space.neighbours_within(self.x, opts.scale_r)
            if len(ys) == 0:
                raise EstimationError(f"no node within scale r={opts.scale_r} of {self.x}")
            self.dirs = ys
            D = np.empty((len(leaves), len(ys)))
            for i, z in enumerate(leaves):
                rz = space.distances(z, np.append(ys, self.x))
                D[i] = (rz[:-1] - rz[-1]) / dy
            self.D = D
            self.err = np.zeros_like(D)
        else:
            raise CapabilityError(f"{space.kind} space has neither tangent sampler nor graph scale")
        if not np.all(np.isfinite(self.D)):
            bad = ~np.all(np.isfinite(self.D), axis=0)
            if bad.all():
                raise EstimationError("all difference quotients are non-finite")
            self.D = self.D[:, ~bad]
            self.err = self.err[:, ~bad]
            self.dirs = self.dirs[~bad]

    def _in_sector(self, dirs):
        if self.opts.sector is None:
            return dirs
        nrm = np.asarray(self.opts.sector, dtype=float)
        return dirs[dirs @ nrm >= -1e-15]

    def _derivs(self, dirs):
        return one_sided_derivatives(self.space, self.x, self.leaves, dirs, self.ts)

    def _complements(self, U):
        """For each unit direction row of U, an orthonormal basis of its
        complement in the tangent space; shape (R, k-1, ambient)."""
        T = self._basis
        c = U @ T.T
        c = c / np.linalg.norm(c, axis=1, keepdims=True)
        k = c.shape[1]
        # Householder reflection swapping e_1 and c; its other columns span c's complement
        sgn = np.where(c[:, 0] >= 0, 1.0, -1.0)
        w = c.copy()
        w[:, 0] += sgn
        H = np.eye(k)[None] - 2.0 * w[:, :, None] * w[:, None, :] / (w * w).sum(axis=1)[:, None, None]
        return np.einsum("rki,ka->ria", H[:, :, 1:], T)

    def sup(self, W):
        """Supremum over directions of |W @ D| for each row of weights W.

        Returns (values, converged flags, per-direction values of the first row).
        """
        W = np.atleast_2d(np.asarray(W, dtype=float))
        F = np.abs(_combine(W, self.D))
        idx = np.argmax(F, axis=1)
        vals = F[np.arange(len(W)), idx]
        errs = np.abs(_combine(np.abs(W), self.err))[np.arange(len(W)), idx]
        if self.backend == "analytic_directional" and self.opts.refine and self.D.shape[0] > 0:
            vals = self._refine(W, self.dirs[idx], vals)
        scale = np.maximum(1.0, vals)
        return vals, errs <= STABILITY_RTOL * scale, F[0]

    def _refine(self, W, centers, vals):
        """Coordinate zoom search around each row's best sampled direction."""
        R = len(W)
        best_u = centers.copy()
        best_v = vals.copy()
        s = np.linspace(-1.0, 1.0, _GRID)
        width = self.width0
        while width > _MIN_WIDTH:
            comps = self._complements(best_u)
            for axis in range(comps.shape[1]):
                raw = best_u[:, None, :] + (width * s)[None, :, None] * comps[:, axis][:, None, :]
                cand = self.space.unit(self.x, raw.reshape(R * _GRID, -1))
                D, _ = self._derivs(cand)
                F = np.abs(_combine_rows(W, D, _GRID))
                if self.opts.sector is not None:
                    keep = (cand @ np.asarray(self.opts.sector, dtype=float) >= -1e-15).reshape(R, _GRID)
                    F = np.where(keep, F, -np.inf)
                j = np.argmax(F, axis=1)
                fj = F[np.arange(R), j]
                up = fj > best_v
                cand = cand.reshape(R, _GRID, -1)
                best_u = np.where(up[:, None], cand[np.arange(R), j], best_u)
                best_v = np.where(up, fj, best_v)
                comps = self._complements(best_u)
            width /= _SHRINK
        return best_v


def _combine(W, D):
    # explicit sum over the (few) leaves keeps results independent of batch shape
    out = np.zeros((W.shape[0], D.shape[1]))
    for i in range(D.shape[0]):
        out += W[:, i:i + 1] * D[i][None, :]
    return out


def _combine_rows(W, D, g):
    """Row r of W against its own block of g candidate directions."""
    R = W.shape[0]
    Dr = D.reshape(D.shape[0], R, g)
    out = np.zeros((R, g))
    for i in range(D.shape[0]):
        out += W[:, i:i + 1] * Dr[i]
    return out


# --------------------------------------------------------------------------
# public operations


def slope(space: MetricSpace, fld: ScalarField, x, opts: SlopeOptions | None = None) -> SlopeEstimate:
    """Local Lipschitz constant |D fld|(x)."""
    opts = opts or SlopeOptions()
    x = space.check_point(x)
    leaves = _collect_leaves(space, [fld])
    backend = "graph_scale" if space.is_graph else "analytic_directional"
    if not leaves:
        if space.is_graph and opts.scale_r is None:
            raise CapabilityError("graph slopes need a scale r")
        return SlopeEstimate(0.0, backend, opts.scale_r if space.is_graph else None)
    loc = LocalData(space, x, leaves, opts)
    w = fld.weights(leaves, space)
    vals, conv, per_dir = loc.sup(w)
    # extrapolation across a kink can overshoot the a-priori Lipschitz bound
    lip = float(np.abs(w).sum())
    return SlopeEstimate(min(float(vals[0]), lip), loc.backend, opts.scale_r if space.is_graph else None,
                         per_dir, bool(conv[0]), bool(vals[0] > lip))


def _side(eps, q, factor):
    """Extrapolated limit of the quotient trace q(eps) as eps -> 0 along a
    geometric ladder.  Returns (value, rung used, stable)."""
    if len(q) == 1:
        return float(q[0]), 0, False
    e = (q[1:] - factor * q[:-1]) / (1.0 - factor)
    scale = np.maximum(1.0, np.abs(e))
    ok = np.abs(np.diff(e)) <= STABILITY_RTOL * scale[1:]
    # first window of three mutually consistent extrapolants; smaller eps only adds round-off
    for k in range(1, len(ok)):
        if ok[k - 1] and ok[k]:
            return float(e[k + 1]), k + 2, True
    return float(e[-1]), len(q) - 1, False


def pairings_from_local(loc: LocalData, pairs, sched: EpsSchedule) -> list[PairingEstimate]:
    """Pairings D^{+/-} f(grad g) for several (f, g) at one point; every
    supremum over directions is refined in a single batch.

    The eps ladder is evaluated lazily: the first ``_EPS_PREFIX`` rungs, then
    the full ladder only for pairs whose traces have not stabilised.  The
    reported value depends on the prefix up to the first stable window only,
    so this changes cost, not results.
    """
    space = loc.space
    eps = sched.ladder()
    ws = [(f.weights(loc.leaves, space), g.weights(loc.leaves, space)) for f, g in pairs]

    def sups(idx, e):
        blocks = [np.vstack([wg, wf, wg[None] + e[:, None] * wf[None], wg[None] - e[:, None] * wf[None]])
                  for wf, wg in (ws[i] for i in idx)]
        vals, _, _ = loc.sup(np.vstack(blocks))
        return vals.reshape(len(idx), 2 + 2 * len(e))

    # a-priori Schwarz bound: distance functions are 1-Lipschitz
    lips = [float(np.abs(wf).sum() * np.abs(wg).sum()) for wf, wg in ws]
    m = min(len(eps), _EPS_PREFIX)
    out = [_pairing_from_sups(v, eps[:m], sched.factor, loc, lip)
           for v, lip in zip(sups(range(len(pairs)), eps[:m]), lips)]
    redo = [i for i, pe in enumerate(out) if not pe.converged and not pe.zero_gradient]
    if redo and m < len(eps):
        for i, v in zip(redo, sups(redo, eps)):
            out[i] = _pairing_from_sups(v, eps, sched.factor, loc, lips[i])
    return out


def _pairing_from_sups(vals, eps, factor, loc, lip=math.inf):
    n = len(eps)
    s0, sf = float(vals[0]), float(vals[1])
    sp, sm = vals[2:2 + n], vals[2 + n:]
    if s0 <= loc.opts.slope_zero_tol:
        return PairingEstimate(0.0, 0.0, [], True, True, sf, s0, zero_gradient=True, backend=loc.backend)
    qp = (sp * sp - s0 * s0) / (2 * eps)
    qm = (sm * sm - s0 * s0) / (-2 * eps)
    d_plus, kp, ok_p = _side(eps, qp, factor)
    d_minus, km, ok_m = _side(eps, qm, factor)
    # inf over eps > 0 and sup over eps < 0 bound the limits
    d_plus = min(d_plus, float(qp[:kp + 1].min()))
    d_minus = max(d_minus, float(qm[:km + 1].max()))
    clamped = max(abs(d_plus), abs(d_minus)) > lip
    d_plus, d_minus = (min(lip, max(-lip, v)) for v in (d_plus, d_minus))
    reordered = d_minus > d_plus
    if reordered:
        # convexity forces d_minus <= d_plus; a crossing is estimator noise
        d_plus = d_minus = 0.5 * (d_plus + d_minus)
    monotone = bool(np.all(np.diff(qp) <= MONOTONE_TOL) and np.all(np.diff(qm) >= -MONOTONE_TOL))
    trace = [(float(e), float(v)) for e, v in zip(eps, qp)] + [(float(-e), float(v)) for e, v in zip(eps, qm)]
    return PairingEstimate(d_plus, d_minus, trace, ok_p and ok_m, monotone, sf, s0, backend=loc.backend,
                           reordered=reordered, clamped=clamped)


def pairing_from_local(loc: LocalData, f: ScalarField, g: ScalarField, sched: EpsSchedule) -> PairingEstimate:
    return pairings_from_local(loc, [(f, g)], sched)[0]


def local_data(space, fields, x, opts: SlopeOptions | None = None) -> LocalData:
    opts = opts or SlopeOptions()
    leaves = _collect_leaves(space, fields)
    if not leaves:
        leaves = [space.check_point(x)]  # constant fields: any leaf, weight zero
    return LocalData(space, x, leaves, opts)


def pairing(space: MetricSpace, f: ScalarField, g: ScalarField, x,
            sched: EpsSchedule | None = None, opts: SlopeOptions | None = None) -> PairingEstimate:
    """D^+ f(grad g)(x) and D^- f(grad g)(x) from the eps-ladder of
    (|D(g + eps f)|^2 - |Dg|^2) / (2 eps)."""
    sched = sched or EpsSchedule()
    if len(sched.ladder()) == 0:
        raise EstimationError("empty eps ladder")
    loc = local_data(space, [f, g], x, opts)
    return pairing_from_local(loc, f, g, sched)


def pairing_sign_dual(space, f, g, x, sched=None, opts=None, tol: float = 1e-6):
    """Pairings of (-f, g) and (f, g); checks D^{+/-}(-f)(grad g) = -D^{-/+} f(grad g)."""
    sched = sched or EpsSchedule()
    loc = local_data(space, [f, g], x, opts)
    neg, pos = pairings_from_local(loc, [(-f, g), (f, g)], sched)
    if abs(neg.d_plus + pos.d_minus) > 2 * tol or abs(neg.d_minus + pos.d_plus) > 2 * tol:
        raise EstimationError(
            f"sign duality violated: D+(-f)={neg.d_plus!r} vs -D-f={-pos.d_minus!r}, "
            f"D-(-f)={neg.d_minus!r} vs -D+f={-pos.d_plus!r}")
    return neg, pos
