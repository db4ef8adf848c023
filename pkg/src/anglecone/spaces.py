"""Concrete metric spaces: flat normed spaces, the round sphere and weighted graphs.

Every space exposes a distance oracle.  Spaces with a tangent sampler also
expose unit-speed probe paths leaving a point, which is how the calculus
module realises ``y -> x`` limits.
"""
from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph
from scipy.spatial import cKDTree

from .errors import AngleConeError, CapabilityError, DisconnectedGraphError, PointError

SPHERE_NORM_TOL = 1e-12
# antipodal / coincident points have no well-defined log direction below this
_DIRECTION_EPS = 1e-12


def _pnorm(v, p: float, axis=-1):
    v = np.abs(np.asarray(v, dtype=float))
    if math.isinf(p):
        return v.max(axis=axis)
    if p == 1:
        return v.sum(axis=axis)
    if p == 2:
        return np.sqrt((v * v).sum(axis=axis))
    return (v**p).sum(axis=axis) ** (1.0 / p)


def _van_der_corput(n: int) -> np.ndarray:
    """Base-2 radical inverse of 0..n-1; any prefix of length 2^k is equispaced."""
    i = np.arange(n, dtype=np.uint64)
    out = np.zeros(n)
    bit = 0.5
    while np.any(i):
        out += (i & np.uint64(1)) * bit
        i >>= np.uint64(1)
        bit /= 2
    return out


class MetricSpace:
    """Common interface.  Subclasses are immutable after construction."""

    kind: str = "abstract"
    length_space = False
    has_tangent_sampler = False
    has_geodesics = False
    has_measure_sampler = False

    def check_point(self, a):
        raise NotImplementedError

    def distance(self, a, b) -> float:
        a = self.check_point(a)
        b = self.check_point(b)
        return float(self.distances(a, np.asarray(b)[None] if not self.is_graph else np.array([b]))[0])

    def distances(self, a, pts) -> np.ndarray:
        raise NotImplementedError

    def rescale(self, lam: float) -> "MetricSpace":
        raise NotImplementedError

    def to_config(self) -> dict:
        raise NotImplementedError

    @property
    def is_graph(self) -> bool:
        return False

    def same_point(self, a, b, tol: float = 0.0) -> bool:
        return self.distance(a, b) <= tol

    def geodesic_separation(self, x, z1, z2, t, b1=0, b2=0) -> float:
        """d(gamma_1(t), gamma_2(t)) for geodesics from x toward z1 and z2."""
        return self.distance(self.geodesic_point(x, z1, t, b1), self.geodesic_point(x, z2, t, b2))

    def unscaled(self) -> tuple["MetricSpace", float]:
        """(same space with unit scale, scale) so that d = scale * d_unscaled."""
        return self, 1.0

    def describe(self) -> str:
        return json.dumps(self.to_config(), sort_keys=True)

    def _need(self, flag: str, what: str):
        if not getattr(self, flag):
            raise CapabilityError(f"{self.kind} space has no {what}")


# --------------------------------------------------------------------------
# flat spaces


class NormedSpace(MetricSpace):
    """R^d with the p-norm, optionally with all distances multiplied by ``scale``."""

    kind = "normed_p"
    length_space = True
    has_tangent_sampler = True
    has_geodesics = True
    has_measure_sampler = True

    def __init__(self, dimension: int, p: float = 2.0, scale: float = 1.0):
        if dimension < 1:
            raise AngleConeError("dimension must be >= 1")
        p = float(p)
        if not p >= 1:
            raise AngleConeError(f"norm exponent must lie in [1, inf], got {p}")
        if not scale > 0:
            raise AngleConeError("scale must be positive")
        self.dimension = int(dimension)
        self.p = p
        self.scale = float(scale)

    def __repr__(self):
        return f"{type(self).__name__}(dimension={self.dimension}, p={self.p}, scale={self.scale})"

    def check_point(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (self.dimension,):
            raise PointError(f"expected a point of R^{self.dimension}, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise PointError("point has non-finite coordinates")
        return a

    def norm(self, v, axis=-1):
        return self.scale * _pnorm(v, self.p, axis=axis)

    def distances(self, a, pts):
        pts = np.asarray(pts, dtype=float)
        return self.norm(pts - a)

    def rescale(self, lam):
        if not lam > 0:
            raise AngleConeError("rescaling factor must be positive")
        return type(self)(self.dimension, self.p, self.scale * lam) if type(self) is NormedSpace \
            else type(self)(self.dimension, scale=self.scale * lam)

    def unscaled(self):
        base = NormedSpace(self.dimension, self.p) if type(self) is NormedSpace else type(self)(self.dimension)
        return base, self.scale

    def to_config(self):
        p = "inf" if math.isinf(self.p) else self.p
        cfg = {"kind": self.kind, "dimension": self.dimension, "p": p}
        if self.scale != 1.0:
            cfg["scale"] = self.scale
        return cfg

    # tangent machinery -------------------------------------------------
    def tangent_basis(self, x):
        return np.eye(self.dimension)

    def unit(self, x, v):
        """Rescale tangent vectors (rows) to unit speed for this metric."""
        v = np.atleast_2d(np.asarray(v, dtype=float))
        n = self.norm(v)
        return v / n[:, None]

    def log_direction(self, x, z):
        d = np.asarray(z, dtype=float) - x
        if _pnorm(d, 2) <= _DIRECTION_EPS:
            return None
        return self.unit(x, d)[0]

    def step(self, x, dirs, ts):
        """Points reached at metric distance ``ts`` along unit-speed ``dirs``.

        Returns an array of shape (len(ts), len(dirs), dimension).
        """
        ts = np.asarray(ts, dtype=float)
        return x[None, None, :] + ts[:, None, None] * np.asarray(dirs)[None, :, :]

    def extra_directions(self, x):
        """Extreme points of the unit ball where the norm is not strictly convex."""
        d = self.dimension
        if math.isinf(self.p) and d <= 6:
            corners = np.array(np.meshgrid(*[[-1.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
            return self.unit(x, corners)
        if self.p == 1:
            return self.unit(x, np.vstack([np.eye(d), -np.eye(d)]))
        return np.empty((0, d))

    # geodesics ---------------------------------------------------------
    def geodesic_point(self, x, z, t, branch=0):
        d = self.distance(x, z)
        return x + (t / d) * (z - x)

    def geodesic_branches(self, x, z):
        return 1

    def geodesic_separation(self, x, z1, z2, t, b1=0, b2=0):
        # translation invariance: no cancellation against x at small t
        u1 = (z1 - x) / self.distance(x, z1)
        u2 = (z2 - x) / self.distance(x, z2)
        return float(self.norm(t * (u1 - u2)))

    # measure -----------------------------------------------------------
    def measure_sample(self, region, n, seed):
        if region is None:
            lo, hi = np.zeros(self.dimension), np.ones(self.dimension)
        else:
            lo, hi = (np.broadcast_to(np.asarray(r, dtype=float), (self.dimension,)) for r in region)
        if np.any(hi <= lo):
            raise AngleConeError("empty sampling box")
        rng = np.random.default_rng(seed)
        return lo + (hi - lo) * rng.random((n, self.dimension))


class EuclideanSpace(NormedSpace):
    kind = "euclidean"

    def __init__(self, dimension: int, scale: float = 1.0):
        super().__init__(dimension, 2.0, scale)

    def __repr__(self):
        return f"EuclideanSpace(dimension={self.dimension}, scale={self.scale})"

    def to_config(self):
        cfg = {"kind": "euclidean", "dimension": self.dimension}
        if self.scale != 1.0:
            cfg["scale"] = self.scale
        return cfg


# --------------------------------------------------------------------------
# sphere


def _sphere_angle(a, pts):
    # atan2 form stays accurate near 0 and pi where arccos of the dot product does not
    pts = np.asarray(pts, dtype=float)
    dot = pts @ a
    cross = np.linalg.norm(np.cross(pts, a), axis=-1)
    return np.arctan2(cross, dot)


class Sphere(MetricSpace):
    """Round 2-sphere of the given radius.  Points are unit vectors in R^3."""

    kind = "sphere"
    length_space = True
    has_tangent_sampler = True
    has_geodesics = True
    has_measure_sampler = True
    dimension = 3
    n_bearings = 64

    def __init__(self, radius: float = 1.0):
        if not radius > 0:
            raise AngleConeError("sphere radius must be positive")
        self.radius = float(radius)

    def __repr__(self):
        return f"Sphere(radius={self.radius})"

    def check_point(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (3,):
            raise PointError(f"sphere points live in R^3, got shape {a.shape}")
        if abs(np.linalg.norm(a) - 1.0) > SPHERE_NORM_TOL:
            raise PointError(f"sphere point must be a unit vector, |a| = {np.linalg.norm(a)!r}")
        return a

    def distances(self, a, pts):
        return self.radius * _sphere_angle(a, pts)

    def rescale(self, lam):
        if not lam > 0:
            raise AngleConeError("rescaling factor must be positive")
        return Sphere(self.radius * lam)

    def unscaled(self):
        return Sphere(1.0), self.radius

    def to_config(self):
        return {"kind": "sphere", "radius": self.radius}

    def tangent_basis(self, x):
        # deterministic frame: project the coordinate axis least aligned with x
        i = int(np.argmin(np.abs(x)))
        e = np.zeros(3)
        e[i] = 1.0
        e1 = e - (e @ x) * x
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(x, e1)
        return np.vstack([e1, e2])

    def unit(self, x, v):
        v = np.atleast_2d(np.asarray(v, dtype=float))
        v = v - np.outer(v @ x, x)
        return v / np.linalg.norm(v, axis=1)[:, None]

    def log_direction(self, x, z):
        z = np.asarray(z, dtype=float)
        v = z - (z @ x) * x
        if np.linalg.norm(v) <= 1e-9:
            return None  # z == x or z antipodal: every meridian is a minimiser
        return self.unit(x, v)[0]

    def step(self, x, dirs, ts):
        ang = np.asarray(ts, dtype=float) / self.radius
        dirs = np.asarray(dirs)
        pts = np.cos(ang)[:, None, None] * x[None, None, :] + np.sin(ang)[:, None, None] * dirs[None, :, :]
        return pts / np.linalg.norm(pts, axis=-1, keepdims=True)

    def extra_directions(self, x):
        return np.empty((0, 3))

    def geodesic_branches(self, x, z):
        return self.n_bearings if self.log_direction(x, z) is None and x @ z < 0 else 1

    def geodesic_point(self, x, z, t, branch=0):
        u = self.log_direction(x, z)
        if u is None:
            if branch >= self.n_bearings:
                raise AngleConeError(f"branch {branch} out of range")
            e1, e2 = self.tangent_basis(x)
            theta = 2 * math.pi * branch / self.n_bearings
            u = math.cos(theta) * e1 + math.sin(theta) * e2
        return self.step(x, u[None], [t])[0, 0]

    def measure_sample(self, region, n, seed):
        if region is not None:
            raise AngleConeError("sphere sampling region is always the whole sphere")
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((n, 3))
        return g / np.linalg.norm(g, axis=1)[:, None]


# --------------------------------------------------------------------------
# graphs


@dataclass(eq=False)
class WeightedGraph(MetricSpace):
    """Finite connected graph with positive edge weights; shortest-path metric.

    Not a length space.  Single-source shortest-path trees are cached per
    source behind a lock so concurrent readers see complete trees only.
    """

    n_nodes: int
    edges: list
    kind = "weighted_graph"
    has_geodesics = True
    has_measure_sampler = True
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def __post_init__(self):
        if self.n_nodes < 1:
            raise AngleConeError("graph needs at least one node")
        edges = [(int(u), int(v), float(w)) for u, v, w in self.edges]
        for u, v, w in edges:
            if not (0 <= u < self.n_nodes and 0 <= v < self.n_nodes):
                raise AngleConeError(f"edge ({u}, {v}) references a missing node")
            if not w > 0:
                raise AngleConeError(f"edge ({u}, {v}) has non-positive weight {w}")
        self.edges = edges
        # parallel edges: keep the lightest
        lightest = {}
        for a, b, c in edges:
            if a != b:
                key = (min(a, b), max(a, b))
                lightest[key] = min(c, lightest.get(key, math.inf))
        rows = [k[0] for k in lightest] + [k[1] for k in lightest]
        cols = [k[1] for k in lightest] + [k[0] for k in lightest]
        vals = list(lightest.values()) * 2
        mat = sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_nodes,) * 2)
        mat.sort_indices()
        self._adj = mat
        ncomp, labels = csgraph.connected_components(mat, directed=False)
        self._labels = labels
        self.connected = ncomp == 1

    @classmethod
    def from_points(cls, points, k: int = 8) -> "WeightedGraph":
        """Symmetrised k-nearest-neighbour graph with Euclidean edge weights."""
        points = np.asarray(points, dtype=float)
        tree = cKDTree(points)
        dist, idx = tree.query(points, k=k + 1)
        edges = [(i, int(j), float(d)) for i in range(len(points))
                 for d, j in zip(dist[i, 1:], idx[i, 1:]) if d > 0]
        return cls(len(points), edges)

    @property
    def is_graph(self):
        return True

    def check_point(self, a):
        if isinstance(a, (bool, np.bool_)) or not isinstance(a, (int, np.integer)):
            raise PointError(f"graph points are integer node ids, got {a!r}")
        if not 0 <= a < self.n_nodes:
            raise PointError(f"node {a} not in graph with {self.n_nodes} nodes")
        return int(a)

    def tree(self, source: int):
        """(distances, predecessors) of the shortest-path tree from ``source``."""
        source = self.check_point(source)
        with self._lock:
            hit = self._cache.get(source)
            if hit is None:
                dist, pred = csgraph.dijkstra(self._adj, directed=False, indices=source,
                                              return_predecessors=True)
                hit = (dist, pred)
                self._cache[source] = hit
        return hit

    def distances(self, a, pts):
        dist, _ = self.tree(a)
        out = dist[np.asarray(pts, dtype=int)]
        if np.any(np.isinf(out)):
            raise DisconnectedGraphError(f"node {a} and some target lie in different components")
        return out

    def distance(self, a, b):
        b = self.check_point(b)
        return float(self.distances(self.check_point(a), [b])[0])

    def neighbours_within(self, x: int, r: float):
        """Nodes y with 0 < d(x, y) <= r, and their distances."""
        dist, _ = self.tree(x)
        mask = (dist > 0) & (dist <= r)
        idx = np.flatnonzero(mask)
        return idx, dist[idx]

    def rescale(self, lam):
        if not lam > 0:
            raise AngleConeError("rescaling factor must be positive")
        return WeightedGraph(self.n_nodes, [(u, v, w * lam) for u, v, w in self.edges])

    def to_config(self):
        return {"kind": "weighted_graph", "n_nodes": self.n_nodes,
                "edges": [[u, v, w] for u, v, w in self.edges]}

    # geodesics: shortest-path polylines -------------------------------
    def shortest_paths(self, x: int, z: int, limit: int = 64) -> list:
        """All minimal paths x -> z (up to ``limit``), in lexicographic node order."""
        x, z = self.check_point(x), self.check_point(z)
        dz, _ = self.tree(z)
        if math.isinf(dz[x]):
            raise DisconnectedGraphError(f"nodes {x} and {z} are not connected")
        adj = self._adj
        tol = 1e-12 * max(1.0, dz[x])
        paths = []

        def walk(node, acc):
            if len(paths) >= limit:
                return
            if node == z:
                paths.append(acc)
                return
            start, end = adj.indptr[node], adj.indptr[node + 1]
            for nb, w in sorted(zip(adj.indices[start:end], adj.data[start:end])):
                if abs(w + dz[nb] - dz[node]) <= tol:
                    walk(int(nb), acc + [int(nb)])

        walk(x, [x])
        return paths

    def geodesic_branches(self, x, z):
        return len(self.shortest_paths(x, z))

    def geodesic_point(self, x, z, t, branch=0):
        paths = self.shortest_paths(x, z)
        if branch >= len(paths):
            raise AngleConeError(f"branch {branch} out of range ({len(paths)} shortest paths)")
        path = paths[branch]
        acc = 0.0
        node = path[0]
        for a, b in zip(path, path[1:]):
            acc += self.distance(a, b)
            if acc > t + 1e-12:
                break
            node = b
        return node

    def measure_sample(self, region, n, seed):
        nodes = np.arange(self.n_nodes) if region is None else np.asarray(list(region), dtype=int)
        if nodes.size == 0:
            raise AngleConeError("empty node set")
        rng = np.random.default_rng(seed)
        return [int(v) for v in rng.choice(nodes, size=n)]


# --------------------------------------------------------------------------
# construction helpers


def euclidean(dimension: int = 2) -> EuclideanSpace:
    return EuclideanSpace(dimension)


def normed(dimension: int, p) -> NormedSpace:
    p = math.inf if p in ("inf", "Infinity", math.inf) else float(p)
    if p == 2:
        return NormedSpace(dimension, 2.0)
    return NormedSpace(dimension, p)


def rescale(space: MetricSpace, lam: float) -> MetricSpace:
    """Same point set with every distance multiplied by ``lam``."""
    return space.rescale(lam)


def from_config(cfg: dict) -> MetricSpace:
    kind = cfg.get("kind")
    if kind == "euclidean":
        return EuclideanSpace(int(cfg.get("dimension", 2)), float(cfg.get("scale", 1.0)))
    if kind == "normed_p":
        p = cfg.get("p", 2)
        p = math.inf if p in ("inf", "Infinity") else float(p)
        return NormedSpace(int(cfg.get("dimension", 2)), p, float(cfg.get("scale", 1.0)))
    if kind == "sphere":
        return Sphere(float(cfg.get("radius", 1.0)))
    if kind == "weighted_graph":
        edges = cfg.get("edges") or []
        n = cfg.get("n_nodes")
        if n is None:
            n = 1 + max(max(int(u), int(v)) for u, v, _ in edges) if edges else 0
        g = WeightedGraph(int(n), edges)
        if not g.connected:
            raise DisconnectedGraphError("graph is not connected")
        return g
    raise AngleConeError(f"unknown space kind {kind!r}")


def read_edge_csv(path) -> list:
    edges = []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            u, v, w = row
            edges.append((int(u), int(v), float(w)))
    return edges


def load_space(path) -> MetricSpace:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        return from_config({"kind": "weighted_graph", "edges": read_edge_csv(path)})
    return from_config(json.loads(path.read_text()))


# --------------------------------------------------------------------------
# probes


@dataclass(frozen=True)
class TangentProbe:
    """Unit-speed path leaving ``base`` in a fixed direction."""

    space: MetricSpace
    base: np.ndarray
    index: int
    direction: np.ndarray
    structured: bool = False

    def step(self, t: float):
        return self.space.step(self.base, self.direction[None], [t])[0, 0]


def random_directions(space: MetricSpace, x, n: int, seed: int) -> np.ndarray:
    """``n`` unit-speed directions at x: nested van der Corput fan in 2-D tangent
    spaces, Gaussian-normalised otherwise."""
    basis = space.tangent_basis(x)
    k = basis.shape[0]
    rng = np.random.default_rng(seed)
    if k == 2:
        theta = 2 * math.pi * ((rng.random() + _van_der_corput(n)) % 1.0)
        coords = np.column_stack([np.cos(theta), np.sin(theta)])
    elif k == 1:
        coords = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)[:, None]
    else:
        coords = rng.standard_normal((n, k))
    return space.unit(x, coords @ basis)


def structured_directions(space: MetricSpace, x, refs) -> np.ndarray:
    """Toward/away directions for each reference point, their pairwise sums and
    differences, and the non-strictly-convex extreme directions of the norm."""
    base = []
    for z in refs:
        u = space.log_direction(x, z)
        if u is not None:
            base.extend([u, -u])
    out = list(base)
    for i in range(len(base)):
        for j in range(i + 1, len(base)):
            for s in (base[i] + base[j], base[i] - base[j]):
                if np.linalg.norm(s) > 1e-9:
                    out.append(space.unit(x, s)[0])
    extra = space.extra_directions(x)
    out.extend(list(extra))
    if not out:
        return np.empty((0, space.dimension))
    return np.vstack(out)


def direction_array(space: MetricSpace, x, n: int, seed: int, refs=()) -> tuple[np.ndarray, int]:
    """Random directions followed by structured ones; returns (dirs, n_random)."""
    space._need("has_tangent_sampler", "tangent sampler")
    if n < 1:
        raise AngleConeError("need at least one direction")
    x = space.check_point(x)
    rand = random_directions(space, x, n, seed)
    struct = structured_directions(space, x, refs)
    return np.vstack([rand, struct]), n


def sample_directions(space: MetricSpace, x, n: int, seed: int, refs=()) -> list[TangentProbe]:
    dirs, n_rand = direction_array(space, x, n, seed, refs)
    x = space.check_point(x)
    return [TangentProbe(space, x, i, d, structured=i >= n_rand) for i, d in enumerate(dirs)]


def measure_sample(space: MetricSpace, region=None, n: int = 1, seed: int = 0):
    """``n`` samples from the reference measure restricted to ``region``."""
    space._need("has_measure_sampler", "measure sampler")
    if n < 1:
        raise AngleConeError("need at least one sample")
    return space.measure_sample(region, n, seed)
