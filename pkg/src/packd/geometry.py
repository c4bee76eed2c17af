"""Convex polytope kernel in dimension 2 and 3.

Bodies are stored by their extreme points together with a facet
representation ``normals @ x <= offsets`` (unit outward normals).  All
objects are immutable after construction.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

EPS = 1e-9
FACET_MERGE_TOL = 1e-7


class DegenerateInputError(ValueError):
    """Point set does not span a full-dimensional body."""


class GeometryError(ValueError):
    pass


def _is_rational(x) -> bool:
    return isinstance(x, Rational) and not isinstance(x, bool)


def _exact_points(points) -> list[tuple[Fraction, ...]] | None:
    try:
        rows = [tuple(p) for p in points]
    except TypeError:
        return None
    if rows and all(_is_rational(c) for row in rows for c in row):
        return [tuple(Fraction(c) for c in row) for row in rows]
    return None


def _merge_facets(normals: np.ndarray, offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Collapse coplanar simplices into a single facet."""
    keys = np.round(normals / FACET_MERGE_TOL).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    first.sort()
    return normals[first], offsets[first]


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Full-dimensional convex polytope given by its vertices.

    Use :func:`convex_hull` to build one from an arbitrary point cloud; the
    constructor assumes the vertices are already extreme.
    """

    vertices: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    volume: float
    simplices: np.ndarray = field(repr=False)
    exact_vertices: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        for arr in (self.vertices, self.normals, self.offsets):
            arr.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.normals)

    @cached_property
    def centroid(self) -> np.ndarray:
        """Centroid of the solid (not of the vertex set)."""
        c0 = self.vertices.mean(axis=0)
        total = np.zeros(self.dim)
        weight = 0.0
        for simplex in self.simplices:
            pts = self.vertices[simplex]
            vol = abs(np.linalg.det(pts - c0))
            total += vol * (pts.sum(axis=0) + c0) / (self.dim + 1)
            weight += vol
        return total / weight

    @cached_property
    def circumradius(self) -> float:
        """Largest vertex distance from the origin."""
        return float(np.linalg.norm(self.vertices, axis=1).max())

    @cached_property
    def diameter(self) -> float:
        diff = self.vertices[:, None, :] - self.vertices[None, :, :]
        return float(np.sqrt((diff ** 2).sum(axis=2)).max())

    @cached_property
    def edges(self) -> np.ndarray:
        """Vertex index pairs of the polytope edges (3D) or sides (2D)."""
        if self.dim == 2:
            n = self.n_vertices
            return np.array([(i, (i + 1) % n) for i in range(n)])
        incident = self.incidence()
        cand = set()
        for simplex in self.simplices:
            for i, j in itertools.combinations(sorted(int(k) for k in simplex), 2):
                cand.add((i, j))
        pairs = [(i, j) for i, j in sorted(cand) if np.count_nonzero(incident[:, i] & incident[:, j]) >= 2]
        return np.array(pairs, dtype=int)

    def incidence(self, tol: float = 1e-7) -> np.ndarray:
        """Boolean facet-by-vertex incidence matrix."""
        scale = max(1.0, self.circumradius)
        slack = self.offsets[:, None] - self.normals @ self.vertices.T
        return np.abs(slack) <= tol * scale

    def support(self, direction) -> float:
        return float((self.vertices @ np.asarray(direction, dtype=float)).max())

    def contains(self, points, tol: float = EPS) -> np.ndarray:
        """Closed containment test, vectorised over rows of ``points``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts @ self.normals.T - self.offsets <= tol).all(axis=1)

    def contains_interior(self, points, tol: float = EPS) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return (pts @ self.normals.T - self.offsets < -tol).all(axis=1)

    def translate(self, p) -> "ConvexBody":
        return affine_image(self, np.eye(self.dim), p)

    def __neg__(self) -> "ConvexBody":
        return affine_image(self, -np.eye(self.dim), np.zeros(self.dim))

    def scaled(self, s: float) -> "ConvexBody":
        return affine_image(self, s * np.eye(self.dim), np.zeros(self.dim))

    def is_centrally_symmetric(self, tol: float = EPS) -> bool:
        c = self.vertices.mean(axis=0)
        v = self.vertices - c
        d = np.linalg.norm(v[:, None, :] + v[None, :, :], axis=2)
        return bool((d.min(axis=1) <= tol * max(1.0, self.circumradius)).all())

    def to_dict(self) -> dict:
        order = np.lexsort(self.vertices.T[::-1])
        return {"dim": self.dim, "vertices": self.vertices[order].tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def convex_hull(points, *, dim: int | None = None) -> ConvexBody:
    """Convex hull of a finite point set in the plane or in space.

    Raises
    ------
    DegenerateInputError
        If the points do not span a full-dimensional body.
    """
    if isinstance(points, np.ndarray) and points.dtype.kind == "f":
        exact, pts = None, points
    else:
        exact = _exact_points(points)
        pts = np.asarray([[float(c) for c in p] for p in points], dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (2, 3):
        raise GeometryError(f"points must be an (n, 2) or (n, 3) array, got {pts.shape}")
    if dim is not None and pts.shape[1] != dim:
        raise GeometryError(f"expected dimension {dim}, got {pts.shape[1]}")
    if not np.isfinite(pts).all():
        raise GeometryError("non-finite coordinates")
    d = pts.shape[1]
    if len(pts) < d + 1:
        raise DegenerateInputError(f"need at least {d + 1} points, got {len(pts)}")
    centred = pts - pts.mean(axis=0)
    scale = max(np.abs(centred).max(), 1e-300)
    sv = np.linalg.svd(centred / scale, compute_uv=False)
    if sv[-1] <= 1e-10 * sv[0]:
        raise DegenerateInputError("points are affinely dependent")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise DegenerateInputError(str(exc)) from exc
    if hull.volume <= 0:
        raise DegenerateInputError("zero-volume hull")

    idx = np.array(sorted(set(hull.vertices.tolist())))
    remap = {int(old): new for new, old in enumerate(idx)}
    verts = pts[idx]
    if d == 2:
        # counter-clockwise order
        ctr = verts.mean(axis=0)
        order = np.argsort(np.arctan2(verts[:, 1] - ctr[1], verts[:, 0] - ctr[0]))
        verts = verts[order]
        idx = idx[order]
        remap = {int(old): new for new, old in enumerate(idx)}
    simplices = np.array([[remap[int(i)] for i in s] for s in hull.simplices if all(int(i) in remap for i in s)])
    normals, offsets = _merge_facets(hull.equations[:, :d], -hull.equations[:, d])
    # offsets re-tightened against the actual vertices
    offsets = (verts @ normals.T).max(axis=0)
    exact_verts = tuple(exact[i] for i in idx) if exact is not None else None
    return ConvexBody(verts, normals, offsets, float(hull.volume), simplices, exact_verts)


def volume(body: ConvexBody) -> float:
    """Volume (area in the plane) by a fan of simplices from an interior point."""
    c = body.vertices.mean(axis=0)
    dets = [abs(np.linalg.det(body.vertices[s] - c)) for s in body.simplices]
    return float(sum(dets)) / (2.0 if body.dim == 2 else 6.0)


def _det_exact(rows: Sequence[Sequence[Fraction]]) -> Fraction:
    if len(rows) == 2:
        (a, b), (c, d) = rows
        return a * d - b * c
    (a, b, c), (d, e, f), (g, h, i) = rows
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


def exact_volume(body: ConvexBody) -> Fraction:
    """Exact volume for a body whose vertices were given as rationals.

    The triangulation comes from the floating-point hull; the determinants
    are evaluated in rational arithmetic.
    """
    if body.exact_vertices is None:
        raise GeometryError("body has no exact rational vertices")
    ev = body.exact_vertices
    d = body.dim
    c = tuple(sum(v[k] for v in ev) / len(ev) for k in range(d))
    total = Fraction(0)
    for s in body.simplices:
        rows = [[ev[i][k] - c[k] for k in range(d)] for i in s]
        total += abs(_det_exact(rows))
    return total / (2 if d == 2 else 6)


def _combine_exact(a: ConvexBody, b: ConvexBody, sign: int):
    if a.exact_vertices is None or b.exact_vertices is None:
        return None
    return [tuple(x + sign * y for x, y in zip(p, q)) for p in a.exact_vertices for q in b.exact_vertices]


def minkowski_sum(a: ConvexBody, b: ConvexBody) -> ConvexBody:
    if a.dim != b.dim:
        raise GeometryError(f"dimension mismatch: {a.dim} vs {b.dim}")
    exact = _combine_exact(a, b, +1)
    if exact is not None:
        return convex_hull(exact)
    pts = (a.vertices[:, None, :] + b.vertices[None, :, :]).reshape(-1, a.dim)
    return convex_hull(pts)


def minkowski_difference_set(a: ConvexBody, b: ConvexBody) -> ConvexBody:
    """The set ``a - b = {x - y}``; interiors of ``a`` and ``b + t`` meet iff
    ``t`` is interior to it."""
    if a.dim != b.dim:
        raise GeometryError(f"dimension mismatch: {a.dim} vs {b.dim}")
    if a is b and a.is_centrally_symmetric(1e-12):
        # K - K = 2 (K - c)
        if a.exact_vertices is not None:
            ev = a.exact_vertices
            c = [sum(v[k] for v in ev) / len(ev) for k in range(a.dim)]
            return convex_hull([tuple(2 * (x - y) for x, y in zip(v, c)) for v in ev])
        return affine_image(a, 2 * np.eye(a.dim), -2 * a.vertices.mean(axis=0))
    exact = _combine_exact(a, b, -1)
    if exact is not None:
        return convex_hull(exact)
    pts = (a.vertices[:, None, :] - b.vertices[None, :, :]).reshape(-1, a.dim)
    return convex_hull(pts)


def difference_body(body: ConvexBody) -> ConvexBody:
    """``DK = (K - K) / 2``, centred at the origin."""
    full = minkowski_difference_set(body, body)
    if full.exact_vertices is not None:
        half = Fraction(1, 2)
        return convex_hull([tuple(half * c for c in v) for v in full.exact_vertices])
    return affine_image(full, 0.5 * np.eye(body.dim), np.zeros(body.dim))


def affine_image(body: ConvexBody, matrix, translation=None) -> ConvexBody:
    """Image of ``body`` under ``x -> matrix @ x + translation``."""
    d = body.dim
    m = np.asarray(matrix, dtype=float)
    if m.shape != (d, d):
        raise GeometryError(f"matrix must be {d}x{d}")
    det = np.linalg.det(m)
    if abs(det) < 1e-14:
        raise GeometryError("singular affine map")
    t = np.zeros(d) if translation is None else np.asarray([float(c) for c in translation])
    verts = body.vertices @ m.T + t
    normals = body.normals @ np.linalg.inv(m)
    norms = np.linalg.norm(normals, axis=1)
    normals = normals / norms[:, None]
    offsets = (verts @ normals.T).max(axis=0)
    simplices = body.simplices
    exact = None
    if body.exact_vertices is not None:
        em = _exact_points(matrix) if not isinstance(matrix, np.ndarray) else None
        et = _exact_points([translation]) if translation is not None and not isinstance(translation, np.ndarray) else [tuple(Fraction(0) for _ in range(d))]
        if em is not None and et is not None:
            exact = tuple(
                tuple(sum(em[r][k] * v[k] for k in range(d)) + et[0][r] for r in range(d))
                for v in body.exact_vertices
            )
    if d == 2 and det < 0:
        order = np.arange(len(verts))[::-1]
        verts = verts[order]
        inv = np.empty_like(order)
        inv[order] = np.arange(len(order))
        simplices = inv[simplices]
        if exact is not None:
            exact = tuple(exact[i] for i in order)
    return ConvexBody(verts, normals, offsets, body.volume * abs(det), simplices, exact)


def _embedding_frame(base: ConvexBody | np.ndarray):
    """Return (points3d, origin, unit normal) for a planar polygon in space."""
    pts = base.vertices if isinstance(base, ConvexBody) else np.asarray(base, dtype=float)
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    origin = pts.mean(axis=0)
    _, sv, vt = np.linalg.svd(pts - origin)
    if sv[1] <= 1e-12 * max(sv[0], 1e-300):
        raise DegenerateInputError("base polygon is degenerate")
    if sv.size > 2 and sv[2] > 1e-9 * sv[0]:
        raise GeometryError("base points are not coplanar")
    return pts, origin, vt[2]


def _lift_exact(base: ConvexBody, z=0):
    if base.exact_vertices is None:
        return None
    if base.dim == 2:
        return [tuple(v) + (Fraction(z),) for v in base.exact_vertices]
    return list(base.exact_vertices)


def cone_over(base: ConvexBody | np.ndarray, apex) -> ConvexBody:
    """Cone with a planar convex base and an apex off the base plane.

    A 2D ``base`` is placed in the plane ``z = 0``.
    """
    pts, origin, normal = _embedding_frame(base)
    apex_f = np.array([float(c) for c in apex])
    height = abs(float((apex_f - origin) @ normal))
    if height <= EPS * max(1.0, np.abs(pts).max()):
        raise GeometryError("apex lies in the base plane")
    exact_base = _lift_exact(base) if isinstance(base, ConvexBody) else None
    exact_apex = _exact_points([apex])
    if exact_base is not None and exact_apex is not None:
        return convex_hull(exact_base + exact_apex)
    return convex_hull(np.vstack([pts, apex_f]))


def cylinder_over(base: ConvexBody | np.ndarray, segment) -> ConvexBody:
    """Minkowski sum of a planar base and the segment ``[0, segment]``."""
    pts, _, normal = _embedding_frame(base)
    seg = np.array([float(c) for c in segment])
    if abs(float(seg @ normal)) <= EPS * max(1.0, np.linalg.norm(seg)):
        raise GeometryError("segment is parallel to the base plane")
    exact_base = _lift_exact(base) if isinstance(base, ConvexBody) else None
    exact_seg = _exact_points([segment])
    if exact_base is not None and exact_seg is not None:
        s = exact_seg[0]
        return convex_hull(exact_base + [tuple(a + b for a, b in zip(p, s)) for p in exact_base])
    return convex_hull(np.vstack([pts, pts + seg]))


def polygon_area(vertices) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(x @ np.roll(y, -1) - y @ np.roll(x, -1)))


def _slab_pair_area(n1, w1, n2, w2) -> float:
    # parallelogram bounded by |n1.x - c1| <= w1/2 and |n2.x - c2| <= w2/2
    s = abs(n1[0] * n2[1] - n1[1] * n2[0])
    return np.inf if s < 1e-15 else w1 * w2 / s


def min_enclosing_parallelogram(body: ConvexBody, tol: float = 1e-7) -> tuple[ConvexBody, float]:
    """Minimum-area parallelogram containing a centrally symmetric polygon.

    For a fixed second side direction the area, as a function of the first
    direction, is monotone between consecutive edge normals, so the optimum
    has both side pairs flush with polygon edges.  Widths for every edge
    normal are found with an antipodal sweep; all direction pairs are then
    compared.

    Returns
    -------
    (parallelogram, ratio)
        The enclosing parallelogram and ``area(parallelogram) / area(body)``.
    """
    if body.dim != 2:
        raise GeometryError("min_enclosing_parallelogram needs a planar body")
    if not body.is_centrally_symmetric(tol):
        raise GeometryError("body is not centrally symmetric")
    v = body.vertices
    n = len(v)
    edges = np.roll(v, -1, axis=0) - v
    normals = np.column_stack([edges[:, 1], -edges[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    # opposite edges are parallel for a symmetric polygon: keep one of each
    half = n // 2
    normals = normals[:half]
    widths = np.empty(half)
    proj = v @ normals[0]
    j = int(np.argmin(proj))
    for i in range(half):
        # rotating calipers: the antipodal vertex only moves forward
        while v[(j + 1) % n] @ normals[i] < v[j] @ normals[i] - 1e-15:
            j = (j + 1) % n
        widths[i] = v[i] @ normals[i] - v[j] @ normals[i]
    best = (np.inf, 0, 0)
    for i in range(half):
        for k in range(i + 1, half):
            a = _slab_pair_area(normals[i], widths[i], normals[k], widths[k])
            if a < best[0] - 1e-15:
                best = (a, i, k)
    area, i, k = best
    ctr = v.mean(axis=0)
    corners = []
    n1, n2 = normals[i], normals[k]
    for s1, s2 in itertools.product((-0.5, 0.5), repeat=2):
        rhs = np.array([n1 @ ctr + s1 * widths[i], n2 @ ctr + s2 * widths[k]])
        corners.append(np.linalg.solve(np.vstack([n1, n2]), rhs))
    para = convex_hull(np.array(corners))
    return para, para.volume / body.volume


def regular_polygon(k: int, radius: float = 1.0, phase: float = 0.0) -> ConvexBody:
    ang = phase + 2 * np.pi * np.arange(k) / k
    return convex_hull(np.column_stack([radius * np.cos(ang), radius * np.sin(ang)]))


def body_from_dict(data: dict) -> ConvexBody:
    if "vertices" not in data:
        raise GeometryError("body record needs 'vertices'")
    body = convex_hull(data["vertices"])
    if "dim" in data and int(data["dim"]) != body.dim:
        raise GeometryError("'dim' does not match vertex coordinates")
    return body


def bodies_equal(a: ConvexBody, b: ConvexBody, tol: float = 1e-9) -> bool:
    if a.dim != b.dim or a.n_vertices != b.n_vertices:
        return False
    d = np.linalg.norm(a.vertices[:, None, :] - b.vertices[None, :, :], axis=2)
    return bool((d.min(axis=1) <= tol).all() and (d.min(axis=0) <= tol).all())


def random_points_in_hull(body: ConvexBody, count: int, rng: np.random.Generator) -> np.ndarray:
    """Random points inside ``body`` (Dirichlet weights over its vertices)."""
    w = rng.dirichlet(np.ones(body.n_vertices), size=count)
    return w @ body.vertices


__all__ = [
    "ConvexBody",
    "DegenerateInputError",
    "GeometryError",
    "EPS",
    "convex_hull",
    "volume",
    "exact_volume",
    "minkowski_sum",
    "minkowski_difference_set",
    "difference_body",
    "affine_image",
    "cone_over",
    "cylinder_over",
    "min_enclosing_parallelogram",
    "polygon_area",
    "regular_polygon",
    "body_from_dict",
    "bodies_equal",
    "random_points_in_hull",
]
