"""Named bodies and planar bases.

Bodies are built at their defining coordinates (no volume normalisation).
Curved bodies are replaced by inscribed polytopes, so densities computed
for them are lower bounds for the smooth body.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .geometry import ConvexBody, GeometryError, cone_over, convex_hull, regular_polygon


class UnknownBodyError(KeyError):
    pass


@dataclass(frozen=True)
class BodySpec:
    name: str
    params: dict = field(default_factory=dict)


_GOLDEN = (1 + 5 ** 0.5) / 2


def icosphere(level: int = 3) -> ConvexBody:
    """Subdivided icosahedron with vertices on the unit sphere."""
    t = _GOLDEN
    verts = [np.array(v, dtype=float) for v in [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]]
    verts = [v / np.linalg.norm(v) for v in verts]
    faces = [tuple(map(int, s)) for s in convex_hull(np.array(verts)).simplices]
    for _ in range(level):
        cache: dict = {}

        def mid(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return convex_hull(np.array(verts))


def _circle_points(n: int, radius: float = 1.0, z: float | None = None) -> np.ndarray:
    ang = 2 * np.pi * np.arange(n) / n
    pts = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    return pts if z is None else np.column_stack([pts, np.full(n, z)])


def _check_fraction(x, lo, hi, name):
    if not lo < x <= hi:
        raise GeometryError(f"{name} must lie in ({lo}, {hi}], got {x}")


def cube_slab(lam) -> ConvexBody:
    """``{|x_i| <= 1, |x_1 + x_2 + x_3| <= lam}`` for ``0 < lam <= 3``."""
    _check_fraction(lam, 0, 3, "lambda")
    exact = isinstance(lam, Rational)
    one = Fraction(1) if exact else 1.0
    pts = []
    corners = list(itertools.product((-one, one), repeat=3))
    for c in corners:
        if abs(sum(c)) <= lam:
            pts.append(c)
    for a, b in itertools.combinations(corners, 2):
        if sum(x != y for x, y in zip(a, b)) != 1:
            continue
        sa, sb = sum(a), sum(b)
        for target in (lam, -lam):
            if (sa - target) * (sb - target) < 0:
                t = (target - sa) / (sb - sa)
                pts.append(tuple(x + t * (y - x) for x, y in zip(a, b)))
    return convex_hull(pts)


def ball_slab(lam: float, n: int = 64) -> ConvexBody:
    """Inscribed polytope for ``{|x| <= 1, |x_3| <= lam}`` (``0 < lam <= 1``)."""
    _check_fraction(lam, 0, 1, "lambda")
    if n < 8:
        raise GeometryError("resolution n must be at least 8")
    zmax = float(lam)
    phi_max = np.arcsin(min(zmax, 1.0))
    rings = max(2, int(np.ceil(phi_max / (2 * np.pi / n))) + 1)
    pts = []
    for phi in np.linspace(-phi_max, phi_max, 2 * rings - 1):
        r = np.cos(phi)
        if r < 1e-9:
            continue
        pts.append(_circle_points(n, r, np.sin(phi)))
    if zmax >= 1.0:
        pts.append(np.array([[0, 0, 1.0], [0, 0, -1.0]]))
    return convex_hull(np.vstack(pts))


def double_cone(n: int = 64) -> ConvexBody:
    """Inscribed polytope for ``{sqrt(x_1^2 + x_2^2) + |x_3| <= 1}``."""
    return convex_hull(np.vstack([_circle_points(n, 1.0, 0.0), [[0, 0, 1.0], [0, 0, -1.0]]]))


def regular_tetrahedron() -> ConvexBody:
    return convex_hull([(0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1)])


def regular_octahedron() -> ConvexBody:
    pts = []
    for k in range(3):
        for s in (-1, 1):
            p = [0, 0, 0]
            p[k] = s
            pts.append(tuple(p))
    return convex_hull(pts)


def affine_octahedron() -> ConvexBody:
    """The octahedron with vertices ``(+-1, +-1, 0)`` and ``(0, 0, +-1)``."""
    pts = [(a, b, 0) for a in (-1, 1) for b in (-1, 1)] + [(0, 0, 1), (0, 0, -1)]
    return convex_hull(pts)


def cube() -> ConvexBody:
    return convex_hull(list(itertools.product((-1, 1), repeat=3)))


def rhombic_dodecahedron(circumscribed: bool = True) -> ConvexBody:
    """Rhombic dodecahedron; by default with inradius 1 (circumscribing the unit ball)."""
    pts = list(itertools.product((-1, 1), repeat=3))
    for k in range(3):
        for s in (-2, 2):
            p = [0, 0, 0]
            p[k] = s
            pts.append(tuple(p))
    if not circumscribed:
        return convex_hull(pts)
    return convex_hull(np.array(pts, dtype=float) / np.sqrt(2))


def symmetric_hexagon(a, b) -> ConvexBody:
    """Unit square with right triangles of legs ``a`` (along x) and ``b``
    (along y) cut off at the corners ``(0, 0)`` and ``(1, 1)``.

    ``a = b = 1/2`` is an affine-regular hexagon; ``a = b = 0`` the square.
    """
    for x, nm in ((a, "a"), (b, "b")):
        if not 0 <= x <= Fraction(1, 2):
            raise GeometryError(f"leg {nm} must lie in [0, 1/2], got {x}")
    pts = [(a, 0), (1, 0), (1, 1 - b), (1 - a, 1), (0, 1), (0, b)]
    if a == 0 or b == 0:
        pts = [(0, 0), (1, 0), (1, 1), (0, 1)]
    return convex_hull(pts)


def _apex_over(base: ConvexBody, height=1):
    if base.exact_vertices is not None and isinstance(height, Rational):
        ev = base.exact_vertices
        c = tuple(sum(v[k] for v in ev) / len(ev) for k in range(2))
        return (c[0], c[1], Fraction(height))
    c = base.vertices.mean(axis=0)
    return (float(c[0]), float(c[1]), float(height))


def pyramid(base: ConvexBody, height=1) -> ConvexBody:
    """Cone over a planar base in ``z = 0`` with apex above the vertex mean."""
    return cone_over(base, _apex_over(base, height))


def make_base(name: str, **params) -> ConvexBody:
    """Planar bases: square, triangle, ngon(k), circle(n), hexagon(a, b)."""
    if name == "square":
        return convex_hull([(0, 0), (1, 0), (1, 1), (0, 1)])
    if name == "triangle":
        return convex_hull([(0, 0), (1, 0), (0, 1)])
    if name in ("ngon", "regular_polygon"):
        return regular_polygon(int(params.get("k", 6)))
    if name == "regular_hexagon":
        return regular_polygon(6)
    if name == "circle":
        return regular_polygon(int(params.get("n", 96)))
    if name in ("hexagon", "symmetric_hexagon"):
        return symmetric_hexagon(params.get("a", Fraction(1, 2)), params.get("b", Fraction(1, 2)))
    raise UnknownBodyError(name)


def _ball(n=3, **_):
    return icosphere(int(n))


BODIES = {
    "ball": lambda **p: _ball(p.get("n", 3)),
    "octahedron": lambda **p: regular_octahedron(),
    "tetrahedron": lambda **p: regular_tetrahedron(),
    "cube": lambda **p: cube(),
    "cube_slab": lambda **p: cube_slab(p.get("lam", 1)),
    "ball_slab": lambda **p: ball_slab(p.get("lam", 0.5), int(p.get("n", 64))),
    "double_cone": lambda **p: double_cone(int(p.get("n", 64))),
    "square_pyramid": lambda **p: pyramid(make_base("square"), p.get("h", 1)),
    "hexagonal_pyramid": lambda **p: pyramid(make_base("regular_hexagon"), p.get("h", 1)),
    "affine_hexagonal_pyramid": lambda **p: pyramid(make_base("hexagon"), p.get("h", 1)),
    "circular_cone": lambda **p: pyramid(make_base("circle", n=int(p.get("n", 64))), p.get("h", 1)),
    "affine_octahedron": lambda **p: affine_octahedron(),
    "rhombic_dodecahedron": lambda **p: rhombic_dodecahedron(),
}

DESCRIPTIONS = {
    "ball": "unit ball, inscribed icosphere (n = subdivision level, default 3)",
    "octahedron": "regular octahedron |x|+|y|+|z| <= 1",
    "tetrahedron": "regular tetrahedron on alternate corners of the unit cube",
    "cube": "cube [-1, 1]^3",
    "cube_slab": "{|x_i| <= 1, |x1+x2+x3| <= lam}, 0 < lam <= 3",
    "ball_slab": "{|x| <= 1, |x3| <= lam}, 0 < lam <= 1, n points per ring",
    "double_cone": "{sqrt(x1^2+x2^2) + |x3| <= 1}, n-gon equator",
    "square_pyramid": "pyramid over the unit square, height h",
    "hexagonal_pyramid": "pyramid over the regular hexagon, height h",
    "affine_hexagonal_pyramid": "pyramid over the affine-regular hexagon with rational vertices",
    "circular_cone": "cone over an inscribed n-gon of the unit disk, height h",
    "affine_octahedron": "octahedron with vertices (+-1, +-1, 0), (0, 0, +-1)",
    "rhombic_dodecahedron": "rhombic dodecahedron circumscribing the unit ball",
}

SYMMETRIC = {"ball", "octahedron", "cube", "cube_slab", "ball_slab", "double_cone",
             "affine_octahedron", "rhombic_dodecahedron"}


def make_body(spec: BodySpec | str, **params) -> ConvexBody:
    if isinstance(spec, BodySpec):
        name, params = spec.name, {**spec.params, **params}
    else:
        name = spec
    try:
        ctor = BODIES[name]
    except KeyError:
        raise UnknownBodyError(f"unknown body {name!r}; known: {', '.join(sorted(BODIES))}") from None
    return ctor(**params)


__all__ = [
    "BodySpec",
    "UnknownBodyError",
    "BODIES",
    "DESCRIPTIONS",
    "SYMMETRIC",
    "make_body",
    "make_base",
    "icosphere",
    "cube_slab",
    "ball_slab",
    "double_cone",
    "regular_tetrahedron",
    "regular_octahedron",
    "affine_octahedron",
    "cube",
    "rhombic_dodecahedron",
    "symmetric_hexagon",
    "pyramid",
]
