"""Explicit periodic packings built from closed-form coordinates.

Every builder returns a :class:`ConstructionReport` whose arrangement has
been run through :func:`packd.verify.check_arrangement`.  Coordinates are
rational whenever the input is, so densities come out as exact fractions.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from .catalog import make_base, regular_tetrahedron, symmetric_hexagon
from .geometry import (
    ConvexBody,
    GeometryError,
    affine_image,
    cone_over,
    convex_hull,
    exact_volume,
    min_enclosing_parallelogram,
)
from .lattice import Isometry, Lattice, Motif, PeriodicArrangement, Placement, exact_motif_density
from .optimize import OptimizerConfig, optimize_lattice
from .verify import VerificationReport, check_arrangement, periodic_density

# Densest lattice packing of |x|+|y|+|z| <= 1, rows are basis vectors.
OCTAHEDRON_LATTICE = (
    (Fraction(-1), Fraction(-1, 3), Fraction(-2, 3)),
    (Fraction(-2, 3), Fraction(-2, 3), Fraction(2, 3)),
    (Fraction(1, 3), Fraction(-2, 3), Fraction(-1)),
)

# Two tetrahedra of the unit cube; the second is the image of the first
# under a quarter turn about the z axis.
CT_LATTICE = (
    (Fraction(1), Fraction(0), Fraction(0)),
    (Fraction(0), Fraction(0), Fraction(1)),
    (Fraction(1, 2), Fraction(1), Fraction(1, 2)),
)
CT_ROTATION = ((0, -1, 0), (1, 0, 0), (0, 0, 1))
CT_TRANSLATION = (Fraction(1, 2), Fraction(0), Fraction(-1, 2))

HALF = Fraction(1, 2)
QUARTER = Fraction(1, 4)


@dataclass
class ConstructionReport:
    name: str
    arrangement: PeriodicArrangement
    density: float
    exact_density: Fraction | None
    claimed: float
    report: VerificationReport
    constants: dict = field(default_factory=dict)

    @property
    def verified(self) -> bool:
        return self.report.passed and self.report.complete

    def provenance(self) -> dict:
        log = json.dumps(self.report.to_dict(), sort_keys=True).encode()
        return {
            "construction": self.name,
            "constants": {k: _fmt(v) for k, v in self.constants.items()},
            "density": self.density,
            "exact_density": None if self.exact_density is None else str(self.exact_density),
            "claimed": self.claimed,
            "verified": self.verified,
            "oracle_log_sha256": hashlib.sha256(log).hexdigest(),
        }

    def to_dict(self) -> dict:
        return {"arrangement": self.arrangement.to_dict(), "provenance": self.provenance()}


def _fmt(v) -> str:
    if isinstance(v, (tuple, list, np.ndarray)):
        return "(" + ", ".join(_fmt(x) for x in v) + ")"
    return str(v)


def _report(name, arr, claimed, constants=None, counted=None, window=None) -> ConstructionReport:
    """Certify ``arr`` and collect densities.

    ``counted`` restricts the density to a subset of the motif (used when
    part of the motif only marks holes).
    """
    rep = check_arrangement(arr, window)
    if counted is None:
        dens = periodic_density(arr, report=rep) if rep.passed and rep.complete else float("nan")
        try:
            exact = exact_motif_density(arr)
        except GeometryError:
            exact = None
    else:
        vol = sum(arr.placed[i].volume for i in counted)
        dens = vol / arr.lattice.det
        try:
            exact = sum((exact_volume(arr.placed[i]) for i in counted), Fraction(0)) / arr.lattice.exact_det()
        except GeometryError:
            exact = None
    return ConstructionReport(name, arr, float(dens), exact, float(claimed), rep, constants or {})


def _vec(*xs):
    return tuple(x if isinstance(x, Rational) else float(x) for x in xs)


def _centered(body: ConvexBody) -> ConvexBody:
    """Translate a centrally symmetric planar body so its centre is the origin."""
    if not body.is_centrally_symmetric(1e-9):
        raise GeometryError("base must be centrally symmetric")
    if body.exact_vertices is not None:
        ev = body.exact_vertices
        c = [sum(v[k] for v in ev) / len(ev) for k in range(body.dim)]
        return convex_hull([tuple(a - b for a, b in zip(v, c)) for v in ev])
    return body.translate(-body.vertices.mean(axis=0))


def hexagon_pair_lattice(a, b):
    """Planar lattice and hole offset for the pair {H, H/2} of a normal-form hexagon.

    With ``b`` the longer leg and ``s = max(0, 2a(b - 1/4)/b)`` the lattice
    is spanned by ``(1 - s, 1/2)`` and ``(1/2 + s, -1)`` and the half-size
    hexagon sits at ``(3/4, -1/4)`` from the centre of ``H``; coordinates
    are swapped when ``a`` is the longer leg.  ``s = 0`` is the square-like
    lattice of determinant 5/4, the affine-regular hexagon has determinant 1.
    """
    exact = isinstance(a, Rational) and isinstance(b, Rational)
    one = Fraction(1) if exact else 1.0
    swap = a > b
    lo, hi = (b, a) if swap else (a, b)
    s = 2 * lo * (hi - QUARTER) / hi if hi > 0 else 0 * one
    s = max(s, 0 * one)
    v1 = (one - s, HALF * one)
    v2 = (HALF * one + s, -one)
    t = (3 * QUARTER * one, -QUARTER * one)
    if swap:
        v1, v2, t = v1[::-1], v2[::-1], t[::-1]
    return v1, v2, t


def hexagon_pair_tiling(a=HALF, b=HALF) -> ConstructionReport:
    """Lattice packing of the pair {H, H/2} in the plane.

    The reported density counts the large hexagons only; it is at least
    3/4, with equality for the affine-regular hexagon.
    """
    H = _centered(symmetric_hexagon(a, b))
    v1, v2, t = hexagon_pair_lattice(a, b)
    half = affine_image(H, HALF * np.eye(2)) if H.exact_vertices is None else convex_hull(
        [tuple(HALF * c for c in v) for v in H.exact_vertices])
    motif = Motif((H, half), (Placement(0, Isometry.make(None, (0, 0))), Placement(1, Isometry.make(None, t))))
    arr = PeriodicArrangement(Lattice.from_vectors([v1, v2]), motif)
    return _report("hexagon_pair_tiling", arr, 0.75, {"a": a, "b": b, "v1": v1, "v2": v2, "hole": t},
                   counted=[0])


def _two_layer(base: ConvexBody, v1, v2, t, height, name, claimed, constants) -> ConstructionReport:
    """Cones over ``base`` (centred at the origin) stacked in two offset layers.

    The second layer sits at half height over the holes at ``t``; at that
    level the first layer is cut down to a half-size copy of the base.
    """
    ev = base.exact_vertices
    if ev is not None and isinstance(height, Rational):
        apex = (Fraction(0), Fraction(0), Fraction(height))
        body = cone_over(base, apex)
        c = (t[0], t[1], Fraction(height) / 2)
    else:
        body = cone_over(base, (0.0, 0.0, float(height)))
        c = (float(t[0]), float(t[1]), float(height) / 2)
    basis = [(v1[0], v1[1], 0 * v1[0]), (v2[0], v2[1], 0 * v2[0]), c]
    arr = PeriodicArrangement(Lattice.from_vectors(basis), Motif.single(body))
    return _report(name, arr, claimed, {**constants, "height": height, "layer_shift": c})


def square_pyramid_packing(height=1) -> ConstructionReport:
    """Two-layer lattice packing of a square pyramid, density 8/15 for every height."""
    sq = _centered(make_base("square"))
    v1, v2, t = hexagon_pair_lattice(Fraction(0), Fraction(0))
    return _two_layer(sq, v1, v2, t, height, "square_pyramid_packing", 8 / 15, {"v1": v1, "v2": v2})


def cone_over_hexagon_packing(a=HALF, b=HALF, height=1) -> ConstructionReport:
    """Lattice packing of the cone over a normal-form hexagon, density >= 1/2."""
    H = _centered(symmetric_hexagon(a, b))
    v1, v2, t = hexagon_pair_lattice(a, b)
    return _two_layer(H, v1, v2, t, height, "cone_over_hexagon_packing", 0.5,
                      {"a": a, "b": b, "v1": v1, "v2": v2})


def _rational_parallelogram(par: ConvexBody, base: ConvexBody):
    """Rational corners for ``par`` when it can be rounded without losing containment or area."""
    pts = [tuple(Fraction(float(c)).limit_denominator(10_000) for c in v) for v in par.vertices]
    q = np.array([[float(c) for c in p] for p in pts])
    if np.abs(q - par.vertices).max() > 1e-12:
        return None
    try:
        cand = convex_hull(pts)
    except GeometryError:
        return None
    if not cand.contains(base.vertices, 1e-12).all():
        return None
    return cand.exact_vertices


def octahedron_enclosure_packing(base: ConvexBody | None = None, height=1) -> ConstructionReport:
    """Pairs {C, -C} of cones over a symmetric base, packed through an enclosing octahedron.

    The base is centred and wrapped in its smallest parallelogram ``P``;
    ``C`` and ``-C`` meet base to base inside the octahedron spanned by
    ``P`` and the apices, which carries the densest octahedron lattice.
    The density is ``area(base)/area(P) * 18/19``.
    """
    if base is None:
        base = make_base("hexagon")
    if base.dim != 2:
        raise GeometryError("base must be planar")
    B = _centered(base)
    par, ratio = min_enclosing_parallelogram(B)
    # corners of P in cyclic order: q0, q1, -q0, -q1
    ex = _rational_parallelogram(par, B) if B.exact_vertices is not None else None
    if ex is not None:
        ordered = par.vertices
        corners = [min(ex, key=lambda p: sum((float(a) - b) ** 2 for a, b in zip(p, ordered[k]))) for k in range(2)]
        h = Fraction(height) if isinstance(height, Rational) else None
    else:
        corners = [tuple(float(c) for c in par.vertices[k]) for k in range(2)]
        h = None
    if h is None:
        h = float(height)
        corners = [tuple(float(c) for c in p) for p in corners]
    zero = 0 * h
    cols = [(corners[0][0], corners[0][1], zero), (corners[1][0], corners[1][1], zero), (zero, zero, h)]
    # lattice rows r map to M r with M e_k = cols[k]
    rows = [tuple(sum(r[k] * cols[k][i] for k in range(3)) for i in range(3)) for r in OCTAHEDRON_LATTICE]
    if not isinstance(h, Fraction):
        rows = [tuple(float(c) for c in r) for r in rows]
    cone = cone_over(B, (zero, zero, h))
    motif = Motif((cone,), (
        Placement(0, Isometry.make(None, (zero, zero, zero))),
        Placement(0, Isometry.make(-np.eye(3), (zero, zero, zero))),
    ))
    arr = PeriodicArrangement(Lattice.from_vectors(rows), motif)
    return _report("octahedron_enclosure_packing", arr, 27 / 38,
                   {"parallelogram_ratio": ratio, "corners": corners})


def conway_torquato_packing() -> ConstructionReport:
    """Uniform packing of regular tetrahedra with density 2/3.

    The repeating unit is a pair of tetrahedra inscribed in the unit cube,
    the second turned a quarter turn about a cube axis.
    """
    T = regular_tetrahedron()
    rot = Isometry.make(np.array(CT_ROTATION, dtype=float), CT_TRANSLATION)
    motif = Motif((T,), (Placement(0, Isometry.make(None, (0, 0, 0))), Placement(0, rot)))
    arr = PeriodicArrangement(Lattice.from_vectors(CT_LATTICE), motif)
    return _report("conway_torquato_packing", arr, 2 / 3,
                   {"lattice": CT_LATTICE, "rotation": CT_ROTATION, "translation": CT_TRANSLATION})


def circular_cone_packing(n: int = 64, cfg: OptimizerConfig | None = None) -> ConstructionReport:
    """Lattice packing of the cone over an inscribed ``n``-gon of the unit disk.

    Found by the optimizer, started from the square-pyramid pattern scaled
    to the circumscribed square.
    """
    if n < 16:
        raise GeometryError("resolution n must be at least 16")
    body = cone_over(make_base("circle", n=n), (0.0, 0.0, 1.0))
    seed = np.array([[2.0, 1.0, 0.0], [-1.0, 2.0, 0.0], [-0.5, -1.5, 0.5]])
    res = optimize_lattice(body, cfg or OptimizerConfig(restarts=4, seed=0), seeds=[seed])
    arr = res.arrangement
    return _report("circular_cone_packing", arr, (2 + 2 ** 0.5) * np.pi / 24, {"n": n})


CONSTRUCTIONS = {
    "square_pyramid": square_pyramid_packing,
    "hexagon_pair": hexagon_pair_tiling,
    "cone_over_hexagon": cone_over_hexagon_packing,
    "octahedron_enclosure": octahedron_enclosure_packing,
    "conway_torquato": conway_torquato_packing,
    "circular_cone": circular_cone_packing,
}

__all__ = [
    "ConstructionReport",
    "CONSTRUCTIONS",
    "OCTAHEDRON_LATTICE",
    "hexagon_pair_lattice",
    "hexagon_pair_tiling",
    "square_pyramid_packing",
    "cone_over_hexagon_packing",
    "octahedron_enclosure_packing",
    "conway_torquato_packing",
    "circular_cone_packing",
]
