"""Lattices, periodic arrangements and the translative packing criterion.

Translates ``K + v`` and ``K + w`` have disjoint interiors exactly when
``v - w`` is not an interior point of ``K - K``.  A lattice therefore packs
``K`` iff no nonzero lattice vector is interior to ``K - K``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .geometry import (
    EPS,
    ConvexBody,
    GeometryError,
    affine_image,
    convex_hull,
    difference_body,
    exact_volume,
    minkowski_difference_set,
    _exact_points,
)

ENUMERATION_MARGIN = 1e-6


class InadmissibleLatticeError(ValueError):
    """The lattice does not give a packing; ``certificate`` is a violating vector."""

    def __init__(self, message: str, certificate: np.ndarray):
        super().__init__(message)
        self.certificate = certificate


def lll_reduce(basis: np.ndarray, delta: float = 0.75) -> np.ndarray:
    """LLL-reduce a small basis given as matrix rows."""
    b = np.array(basis, dtype=float)
    n = len(b)

    def gram_schmidt(b):
        bstar = np.zeros_like(b)
        mu = np.zeros((n, n))
        for i in range(n):
            bstar[i] = b[i]
            for j in range(i):
                mu[i, j] = b[i] @ bstar[j] / (bstar[j] @ bstar[j])
                bstar[i] -= mu[i, j] * bstar[j]
        return bstar, mu

    bstar, mu = gram_schmidt(b)
    k = 1
    guard = 0
    while k < n and guard < 10000:
        guard += 1
        for j in range(k - 1, -1, -1):
            q = round(mu[k, j])
            if q:
                b[k] -= q * b[j]
                bstar, mu = gram_schmidt(b)
        if bstar[k] @ bstar[k] >= (delta - mu[k, k - 1] ** 2) * (bstar[k - 1] @ bstar[k - 1]):
            k += 1
        else:
            b[[k, k - 1]] = b[[k - 1, k]]
            bstar, mu = gram_schmidt(b)
            k = max(k - 1, 1)
    return b


@dataclass(frozen=True, eq=False)
class Lattice:
    """Lattice spanned by the rows of ``basis``."""

    basis: np.ndarray
    exact_basis: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        b = self.basis
        if b.ndim != 2 or b.shape[0] != b.shape[1] or b.shape[0] not in (2, 3):
            raise GeometryError(f"basis must be a 2x2 or 3x3 matrix, got {b.shape}")
        if not np.isfinite(b).all():
            raise GeometryError("non-finite basis")
        if self.det <= 1e-12:
            raise GeometryError("basis is (nearly) singular")
        b.setflags(write=False)

    @classmethod
    def from_vectors(cls, vectors) -> "Lattice":
        exact = _exact_points(vectors)
        b = np.array([[float(c) for c in v] for v in vectors], dtype=float)
        return cls(b, tuple(exact) if exact is not None else None)

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @cached_property
    def det(self) -> float:
        return abs(float(np.linalg.det(self.basis)))

    def exact_det(self) -> Fraction:
        if self.exact_basis is None:
            raise GeometryError("lattice has no exact basis")
        rows = self.exact_basis
        if self.dim == 2:
            (a, b), (c, d) = rows
            return abs(a * d - b * c)
        (a, b, c), (d, e, f), (g, h, i) = rows
        return abs(a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g))

    @cached_property
    def reduced(self) -> np.ndarray:
        return lll_reduce(self.basis)

    def scaled(self, c: float) -> "Lattice":
        return Lattice(self.basis * c)

    def transformed(self, matrix) -> "Lattice":
        """Image under the linear map ``x -> matrix @ x``."""
        return Lattice(self.basis @ np.asarray(matrix, dtype=float).T)

    def to_dict(self) -> dict:
        return {"basis": self.basis.tolist()}


def _coefficient_box(reduced: np.ndarray, radius: float, center_coeffs=None) -> np.ndarray:
    inv = np.linalg.inv(reduced)
    bounds = radius * np.linalg.norm(inv, axis=0)
    d = len(reduced)
    if center_coeffs is None:
        center_coeffs = np.zeros(d)
    lo = np.floor(center_coeffs - bounds).astype(int)
    hi = np.ceil(center_coeffs + bounds).astype(int)
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(d)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)


def enumerate_lattice_points(lattice: Lattice, radius: float, center=None) -> np.ndarray:
    """All lattice points with ``|x - center| <= radius``, the origin excluded
    when ``center`` is omitted.

    Coefficient bounds come from the columns of the inverse of an
    LLL-reduced basis, so no point in the ball is missed.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    red = lattice.reduced
    if np.linalg.cond(red) > 1e12:
        raise GeometryError("near-singular basis")
    c0 = None
    ctr = np.zeros(lattice.dim) if center is None else np.asarray(center, dtype=float)
    if center is not None:
        c0 = ctr @ np.linalg.inv(red)
    coeffs = _coefficient_box(red, radius, c0)
    pts = coeffs @ red
    dist = np.linalg.norm(pts - ctr, axis=1)
    keep = dist <= radius * (1 + 1e-12)
    if center is None:
        keep &= np.abs(coeffs).sum(axis=1) > 0
    pts, dist = pts[keep], dist[keep]
    order = np.lexsort(tuple(pts.T[::-1]) + (np.round(dist, 12),))
    return pts[order]


def _difference_set(body: ConvexBody) -> ConvexBody:
    return minkowski_difference_set(body, body)


def find_translative_violation(body: ConvexBody, lattice: Lattice, tol: float = EPS) -> np.ndarray | None:
    """A nonzero lattice vector interior to ``K - K``, or ``None``."""
    if body.dim != lattice.dim:
        raise GeometryError("body and lattice dimensions differ")
    dk = _difference_set(body)
    radius = dk.diameter + ENUMERATION_MARGIN
    pts = enumerate_lattice_points(lattice, radius)
    if len(pts) == 0:
        return None
    slack = (pts @ dk.normals.T - dk.offsets).max(axis=1)
    bad = np.flatnonzero(slack < -tol * max(1.0, dk.circumradius))
    if len(bad) == 0:
        return None
    return pts[bad[np.argmin(np.linalg.norm(pts[bad], axis=1))]]


def admissible_translative(body: ConvexBody, lattice: Lattice, tol: float = EPS) -> bool:
    """True iff the lattice translates of ``body`` form a packing.

    Boundary contact is allowed: a lattice vector within ``tol`` of a
    supporting plane of ``K - K`` does not count as interior.
    """
    return find_translative_violation(body, lattice, tol) is None


def lattice_density(body: ConvexBody, lattice: Lattice, tol: float = EPS) -> float:
    witness = find_translative_violation(body, lattice, tol)
    if witness is not None:
        raise InadmissibleLatticeError(
            f"lattice vector {witness.tolist()} is interior to K - K", witness
        )
    return body.volume / lattice.det


def translative_upper_bound(body: ConvexBody) -> float:
    """``Vol(K) / Vol(DK)``, an upper bound for translative packing density."""
    dk = difference_body(body)
    if body.exact_vertices is not None and dk.exact_vertices is not None:
        return float(exact_volume(body) / exact_volume(dk))
    return body.volume / dk.volume


def exact_translative_upper_bound(body: ConvexBody) -> Fraction:
    return exact_volume(body) / exact_volume(difference_body(body))


@dataclass(frozen=True, eq=False)
class Isometry:
    """``x -> linear @ x + translation`` with an orthogonal linear part."""

    linear: np.ndarray
    translation: np.ndarray
    exact_translation: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        m = self.linear
        if m.shape != (len(self.translation),) * 2:
            raise GeometryError("isometry shape mismatch")
        if not np.allclose(m @ m.T, np.eye(len(m)), atol=1e-9):
            raise GeometryError("linear part is not orthogonal")

    @classmethod
    def make(cls, linear=None, translation=None, dim: int = 3) -> "Isometry":
        if translation is None:
            translation = [0] * dim
        dim = len(translation)
        lin = np.eye(dim) if linear is None else np.asarray(linear, dtype=float)
        exact = _exact_points([translation])
        t = np.array([float(c) for c in translation])
        return cls(lin, t, exact[0] if exact is not None else None)

    @property
    def is_translation(self) -> bool:
        return bool(np.allclose(self.linear, np.eye(len(self.linear)), atol=1e-12))

    @property
    def is_point_reflection(self) -> bool:
        return bool(np.allclose(self.linear, -np.eye(len(self.linear)), atol=1e-12))

    @property
    def is_signed_permutation(self) -> bool:
        m = self.linear
        return bool(np.allclose(m, np.round(m), atol=1e-12) and (np.abs(np.round(m)).sum(axis=1) == 1).all())

    def apply(self, body: ConvexBody) -> ConvexBody:
        lin = self.linear
        if body.exact_vertices is not None and self.exact_translation is not None and self.is_signed_permutation:
            m = np.round(lin).astype(int)
            t = self.exact_translation
            return convex_hull([
                tuple(sum(int(m[i, k]) * v[k] for k in range(len(v))) + t[i] for i in range(len(v)))
                for v in body.exact_vertices
            ])
        return affine_image(body, lin, self.translation)


@dataclass(frozen=True, eq=False)
class Placement:
    body: int
    isometry: Isometry


@dataclass(frozen=True, eq=False)
class Motif:
    bodies: tuple
    placements: tuple

    def __post_init__(self):
        for p in self.placements:
            if not 0 <= p.body < len(self.bodies):
                raise GeometryError(f"placement refers to missing body {p.body}")

    @classmethod
    def single(cls, body: ConvexBody) -> "Motif":
        return cls((body,), (Placement(0, Isometry.make(dim=body.dim)),))

    @classmethod
    def pair(cls, body: ConvexBody, v) -> "Motif":
        """The pair ``{K, v - K}``."""
        d = body.dim
        return cls(
            (body,),
            (Placement(0, Isometry.make(dim=d)), Placement(0, Isometry.make(-np.eye(d), v))),
        )

    @cached_property
    def placed(self) -> tuple:
        return tuple(p.isometry.apply(self.bodies[p.body]) for p in self.placements)

    @property
    def translative(self) -> bool:
        return all(p.isometry.is_translation or p.isometry.is_point_reflection for p in self.placements)


@dataclass(frozen=True, eq=False)
class PeriodicArrangement:
    lattice: Lattice
    motif: Motif

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def placed(self) -> tuple:
        return self.motif.placed

    def to_dict(self) -> dict:
        return {
            "basis": self.lattice.basis.tolist(),
            "bodies": [b.to_dict() for b in self.motif.bodies],
            "motif": [
                {
                    "body": p.body,
                    "reflect": bool(p.isometry.is_point_reflection),
                    "linear": p.isometry.linear.tolist(),
                    "translation": p.isometry.translation.tolist(),
                }
                for p in self.motif.placements
            ],
        }


def arrangement_from_dict(data: dict) -> PeriodicArrangement:
    from .geometry import body_from_dict

    lattice = Lattice.from_vectors(data["basis"])
    bodies = tuple(body_from_dict(b) for b in data["bodies"])
    placements = []
    for rec in data["motif"]:
        t = rec.get("translation", [0.0] * lattice.dim)
        if "linear" in rec:
            lin = np.asarray(rec["linear"], dtype=float)
        else:
            lin = -np.eye(lattice.dim) if rec.get("reflect", False) else np.eye(lattice.dim)
        placements.append(Placement(int(rec["body"]), Isometry.make(lin, t)))
    if not placements:
        raise GeometryError("motif is empty")
    for b in bodies:
        if b.dim != lattice.dim:
            raise GeometryError("body and lattice dimensions differ")
    return PeriodicArrangement(lattice, Motif(bodies, tuple(placements)))


@dataclass
class MotifViolation:
    first: int
    second: int
    lattice_vector: np.ndarray
    depth: float


def motif_violations(arr: PeriodicArrangement, tol: float = EPS, stop_at_first: bool = False) -> list[MotifViolation]:
    """Overlapping (placement, placement + lattice vector) pairs.

    Body ``i`` and body ``j`` shifted by ``w`` overlap iff ``w`` is interior
    to ``P_i - P_j``; every such ``w`` is enumerated.
    """
    placed = arr.placed
    out: list[MotifViolation] = []
    for i, j in itertools.combinations_with_replacement(range(len(placed)), 2):
        diff = minkowski_difference_set(placed[i], placed[j])
        radius = float(np.linalg.norm(diff.vertices, axis=1).max()) + ENUMERATION_MARGIN
        pts = enumerate_lattice_points(arr.lattice, radius, center=np.zeros(arr.dim))
        if i == j:
            pts = pts[np.linalg.norm(pts, axis=1) > 0]
        if len(pts) == 0:
            continue
        slack = (pts @ diff.normals.T - diff.offsets).max(axis=1)
        for k in np.flatnonzero(slack < -tol * max(1.0, diff.circumradius)):
            out.append(MotifViolation(i, j, pts[k], float(-slack[k])))
            if stop_at_first:
                return out
    return out


def admissible_motif(arr: PeriodicArrangement, tol: float = EPS) -> bool:
    """True iff the periodic arrangement is a packing.

    For a one-body motif this is :func:`admissible_translative`.
    """
    return not motif_violations(arr, tol, stop_at_first=True)


def arrangement_volume(arr: PeriodicArrangement) -> float:
    return float(sum(b.volume for b in arr.placed))


def motif_density(arr: PeriodicArrangement) -> float:
    return arrangement_volume(arr) / arr.lattice.det


def exact_motif_density(arr: PeriodicArrangement) -> Fraction:
    """Rational density when the motif bodies and lattice basis are rational."""
    vols = [exact_volume(arr.motif.bodies[p.body]) for p in arr.motif.placements]
    return sum(vols, Fraction(0)) / arr.lattice.exact_det()


__all__ = [
    "InadmissibleLatticeError",
    "Lattice",
    "Isometry",
    "Placement",
    "Motif",
    "PeriodicArrangement",
    "MotifViolation",
    "lll_reduce",
    "enumerate_lattice_points",
    "find_translative_violation",
    "admissible_translative",
    "lattice_density",
    "translative_upper_bound",
    "exact_translative_upper_bound",
    "admissible_motif",
    "motif_violations",
    "motif_density",
    "exact_motif_density",
    "arrangement_from_dict",
]
