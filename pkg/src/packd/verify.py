"""Independent certification of periodic packings.

Nothing here uses the difference-body criterion: overlaps are decided pair
by pair with separating planes, so this module can serve as an oracle for
:mod:`packd.lattice`.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

from .geometry import EPS, ConvexBody, affine_image
from .lattice import PeriodicArrangement, enumerate_lattice_points, exact_motif_density

MAX_EDGE_AXES = 250_000


class UncertifiedArrangementError(ValueError):
    pass


@dataclass
class Separation:
    disjoint: bool
    normal: np.ndarray | None = None
    offset: float | None = None
    witness: np.ndarray | None = None
    depth: float = 0.0


def _candidate_axes(a: ConvexBody, b: ConvexBody) -> tuple[np.ndarray, bool]:
    axes = [a.normals, b.normals]
    complete = True
    if a.dim == 3:
        ea, eb = a.edges, b.edges
        if len(ea) * len(eb) <= MAX_EDGE_AXES:
            da = a.vertices[ea[:, 1]] - a.vertices[ea[:, 0]]
            db = b.vertices[eb[:, 1]] - b.vertices[eb[:, 0]]
            cross = np.cross(da[:, None, :], db[None, :, :]).reshape(-1, 3)
            norms = np.linalg.norm(cross, axis=1)
            keep = norms > 1e-12 * (norms.max() if len(norms) else 1.0)
            axes.append(cross[keep] / norms[keep][:, None])
        else:
            complete = False
    return np.vstack(axes), complete


def _chebyshev_witness(a: ConvexBody, b: ConvexBody):
    """Deepest common point: max s with n.x + s <= h for every facet of both."""
    normals = np.vstack([a.normals, b.normals])
    offsets = np.concatenate([a.offsets, b.offsets])
    d = a.dim
    c = np.zeros(d + 1)
    c[-1] = -1.0
    A = np.hstack([normals, np.ones((len(normals), 1))])
    res = linprog(c, A_ub=A, b_ub=offsets, bounds=[(None, None)] * d + [(None, None)], method="highs")
    if res.status != 0:
        return None, -np.inf
    return res.x[:d], float(res.x[-1])


def separation(a: ConvexBody, b: ConvexBody, tol: float = EPS) -> Separation:
    """Decide whether two convex polytopes have disjoint interiors.

    Candidate separating directions are the facet normals of both bodies and,
    in space, the cross products of their edge directions; for polytopes this
    set is complete.  Touching bodies (gap >= -tol) count as disjoint.  When
    the bodies overlap, ``witness`` is a point interior to both and ``depth``
    the smallest projection overlap over the candidate directions.
    """
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    axes, complete = _candidate_axes(a, b)
    pa = a.vertices @ axes.T
    pb = b.vertices @ axes.T
    gap_ab = pb.min(axis=0) - pa.max(axis=0)  # b beyond a along +axis
    gap_ba = pa.min(axis=0) - pb.max(axis=0)
    gaps = np.maximum(gap_ab, gap_ba)
    k = int(np.argmax(gaps))
    best = float(gaps[k])
    scale = max(1.0, a.circumradius, b.circumradius)
    if best >= -tol * scale:
        n = axes[k] if gap_ab[k] >= gap_ba[k] else -axes[k]
        off = float(pa[:, k].max()) if gap_ab[k] >= gap_ba[k] else float(-pa[:, k].min())
        return Separation(True, n, off, None, 0.0)
    x, s = _chebyshev_witness(a, b)
    if complete:
        return Separation(False, None, None, x, -best)
    if s <= tol * scale:
        return Separation(True)
    return Separation(False, None, None, x, -best)


@dataclass
class Violation:
    first: int
    second: int
    lattice_vector: list
    witness: list | None
    depth: float


@dataclass
class VerificationReport:
    window_radius: float
    translate_radius: float
    checked_pairs: int = 0
    exact_tests: int = 0
    complete: bool = True
    violations: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "result": "pass" if self.passed else "fail",
            "window_radius": self.window_radius,
            "translate_radius": self.translate_radius,
            "checked_pairs": self.checked_pairs,
            "exact_tests": self.exact_tests,
            "complete": self.complete,
            "violations": [v.__dict__ for v in self.violations],
        }


def _spheres(placed):
    centers = np.array([b.vertices.mean(axis=0) for b in placed])
    radii = np.array([np.linalg.norm(b.vertices - c, axis=1).max() for b, c in zip(placed, centers)])
    return centers, radii


def contact_radius(arr: PeriodicArrangement) -> float:
    """Lattice vectors longer than this cannot bring two motif bodies into contact."""
    centers, radii = _spheres(arr.placed)
    r = 0.0
    for i, j in itertools.product(range(len(centers)), repeat=2):
        r = max(r, float(np.linalg.norm(centers[i] - centers[j]) + radii[i] + radii[j]))
    return r


def motif_circumradius(arr: PeriodicArrangement) -> float:
    centers, radii = _spheres(arr.placed)
    ctr = centers.mean(axis=0)
    return float((np.linalg.norm(centers - ctr, axis=1) + radii).max())


def check_arrangement(arr: PeriodicArrangement, window_radius: float | None = None,
                      tol: float = EPS, max_violations: int = 50) -> VerificationReport:
    """Test every pair (placement i, placement j + w) with ``|w|`` inside the window.

    Lattice translates are taken up to ``window_radius`` plus the motif
    circumradius.  The report is ``complete`` when that range reaches every
    translate that could touch the motif.
    """
    placed = arr.placed
    if window_radius is None:
        window_radius = contact_radius(arr)
    translate_radius = window_radius + motif_circumradius(arr)
    report = VerificationReport(window_radius, translate_radius)
    report.complete = translate_radius >= contact_radius(arr) - 1e-12
    if not placed:
        return report
    centers, radii = _spheres(placed)
    vectors = np.vstack([np.zeros((1, arr.dim)), enumerate_lattice_points(arr.lattice, translate_radius)])
    m = len(placed)
    for w in vectors:
        positive = next((c > 0 for c in w if abs(c) > 1e-12), False)
        for i in range(m):
            for j in range(i, m):
                if i == j and not positive:
                    continue
                report.checked_pairs += 1
                dist = np.linalg.norm(centers[j] + w - centers[i])
                if dist > radii[i] + radii[j] + tol:
                    continue
                report.exact_tests += 1
                other = affine_image(placed[j], np.eye(arr.dim), w)
                sep = separation(placed[i], other, tol)
                if not sep.disjoint:
                    report.violations.append(Violation(
                        i, j, w.tolist(), None if sep.witness is None else sep.witness.tolist(), sep.depth))
                    if len(report.violations) >= max_violations:
                        return report
    return report


def periodic_density(arr: PeriodicArrangement, exact: bool = False,
                     report: VerificationReport | None = None):
    """Motif volume over lattice determinant for a certified arrangement.

    Raises
    ------
    UncertifiedArrangementError
        If the arrangement fails (or was not given) a complete verification.
    """
    if report is None:
        report = check_arrangement(arr)
    if not report.passed or not report.complete:
        raise UncertifiedArrangementError(
            f"arrangement not certified ({len(report.violations)} violations, complete={report.complete})")
    if exact:
        return exact_motif_density(arr)
    return float(sum(b.volume for b in arr.placed)) / arr.lattice.det


def _uniform_ball(rng: np.random.Generator, n: int, d: int, r: float) -> np.ndarray:
    x = rng.normal(size=(n, d))
    x /= np.linalg.norm(x, axis=1)[:, None]
    return x * (r * rng.random(n) ** (1.0 / d))[:, None]


def _inradius(body: ConvexBody, center: np.ndarray) -> float:
    return float((body.offsets - body.normals @ center).min())


def monte_carlo_density(arr: PeriodicArrangement, r: float = 10.0, samples: int = 1_000_000,
                        seed=0, chunk: int = 200_000) -> tuple[float, float]:
    """Fraction of uniform samples in the ball ``B(r)`` covered by the arrangement.

    Each sample is reduced into the fundamental cell of the lattice and tested
    against the few motif translates that meet that cell.

    Returns
    -------
    (estimate, stderr)
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if samples < 10_000:
        raise ValueError("need at least 10^4 samples")
    rng = np.random.default_rng(seed)
    placed = arr.placed
    if not placed:
        return 0.0, 0.0
    basis = arr.lattice.basis
    inv = np.linalg.inv(basis)
    d = arr.dim
    cell_center = 0.5 * basis.sum(axis=0)
    cell_radius = 0.5 * max(np.linalg.norm(np.array(s) @ basis) for s in itertools.product((-1, 1), repeat=d))
    tests = []
    for body in placed:
        c = body.vertices.mean(axis=0)
        rad = float(np.linalg.norm(body.vertices - c, axis=1).max())
        rin = _inradius(body, c)
        shifts = enumerate_lattice_points(arr.lattice, rad + cell_radius + 1e-9, center=cell_center - c)
        for w in shifts:
            tests.append((body.normals, body.offsets + body.normals @ w, c + w, rin, rad))
    hits = 0
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        x = _uniform_ball(rng, n, d, r)
        frac = x @ inv
        y = (frac - np.floor(frac)) @ basis
        covered = np.zeros(n, dtype=bool)
        for normals, offsets, c, rin, rad in tests:
            todo = ~covered
            if not todo.any():
                break
            yy = y[todo]
            dist = np.linalg.norm(yy - c, axis=1)
            inside = dist <= rin
            maybe = (~inside) & (dist <= rad + EPS)
            if maybe.any():
                inside[maybe] = (yy[maybe] @ normals.T - offsets <= EPS).all(axis=1)
            covered[np.flatnonzero(todo)[inside]] = True
        hits += int(covered.sum())
        done += n
    p = hits / samples
    return p, float(np.sqrt(max(p * (1 - p), 0.0) / samples))


__all__ = [
    "Separation",
    "Violation",
    "VerificationReport",
    "UncertifiedArrangementError",
    "separation",
    "check_arrangement",
    "contact_radius",
    "motif_circumradius",
    "periodic_density",
    "monte_carlo_density",
]
