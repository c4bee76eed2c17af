"""Numerical search for dense lattice packings.

Every candidate basis is rescaled so that its shortest nonzero vector, as
measured by the gauge of ``K - K``, has length exactly one.  The rescaled
lattice is admissible and touches ``K - K``, so the search runs over the
shape of the lattice only and every evaluated point is feasible.  The same
device is used for pairs ``{K, v - K}``, where the offsets ``v + w`` must
also avoid the interior of ``K + K``.
"""
from __future__ import annotations

import itertools
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .geometry import ConvexBody, GeometryError, affine_image, convex_hull, minkowski_difference_set
from .lattice import (
    EPS,
    Lattice,
    Motif,
    PeriodicArrangement,
    admissible_motif,
    admissible_translative,
    lll_reduce,
)

log = logging.getLogger(__name__)

SAFETY = 1.0 + 1e-12
MAX_BOX = 4096


@dataclass(frozen=True)
class OptimizerConfig:
    restarts: int = 64
    seed: int = 0
    schedule: tuple = (0.2, 0.1, 0.05, 0.02, 0.01, 5e-3, 2e-3, 1e-3, 5e-4, 2e-4, 1e-4, 5e-5, 2e-5, 1e-5)
    perturbation: float = 0.35
    max_iter: int = 2000
    patience: int = 0
    tolerance: float = EPS
    workers: int | None = None

    def __post_init__(self):
        if self.restarts < 1 or self.max_iter < 1:
            raise ValueError("restarts and max_iter must be positive")
        s = np.asarray(self.schedule)
        if len(s) == 0 or (s <= 0).any() or (s >= 1).any() or (np.diff(s) >= 0).any():
            raise ValueError("schedule must be strictly decreasing values in (0, 1)")
        if self.perturbation <= 0 or self.tolerance <= 0:
            raise ValueError("perturbation and tolerance must be positive")


@dataclass
class OptimizationResult:
    lattice: Lattice
    density: float
    certified: bool
    body: ConvexBody
    offset: np.ndarray | None = None
    trace: list = field(default_factory=list)
    mode: str = "lattice"

    @property
    def arrangement(self) -> PeriodicArrangement:
        if self.offset is None:
            return PeriodicArrangement(self.lattice, Motif.single(self.body))
        return PeriodicArrangement(self.lattice, Motif.pair(self.body, self.offset))


class _Gauge:
    """Gauge function of a polytope containing the origin in its interior."""

    def __init__(self, normals: np.ndarray, offsets: np.ndarray, rmax: float):
        if (offsets <= 0).any():
            raise GeometryError("origin must be interior")
        self.scaled = np.ascontiguousarray((normals / offsets[:, None]).T)
        self.rmax = rmax

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        return (pts @ self.scaled).max(axis=1)


def _box(basis: np.ndarray, radius: float, center=None):
    inv = np.linalg.inv(basis)
    bounds = radius * np.sqrt((inv ** 2).sum(axis=0))
    c = np.zeros(len(basis)) if center is None else center
    lo = np.floor(c - bounds).astype(int)
    hi = np.ceil(c + bounds).astype(int)
    size = np.prod(hi - lo + 1)
    if size > MAX_BOX:
        return None
    axes = [np.arange(lo[i], hi[i] + 1) for i in range(len(basis))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(basis))


class PackingObjective:
    """Density of the best admissible rescaling of a lattice (and offset)."""

    def __init__(self, body: ConvexBody, pair: bool = False):
        self.body = body
        self.dim = body.dim
        self.pair = pair
        self.center = body.centroid
        kc = affine_image(body, np.eye(self.dim), -self.center)
        self.kc = kc
        dk = minkowski_difference_set(kc, kc)
        self.diff_gauge = _Gauge(dk.normals, dk.offsets, dk.circumradius)
        self.sum_gauge = _Gauge(kc.normals, 2.0 * kc.offsets, 2.0 * kc.circumradius)
        self.copies = 2 if pair else 1
        self.volume = body.volume

    def lattice_minimum(self, basis: np.ndarray) -> float:
        g = self.diff_gauge
        best = g(basis).min()
        coeffs = _box(basis, g.rmax * best)
        if coeffs is None:
            basis = lll_reduce(basis)
            best = min(best, g(basis).min())
            coeffs = _box(basis, g.rmax * best)
            if coeffs is None:
                return 0.0
        pts = coeffs @ basis
        nz = np.abs(coeffs).sum(axis=1) > 0
        return float(g(pts[nz]).min())

    def offset_minimum(self, basis: np.ndarray, u: np.ndarray) -> float:
        g = self.sum_gauge
        inv = np.linalg.inv(basis)
        c0 = -u @ inv
        near = u + np.round(c0) @ basis
        best = float(g(near[None, :])[0])
        coeffs = _box(basis, g.rmax * best, c0)
        if coeffs is None:
            return 0.0
        pts = u + coeffs @ basis
        return float(g(pts).min())

    def scale(self, basis: np.ndarray, u: np.ndarray | None = None) -> float:
        lam = self.lattice_minimum(basis)
        if self.pair:
            lam = min(lam, self.offset_minimum(basis, u))
        return lam

    def density(self, basis: np.ndarray, u: np.ndarray | None = None) -> float:
        det = abs(np.linalg.det(basis))
        if det <= 1e-14:
            return 0.0
        lam = self.scale(basis, u)
        return self.copies * self.volume * lam ** self.dim / det

    def normalise(self, basis, u=None):
        lam = self.scale(basis, u)
        if lam <= 0:
            raise GeometryError("degenerate lattice")
        b = basis / lam
        if u is None:
            return b, None
        u = u / lam
        return b, u - np.round(u @ np.linalg.inv(b)) @ b

    def near_contacts(self, basis: np.ndarray, slack: float):
        """Lattice vectors with difference-gauge at most ``1 + slack`` (basis normalised)."""
        g = self.diff_gauge
        coeffs = _box(basis, g.rmax * (1 + slack))
        if coeffs is None:
            return np.empty((0, self.dim))
        coeffs = coeffs[np.abs(coeffs).sum(axis=1) > 0]
        pts = coeffs @ basis
        vals = g(pts)
        pts = pts[vals <= 1 + slack]
        # x and -x give the same constraint
        keep = [k for k in range(len(pts)) if next((c for c in pts[:k] if np.allclose(c, -pts[k])), None) is None]
        return pts[keep]

    def near_offsets(self, basis: np.ndarray, u: np.ndarray, slack: float):
        g = self.sum_gauge
        c0 = -u @ np.linalg.inv(basis)
        coeffs = _box(basis, g.rmax * (1 + slack), c0)
        if coeffs is None:
            return np.empty((0, self.dim))
        pts = u + coeffs @ basis
        return pts[g(pts) <= 1 + slack]


def _lp_step(obj: PackingObjective, basis, u, radius: float, slack: float = 0.25):
    """One linearised shrink step ``x -> (I + E) x`` (and ``u -> (I + E) u + du``).

    Each nearby lattice vector keeps the facet of ``K - K`` (or ``K + K``)
    that currently supports it; this is a sufficient condition for staying
    outside the interior, so the step is feasible up to second order.
    """
    d = obj.dim
    nE = d * d
    nvar = nE + (d if obj.pair else 0)
    rows, rhs = [], []
    g = obj.diff_gauge.scaled  # (d, F)
    for x in obj.near_contacts(basis, slack):
        vals = x @ g
        a = g[:, int(np.argmax(vals))]
        # a . (x + E x) >= 1   ->   -sum_ij a_i x_j E_ij <= a.x - 1
        row = np.zeros(nvar)
        row[:nE] = -np.outer(a, x).ravel()
        rows.append(row)
        rhs.append(float(a @ x) - 1.0)
    if obj.pair:
        gs = obj.sum_gauge.scaled
        for y in obj.near_offsets(basis, u, slack):
            vals = y @ gs
            a = gs[:, int(np.argmax(vals))]
            row = np.zeros(nvar)
            row[:nE] = -np.outer(a, y).ravel()
            row[nE:] = -a
            rows.append(row)
            rhs.append(float(a @ y) - 1.0)
    if not rows:
        return None
    c = np.zeros(nvar)
    c[:nE] = np.eye(d).ravel()
    bounds = [(-radius, radius)] * nE + [(-radius * 2, radius * 2)] * (nvar - nE)
    res = linprog(c, A_ub=np.array(rows), b_ub=np.array(rhs), bounds=bounds, method="highs")
    if res.status != 0:
        return None
    E = res.x[:nE].reshape(d, d)
    m = np.eye(d) + E
    nb = basis @ m.T
    nu = None if not obj.pair else u @ m.T + res.x[nE:]
    return nb, nu


def _polish(obj: PackingObjective, basis, u, best: float, max_steps: int = 200):
    radius = 0.05
    for _ in range(max_steps):
        step = _lp_step(obj, basis, u, radius)
        if step is None:
            radius *= 0.5
        else:
            nb, nu = step
            val = obj.density(nb, nu)
            if val > best + 1e-15:
                basis, u = obj.normalise(lll_reduce(nb), nu)
                best = obj.density(basis, u)
                radius = min(radius * 1.5, 0.2)
                continue
            radius *= 0.5
        if radius < 1e-10:
            break
    return basis, u, best


def _structured_seeds(obj: PackingObjective) -> list[np.ndarray]:
    d = obj.dim
    seeds = []
    if d == 3:
        seeds += [np.eye(3), np.array([[1, 1, 0], [1, 0, 1], [0, 1, 1]], float),
                  np.array([[1, 1, -1], [1, -1, 1], [-1, 1, 1]], float)]
    else:
        seeds += [np.eye(2), np.array([[1, 0], [0.5, np.sqrt(3) / 2]]),
                  np.array([[0, 1], [np.sqrt(3) / 2, 0.5]])]
    # lattices spanned by pairs of opposite facets of K - K (tiles when K does)
    g = obj.diff_gauge.scaled.T
    if len(g) <= 2 * 8:
        dirs = g / (g ** 2).sum(axis=1)[:, None] * 2
        half = [x for k, x in enumerate(dirs) if not any(np.allclose(x, -y) for y in dirs[:k])]
        for combo in itertools.combinations(half, d):
            b = np.array(combo)
            if abs(np.linalg.det(b)) > 1e-9:
                seeds.append(b)
    return seeds


def _pair_seeds(obj: PackingObjective) -> list[np.ndarray]:
    """Offsets reflecting K through the centroid of each facet (face-to-face pairs)."""
    kc = obj.kc
    out = [np.zeros(obj.dim)]
    inc = kc.incidence()
    for row in inc[:12]:
        out.append(2 * kc.vertices[row].mean(axis=0))
    return out


@dataclass
class _Task:
    body: ConvexBody
    pair: bool
    index: int
    seed_basis: np.ndarray | None
    seed_offset: np.ndarray | None
    cfg: OptimizerConfig
    entropy: int


def _local_search(obj: PackingObjective, basis, u, cfg: OptimizerConfig, rng: np.random.Generator):
    basis, u = obj.normalise(lll_reduce(basis), u)
    best = obj.density(basis, u)
    d = obj.dim
    n = d * d + (d if obj.pair else 0)
    patience = cfg.patience or 3 * n
    level = 0
    fails = 0
    coord = 0

    def pack(b, off):
        return b.ravel() if off is None else np.concatenate([b.ravel(), off])

    def unpack(p):
        return p[: d * d].reshape(d, d), (None if not obj.pair else p[d * d:])

    p = pack(basis, u)
    for it in range(cfg.max_iter):
        sigma = cfg.schedule[level]
        if it % 2 == 0:
            step = np.zeros(n)
            step[coord % n] = sigma * (1 if (coord // n) % 2 == 0 else -1)
            coord += 1
        else:
            step = rng.normal(size=n) * sigma / np.sqrt(n)
        cand = p + step
        b, off = unpack(cand)
        val = obj.density(b, off)
        if val > best + 1e-15:
            b, off = obj.normalise(b, off)
            nb = lll_reduce(b)
            p = pack(nb, off)
            best = obj.density(nb, off)
            fails = 0
        else:
            fails += 1
            if fails >= patience:
                fails = 0
                level += 1
                if level >= len(cfg.schedule):
                    break
    b, off = unpack(p)
    b, off, best = _polish(obj, b, off, best)
    return b, off, best


_OBJECTIVES: dict = {}


def _objective(body: ConvexBody, pair: bool) -> PackingObjective:
    key = (body.vertices.tobytes(), body.vertices.shape, pair)
    if key not in _OBJECTIVES:
        if len(_OBJECTIVES) > 8:
            _OBJECTIVES.clear()
        _OBJECTIVES[key] = PackingObjective(body, pair)
    return _OBJECTIVES[key]


def _run_task(task: _Task):
    obj = _objective(task.body, task.pair)
    rng = np.random.default_rng([task.entropy, task.index])
    d = obj.dim
    if task.seed_basis is not None:
        basis = np.array(task.seed_basis, dtype=float)
    else:
        basis = np.eye(d) + task.cfg.perturbation * rng.normal(size=(d, d)) * 2
        while abs(np.linalg.det(basis)) < 1e-3:
            basis = np.eye(d) + task.cfg.perturbation * rng.normal(size=(d, d)) * 2
    u = None
    if task.pair:
        if task.seed_offset is not None:
            u = np.array(task.seed_offset, dtype=float)
        else:
            u = rng.random(d) @ basis
    b, off, val = _local_search(obj, basis, u, task.cfg, rng)
    return task.index, b, off, val


def _workers(cfg: OptimizerConfig) -> int:
    if cfg.workers is not None:
        return max(1, cfg.workers)
    cap = os.environ.get("PACKD_THREADS")
    n = os.cpu_count() or 1
    return max(1, min(n, int(cap))) if cap else n


def _execute(tasks: list[_Task], cfg: OptimizerConfig) -> list:
    nw = min(_workers(cfg), len(tasks))
    if nw <= 1:
        return [_run_task(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=nw) as pool:
        return list(pool.map(_run_task, tasks))


def _finish(body, obj: PackingObjective, outcomes, cfg: OptimizerConfig, pair: bool) -> OptimizationResult:
    outcomes = sorted(outcomes, key=lambda r: r[0])
    trace = [float(r[3]) for r in outcomes]
    # deterministic reduction: density first, then lexicographic basis
    best = max(outcomes, key=lambda r: (round(r[3], 13), tuple(-np.round(r[1].ravel(), 12))))
    _, b, off, _ = best
    b, off = obj.normalise(b, off)
    basis = b * SAFETY
    lattice = Lattice(basis)
    if pair:
        u = off * SAFETY
        v = u + 2 * obj.center
        arr = PeriodicArrangement(lattice, Motif.pair(body, v))
        certified = admissible_motif(arr, cfg.tolerance / 10)
        density = 2 * body.volume / lattice.det
        return OptimizationResult(lattice, density, certified, body, v, trace, "lstar")
    certified = admissible_translative(body, lattice, cfg.tolerance / 10)
    return OptimizationResult(lattice, body.volume / lattice.det, certified, body, None, trace, "lattice")


def _optimize(body: ConvexBody, cfg: OptimizerConfig, pair: bool, extra_seeds=(), frame=None) -> OptimizationResult:
    obj = _objective(body, pair)
    seeds = [(s, None) for s in _structured_seeds(obj)] if not pair else []
    seeds = list(extra_seeds) + seeds
    if frame is not None:
        m = np.asarray(frame, dtype=float)
        seeds = [(s @ m.T, None if o is None else o @ m.T) for s, o in seeds]
    entropy = int(np.random.SeedSequence(cfg.seed).generate_state(1)[0])
    tasks = []
    for i in range(cfg.restarts):
        sb, so = seeds[i] if i < len(seeds) else (None, None)
        if frame is not None and sb is None:
            # random starts drawn in the reference frame, then mapped
            rng = np.random.default_rng([entropy, i, 7])
            sb = (np.eye(body.dim) + cfg.perturbation * rng.normal(size=(body.dim, body.dim)) * 2) @ np.asarray(frame).T
        tasks.append(_Task(body, pair, i, sb, so, cfg, entropy))
    outcomes = _execute(tasks, cfg)
    return _finish(body, obj, outcomes, cfg, pair)


def optimize_lattice(body: ConvexBody, cfg: OptimizerConfig | None = None, frame=None,
                     seeds=()) -> OptimizationResult:
    """Search for a dense lattice packing of a 3D body.

    The returned lattice is re-certified by :func:`admissible_translative`
    at a tenth of the working tolerance; its density is therefore a lower
    bound for the lattice packing density.  ``frame`` maps the random
    starting bases through a linear map (used for equivariance checks);
    ``seeds`` are extra starting bases tried before the built-in ones.
    """
    if body.dim != 3:
        raise GeometryError("optimize_lattice expects a 3D body; use optimize_lattice_2d")
    extra = [(np.asarray(s, dtype=float), None) for s in seeds]
    return _optimize(body, cfg or OptimizerConfig(), False, extra_seeds=extra, frame=frame)


def optimize_lattice_2d(body: ConvexBody, cfg: OptimizerConfig | None = None, frame=None,
                        seeds=()) -> OptimizationResult:
    if body.dim != 2:
        raise GeometryError("optimize_lattice_2d expects a planar body")
    extra = [(np.asarray(s, dtype=float), None) for s in seeds]
    return _optimize(body, cfg or OptimizerConfig(), False, extra_seeds=extra, frame=frame)


def optimize_lstar(body: ConvexBody, cfg: OptimizerConfig | None = None,
                   translative: OptimizationResult | None = None,
                   seeds=()) -> OptimizationResult:
    """Search for a dense lattice packing of pairs ``{K, v - K}``.

    Starting points include face-to-face pairs and, when ``translative`` is
    given and the body is centrally symmetric, the pairing of that lattice
    with an index-two sublattice, so the result is never below it.
    """
    cfg = cfg or OptimizerConfig()
    obj = _objective(body, True)
    extra = list(seeds)
    if translative is not None and body.is_centrally_symmetric(1e-9):
        b = translative.lattice.basis
        sub = np.vstack([2 * b[0], b[1:]])
        extra.append((sub, b[0].copy()))
    for u in _pair_seeds(obj):
        # lattice of the joined pair, found by a short translative run
        try:
            joined = convex_hull(np.vstack([obj.kc.vertices, u - obj.kc.vertices]))
        except GeometryError:
            continue
        if abs(joined.volume - 2 * obj.kc.volume) > 1e-9 * joined.volume:
            continue
        short = OptimizerConfig(restarts=4, seed=cfg.seed, max_iter=min(cfg.max_iter, 600), workers=1)
        res = _optimize(joined, short, False)
        extra.append((res.lattice.basis, u))
    return _optimize(body, cfg, True, extra_seeds=extra)


__all__ = [
    "OptimizerConfig",
    "OptimizationResult",
    "PackingObjective",
    "optimize_lattice",
    "optimize_lattice_2d",
    "optimize_lstar",
]
