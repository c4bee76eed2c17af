import math
from fractions import Fraction

import numpy as np
import pytest

from packd import constructions as cons
from packd.catalog import make_base, symmetric_hexagon
from packd.geometry import GeometryError, affine_image, convex_hull, min_enclosing_parallelogram
from packd.lattice import Lattice, Motif, PeriodicArrangement
from packd.verify import check_arrangement, periodic_density


def _shrunk(arr, f=0.97):
    return PeriodicArrangement(Lattice(arr.lattice.basis * f), arr.motif)


@pytest.mark.parametrize("build, expected", [
    (cons.square_pyramid_packing, Fraction(8, 15)),
    (cons.conway_torquato_packing, Fraction(2, 3)),
    (cons.cone_over_hexagon_packing, Fraction(1, 2)),
    (cons.octahedron_enclosure_packing, Fraction(27, 38)),
    (cons.hexagon_pair_tiling, Fraction(3, 4)),
])
def test_exact_and_certified(build, expected):
    rep = build()
    assert rep.verified
    assert rep.exact_density == expected
    assert abs(float(rep.exact_density) - rep.density) <= 1e-12
    assert check_arrangement(rep.arrangement, 3.0).passed
    # the certificate is not vacuous: a slightly denser lattice fails
    assert not check_arrangement(_shrunk(rep.arrangement)).passed
    prov = rep.provenance()
    assert prov["verified"] and len(prov["oracle_log_sha256"]) == 64


@pytest.mark.parametrize("h", [1, 2, Fraction(1, 3), 0.7])
def test_height_invariance(h):
    assert cons.square_pyramid_packing(h).density == pytest.approx(8 / 15, abs=1e-12)
    assert cons.cone_over_hexagon_packing(height=h).density == pytest.approx(0.5, abs=1e-12)
    assert cons.octahedron_enclosure_packing(height=h).density == pytest.approx(27 / 38, abs=1e-12)
    assert cons.square_pyramid_packing(h).verified


def test_square_pyramid_affine_image():
    rep = cons.square_pyramid_packing()
    M = np.diag([2.0, 1.0, 1.0])
    body = affine_image(rep.arrangement.motif.bodies[0], M)
    arr = PeriodicArrangement(rep.arrangement.lattice.transformed(M), Motif.single(body))
    assert check_arrangement(arr).passed
    assert periodic_density(arr) == pytest.approx(8 / 15, abs=1e-12)


def test_square_pyramid_matches_square_base_hexagon():
    sq = cons.square_pyramid_packing()
    hx = cons.cone_over_hexagon_packing(Fraction(0), Fraction(0))
    assert sq.exact_density == hx.exact_density == Fraction(8, 15)


def test_hexagon_pair_degenerate_limit():
    rep = cons.hexagon_pair_tiling(Fraction(0), Fraction(0))
    assert rep.exact_density == Fraction(4, 5)
    near = cons.hexagon_pair_tiling(Fraction(1, 1000), Fraction(1, 1000))
    assert abs(near.density - 0.8) < 1e-5


GRID = [Fraction(k, 20) for k in range(0, 11)]


def test_hexagon_pair_grid():
    best = None
    for a in GRID:
        for b in GRID:
            if (a == 0) != (b == 0):
                continue
            rep = cons.hexagon_pair_tiling(a, b)
            assert rep.verified, (a, b)
            assert rep.exact_density >= Fraction(3, 4)
            best = rep.exact_density if best is None else min(best, rep.exact_density)
    assert best == Fraction(3, 4)
    assert cons.hexagon_pair_tiling(Fraction(1, 2), Fraction(1, 2)).exact_density == Fraction(3, 4)


def test_hexagon_pair_lattice_closed_form_minimum():
    # density (1 - ab) / det on a fine grid; the minimum is 3/4, reached at a = b = 1/2
    vals = {}
    for a in np.linspace(0.001, 0.5, 60):
        for b in np.linspace(0.001, 0.5, 60):
            v1, v2, _ = cons.hexagon_pair_lattice(a, b)
            det = abs(v1[0] * v2[1] - v1[1] * v2[0])
            vals[(a, b)] = (1 - a * b) / det
    assert min(vals.values()) >= 0.75 - 1e-12
    assert vals[(0.5, 0.5)] == pytest.approx(0.75)


def test_cone_over_hexagon_grid_minimum_at_regular():
    dens = {}
    for a in GRID[1:]:
        for b in GRID[1:]:
            rep = cons.cone_over_hexagon_packing(a, b)
            assert rep.verified
            dens[(a, b)] = rep.exact_density
    assert min(dens.values()) == Fraction(1, 2) == dens[(Fraction(1, 2), Fraction(1, 2))]


def test_hexagon_legs_validated():
    with pytest.raises(GeometryError):
        cons.hexagon_pair_tiling(Fraction(3, 5), Fraction(1, 2))


def test_octahedron_enclosure_bases():
    sq = cons.octahedron_enclosure_packing(make_base("square"))
    assert sq.exact_density == Fraction(18, 19) and sq.verified
    circ = cons.octahedron_enclosure_packing(make_base("circle", n=96))
    n = 96
    poly_ratio = (n / 2 * math.sin(2 * math.pi / n)) / (4 * math.cos(math.pi / n) ** 2)
    assert circ.density == pytest.approx(poly_ratio * 18 / 19, abs=1e-9)
    assert circ.density == pytest.approx(math.pi / 4 * 18 / 19, abs=1e-3)
    assert circ.verified


def test_octahedron_enclosure_random_hexagons():
    rng = np.random.default_rng(7)
    for k in range(100):
        p = rng.normal(size=(3, 2))
        H = convex_hull(np.vstack([p, -p]))
        rep = cons.octahedron_enclosure_packing(H) if k < 10 else None
        if rep is not None:
            assert rep.verified
            d = rep.density
        else:
            d = 18 / 19 / min_enclosing_parallelogram(H)[1]
        assert d >= 27 / 38 - 1e-9


def test_octahedron_enclosure_needs_symmetry():
    with pytest.raises(GeometryError):
        cons.octahedron_enclosure_packing(make_base("triangle"))


def test_conway_torquato_motif():
    rep = cons.conway_torquato_packing()
    pl = rep.arrangement.motif.placements
    assert len(pl) == 2
    for p in pl:
        assert np.linalg.det(p.isometry.linear) == pytest.approx(1.0)
    assert not pl[1].isometry.is_translation
    assert rep.arrangement.lattice.exact_det() == 1


def test_circular_cone():
    rep = cons.circular_cone_packing(64)
    assert rep.verified
    assert 0.44 <= rep.density <= math.sqrt(2) * math.pi / 9 + 1e-3
    with pytest.raises(GeometryError):
        cons.circular_cone_packing(8)
