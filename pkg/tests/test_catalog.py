from fractions import Fraction

import numpy as np
import pytest

from packd.catalog import (
    BODIES,
    DESCRIPTIONS,
    SYMMETRIC,
    BodySpec,
    UnknownBodyError,
    cube_slab,
    icosphere,
    make_base,
    make_body,
    symmetric_hexagon,
)
from packd.geometry import GeometryError, bodies_equal, exact_volume

SMALL = {"ball": {"n": 1}, "ball_slab": {"n": 16}, "double_cone": {"n": 16}, "circular_cone": {"n": 16}}


@pytest.mark.parametrize("name", sorted(BODIES))
def test_every_body_builds(name):
    K = make_body(name, **SMALL.get(name, {}))
    assert K.dim == 3 and K.volume > 0
    assert name in DESCRIPTIONS
    assert K.is_centrally_symmetric(1e-9) == (name in SYMMETRIC)


def test_cube_slab_limits():
    assert bodies_equal(cube_slab(3), make_body("cube"))
    assert exact_volume(cube_slab(Fraction(1))) == Fraction(8) - Fraction(8, 6) * 2
    with pytest.raises(GeometryError):
        cube_slab(0)
    with pytest.raises(GeometryError):
        cube_slab(Fraction(7, 2))


def test_hexagon_legs():
    assert symmetric_hexagon(Fraction(1, 2), Fraction(1, 2)).n_vertices == 6
    assert symmetric_hexagon(0, Fraction(1, 3)).n_vertices == 4
    with pytest.raises(GeometryError):
        symmetric_hexagon(Fraction(3, 5), 0)


def test_icosphere_on_sphere():
    for level in range(3):
        v = icosphere(level).vertices
        assert np.allclose(np.linalg.norm(v, axis=1), 1.0)
    assert icosphere(2).volume < 4 / 3 * np.pi


def test_rhombic_dodecahedron_inradius():
    K = make_body("rhombic_dodecahedron")
    assert K.n_facets == 12
    assert np.allclose(K.offsets, 1.0)


def test_bases_and_spec():
    assert make_base("square").volume == pytest.approx(1)
    assert make_base("hexagon").volume == pytest.approx(0.75)
    assert make_base("circle", n=96).n_vertices == 96
    K = make_body(BodySpec("cube_slab", {"lam": Fraction(1, 2)}))
    assert K.is_centrally_symmetric(1e-12)
    with pytest.raises(UnknownBodyError):
        make_body("icosahedron")
    with pytest.raises(UnknownBodyError):
        make_base("pentagram")
