from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packd.catalog import make_body, regular_tetrahedron
from packd.geometry import GeometryError, convex_hull
from packd.lattice import (
    InadmissibleLatticeError,
    Isometry,
    Lattice,
    Motif,
    PeriodicArrangement,
    Placement,
    admissible_motif,
    admissible_translative,
    arrangement_from_dict,
    enumerate_lattice_points,
    exact_motif_density,
    exact_translative_upper_bound,
    find_translative_violation,
    lattice_density,
    lll_reduce,
    motif_violations,
)
from packd.verify import check_arrangement

from .oracles import brute_lattice_points

seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_lll_is_unimodular(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.choice([2, 3]))
    B = rng.normal(size=(d, d)) * 3
    R = lll_reduce(B)
    U = R @ np.linalg.inv(B)
    assert np.allclose(U, np.round(U), atol=1e-7)
    assert abs(np.linalg.det(np.round(U))) == pytest.approx(1)
    assert np.linalg.norm(R, axis=1).min() <= np.linalg.norm(B, axis=1).min() + 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_enumeration_matches_brute_force(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.choice([2, 3]))
    B = rng.normal(size=(d, d)) + 1.5 * np.eye(d)
    if abs(np.linalg.det(B)) < 0.3:
        B = B + np.eye(d)
    L = Lattice(B)
    r = float(rng.uniform(0.5, 3.0))
    got = enumerate_lattice_points(L, r)
    ref = brute_lattice_points(L.basis, r, reach=40 if d == 2 else 14)
    key = lambda a: sorted(map(tuple, np.round(a, 9)))
    assert key(got) == key(ref)


def test_cube_lattices():
    K = make_body("cube")
    assert admissible_translative(K, Lattice(2 * np.eye(3)))
    assert lattice_density(K, Lattice(2 * np.eye(3))) == pytest.approx(1.0)
    bad = Lattice(1.9 * np.eye(3))
    w = find_translative_violation(K, bad)
    assert w is not None and np.abs(w).max() == pytest.approx(1.9)
    with pytest.raises(InadmissibleLatticeError) as e:
        lattice_density(K, bad)
    assert e.value.certificate is not None


def test_sheared_cube_lattice_is_admissible():
    K = make_body("cube")
    L = Lattice(np.array([[2, 0.7, 0], [0, 2, 0.3], [0, 0, 2.0]]))
    assert admissible_translative(K, L)
    assert lattice_density(K, L) == pytest.approx(1.0)


def test_exact_upper_bound():
    assert exact_translative_upper_bound(regular_tetrahedron()) == Fraction(2, 5)
    assert exact_translative_upper_bound(make_body("cube")) == 1


def test_exact_lattice_det():
    L = Lattice.from_vectors([(1, Fraction(1, 2), 0), (Fraction(-1, 2), 1, 0), (0, 0, Fraction(3, 7))])
    assert L.exact_det() == Fraction(15, 28)
    with pytest.raises(GeometryError):
        Lattice(np.eye(3)).exact_det()


def test_singular_basis_rejected():
    with pytest.raises(GeometryError):
        Lattice(np.array([[1.0, 0], [2.0, 0]]))


def test_isometry_must_be_orthogonal():
    with pytest.raises(GeometryError):
        Isometry.make(np.diag([1.0, 2.0, 1.0]), (0, 0, 0))


def test_pair_motif_against_verifier():
    # random pair arrangements, some crowded and some loose
    T = regular_tetrahedron()
    rng = np.random.default_rng(5)
    for _ in range(12):
        B = rng.normal(size=(3, 3)) + 2 * np.eye(3)
        v = rng.normal(size=3)
        arr = PeriodicArrangement(Lattice(B * rng.uniform(0.6, 1.6)), Motif.pair(T, v))
        assert admissible_motif(arr) == check_arrangement(arr).passed


def test_rotation_motif_exact():
    T = regular_tetrahedron()
    rot = Isometry.make(np.array([[0.0, -1, 0], [1, 0, 0], [0, 0, 1]]), (1, 0, 0))
    placed = rot.apply(T)
    assert placed.exact_vertices is not None
    assert sorted(placed.exact_vertices) == sorted([(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)])
    # the two tetrahedra of one cube interpenetrate
    same = PeriodicArrangement(Lattice.from_vectors([(4, 0, 0), (0, 4, 0), (0, 0, 4)]),
                               Motif((T,), (Placement(0, Isometry.make(None, (0, 0, 0))), Placement(0, rot))))
    assert motif_violations(same)
    apart = Isometry.make(rot.linear, (3, 0, 0))
    arr = PeriodicArrangement(Lattice.from_vectors([(4, 0, 0), (0, 4, 0), (0, 0, 4)]),
                              Motif((T,), (Placement(0, Isometry.make(None, (0, 0, 0))), Placement(0, apart))))
    assert exact_motif_density(arr) == Fraction(1, 96)
    assert not motif_violations(arr)
    assert check_arrangement(arr).passed


def test_arrangement_roundtrip():
    T = regular_tetrahedron()
    arr = PeriodicArrangement(Lattice(np.eye(3) * 2), Motif.pair(T, [0.5, 0.5, 0.5]))
    back = arrangement_from_dict(arr.to_dict())
    assert np.allclose(back.lattice.basis, arr.lattice.basis)
    assert len(back.placed) == 2
    assert back.placed[1].volume == pytest.approx(T.volume)
