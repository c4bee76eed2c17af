from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packd.catalog import make_body, regular_tetrahedron
from packd.geometry import affine_image, convex_hull
from packd.lattice import Lattice, Motif, PeriodicArrangement
from packd.verify import (
    UncertifiedArrangementError,
    check_arrangement,
    monte_carlo_density,
    periodic_density,
    separation,
)

from .oracles import overlap_by_sampling


def test_touching_cubes_are_disjoint():
    C = make_body("cube")
    sep = separation(C, C.translate([2.0, 0.5, 0.0]))
    assert sep.disjoint
    assert np.allclose(np.abs(sep.normal), [1, 0, 0])


def test_overlapping_cubes_witness():
    C = make_body("cube")
    D = C.translate([1.5, 0.2, -0.3])
    sep = separation(C, D)
    assert not sep.disjoint
    assert C.contains_interior(sep.witness[None])[0] and D.contains_interior(sep.witness[None])[0]
    assert sep.depth == pytest.approx(0.5)


def test_edge_edge_separation():
    # two tetrahedra separated only by an edge-edge cross product direction
    T = convex_hull([(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)])
    U = -T
    for shift in ([0.6, 0.6, 0.0], [0.3, 0.3, 0.3]):
        other = U.translate(shift)
        sep = separation(T, other)
        rng = np.random.default_rng(0)
        assert sep.disjoint == (not overlap_by_sampling(T, other, rng) and not overlap_by_sampling(other, T, rng))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_separation_agrees_with_difference_set(seed):
    rng = np.random.default_rng(seed)
    d = int(rng.choice([2, 3]))
    A = convex_hull(rng.normal(size=(7, d)))
    B = convex_hull(rng.normal(size=(6, d)))
    t = rng.normal(size=d) * 1.5
    # interiors meet iff t is interior to A - B
    from packd.geometry import minkowski_difference_set
    D = minkowski_difference_set(A, B)
    gap = (D.normals @ t - D.offsets).max()
    if abs(gap) < 1e-7:
        return
    assert separation(A, B.translate(t)).disjoint == (gap > 0)


def test_cube_on_shrunk_lattice_fails():
    C = make_body("cube")
    arr = PeriodicArrangement(Lattice(1.8 * np.eye(3)), Motif.single(C))
    rep = check_arrangement(arr)
    assert rep.complete and not rep.passed
    assert rep.violations and rep.violations[0].witness is not None
    with pytest.raises(UncertifiedArrangementError):
        periodic_density(arr)


def test_small_window_is_incomplete():
    C = make_body("cube")
    arr = PeriodicArrangement(Lattice(2 * np.eye(3)), Motif.single(C))
    assert not check_arrangement(arr, window_radius=0.1).complete
    full = check_arrangement(arr)
    assert full.passed and full.complete
    assert periodic_density(arr) == pytest.approx(1.0)


def test_pair_arrangement_density():
    T = regular_tetrahedron()
    crowded = PeriodicArrangement(Lattice(3 * np.eye(3)), Motif.pair(T, [1, 1, 1]))
    assert not check_arrangement(crowded).passed
    arr = PeriodicArrangement(Lattice.from_vectors([(3, 0, 0), (0, 3, 0), (0, 0, 3)]), Motif.pair(T, [-1, -1, -1]))
    assert check_arrangement(arr).passed
    assert periodic_density(arr) == pytest.approx(2 / 81)
    assert periodic_density(arr, exact=True) == Fraction(2, 81)


def test_monte_carlo_sparse_packing():
    T = regular_tetrahedron()
    arr = PeriodicArrangement(Lattice(np.array([[1.5, 0, 0], [0.3, 1.5, 0], [0, 0.2, 1.5]])), Motif.single(T))
    exact = periodic_density(arr)
    est, se = monte_carlo_density(arr, r=5, samples=200_000, seed=1)
    assert abs(est - exact) <= 4 * se


def test_monte_carlo_arguments():
    arr = PeriodicArrangement(Lattice(2 * np.eye(3)), Motif.single(make_body("cube")))
    with pytest.raises(ValueError):
        monte_carlo_density(arr, r=0)
    with pytest.raises(ValueError):
        monte_carlo_density(arr, samples=10)
    a = monte_carlo_density(arr, samples=20_000, seed=3)
    b = monte_carlo_density(arr, samples=20_000, seed=3)
    assert a == b
