import math
from fractions import Fraction

import numpy as np
import pytest

from packd import formulas
from packd.catalog import make_base, make_body
from packd.geometry import GeometryError, affine_image, difference_body
from packd.lattice import admissible_translative
from packd.optimize import OptimizerConfig, PackingObjective, optimize_lattice, optimize_lattice_2d, optimize_lstar
from packd.verify import check_arrangement


@pytest.mark.parametrize("kw", [
    {"restarts": 0}, {"max_iter": 0}, {"schedule": ()}, {"schedule": (0.1, 0.2)},
    {"schedule": (1.5, 0.1)}, {"perturbation": 0}, {"tolerance": -1},
])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        OptimizerConfig(**kw)


def test_dimension_checks():
    with pytest.raises(GeometryError):
        optimize_lattice(make_base("square"))
    with pytest.raises(GeometryError):
        optimize_lattice_2d(make_body("cube"))


def test_objective_cube_scale():
    obj = PackingObjective(make_body("cube"))
    assert obj.lattice_minimum(np.eye(3)) == pytest.approx(0.5)
    assert obj.density(np.eye(3)) == pytest.approx(1.0)


def test_deterministic():
    cfg = OptimizerConfig(restarts=3, seed=5, max_iter=300)
    K = make_body("tetrahedron")
    a = optimize_lattice(K, cfg)
    b = optimize_lattice(K, cfg)
    assert np.array_equal(a.lattice.basis, b.lattice.basis)
    assert a.density == b.density


def test_octahedron_small_budget():
    res = optimize_lattice(make_body("octahedron"), OptimizerConfig(restarts=8, seed=0))
    assert res.certified
    assert 18 / 19 - 1e-6 <= res.density <= 18 / 19 + 1e-9
    assert check_arrangement(res.arrangement).passed


def test_square_pyramid_reaches_difference_body_value():
    # density = (4/7) * (112/117) exactly for the square pyramid
    res = optimize_lattice(make_body("square_pyramid"), OptimizerConfig(restarts=8, seed=1))
    target = float(formulas.paper_bound("cone_T_max_lower").fraction)
    assert res.certified
    assert target - 1e-6 <= res.density <= target + 1e-9


def test_square_pyramid_difference_body():
    DK = difference_body(make_body("square_pyramid"))
    res = optimize_lattice(DK, OptimizerConfig(restarts=8, seed=0))
    target = float(formulas.paper_bound("square_pyramid_difference_body").fraction)
    assert res.certified
    assert target - 1e-6 <= res.density <= target + 1e-9


def test_cube_slab_middle_range_matches_rescaled_branch():
    lam = Fraction(3, 4)
    res = optimize_lattice(make_body("cube_slab", lam=lam), OptimizerConfig(restarts=8, seed=2))
    rescaled = float(formulas.whitworth_slab_density(lam, printed=False).value)
    printed = float(formulas.whitworth_slab_density(lam).value)
    assert res.certified
    assert res.density == pytest.approx(rescaled, abs=1e-6)
    assert abs(res.density - printed) > 0.5


def test_affine_equivariance():
    rng = np.random.default_rng(3)
    K = make_body("tetrahedron")
    M = rng.normal(size=(3, 3)) + 2 * np.eye(3)
    cfg = OptimizerConfig(restarts=6, seed=4)
    a = optimize_lattice(K, cfg)
    b = optimize_lattice(affine_image(K, M), cfg, frame=M)
    assert a.density == pytest.approx(18 / 49, abs=1e-6)
    assert b.density == pytest.approx(a.density, abs=1e-6)


def test_lstar_tetrahedron_double_lattice():
    res = optimize_lstar(make_body("tetrahedron"), OptimizerConfig(restarts=8, seed=0))
    keg = formulas.paper_bound("keg_tetrahedron_Tstar").value
    assert res.certified and res.mode == "lstar"
    assert res.density >= keg - 1e-6
    assert check_arrangement(res.arrangement).passed


def test_lstar_square_pyramid_joined_pair():
    res = optimize_lstar(make_body("square_pyramid"), OptimizerConfig(restarts=4, seed=0))
    assert res.certified and res.density >= 0.937


def test_lstar_never_below_lattice_for_symmetric():
    K = make_body("octahedron")
    cfg = OptimizerConfig(restarts=3, seed=0, max_iter=300)
    lat = optimize_lattice(K, cfg)
    pair = optimize_lstar(K, cfg, translative=lat)
    assert pair.density >= lat.density - 1e-9


def test_planar_circle():
    res = optimize_lattice_2d(make_base("circle", n=96), OptimizerConfig(restarts=6, seed=0))
    assert res.certified
    assert res.density == pytest.approx(math.pi / math.sqrt(12), rel=0.01)
    assert admissible_translative(res.body, res.lattice)


def test_explicit_seed_is_used():
    K = make_body("cube")
    res = optimize_lattice(K, OptimizerConfig(restarts=1, seed=0, max_iter=1), seeds=[2 * np.eye(3)])
    assert res.density == pytest.approx(1.0, abs=1e-9)


def test_worker_pool_matches_serial(monkeypatch):
    K = make_body("octahedron")
    serial = optimize_lattice(K, OptimizerConfig(restarts=2, seed=1, max_iter=200, workers=1))
    pooled = optimize_lattice(K, OptimizerConfig(restarts=2, seed=1, max_iter=200, workers=2))
    assert np.allclose(serial.lattice.basis, pooled.lattice.basis)
