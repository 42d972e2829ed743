from fractions import Fraction as F

import pytest

from models import Ornament
from services.constructions import (
    coordinate_planes,
    cross_polytope_sphere,
    disk_triple_point_sign,
    make_borromean,
    make_random_ornament,
    make_scrambled_borromean,
    make_trivial,
    sphere_at_level,
    standard_trivial_targets,
    stereographic_projection,
    subdivide,
)
from services.errors import CoincidentTargets, ContractViolation, DimensionMismatch
from services.geometry_kernel import rational_sphere_point
from services.mu_degree import compute_mu_degree
from services.mu_sweep import mu_via_sweep
from services.ornament_model import perturb_ornament, validate_manifold, validate_ornament
from tests.conftest import point


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cross_polytope_counts(k):
    sphere = cross_polytope_sphere(k)
    assert sphere.domain.dim == 2 * k - 1
    assert sphere.domain.vertex_count == 4 * k
    assert len(sphere.domain.facets) == 2 ** (2 * k)
    assert sphere.ambient_dim == 2 * k


@pytest.mark.parametrize("k,r", [(1, 0), (1, 1), (1, 2), (2, 0), (2, 1), (3, 0), (3, 1)])
def test_sphere_levels_are_manifolds(k, r):
    sphere = sphere_at_level(k, r)
    assert validate_manifold(sphere.domain).is_valid
    for p in sphere.images:
        assert sum(x * x for x in p) == 1


@pytest.mark.slow
def test_sphere_k3_r2_is_a_manifold():
    assert validate_manifold(sphere_at_level(3, 2).domain).is_valid


def test_subdivision_counts():
    sphere = cross_polytope_sphere(2)
    finer = subdivide(sphere)
    assert finer.domain.vertex_count == sphere.domain.vertex_count + len(sphere.domain.facets)
    assert len(finer.domain.facets) == len(sphere.domain.facets) * 4
    assert subdivide(sphere, 0) == sphere


def test_negative_level_rejected():
    with pytest.raises(ContractViolation):
        sphere_at_level(1, -1)


def test_coordinate_planes():
    assert coordinate_planes(1) == ((0, 1), (2, 0), (1, 2))
    assert coordinate_planes(2) == ((0, 1, 2, 3), (4, 5, 0, 1), (2, 3, 4, 5))


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_coordinate_disks_meet_positively_for_every_k(k):
    assert disk_triple_point_sign(k) == 1


def test_stereographic_projection_fixes_the_equator():
    center = (F(0), F(0), F(1))
    assert stereographic_projection((F(1), F(0), F(0)), center) == (F(1), F(0))
    assert stereographic_projection((F(0), F(0), F(-1)), center) == (F(0), F(0))
    with pytest.raises(ContractViolation):
        stereographic_projection(center, center)


def test_borromean_k1_shape(borromean1):
    assert borromean1.ambient_dim == 2
    for c in borromean1.components:
        assert c.domain.vertex_count == 4
        assert len(c.domain.facets) == 4
        assert len(set(c.images)) == len(c.images)
    assert validate_ornament(borromean1).is_valid


def test_borromean_k1_both_methods(borromean1):
    assert compute_mu_degree(borromean1, seed=0).mu == 1
    assert mu_via_sweep(borromean1, seed=0) == 1


def test_borromean_refined():
    o = make_borromean(1, r=1)
    assert validate_ornament(o).is_valid
    assert compute_mu_degree(o, seed=2).mu == 1


def test_borromean_is_deterministic():
    assert make_borromean(1, seed=5) == make_borromean(1, seed=5)


def test_projection_center_is_on_the_sphere():
    center = rational_sphere_point((F(1),) * 3, 64)
    assert sum(x * x for x in center) == 1


@pytest.mark.slow
def test_borromean_k2():
    o = make_borromean(2)
    assert o.ambient_dim == 5
    assert validate_ornament(o).is_valid
    assert compute_mu_degree(o, seed=0).mu == 1
    assert mu_via_sweep(o, seed=0) == 1


def test_trivial(trivial1):
    assert validate_ornament(trivial1).is_valid
    assert compute_mu_degree(trivial1, seed=0).mu == 0
    assert {p for c in trivial1.components for p in c.images} == set(standard_trivial_targets(1))


def test_trivial_contract():
    with pytest.raises(CoincidentTargets):
        make_trivial(1, (point(0, 0), point(0, 0), point(1, 1)))
    with pytest.raises(DimensionMismatch):
        make_trivial(1, (point(0, 0, 0), point(1, 0, 0), point(0, 1, 0)))
    with pytest.raises(DimensionMismatch):
        make_trivial(1, (point(0, 0), point(1, 0)))


def test_perturbed_trivial(trivial1):
    moved = perturb_ornament(trivial1, F(1, 100), seed=1)
    assert isinstance(moved, Ornament)
    assert mu_via_sweep(moved) == compute_mu_degree(moved).mu == 0


def test_random_is_deterministic():
    assert make_random_ornament(1, 0, 3, F(1, 2)) == make_random_ornament(1, 0, 3, F(1, 2))
    assert make_random_ornament(1, 0, 3, F(1, 2)) != make_random_ornament(1, 0, 4, F(1, 2))


def test_random_is_valid_and_on_the_sphere_domain():
    o = make_random_ornament(1, 1, 7)
    assert validate_ornament(o).is_valid
    assert all(c.domain == sphere_at_level(1, 1).domain for c in o.components)


def test_random_contract():
    with pytest.raises(ContractViolation):
        make_random_ornament(1, 0, 0, F(0))
    with pytest.raises(ContractViolation):
        make_random_ornament(0)
    with pytest.raises(ContractViolation):
        make_borromean(0)


def test_scrambled_is_deterministic_and_valid():
    o = make_scrambled_borromean(1, 0, 3)
    assert o == make_scrambled_borromean(1, 0, 3)
    assert o != make_scrambled_borromean(1, 0, 4)
    assert validate_ornament(o).is_valid
    assert all(validate_manifold(c.domain).is_valid for c in o.components)


def test_scrambled_reverses_some_components(borromean1):
    reversed_counts = set()
    for seed in range(12):
        o = make_scrambled_borromean(1, 0, seed, F(0))
        reversed_counts.add(sum(c.domain.facets != b.domain.facets for c, b in zip(o.components, borromean1.components)))
        assert {frozenset(f) for c in o.components for f in c.domain.facets} == {
            frozenset(f) for c in borromean1.components for f in c.domain.facets
        }
    assert len(reversed_counts) > 1


def test_scrambled_contract():
    with pytest.raises(ContractViolation):
        make_scrambled_borromean(1, 0, 0, F(-1))
    with pytest.raises(ContractViolation):
        make_scrambled_borromean(0)


@pytest.mark.slow
def test_trivial_k2():
    o = make_trivial(2, standard_trivial_targets(2))
    assert compute_mu_degree(o, seed=0).mu == 0
    assert mu_via_sweep(o, seed=0) == 0
