from fractions import Fraction as F

import pytest

from models import Ornament, PLMap, TriangulatedManifold
from services.constructions import make_borromean, make_trivial, standard_trivial_targets
from services.geometry_kernel import vec_scale
from services.mu_degree import unnormalized_sphere_map
from services.mu_sweep import cell_points

SEGMENT = TriangulatedManifold(dim=1, vertex_count=2, facets=((0, 1),))
TRIANGLE_BOUNDARY = TriangulatedManifold(dim=1, vertex_count=3, facets=((0, 1), (1, 2), (2, 0)))


def point(*coords):
    return tuple(F(c) for c in coords)


def segment(a, b, name=""):
    return PLMap(domain=SEGMENT, ambient_dim=len(a), images=(point(*a), point(*b)), name=name)


def triangle(offset, size=F(1), name=""):
    ox, oy = offset
    corners = ((0, 0), (1, 0), (0, 1))
    return PLMap(
        domain=TRIANGLE_BOUNDARY,
        ambient_dim=2,
        images=tuple(point(ox + size * x, oy + size * y) for x, y in corners),
        name=name,
    )


def combine(points, weights):
    return tuple(sum(w * p[c] for w, p in zip(weights, points)) for c in range(len(points[0])))


def assert_exact_preimages(o, result):
    """Every degree solution maps exactly onto s*v from strictly inside its facets."""
    for solution in result.solutions:
        x, y, z = (
            combine(o.components[w].facet_images(solution.facets[w]), solution.barycentric[w])
            for w in range(3)
        )
        assert unnormalized_sphere_map(x, y, z) == vec_scale(solution.s, result.direction.v)
        assert solution.s > 0
        assert all(c > 0 for b in solution.barycentric for c in b)


def assert_exact_triple_points(result):
    """Every triple point is the common image of its three cells, strictly inside each."""
    for p in result.points:
        images = {
            combine(cell_points(result.track, cell), weights)
            for cell, weights in zip(p.cells, p.barycentric)
        }
        assert images == {p.point + (p.t,)}
        assert 0 < p.t < 1
        assert all(c > 0 for b in p.barycentric for c in b)


@pytest.fixture(scope="session")
def borromean1():
    return make_borromean(1)


@pytest.fixture(scope="session")
def trivial1():
    return make_trivial(1, standard_trivial_targets(1))


@pytest.fixture
def three_segments():
    """Three segments in the plane all passing through the origin."""
    return Ornament(components=(
        segment((-1, 0), (1, 0), "X1"),
        segment((0, -1), (0, 1), "X2"),
        segment((-1, -1), (1, 1), "X3"),
    ))


@pytest.fixture
def three_triangles():
    """Three pairwise disjoint small triangle boundaries."""
    return Ornament(components=(
        triangle((0, 0), F(1, 2), "X1"),
        triangle((3, 0), F(1, 2), "X2"),
        triangle((0, 3), F(1, 2), "X3"),
    ))
