import random
from fractions import Fraction as F

import pytest

from models import Ornament, PLMap, ReportStatus, TriangulatedManifold
from services.errors import ContractViolation, DimensionMismatch
from services.geometry_kernel import max_norm, vec_sub
from services.mu_degree import compute_mu_degree
from services.mu_sweep import is_ornament_homotopy
from services.ornament_model import (
    candidate_facet_triples,
    perturb_ornament,
    validate_manifold,
    validate_ornament,
    witness_points,
)
from tests.conftest import TRIANGLE_BOUNDARY, segment


def test_triangle_boundary_is_valid():
    assert validate_manifold(TRIANGLE_BOUNDARY).status == ReportStatus.VALID


def test_flipped_edge_is_incoherent():
    flipped = TriangulatedManifold(dim=1, vertex_count=3, facets=((0, 1), (2, 1), (2, 0)))
    report = validate_manifold(flipped)
    assert report.status == ReportStatus.INVALID
    assert "orientation" in report.witness.detail
    assert report.witness.face == (1,)


def test_two_triangles_are_disconnected():
    two = TriangulatedManifold(
        dim=1, vertex_count=6, facets=((0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3))
    )
    report = validate_manifold(two)
    assert report.status == ReportStatus.INVALID
    assert "disconnected" in report.witness.detail
    assert report.witness.facets == (3, 4, 5)


def test_open_segment_has_unmatched_faces():
    report = validate_manifold(TriangulatedManifold(dim=1, vertex_count=2, facets=((0, 1),)))
    assert report.status == ReportStatus.INVALID
    assert report.witness.face == (0,)


def test_repeated_vertex():
    report = validate_manifold(TriangulatedManifold(dim=1, vertex_count=2, facets=((0, 0), (0, 1))))
    assert report.status == ReportStatus.INVALID
    assert report.witness.facets == (0,)


def test_manifold_shape_errors():
    with pytest.raises(DimensionMismatch):
        TriangulatedManifold(dim=1, vertex_count=2, facets=((0, 1, 1),))
    with pytest.raises(DimensionMismatch):
        TriangulatedManifold(dim=1, vertex_count=2, facets=((0, 2),))


def test_three_segments_through_origin(three_segments):
    report = validate_ornament(three_segments)
    assert report.status == ReportStatus.INVALID
    assert report.witness.facets == (0, 0, 0)
    origin = (F(0), F(0))
    assert witness_points(three_segments, report.witness) == (origin, origin, origin)
    assert report.witness.point == origin


def test_disjoint_triangles_are_valid(three_triangles):
    report = validate_ornament(three_triangles)
    assert report.is_valid
    assert report.witness is None


def test_borromean_is_valid(borromean1):
    assert validate_ornament(borromean1).is_valid


def test_double_points_are_allowed():
    o = Ornament(components=(
        segment((-1, 0), (1, 0)),
        segment((0, -1), (0, 1)),
        segment((5, 5), (6, 5)),
    ))
    assert validate_ornament(o).is_valid


def test_touching_at_a_boundary_point_is_a_violation():
    o = Ornament(components=(
        segment((0, 0), (1, 0)),
        segment((0, 0), (0, 1)),
        segment((0, 0), (-1, -1)),
    ))
    report = validate_ornament(o)
    assert not report.is_valid
    assert report.witness.point == (F(0), F(0))


def test_plain_components_are_accepted(three_triangles):
    assert validate_ornament(list(three_triangles.components)).is_valid


def test_unequal_ambient_dimensions():
    with pytest.raises(DimensionMismatch):
        Ornament(components=(segment((0, 0), (1, 0)), segment((0, 0), (1, 0)), segment((0, 0, 0), (1, 0, 0))))


def test_validation_ignores_facet_order_and_labels(three_segments, three_triangles):
    def relabel(c: PLMap) -> PLMap:
        n = c.domain.vertex_count
        perm = list(reversed(range(n)))
        facets = tuple(tuple(perm[v] for v in f) for f in reversed(c.domain.facets))
        images = [None] * n
        for old, new in enumerate(perm):
            images[new] = c.images[old]
        domain = TriangulatedManifold(dim=c.domain.dim, vertex_count=n, facets=facets)
        return PLMap(domain=domain, ambient_dim=c.ambient_dim, images=tuple(images))

    for o, expected in ((three_segments, False), (three_triangles, True)):
        shuffled = Ornament(components=tuple(relabel(c) for c in o.components))
        assert validate_ornament(shuffled).is_valid is expected


def test_box_prefilter_skips_far_triples(three_triangles):
    assert candidate_facet_triples(three_triangles) == []


def test_box_prefilter_is_conservative(three_segments):
    assert (0, 0, 0) in candidate_facet_triples(three_segments)


def test_perturbed_trivial_is_valid_with_mu_zero(trivial1):
    moved = perturb_ornament(trivial1, F(1, 100), seed=3)
    assert validate_ornament(moved).is_valid
    assert compute_mu_degree(moved, seed=1).mu == 0


def test_perturbation_stays_within_eps(borromean1):
    eps = F(1, 50)
    moved = perturb_ornament(borromean1, eps, seed=11)
    for before, after in zip(borromean1.components, moved.components):
        for p, q in zip(before.images, after.images):
            assert max_norm(vec_sub(p, q)) < eps
    assert is_ornament_homotopy(borromean1, moved)


def test_perturbation_keeps_mu(borromean1):
    moved = perturb_ornament(borromean1, F(1, 100), seed=5)
    assert compute_mu_degree(moved, seed=2).mu == compute_mu_degree(borromean1, seed=2).mu == 1


def test_enormous_eps_still_returns_an_ornament(borromean1):
    moved = perturb_ornament(borromean1, F(10), seed=0)
    assert validate_ornament(moved).is_valid


def test_perturbation_is_deterministic(borromean1):
    assert perturb_ornament(borromean1, seed=8) == perturb_ornament(borromean1, seed=8)


def test_perturbation_contract(three_segments, three_triangles):
    with pytest.raises(ContractViolation):
        perturb_ornament(three_segments, F(1, 10))
    with pytest.raises(ContractViolation):
        perturb_ornament(three_triangles, F(0))


def test_perturbation_outside_the_sweep_regime():
    # curves in R^3 admit no square track system; only validity is checked
    o = Ornament(components=(
        segment((0, 0, 0), (1, 0, 0)),
        segment((0, 3, 0), (1, 3, 0)),
        segment((0, 0, 3), (1, 0, 3)),
    ))
    moved = perturb_ornament(o, F(1, 10), seed=1)
    assert validate_ornament(moved).is_valid
    assert moved != o



# Plane segment geometry, independent of the elimination path

def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _cross(u, v):
    return u[0] * v[1] - u[1] * v[0]


def _dot(u, v):
    return u[0] * v[0] + u[1] * v[1]


def _along(p, d, t):
    return (p[0] + t * d[0], p[1] + t * d[1])


def _on_segment(x, r, s):
    d, w = _sub(s, r), _sub(x, r)
    if d == (0, 0):
        return x == r
    return _cross(d, w) == 0 and 0 <= _dot(w, d) <= _dot(d, d)


def _meet(a, b):
    """Common part of two closed plane segments as an endpoint pair, or None."""
    if a is None or b is None:
        return None
    (p, q), (r, s) = a, b
    if p == q:
        return (p, p) if _on_segment(p, r, s) else None
    if r == s:
        return (r, r) if _on_segment(r, p, q) else None
    d1, d2 = _sub(q, p), _sub(s, r)
    denominator = _cross(d1, d2)
    if denominator:
        t = _cross(_sub(r, p), d2) / denominator
        u = _cross(_sub(r, p), d1) / denominator
        if 0 <= t <= 1 and 0 <= u <= 1:
            x = _along(p, d1, t)
            return (x, x)
        return None
    if _cross(d1, _sub(r, p)):
        return None
    n = _dot(d1, d1)
    ends = sorted((_dot(_sub(r, p), d1) / n, _dot(_sub(s, p), d1) / n))
    lo, hi = max(F(0), ends[0]), min(F(1), ends[1])
    if lo > hi:
        return None
    return (_along(p, d1, lo), _along(p, d1, hi))


def meeting_facet_triples(o):
    """Facet triples, in lexicographic order, whose three plane segments share a point."""
    c1, c2, c3 = o.components
    return [
        (i, j, l)
        for i in range(len(c1.domain.facets))
        for j in range(len(c2.domain.facets))
        for l in range(len(c3.domain.facets))
        if _meet(_meet(c1.facet_images(i), c2.facet_images(j)), c3.facet_images(l)) is not None
    ]


def lattice_triangles(seed):
    rng = random.Random(seed)
    components = []
    for name in ("X1", "X2", "X3"):
        ox, oy = rng.randint(0, 4), rng.randint(0, 4)
        images = tuple((F(ox + rng.randint(0, 3)), F(oy + rng.randint(0, 3))) for _ in range(3))
        components.append(PLMap(domain=TRIANGLE_BOUNDARY, ambient_dim=2, images=images, name=name))
    return Ornament(components=tuple(components))


def test_validation_matches_segment_geometry():
    outcomes = set()
    for seed in range(80):
        o = lattice_triangles(seed)
        report = validate_ornament(o)
        meeting = meeting_facet_triples(o)
        assert report.is_valid == (not meeting)
        if meeting:
            assert report.witness.facets == meeting[0]
            for c, f in zip(o.components, report.witness.facets):
                assert _on_segment(report.witness.point, *c.facet_images(f))
        outcomes.add(report.is_valid)
    assert outcomes == {True, False}


def test_segment_geometry_examples():
    a = ((F(0), F(0)), (F(2), F(0)))
    assert _meet(a, ((F(1), F(-1)), (F(1), F(1)))) == ((F(1), F(0)), (F(1), F(0)))
    assert _meet(a, ((F(1), F(0)), (F(3), F(0)))) == ((F(1), F(0)), (F(2), F(0)))
    assert _meet(a, ((F(3), F(0)), (F(4), F(0)))) is None
    assert _meet(a, ((F(0), F(1)), (F(2), F(1)))) is None
    assert _meet(a, ((F(2), F(0)), (F(2), F(0)))) == ((F(2), F(0)), (F(2), F(0)))
