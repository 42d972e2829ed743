"""
Generators: cross-polytope spheres, the Borromean ornament, trivial ornaments,
seeded random ornaments and seeded affine images of the Borromean ornament.
"""
import logging
import random
from fractions import Fraction
from typing import List, Sequence, Tuple

from config import settings
from models import Ornament, PLMap, TriangulatedManifold
from services.errors import CoincidentTargets, ContractViolation, DimensionMismatch, RetryBudgetExceeded
from services.geometry_kernel import (
    Vector,
    check_length,
    derive_seed,
    det_sign,
    dot,
    random_rational_vector,
    rational_sphere_point,
    vec_add,
    vec_scale,
    vec_sub,
)
from services.mu_degree import reverse_component_orientation
from services.ornament_model import perturb_vertex_images, triple_equality_system, validate_ornament

logger = logging.getLogger(__name__)

# Denominator of the stereographic parameter for constructed sphere points.
SPHERE_DENOMINATOR = 64
RANDOM_DENOMINATOR = 1024
RANDOM_ATTEMPTS = 200
BORROMEAN_PERTURBATIONS = 4
SCRAMBLE_SPREAD = Fraction(1, 64)
NAMES = ("X1", "X2", "X3")


def _check_k(k: int) -> None:
    if k < 1:
        raise ContractViolation(f"k must be at least 1, got {k}")


def cross_polytope_sphere(k: int) -> PLMap:
    """
    Boundary of the 2k-dimensional cross-polytope as a PL sphere in R^2k.

    Vertex 2i is +e_i and vertex 2i+1 is -e_i. A facet picks one sign per
    axis; facets with an odd number of minus signs list their first two
    vertices swapped, which orients the boundary coherently.
    """
    _check_k(k)
    n = 2 * k
    images = []
    for i in range(n):
        for sign in (1, -1):
            images.append(tuple(Fraction(sign if j == i else 0) for j in range(n)))
    facets = []
    for pattern in range(2 ** n):
        signs = [-1 if pattern >> i & 1 else 1 for i in range(n)]
        facet = [2 * i + (0 if s > 0 else 1) for i, s in enumerate(signs)]
        if signs.count(-1) % 2:
            facet[0], facet[1] = facet[1], facet[0]
        facets.append(tuple(facet))
    domain = TriangulatedManifold(dim=n - 1, vertex_count=2 * n, facets=tuple(facets))
    return PLMap(domain=domain, ambient_dim=n, images=tuple(images), name=f"S^{n - 1}")


def subdivide(sphere: PLMap, rounds: int = 1) -> PLMap:
    """
    Stellar subdivision of every facet at its barycenter, new vertices pushed
    radially to rational points on the unit sphere. Orientation is kept by
    substituting the new vertex in place of each old one.
    """
    for _ in range(rounds):
        images: List[Vector] = list(sphere.images)
        facets = []
        for facet in sphere.domain.facets:
            points = [sphere.images[v] for v in facet]
            center = tuple(sum(col, Fraction(0)) / len(points) for col in zip(*points))
            images.append(rational_sphere_point(center, SPHERE_DENOMINATOR))
            new = len(images) - 1
            for i in range(len(facet)):
                facets.append(facet[:i] + (new,) + facet[i + 1:])
        domain = TriangulatedManifold(dim=sphere.domain.dim, vertex_count=len(images), facets=tuple(facets))
        sphere = sphere.model_copy(update={"domain": domain, "images": tuple(images)})
    return sphere


def sphere_at_level(k: int, r: int) -> PLMap:
    if r < 0:
        raise ContractViolation(f"subdivision level must be non-negative, got {r}")
    return subdivide(cross_polytope_sphere(k), r)


def coordinate_planes(k: int) -> Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]:
    """
    Coordinates of R^3k spanned by R^k x R^k x 0, R^k x 0 x R^k and
    0 x R^k x R^k, in cyclic block order (AB, CA, BC). The order orients the
    disks; with it the origin is a positive 1=2=3 point for every k.
    """
    first, second, third = tuple(range(k)), tuple(range(k, 2 * k)), tuple(range(2 * k, 3 * k))
    return first + second, third + first, second + third


def disk_triple_point_sign(k: int) -> int:
    """
    Sign of the origin as a 1=2=3 point of the three oriented coordinate
    2k-disks of R^3k, read as track cells in R^(3k-1) x I.
    """
    from services.mu_sweep import time_row_sign

    _check_k(k)
    n = 3 * k
    origin = tuple(Fraction(0) for _ in range(n))
    simplices = [
        [tuple(Fraction(1 if j == c else 0) for j in range(n)) for c in plane] + [origin]
        for plane in coordinate_planes(k)
    ]
    rows, _, _ = triple_equality_system(simplices)
    return time_row_sign(n - 1) * det_sign(rows)


def stereographic_projection(x: Vector, center: Vector) -> Vector:
    """
    Project x on the unit sphere from ``center`` onto the hyperplane
    orthogonal to it, then drop the last coordinate.
    """
    denominator = 1 - dot(x, center)
    if denominator == 0:
        raise ContractViolation("cannot project the projection center itself")
    p = vec_add(center, vec_scale(1 / denominator, vec_sub(x, center)))
    return p[:-1]


def _projected_borromean(k: int, r: int) -> Ornament:
    sphere = sphere_at_level(k, r)
    center = rational_sphere_point(tuple(Fraction(1) for _ in range(3 * k)), SPHERE_DENOMINATOR)
    components = []
    for name, plane in zip(NAMES, coordinate_planes(k)):
        images = []
        for p in sphere.images:
            x = [Fraction(0)] * (3 * k)
            for coord, value in zip(plane, p):
                x[coord] = value
            images.append(stereographic_projection(tuple(x), center))
        components.append(PLMap(domain=sphere.domain, ambient_dim=3 * k - 1, images=tuple(images), name=name))
    return Ornament(components=tuple(components))


def make_borromean(k: int, r: int = 0, seed: int = 0) -> Ornament:
    """
    Three coordinate (2k-1)-spheres of R^3k projected stereographically
    into R^(3k-1) from a rational point near (1, ..., 1)/sqrt(3k).

    An invalid model is first perturbed (seeded, halving eps) and then
    refined up to MAX_SUBDIVISION rounds.
    """
    _check_k(k)
    top = max(r, settings.MAX_SUBDIVISION)
    for level in range(r, top + 1):
        o = _projected_borromean(k, level)
        if validate_ornament(o).is_valid:
            return o
        eps = settings.DEFAULT_EPS
        for attempt in range(BORROMEAN_PERTURBATIONS):
            candidate = perturb_vertex_images(o, eps, derive_seed(seed, "borromean", level, attempt))
            if validate_ornament(candidate).is_valid:
                logger.info("Borromean model for k=%d, r=%d perturbed by eps=%s", k, level, eps)
                return candidate
            eps /= 2
        logger.info("Borromean model for k=%d invalid at r=%d, refining", k, level)
    raise RetryBudgetExceeded(f"no valid Borromean model for k={k} up to r={top}")


def make_trivial(k: int, targets: Sequence[Sequence[Fraction]]) -> Ornament:
    """Three cross-polytope spheres, component i sent to targets[i]."""
    _check_k(k)
    m = 3 * k - 1
    if len(targets) != 3:
        raise DimensionMismatch(f"need three targets, got {len(targets)}")
    points = [tuple(Fraction(x) for x in p) for p in targets]
    for p in points:
        check_length(p, m, "target")
    if len(set(points)) != 3:
        raise CoincidentTargets("trivial-ornament targets must be pairwise distinct")
    domain = cross_polytope_sphere(k).domain
    return Ornament(components=tuple(
        PLMap(domain=domain, ambient_dim=m, images=tuple(p for _ in range(domain.vertex_count)), name=name)
        for name, p in zip(NAMES, points)
    ))


def standard_trivial_targets(k: int) -> Tuple[Vector, Vector, Vector]:
    """(0, ..., 0), (1, 0, ..., 0) and (0, 1, 0, ..., 0) in R^(3k-1)."""
    m = 3 * k - 1
    return tuple(
        tuple(Fraction(1 if j == i else 0) for j in range(m)) for i in (-1, 0, 1)
    )


def make_random_ornament(k: int, r: int = 0, seed: int = 0, spread: Fraction = Fraction(1)) -> Ornament:
    """
    Sphere domains with seeded random vertex images: one center per component
    in [-1, 1]^m and offsets in [-spread, spread]^m, resampled until valid.
    """
    _check_k(k)
    spread = Fraction(spread)
    if spread <= 0:
        raise ContractViolation(f"spread must be positive, got {spread}")
    m = 3 * k - 1
    domain = sphere_at_level(k, r).domain
    for attempt in range(RANDOM_ATTEMPTS):
        rng = random.Random(derive_seed(seed, "random", attempt))
        components = []
        for name in NAMES:
            center = random_rational_vector(rng, m, Fraction(1), RANDOM_DENOMINATOR)
            images = tuple(
                vec_add(center, random_rational_vector(rng, m, spread, RANDOM_DENOMINATOR))
                for _ in range(domain.vertex_count)
            )
            components.append(PLMap(domain=domain, ambient_dim=m, images=images, name=name))
        o = Ornament(components=tuple(components))
        if validate_ornament(o).is_valid:
            if attempt:
                logger.debug("random ornament seed=%d accepted after %d rejections", seed, attempt)
            return o
    raise RetryBudgetExceeded(f"no valid random ornament for seed={seed} in {RANDOM_ATTEMPTS} samples")


def _random_shear(rng: random.Random, m: int) -> List[List[Fraction]]:
    """D(I + U) with D diagonal, entries +-[1/2, 2], and U strictly upper triangular in [-1, 1]."""
    matrix = []
    for i in range(m):
        scale = Fraction(rng.choice((-1, 1)) * rng.randint(8, 32), 16)
        row = [Fraction(0)] * m
        row[i] = scale
        for j in range(i + 1, m):
            row[j] = scale * Fraction(rng.randint(-16, 16), 16)
        matrix.append(row)
    return matrix


def make_scrambled_borromean(k: int, r: int = 0, seed: int = 0, spread: Fraction = SCRAMBLE_SPREAD) -> Ornament:
    """
    The Borromean ornament under a seeded invertible affine map, with a seeded
    subset of its components reversed and every vertex image then moved by
    less than ``spread`` (no move for spread 0).

    The affine map keeps mu, so without the move mu is (-1)^(reversed count).
    """
    _check_k(k)
    spread = Fraction(spread)
    if spread < 0:
        raise ContractViolation(f"spread must be non-negative, got {spread}")
    m = 3 * k - 1
    base = make_borromean(k, r)
    for attempt in range(RANDOM_ATTEMPTS):
        rng = random.Random(derive_seed(seed, "scrambled", attempt))
        matrix = _random_shear(rng, m)
        shift = random_rational_vector(rng, m, Fraction(1), RANDOM_DENOMINATOR)
        o = Ornament(components=tuple(
            c.model_copy(update={"images": tuple(
                vec_add(tuple(dot(row, p) for row in matrix), shift) for p in c.images
            )})
            for c in base.components
        ))
        for which in (1, 2, 3):
            if rng.randint(0, 1):
                o = reverse_component_orientation(o, which)
        if spread:
            o = perturb_vertex_images(o, spread, derive_seed(seed, "jitter", attempt))
        if validate_ornament(o).is_valid:
            return o
        logger.debug("scrambled Borromean seed=%d attempt %d invalid", seed, attempt)
    raise RetryBudgetExceeded(f"no valid scrambled Borromean for seed={seed} in {RANDOM_ATTEMPTS} samples")
