"""
mu as the degree of X1 x X2 x X3 -> S^(2m-1).

The product map (x, y, z) -> (2x-y-z, 2y-x-z) is affine on every product of
facets, so each facet triple contributes the solutions of one square linear
system "G(x, y, z) = s*v" with s > 0 and strictly interior barycentric
coordinates. Column order of the system matrix: edge vectors of sigma_1,
sigma_2, sigma_3 (listed vertex order, last vertex eliminated), then -v.
"""
import logging
import random
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence

from config import settings
from models import DegreeResult, NonGenericReason, Ornament, PreimageSolution, RayDirection, SignConvention
from services.errors import ContractViolation, DimensionMismatch, NonGenericDirection, RetryBudgetExceeded
from services.geometry_kernel import (
    BarycentricPosition,
    Vector,
    barycentric_position,
    check_length,
    derive_seed,
    simplex_blocks_feasible,
    solve_with_sign,
    vec_sub,
)
from services.workers import map_ordered

logger = logging.getLogger(__name__)

# The one Borromean ornament both global signs are calibrated on.
CALIBRATION_K = 1


def unnormalized_sphere_map(x: Sequence[Fraction], y: Sequence[Fraction], z: Sequence[Fraction]) -> Vector:
    """(2x-y-z, 2y-x-z); zero exactly on the diagonal x = y = z."""
    m = len(x)
    check_length(y, m, "y")
    check_length(z, m, "z")
    first = tuple(2 * a - b - c for a, b, c in zip(x, y, z))
    second = tuple(2 * b - a - c for a, b, c in zip(x, y, z))
    return first + second


def check_mu_dimensions(o: Ornament) -> int:
    """Return k for an ornament of three (2k-1)-manifolds in R^(3k-1)."""
    dims = {c.domain.dim for c in o.components}
    if len(dims) != 1:
        raise DimensionMismatch(f"components have different dimensions {sorted(dims)}")
    d = dims.pop()
    m = o.ambient_dim
    if 3 * d != 2 * m - 1:
        raise DimensionMismatch(f"mu needs 3d = 2m - 1, got d={d}, m={m}")
    return (d + 1) // 2


def random_direction(dim: int, seed: int) -> RayDirection:
    """Seeded nonzero rational vector in [-1, 1]^dim."""
    rng = random.Random(derive_seed(seed, "direction"))
    limit = settings.DENOMINATOR_LIMIT
    while True:
        v = tuple(Fraction(rng.randint(-limit, limit), limit) for _ in range(dim))
        if any(v):
            return RayDirection(v=v, seed=seed)


def _edge_columns(points: Sequence[Vector]) -> List[Vector]:
    last = points[-1]
    return [vec_sub(p, last) for p in points[:-1]]


def _barycentric(params: Sequence[Fraction]) -> Vector:
    return tuple(params) + (1 - sum(params, Fraction(0)),)


def _solve_facet_triple(item):
    """Tagged result: ("skip",), ("hit", solution) or ("non-generic", reason)."""
    facets, images, v = item
    x0, y0, z0 = (points[-1] for points in images)
    m = len(x0)
    columns: List[Vector] = []
    for which, points in enumerate(images):
        for e in _edge_columns(points):
            if which == 0:
                columns.append(tuple(2 * c for c in e) + tuple(-c for c in e))
            elif which == 1:
                columns.append(tuple(-c for c in e) + tuple(2 * c for c in e))
            else:
                columns.append(tuple(-c for c in e) + tuple(-c for c in e))
    columns.append(tuple(-c for c in v))
    rows = [[col[r] for col in columns] for r in range(2 * m)]
    rhs = tuple(-c for c in unnormalized_sphere_map(x0, y0, z0))
    sizes = [len(points) - 1 for points in images]

    solution, sign = solve_with_sign(rows, rhs)
    if solution is None:
        if simplex_blocks_feasible(rows, rhs, sizes, nonnegative=(len(columns) - 1,)) is not None:
            return ("non-generic", NonGenericReason.SINGULAR.value)
        return ("skip",)

    s = solution[-1]
    barycentric = []
    offset = 0
    for size in sizes:
        barycentric.append(_barycentric(solution[offset:offset + size]))
        offset += size
    positions = [barycentric_position(b) for b in barycentric]
    if BarycentricPosition.OUTSIDE in positions or s < 0:
        return ("skip",)
    if s == 0:
        return ("non-generic", NonGenericReason.ZERO_RAY.value)
    if BarycentricPosition.BOUNDARY in positions:
        return ("non-generic", NonGenericReason.BOUNDARY.value)
    return ("hit", (facets, tuple(barycentric), s, sign))


def mu_via_degree(
    o: Ornament,
    v: RayDirection,
    global_sign: Optional[int] = None,
    workers: Optional[int] = None,
) -> DegreeResult:
    """
    Signed count of the preimages of the ray R+ v over all facet triples.

    Raises NonGenericDirection on the first degenerate facet triple (in
    lexicographic order); the caller retries with a fresh direction.
    """
    check_mu_dimensions(o)
    check_length(v.v, 2 * o.ambient_dim, "ray direction")
    if global_sign is None:
        global_sign = calibrate_sign().global_sign

    c1, c2, c3 = o.components
    items = [
        ((i, j, l), (c1.facet_images(i), c2.facet_images(j), c3.facet_images(l)), v.v)
        for i in range(len(c1.domain.facets))
        for j in range(len(c2.domain.facets))
        for l in range(len(c3.domain.facets))
    ]
    solutions = []
    for item, outcome in zip(items, map_ordered(_solve_facet_triple, items, workers, desc="facet triples")):
        if outcome[0] == "non-generic":
            raise NonGenericDirection(item[0], outcome[1])
        if outcome[0] == "hit":
            facets, barycentric, s, sign = outcome[1]
            solutions.append(PreimageSolution(facets=facets, barycentric=barycentric, s=s, sign=global_sign * sign))
    return DegreeResult(mu=sum(p.sign for p in solutions), solutions=tuple(solutions), direction=v)


def compute_mu_degree(
    o: Ornament,
    seed: int = 0,
    global_sign: Optional[int] = None,
    max_retries: Optional[int] = None,
    workers: Optional[int] = None,
) -> DegreeResult:
    """mu_via_degree with seeded directions, retried until one is a regular value."""
    check_mu_dimensions(o)
    retries = settings.MAX_RETRIES if max_retries is None else max_retries
    for attempt in range(retries):
        v = random_direction(2 * o.ambient_dim, derive_seed(seed, attempt))
        try:
            return mu_via_degree(o, v, global_sign=global_sign, workers=workers)
        except NonGenericDirection as e:
            logger.debug("direction attempt %d rejected: %s", attempt, e)
    raise RetryBudgetExceeded(f"no regular ray direction in {retries} attempts")


def reverse_component_orientation(o: Ornament, which: int) -> Ornament:
    """Swap the first two vertices of every facet of component ``which`` (1, 2 or 3)."""
    if which not in (1, 2, 3):
        raise ContractViolation(f"component must be 1, 2 or 3, got {which}")
    component = o.components[which - 1]
    facets = tuple((f[1], f[0]) + tuple(f[2:]) for f in component.domain.facets)
    domain = component.domain.model_copy(update={"facets": facets})
    components = list(o.components)
    components[which - 1] = component.model_copy(update={"domain": domain})
    return Ornament(components=tuple(components))


@lru_cache(maxsize=None)
def calibrate_sign() -> SignConvention:
    """
    Fix global_sign once, on the k=1 Borromean ornament, and use it for every k.
    Borromean mu = +1 for larger k is then a prediction, not an input.
    """
    from services.constructions import make_borromean

    raw = compute_mu_degree(make_borromean(CALIBRATION_K), seed=0, global_sign=1).mu
    if raw not in (1, -1):
        raise ContractViolation(f"raw Borromean degree for k={CALIBRATION_K} is {raw}, expected +1 or -1")
    logger.info("degree sign calibrated on k=%d: %+d", CALIBRATION_K, raw)
    return SignConvention(k=CALIBRATION_K, global_sign=raw)
