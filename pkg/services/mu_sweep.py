"""
mu as the signed count of 1=2=3 points of a homotopy track.

A track sends (x, t) to (h_t(x), t) in R^m x I. Each prism
facet x [t_j, t_j+1] is cut into staircase cells along the sorted vertex
order, so the track is affine on every cell and each cell triple is one
square exact system [[A1, -A2, 0], [0, A2, -A3]].
"""
import logging
import random
from fractions import Fraction
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from config import settings
from models import (
    HomotopyTrack,
    Keyframe,
    NonGenericReason,
    Ornament,
    PrismCell,
    SignConvention,
    SignedTriplePoint,
    SweepResult,
    TriplePointPairing,
)
from services.errors import (
    CoincidentTargets,
    ContractViolation,
    DimensionMismatch,
    NonGenericTrack,
    RetryBudgetExceeded,
)
from services.geometry_kernel import (
    BarycentricPosition,
    Vector,
    barycentric_position,
    bounding_box,
    check_length,
    derive_seed,
    det_sign,
    lerp,
    matrix_rank,
    max_norm,
    random_rational_perturbation,
    simplex_blocks_feasible,
    solve_with_sign,
    vec_add,
    vec_scale,
    vec_sub,
)
from services.ornament_model import overlapping_triples, split_barycentric, triple_equality_system, validate_ornament
from services.workers import map_ordered

logger = logging.getLogger(__name__)


# Track construction

def _names(o: Ornament) -> Tuple[str, str, str]:
    return tuple(c.name or f"X{i + 1}" for i, c in enumerate(o.components))


def straight_line_track(start: Ornament, end: Ornament) -> HomotopyTrack:
    """Two-keyframe rectilinear homotopy between ornaments on the same domains."""
    for i, (a, b) in enumerate(zip(start.components, end.components)):
        if a.domain != b.domain:
            raise DimensionMismatch(f"component {i + 1} has different domains at the two ends")
    if start.ambient_dim != end.ambient_dim:
        raise DimensionMismatch("track endpoints live in different ambient dimensions")
    return HomotopyTrack(
        domains=tuple(c.domain for c in start.components),
        ambient_dim=start.ambient_dim,
        keyframes=(
            Keyframe(t=Fraction(0), images=tuple(c.images for c in start.components)),
            Keyframe(t=Fraction(1), images=tuple(c.images for c in end.components)),
        ),
        names=_names(start),
    )


def _check_targets(o: Ornament, targets: Sequence[Vector]) -> Tuple[Vector, Vector, Vector]:
    if len(targets) != 3:
        raise DimensionMismatch(f"need three targets, got {len(targets)}")
    targets = tuple(tuple(Fraction(x) for x in p) for p in targets)
    for p in targets:
        check_length(p, o.ambient_dim, "target")
    if len(set(targets)) != 3:
        raise CoincidentTargets("trivial-ornament targets must be pairwise distinct")
    return targets


def _to_trivial_track(o: Ornament, targets: Sequence[Vector]) -> HomotopyTrack:
    targets = _check_targets(o, targets)
    end = Ornament(components=tuple(
        c.model_copy(update={"images": tuple(target for _ in c.images)})
        for c, target in zip(o.components, targets)
    ))
    return straight_line_track(o, end)


def default_trivial_targets(o: Ornament, seed: int = 0) -> Tuple[Vector, Vector, Vector]:
    """
    Three seeded integer-lattice points well outside the bounding box of all
    vertex images, pairwise at least 4R apart (R the box size, at least 1).
    """
    lo, hi = bounding_box([p for c in o.components for p in c.images])
    center = tuple((a + b) / 2 for a, b in zip(lo, hi))
    radius = max(max_norm(vec_sub(hi, lo)), Fraction(1))
    rng = random.Random(derive_seed(seed, "targets"))
    chosen: List[Vector] = []
    while len(chosen) < 3:
        w = tuple(Fraction(rng.randint(-3, 3)) for _ in range(o.ambient_dim))
        if max_norm(w) >= 2 and w not in chosen:
            chosen.append(w)
    return tuple(vec_add(center, vec_scale(4 * radius, w)) for w in chosen)


def reverse_track(track: HomotopyTrack) -> HomotopyTrack:
    """The same homotopy run backwards, t -> 1 - t."""
    frames = tuple(Keyframe(t=1 - f.t, images=f.images) for f in reversed(track.keyframes))
    return track.model_copy(update={"keyframes": frames})


def concatenate_tracks(first: HomotopyTrack, second: HomotopyTrack) -> HomotopyTrack:
    """first on [0, 1/2] then second on [1/2, 1]; they must meet in the same ornament."""
    if first.domains != second.domains or first.ambient_dim != second.ambient_dim:
        raise DimensionMismatch("tracks run on different domains")
    if first.keyframes[-1].images != second.keyframes[0].images:
        raise ContractViolation("first track does not end where the second one starts")
    half = Fraction(1, 2)
    frames = [Keyframe(t=f.t * half, images=f.images) for f in first.keyframes]
    frames += [Keyframe(t=half + f.t * half, images=f.images) for f in second.keyframes[1:]]
    return first.model_copy(update={"keyframes": tuple(frames)})


def insert_perturbed_keyframe(track: HomotopyTrack, interval: int, eps: Fraction, seed: int) -> HomotopyTrack:
    """Split ``interval`` at its midpoint with seeded perturbed images there."""
    a, b = track.keyframes[interval], track.keyframes[interval + 1]
    images = tuple(
        tuple(
            random_rational_perturbation(lerp(p, q, Fraction(1, 2)), eps, derive_seed(seed, which, v))
            for v, (p, q) in enumerate(zip(before, after))
        )
        for which, (before, after) in enumerate(zip(a.images, b.images))
    )
    frames = list(track.keyframes)
    frames.insert(interval + 1, Keyframe(t=(a.t + b.t) / 2, images=images))
    return track.model_copy(update={"keyframes": tuple(frames)})


# Prism cells

@lru_cache(maxsize=None)
def staircase_cells(facet: Tuple[int, ...]) -> Tuple[Tuple[Tuple[int, int], ...], ...]:
    """
    Cells of facet x [0, 1] as (vertex, level) lists, positively oriented for
    the product orientation (facet in listed order, then time).
    """
    d = len(facet) - 1
    order = sorted(facet)
    local = {v: tuple(Fraction(1 if a == i else 0) for i in range(d)) for a, v in enumerate(facet)}
    cells = []
    for q in range(d + 1):
        cell = [(v, 0) for v in order[:q + 1]] + [(v, 1) for v in order[q:]]
        coords = [local[v] + (Fraction(level),) for v, level in cell]
        last = coords[-1]
        if det_sign([[w[r] - last[r] for w in coords[:-1]] for r in range(d + 1)]) < 0:
            cell[0], cell[1] = cell[1], cell[0]
        cells.append(tuple(cell))
    return tuple(cells)


def cell_points(track: HomotopyTrack, cell: PrismCell) -> Tuple[Vector, ...]:
    """Vertex images of a cell in R^m x I."""
    return tuple(
        track.keyframes[level].images[cell.component][v] + (track.keyframes[level].t,)
        for v, level in cell.vertices
    )


def interval_cells(track: HomotopyTrack, interval: int) -> List[List[Tuple[PrismCell, Tuple[Vector, ...]]]]:
    """Full-rank cells per component over one keyframe interval."""
    out = []
    for which, domain in enumerate(track.domains):
        cells = []
        for index, facet in enumerate(domain.facets):
            for stair in staircase_cells(facet):
                cell = PrismCell(
                    component=which,
                    facet=index,
                    interval=interval,
                    vertices=tuple((v, interval + level) for v, level in stair),
                )
                points = cell_points(track, cell)
                if matrix_rank([vec_sub(p, points[-1]) for p in points[:-1]]) == len(points) - 1:
                    cells.append((cell, points))
        out.append(cells)
    return out


def time_row_sign(ambient_dim: int) -> int:
    """
    (-1)^(m+1), the Laplace sign of the two time rows of a cell-triple
    system in R^m x I. Multiplying by it turns the system determinant into
    the sign of the spatial system in the product orientation, the one the
    degree method counts with, so the two methods differ by a sign that does
    not depend on k.
    """
    return 1 if ambient_dim % 2 else -1


def in_sweep_regime(o: Ornament) -> bool:
    """Whether three track cells of o give a square system: 3(d+1) = 2(m+1)."""
    dims = {c.domain.dim for c in o.components}
    return len(dims) == 1 and 3 * (dims.pop() + 1) == 2 * (o.ambient_dim + 1)


# Detection

def _solve_cell_triple(item):
    """Tagged result: ("skip",), ("hit", barycentric, sign) or ("non-generic", reason)."""
    indices, triple = item
    rows, rhs, sizes = triple_equality_system(triple)
    solution, sign = solve_with_sign(rows, rhs)
    if solution is None:
        if simplex_blocks_feasible(rows, rhs, sizes) is not None:
            return ("non-generic", NonGenericReason.SINGULAR.value)
        return ("skip",)
    barycentric = split_barycentric(solution, sizes)
    positions = [barycentric_position(b) for b in barycentric]
    if BarycentricPosition.OUTSIDE in positions:
        return ("skip",)
    if BarycentricPosition.BOUNDARY in positions:
        return ("non-generic", NonGenericReason.BOUNDARY.value)
    return ("hit", barycentric, sign)


def detect_triple_points(
    track: HomotopyTrack,
    sweep_sign: Optional[int] = None,
    workers: Optional[int] = None,
) -> Tuple[SignedTriplePoint, ...]:
    """
    Transverse 1=2=3 points of the track with their signs.

    Only cells of one keyframe interval can meet in their interiors, so cell
    triples are taken per interval after a bounding-box prefilter. Raises
    NonGenericTrack on a singular system with a closed-cell solution or on a
    solution touching a cell boundary.
    """
    start = track.start
    if not in_sweep_regime(start):
        raise DimensionMismatch(
            f"track cells of dimension {track.domains[0].dim + 1} in R^{track.ambient_dim + 1} "
            "do not give square systems"
        )
    if sweep_sign is None:
        sweep_sign = calibrate_sweep_sign().global_sign
    orientation = sweep_sign * time_row_sign(track.ambient_dim)

    points: List[SignedTriplePoint] = []
    for interval in range(len(track.keyframes) - 1):
        cells = interval_cells(track, interval)
        boxes = [[bounding_box(p) for _, p in group] for group in cells]
        candidates = overlapping_triples(boxes)
        items = [(triple, tuple(cells[w][triple[w]][1] for w in range(3))) for triple in candidates]
        outcomes = map_ordered(_solve_cell_triple, items, workers, desc=f"cells, interval {interval}")
        for (triple, images), outcome in zip(items, outcomes):
            if outcome[0] == "non-generic":
                raise NonGenericTrack(interval, triple, outcome[1])
            if outcome[0] == "skip":
                continue
            _, barycentric, sign = outcome
            full = tuple(
                sum((w * p[c] for w, p in zip(barycentric[0], images[0])), Fraction(0))
                for c in range(track.ambient_dim + 1)
            )
            points.append(SignedTriplePoint(
                cells=tuple(cells[w][triple[w]][0] for w in range(3)),
                barycentric=barycentric,
                t=full[-1],
                point=full[:-1],
                sign=orientation * sign,
            ))
    return tuple(points)


def sweep_track(
    track: HomotopyTrack,
    seed: int = 0,
    eps: Optional[Fraction] = None,
    sweep_sign: Optional[int] = None,
    max_retries: Optional[int] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    """
    Detect triple points, inserting a perturbed midpoint keyframe into the
    offending interval whenever the track is not generic. Endpoints never move.
    """
    eps = Fraction(settings.DEFAULT_EPS if eps is None else eps)
    retries = settings.MAX_RETRIES if max_retries is None else max_retries
    for attempt in range(retries):
        try:
            points = detect_triple_points(track, sweep_sign=sweep_sign, workers=workers)
            return SweepResult(track=track, points=points)
        except NonGenericTrack as e:
            logger.debug("sweep attempt %d: %s", attempt, e)
            track = insert_perturbed_keyframe(track, e.interval, eps, derive_seed(seed, "keyframe", attempt))
    raise RetryBudgetExceeded(f"track still not generic after {retries} keyframe insertions")


def straight_line_homotopy_to_trivial(
    o: Ornament,
    targets: Sequence[Vector],
    eps: Optional[Fraction] = None,
    seed: int = 0,
) -> HomotopyTrack:
    """Generic track from o to the trivial ornament at ``targets``."""
    track = _to_trivial_track(o, targets)
    if not validate_ornament(o).is_valid:
        raise ContractViolation("the homotopy must start at a valid ornament")
    return sweep_track(track, seed=seed, eps=eps, sweep_sign=1).track


def sweep_to_trivial(
    o: Ornament,
    seed: int = 0,
    sweep_sign: Optional[int] = None,
    workers: Optional[int] = None,
) -> SweepResult:
    track = _to_trivial_track(o, default_trivial_targets(o, seed))
    return sweep_track(track, seed=seed, sweep_sign=sweep_sign, workers=workers)


def mu_via_sweep(o: Ornament, seed: int = 0, workers: Optional[int] = None) -> int:
    """Signed count of triple points on a seeded straight-line track to trivial."""
    from services.mu_degree import check_mu_dimensions

    check_mu_dimensions(o)
    return sweep_to_trivial(o, seed=seed, workers=workers).total


def relative_sweep(
    track: HomotopyTrack,
    seed: int = 0,
    sweep_sign: Optional[int] = None,
    workers: Optional[int] = None,
) -> int:
    """Signed triple-point count of a track; equals mu(start) - mu(end)."""
    for label, end in (("start", track.start), ("end", track.end)):
        if not validate_ornament(end).is_valid:
            raise ContractViolation(f"track {label} is not an ornament")
    return sweep_track(track, seed=seed, sweep_sign=sweep_sign, workers=workers).total


def is_ornament_homotopy(start: Ornament, end: Ornament) -> bool:
    """Whether the straight-line homotopy start -> end certifiably has no 1=2=3 point."""
    try:
        return not detect_triple_points(straight_line_track(start, end), sweep_sign=1)
    except NonGenericTrack as e:
        logger.debug("straight-line homotopy not certified: %s", e)
        return False


def pair_opposite_signs(points: Sequence[SignedTriplePoint]) -> TriplePointPairing:
    """Greedy pairing of consecutive opposite signs in time order."""
    pairs = []
    stack: List[SignedTriplePoint] = []
    for p in sorted(points, key=lambda p: p.t):
        if stack and stack[-1].sign != p.sign:
            q = stack.pop()
            pairs.append((q, p) if q.sign > 0 else (p, q))
        else:
            stack.append(p)
    return TriplePointPairing(pairs=tuple(pairs), unpaired=tuple(stack))


@lru_cache(maxsize=None)
def calibrate_sweep_sign() -> SignConvention:
    """
    Fix the sweep sign once so that the k=1 Borromean sweeps to trivial
    with count mu(Borromean) - 0 = 1; every k uses the same sign.
    """
    from services.constructions import make_borromean
    from services.mu_degree import CALIBRATION_K

    raw = sweep_to_trivial(make_borromean(CALIBRATION_K), seed=0, sweep_sign=1).total
    if raw not in (1, -1):
        raise ContractViolation(f"raw Borromean sweep count for k={CALIBRATION_K} is {raw}, expected +1 or -1")
    logger.info("sweep sign calibrated on k=%d: %+d", CALIBRATION_K, raw)
    return SignConvention(k=CALIBRATION_K, global_sign=raw)
