"""
Validation of triangulated manifolds and of the ornament condition.

The ornament condition is decided on closed facets: for every triple of
facets (one per component) the question "do x, y, z exist in the closed
facets with f1(x) = f2(y) = f3(z)?" is a small exact linear feasibility
problem. Equalities are eliminated by Gauss-Jordan reduction and the
remaining inequalities go through Fourier-Motzkin elimination.
"""
import logging
from collections import defaultdict, deque
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from config import settings
from models import Ornament, PLMap, ReportStatus, TriangulatedManifold, ValidationReport, Witness
from services.errors import ContractViolation, RetryBudgetExceeded
from services.geometry_kernel import (
    Vector,
    bounding_box,
    boxes_overlap,
    derive_seed,
    random_rational_perturbation,
    simplex_blocks_feasible,
    vec_sub,
)
from services.workers import map_ordered

logger = logging.getLogger(__name__)

VALID = ValidationReport(status=ReportStatus.VALID)


def _invalid(**witness) -> ValidationReport:
    return ValidationReport(status=ReportStatus.INVALID, witness=Witness(**witness))


def permutation_sign(seq: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(seq)) for j in range(i + 1, len(seq)) if seq[i] > seq[j])
    return -1 if inversions % 2 else 1


def oriented_faces(facet: Tuple[int, ...]) -> List[Tuple[Tuple[int, ...], int]]:
    """Codimension-one faces with the orientation the facet induces on them."""
    out = []
    for i in range(len(facet)):
        face = facet[:i] + facet[i + 1:]
        sign = (-1 if i % 2 else 1) * permutation_sign(face)
        out.append((tuple(sorted(face)), sign))
    return out


def validate_manifold(t: TriangulatedManifold) -> ValidationReport:
    """
    Check the closed oriented pseudomanifold conditions.

    Order of checks: repeated vertices, faces in exactly two facets,
    coherent orientation, connectedness. The witness names the first
    offending facet, face or (for disconnection) the unreached facets.
    """
    if not t.facets:
        return _invalid(detail="complex has no facets")
    for index, facet in enumerate(t.facets):
        if len(set(facet)) != len(facet):
            return _invalid(facets=(index,), detail="repeated vertex in facet")

    faces: Dict[Tuple[int, ...], List[Tuple[int, int]]] = defaultdict(list)
    for index, facet in enumerate(t.facets):
        for face, sign in oriented_faces(facet):
            faces[face].append((index, sign))

    for face in sorted(faces):
        incident = faces[face]
        if len(incident) != 2:
            return _invalid(
                face=face,
                facets=tuple(i for i, _ in incident),
                detail=f"face lies in {len(incident)} facets, expected 2",
            )
    for face in sorted(faces):
        (i, s), (j, r) = faces[face]
        if s + r != 0:
            return _invalid(face=face, facets=(i, j), detail="incoherent orientation across face")

    neighbours: Dict[int, List[int]] = defaultdict(list)
    for (i, _), (j, _) in faces.values():
        neighbours[i].append(j)
        neighbours[j].append(i)
    seen = {0}
    queue = deque([0])
    while queue:
        for j in neighbours[queue.popleft()]:
            if j not in seen:
                seen.add(j)
                queue.append(j)
    if len(seen) != len(t.facets):
        unreached = tuple(i for i in range(len(t.facets)) if i not in seen)
        return _invalid(facets=unreached, detail="facet adjacency graph is disconnected")
    return VALID


# Ornament condition

def triple_equality_system(
    triple: Sequence[Sequence[Vector]],
) -> Tuple[List[List[Fraction]], List[Fraction], List[int]]:
    """
    Rows, right-hand side and block sizes of f1 = f2, f2 = f3 on three
    simplices given by their vertex images. Each simplex is parameterised by
    the barycentric coordinates of all but its last listed vertex, so the
    column blocks are [[A1, -A2, 0], [0, A2, -A3]] with Ai the edge vectors
    toward the last vertex.
    """
    bases = [points[-1] for points in triple]
    edges = [[vec_sub(p, points[-1]) for p in points[:-1]] for points in triple]
    sizes = [len(e) for e in edges]
    dim = len(bases[0])
    rows: List[List[Fraction]] = []
    rhs: List[Fraction] = []
    for left, right in ((0, 1), (1, 2)):
        for c in range(dim):
            row: List[Fraction] = []
            for which in range(3):
                sign = 1 if which == left else -1 if which == right else 0
                row.extend(Fraction(sign) * e[c] for e in edges[which])
            rows.append(row)
            rhs.append(bases[right][c] - bases[left][c])
    return rows, rhs, sizes


def split_barycentric(params: Sequence[Fraction], sizes: Sequence[int]) -> Tuple[Vector, ...]:
    """Full barycentric coordinates per block, eliminated coordinate appended last."""
    out = []
    offset = 0
    for size in sizes:
        block = tuple(params[offset:offset + size])
        out.append(block + (1 - sum(block, Fraction(0)),))
        offset += size
    return tuple(out)


def common_image_point(
    triple: Tuple[Sequence[Vector], Sequence[Vector], Sequence[Vector]]
) -> Optional[Tuple[Vector, Vector, Vector]]:
    """
    Barycentric coordinates (one tuple per closed facet) of a point common to
    the three facet images, or None if the images are disjoint.
    """
    rows, rhs, sizes = triple_equality_system(triple)
    params = simplex_blocks_feasible(rows, rhs, sizes)
    if params is None:
        return None
    return split_barycentric(params, sizes)


def _triple_task(item):
    indices, triple = item
    return indices, common_image_point(triple)


def overlapping_triples(boxes: Sequence[Sequence[Tuple[Vector, Vector]]]) -> List[Tuple[int, int, int]]:
    """Index triples (one box per group) whose boxes overlap pairwise, in lexicographic order."""
    with_third: Dict[int, List[int]] = defaultdict(list)
    for i, box_i in enumerate(boxes[0]):
        for l, box_l in enumerate(boxes[2]):
            if boxes_overlap((box_i, box_l)):
                with_third[i].append(l)
    second_third = {
        (j, l)
        for j, box_j in enumerate(boxes[1])
        for l, box_l in enumerate(boxes[2])
        if boxes_overlap((box_j, box_l))
    }
    out = []
    for i, box_i in enumerate(boxes[0]):
        if not with_third[i]:
            continue
        for j, box_j in enumerate(boxes[1]):
            if not boxes_overlap((box_i, box_j)):
                continue
            out.extend((i, j, l) for l in with_third[i] if (j, l) in second_third)
    return out


def candidate_facet_triples(o: Ornament) -> List[Tuple[int, int, int]]:
    """Facet triples whose image bounding boxes overlap."""
    return overlapping_triples(
        [[bounding_box(c.facet_images(f)) for f in range(len(c.domain.facets))] for c in o.components]
    )


def validate_ornament(
    o: Union[Ornament, Sequence[PLMap]], workers: Optional[int] = None
) -> ValidationReport:
    """
    Decide exactly whether f1(X1), f2(X2), f3(X3) have a common point.

    Returns the witness of the lexicographically first intersecting facet
    triple. Self-intersections inside one or two components are allowed.
    """
    if not isinstance(o, Ornament):
        o = Ornament(components=tuple(o))
    candidates = candidate_facet_triples(o)
    items = [
        (triple, tuple(o.components[w].facet_images(triple[w]) for w in range(3)))
        for triple in candidates
    ]
    for indices, barycentric in map_ordered(_triple_task, items, workers, desc="ornament condition"):
        if barycentric is not None:
            point = _combine(o.components[0].facet_images(indices[0]), barycentric[0])
            return _invalid(
                facets=indices,
                barycentric=barycentric,
                point=point,
                detail="common image point of all three components",
            )
    return VALID


def _combine(points: Sequence[Vector], weights: Sequence[Fraction]) -> Vector:
    return tuple(sum((w * p[c] for w, p in zip(weights, points)), Fraction(0)) for c in range(len(points[0])))


def witness_points(o: Ornament, witness: Witness) -> Tuple[Vector, Vector, Vector]:
    """The three image points a witness describes; equal for a genuine witness."""
    return tuple(
        _combine(o.components[w].facet_images(witness.facets[w]), witness.barycentric[w]) for w in range(3)
    )


# Perturbation

def perturb_vertex_images(o: Ornament, eps: Fraction, seed: int) -> Ornament:
    """Move every vertex image by less than eps in each coordinate; no validation."""
    return Ornament(components=tuple(
        c.model_copy(update={"images": tuple(
            random_rational_perturbation(v, eps, derive_seed(seed, which, index))
            for index, v in enumerate(c.images)
        )})
        for which, c in enumerate(o.components)
    ))


def perturb_ornament(
    o: Ornament,
    eps: Optional[Fraction] = None,
    seed: int = 0,
    max_retries: Optional[int] = None,
) -> Ornament:
    """
    Seeded sup-metric perturbation that stays an ornament and is joined to
    the input by a triple-point free straight-line homotopy.

    A failed attempt halves eps and retries with a derived seed.
    """
    from services.mu_sweep import in_sweep_regime, is_ornament_homotopy

    eps = Fraction(settings.DEFAULT_EPS if eps is None else eps)
    if eps <= 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    if not validate_ornament(o).is_valid:
        raise ContractViolation("perturb_ornament needs a valid ornament")
    certify = in_sweep_regime(o)
    if not certify:
        logger.debug("dimensions d=%s, m=%d admit no track sweep; homotopy left uncertified",
                     [c.domain.dim for c in o.components], o.ambient_dim)
    retries = settings.MAX_RETRIES if max_retries is None else max_retries
    for attempt in range(retries):
        candidate = perturb_vertex_images(o, eps, derive_seed(seed, "perturb", attempt))
        if validate_ornament(candidate).is_valid and (not certify or is_ornament_homotopy(o, candidate)):
            return candidate
        logger.info("perturbation attempt %d at eps=%s rejected, halving eps", attempt, eps)
        eps /= 2
    raise RetryBudgetExceeded(f"no ornament perturbation found in {retries} attempts")
