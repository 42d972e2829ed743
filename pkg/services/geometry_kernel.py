"""
Exact rational linear algebra and geometric predicates.

Every number in the toolkit is a ``fractions.Fraction``; there is no
tolerance anywhere. Square systems go through fraction-free (Bareiss)
elimination over integers after each row is cleared of denominators, which
keeps intermediate growth polynomial and gives the determinant sign for free.
"""
import hashlib
import math
import random
import re
from enum import Enum
from fractions import Fraction
from typing import List, NamedTuple, Optional, Sequence, Tuple, Union

from config import settings
from services.errors import ContractViolation, DimensionMismatch

Scalar = Fraction
Vector = Tuple[Fraction, ...]

_RATIONAL = re.compile(r"^\s*(-?\d+)(?:\s*/\s*(-?\d+))?\s*$")


class BarycentricPosition(str, Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


class Matrix(NamedTuple):
    entries: Tuple[Vector, ...]
    rows: int
    cols: int

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence]) -> "Matrix":
        entries = tuple(tuple(Fraction(x) for x in row) for row in rows)
        cols = len(entries[0]) if entries else 0
        if any(len(row) != cols for row in entries):
            raise DimensionMismatch("matrix rows have different lengths")
        return cls(entries, len(entries), cols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls.from_rows([[1 if i == j else 0 for j in range(n)] for i in range(n)])

    def transpose(self) -> "Matrix":
        return Matrix(tuple(zip(*self.entries)) if self.rows else (), self.cols, self.rows)


MatrixLike = Union[Matrix, Sequence[Sequence[Fraction]]]


def _rows_of(m: MatrixLike) -> List[List[Fraction]]:
    rows = [list(row) for row in (m.entries if isinstance(m, Matrix) else m)]
    if rows and any(len(row) != len(rows[0]) for row in rows):
        raise DimensionMismatch("matrix rows have different lengths")
    return rows


def _integer_rows(rows: Sequence[Sequence[Fraction]]) -> List[List[int]]:
    """Scale each row by the lcm of its denominators (a positive factor)."""
    out = []
    for row in rows:
        scale = 1
        for x in row:
            scale = math.lcm(scale, x.denominator)
        out.append([x.numerator * (scale // x.denominator) for x in row])
    return out


def _bareiss(a: List[List[int]], n: int) -> int:
    """
    Fraction-free forward elimination of the leading n x n block of ``a``
    (extra columns ride along), in place. Pivots are the first nonzero entry
    of each column. Returns the determinant sign of that block, 0 if singular.
    """
    sign = 1
    prev = 1
    width = len(a[0]) if a else 0
    for k in range(n):
        pivot = k
        while pivot < n and a[pivot][k] == 0:
            pivot += 1
        if pivot == n:
            return 0
        if pivot != k:
            a[k], a[pivot] = a[pivot], a[k]
            sign = -sign
        row_k = a[k]
        p = row_k[k]
        for i in range(k + 1, n):
            row_i = a[i]
            f = row_i[k]
            for j in range(k + 1, width):
                row_i[j] = (p * row_i[j] - f * row_k[j]) // prev
            row_i[k] = 0
        prev = p
    if n == 0:
        return 1
    return sign if a[n - 1][n - 1] > 0 else -sign


def det_sign(m: MatrixLike) -> int:
    """Exact sign of the determinant of a square matrix."""
    rows = _rows_of(m)
    if any(len(row) != len(rows) for row in rows):
        raise DimensionMismatch(f"det_sign needs a square matrix, got {len(rows)}x{len(rows[0])}")
    return _bareiss(_integer_rows(rows), len(rows))


def solve_with_sign(a: MatrixLike, b: Sequence[Fraction]) -> Tuple[Optional[Vector], int]:
    """
    Solve a·x = b exactly for square a.

    Returns (x, det_sign(a)); x is None when a is singular.
    """
    rows = _rows_of(a)
    n = len(rows)
    if any(len(row) != n for row in rows):
        raise DimensionMismatch("solve_affine needs a square matrix")
    if len(b) != n:
        raise DimensionMismatch(f"right-hand side has length {len(b)}, expected {n}")
    augmented = _integer_rows([row + [Fraction(rhs)] for row, rhs in zip(rows, b)])
    sign = _bareiss(augmented, n)
    if sign == 0:
        return None, 0
    x: List[Fraction] = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        row = augmented[i]
        acc = Fraction(row[n])
        for j in range(i + 1, n):
            if row[j]:
                acc -= row[j] * x[j]
        x[i] = acc / row[i]
    return tuple(x), sign


def solve_affine(a: MatrixLike, b: Sequence[Fraction]) -> Optional[Vector]:
    """Unique exact solution of a·x = b, or None when a is singular."""
    return solve_with_sign(a, b)[0]


def matrix_rank(m: MatrixLike) -> int:
    rows = [list(row) for row in _rows_of(m)]
    if not rows:
        return 0
    rank = 0
    cols = len(rows[0])
    for c in range(cols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][c] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank][c]
        for i in range(rank + 1, len(rows)):
            f = rows[i][c] / p
            if f:
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[rank])]
        rank += 1
    return rank


class ReducedSystem(NamedTuple):
    pivots: Tuple[int, ...]
    free: Tuple[int, ...]
    rows: Tuple[Vector, ...]  # one per pivot, reduced row echelon form
    rhs: Vector


def eliminate_equalities(rows: MatrixLike, rhs: Sequence[Fraction]) -> Optional[ReducedSystem]:
    """
    Gauss-Jordan reduction of a·x = b with free-variable bookkeeping.

    Returns None when the system is inconsistent. Otherwise each pivot
    variable equals rhs[i] - sum(rows[i][f]·x_f for f in free).
    """
    a = [list(row) for row in _rows_of(rows)]
    b = [Fraction(x) for x in rhs]
    if len(b) != len(a):
        raise DimensionMismatch("right-hand side length differs from row count")
    cols = len(a[0]) if a else 0
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if pivot is None:
            continue
        a[r], a[pivot] = a[pivot], a[r]
        b[r], b[pivot] = b[pivot], b[r]
        p = a[r][c]
        a[r] = [x / p for x in a[r]]
        b[r] = b[r] / p
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
                b[i] -= f * b[r]
        pivots.append(c)
        r += 1
    if any(b[i] != 0 for i in range(r, len(a))):
        return None
    free = tuple(c for c in range(cols) if c not in pivots)
    return ReducedSystem(tuple(pivots), free, tuple(tuple(row) for row in a[:r]), tuple(b[:r]))


def matmul(a: MatrixLike, b: MatrixLike) -> Matrix:
    left, right = _rows_of(a), _rows_of(b)
    if left and len(left[0]) != len(right):
        raise DimensionMismatch("inner dimensions differ")
    columns = list(zip(*right))
    return Matrix.from_rows([[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in columns] for row in left])


def mat_vec(a: MatrixLike, x: Sequence[Fraction]) -> Vector:
    rows = _rows_of(a)
    if rows and len(rows[0]) != len(x):
        raise DimensionMismatch("matrix and vector lengths differ")
    return tuple(sum((c * v for c, v in zip(row, x)), Fraction(0)) for row in rows)


# Vectors

def check_length(v: Sequence[Fraction], n: int, what: str = "vector") -> None:
    if len(v) != n:
        raise DimensionMismatch(f"{what} has length {len(v)}, expected {n}")


def vec_add(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    check_length(v, len(u))
    return tuple(a + b for a, b in zip(u, v))


def vec_sub(u: Sequence[Fraction], v: Sequence[Fraction]) -> Vector:
    check_length(v, len(u))
    return tuple(a - b for a, b in zip(u, v))


def vec_scale(c: Fraction, v: Sequence[Fraction]) -> Vector:
    return tuple(c * a for a in v)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    check_length(v, len(u))
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def lerp(u: Sequence[Fraction], v: Sequence[Fraction], t: Fraction) -> Vector:
    """(1 - t)·u + t·v."""
    check_length(v, len(u))
    return tuple(a + t * (b - a) for a, b in zip(u, v))


def max_norm(v: Sequence[Fraction]) -> Fraction:
    return max((abs(a) for a in v), default=Fraction(0))


# Predicates

def barycentric_position(coords: Sequence[Fraction]) -> BarycentricPosition:
    """Classify a point of a closed simplex from its barycentric coordinates."""
    if sum(coords, Fraction(0)) != 1:
        raise ContractViolation(f"barycentric coordinates sum to {sum(coords, Fraction(0))}, not 1")
    if any(c < 0 for c in coords):
        return BarycentricPosition.OUTSIDE
    if any(c == 0 for c in coords):
        return BarycentricPosition.BOUNDARY
    return BarycentricPosition.INTERIOR


def bounding_box(points: Sequence[Sequence[Fraction]]) -> Tuple[Vector, Vector]:
    lo = tuple(min(col) for col in zip(*points))
    hi = tuple(max(col) for col in zip(*points))
    return lo, hi


def boxes_overlap(boxes: Sequence[Tuple[Sequence[Fraction], Sequence[Fraction]]]) -> bool:
    """Axis-aligned boxes share a point iff they overlap pairwise in every coordinate."""
    for lo_p, _ in boxes:
        for _, hi_q in boxes:
            if any(a > b for a, b in zip(lo_p, hi_q)):
                return False
    return True


def fourier_motzkin_feasible(
    constraints: Sequence[Tuple[Sequence[Fraction], Fraction]], dims: int
) -> Optional[Vector]:
    """
    Decide a·x <= b over the rationals by Fourier-Motzkin elimination.

    Returns a feasible point (built by back-substitution through the stored
    elimination stages, midpoints where both bounds exist) or None.
    """
    system = [(tuple(Fraction(c) for c in a), Fraction(b)) for a, b in constraints]
    for a, _ in system:
        check_length(a, dims, "constraint")
    stages = []
    for var in range(dims - 1, -1, -1):
        stages.append((var, system))
        positive = [row for row in system if row[0][var] > 0]
        negative = [row for row in system if row[0][var] < 0]
        reduced = {_normalise(row) for row in system if row[0][var] == 0}
        for a_p, b_p in positive:
            for a_n, b_n in negative:
                cp, cn = -a_n[var], a_p[var]
                combined = tuple(cp * x + cn * y for x, y in zip(a_p, a_n))
                reduced.add(_normalise((combined, cp * b_p + cn * b_n)))
        system = sorted(reduced)
    if any(b < 0 for _, b in system):
        return None

    point = [Fraction(0)] * dims
    for var, stage in reversed(stages):
        lower: Optional[Fraction] = None
        upper: Optional[Fraction] = None
        for a, b in stage:
            if a[var] == 0:
                continue
            rest = b - sum((a[j] * point[j] for j in range(var)), Fraction(0))
            bound = rest / a[var]
            if a[var] > 0:
                upper = bound if upper is None else min(upper, bound)
            else:
                lower = bound if lower is None else max(lower, bound)
        if lower is not None and upper is not None:
            point[var] = (lower + upper) / 2
        elif lower is not None:
            point[var] = lower
        elif upper is not None:
            point[var] = upper
    return tuple(point)


def _normalise(row: Tuple[Vector, Fraction]) -> Tuple[Vector, Fraction]:
    a, b = row
    scale = max((abs(x) for x in a), default=Fraction(0))
    if scale == 0:
        # constant row; keep only its sign information
        return a, Fraction(-1) if b < 0 else Fraction(0)
    return tuple(x / scale for x in a), b / scale


def simplex_blocks_feasible(
    rows: MatrixLike,
    rhs: Sequence[Fraction],
    sizes: Sequence[int],
    nonnegative: Sequence[int] = (),
) -> Optional[Vector]:
    """
    Solve a·x = b with x split into consecutive blocks of the given sizes,
    each block the eliminated-last-coordinate parameters of a closed simplex
    (entries >= 0, sum <= 1). Indices in ``nonnegative`` are also kept >= 0;
    remaining variables are free. Returns a solution or None.
    """
    reduced = eliminate_equalities(rows, rhs)
    if reduced is None:
        return None
    n = len(_rows_of(rows)[0])
    free = reduced.free
    position = {var: i for i, var in enumerate(free)}
    pivot_row = {var: i for i, var in enumerate(reduced.pivots)}

    def expression(var: int) -> Tuple[List[Fraction], Fraction]:
        # var = const + coeffs . y over the free variables y
        coeffs = [Fraction(0)] * len(free)
        if var in position:
            coeffs[position[var]] = Fraction(1)
            return coeffs, Fraction(0)
        i = pivot_row[var]
        for f in free:
            coeffs[position[f]] = -reduced.rows[i][f]
        return coeffs, reduced.rhs[i]

    def total(variables: Sequence[int]) -> Tuple[List[Fraction], Fraction]:
        coeffs, const = [Fraction(0)] * len(free), Fraction(0)
        for var in variables:
            a, c = expression(var)
            coeffs = [x + y for x, y in zip(coeffs, a)]
            const += c
        return coeffs, const

    constraints = []
    offset = 0
    for size in sizes:
        block = range(offset, offset + size)
        for var in block:
            a, c = expression(var)
            constraints.append((tuple(-x for x in a), c))
        a, c = total(block)
        constraints.append((tuple(a), 1 - c))
        offset += size
    for var in nonnegative:
        a, c = expression(var)
        constraints.append((tuple(-x for x in a), c))

    y = fourier_motzkin_feasible(constraints, len(free))
    if y is None:
        return None
    x = [Fraction(0)] * n
    for f in free:
        x[f] = y[position[f]]
    for var, i in pivot_row.items():
        x[var] = reduced.rhs[i] - sum((reduced.rows[i][f] * x[f] for f in free), Fraction(0))
    return tuple(x)


# Seeded randomness

def derive_seed(seed: int, *salt) -> int:
    """Deterministic child seed for retries and per-vertex streams."""
    digest = hashlib.blake2b(repr((seed,) + salt).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def random_rational_perturbation(
    v: Sequence[Fraction], eps: Fraction, seed: int, denominator_limit: Optional[int] = None
) -> Vector:
    """
    Move every coordinate by a nonzero amount strictly below eps.

    Offsets are eps·n/D with 0 < |n| < D, D the denominator limit, drawn from
    ``random.Random(seed)``; the same (v, eps, seed) always gives the same result.
    """
    eps = Fraction(eps)
    if eps <= 0:
        raise ContractViolation(f"eps must be positive, got {eps}")
    limit = denominator_limit or settings.DENOMINATOR_LIMIT
    if limit < 2:
        raise ContractViolation("denominator limit must be at least 2")
    rng = random.Random(seed)
    out = []
    for x in v:
        n = rng.randint(1, limit - 1) * rng.choice((-1, 1))
        out.append(Fraction(x) + eps * Fraction(n, limit))
    return tuple(out)


def random_rational_vector(rng: random.Random, dim: int, bound: Fraction, denominator: int) -> Vector:
    """Uniform grid point of [-bound, bound]^dim with the given denominator."""
    return tuple(bound * Fraction(rng.randint(-denominator, denominator), denominator) for _ in range(dim))


# Rational points on spheres

def _sqrt_approx(x: Fraction, denominator: int) -> Fraction:
    p, q = x.numerator, x.denominator
    return Fraction(math.isqrt(p * q * denominator * denominator), q * denominator)


def rational_sphere_point(direction: Sequence[Fraction], denominator: Optional[int] = None) -> Vector:
    """
    Exact rational point on the unit sphere close to direction/|direction|.

    The approximate unit vector is sent through stereographic coordinates from
    the pole opposite its largest coordinate, rounded there, and mapped back by
    the inverse parameterisation, which lands on the sphere exactly.
    """
    limit = denominator or settings.DENOMINATOR_LIMIT
    d = [Fraction(x) for x in direction]
    norm_sq = sum((x * x for x in d), Fraction(0))
    if norm_sq == 0:
        raise ContractViolation("cannot normalise the zero vector")
    norm = _sqrt_approx(norm_sq, limit * limit)
    w = [x / norm for x in d]
    j = max(range(len(w)), key=lambda i: abs(w[i]))
    sigma = 1 if w[j] > 0 else -1
    u = [(w[i] / (1 + sigma * w[j])).limit_denominator(limit) for i in range(len(w)) if i != j]
    u_sq = sum((x * x for x in u), Fraction(0))
    point = [2 * x / (1 + u_sq) for x in u]
    point.insert(j, sigma * (1 - u_sq) / (1 + u_sq))
    return tuple(point)


# Text form

def parse_rational(text: Union[str, int]) -> Fraction:
    """Parse "p/q" or "p" with q > 0. Raises ValueError on anything else."""
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    match = _RATIONAL.match(str(text))
    if not match:
        raise ValueError(f"not a rational literal: {text!r}")
    numerator, denominator = match.group(1), match.group(2)
    if denominator is None:
        return Fraction(int(numerator))
    if int(denominator) <= 0:
        raise ValueError(f"denominator must be positive in {text!r}")
    return Fraction(int(numerator), int(denominator))


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
