from enum import Enum
from fractions import Fraction
from typing import List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from services.errors import DimensionMismatch
from services.geometry_kernel import Vector, parse_rational


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


# Enums
class ReportStatus(str, Enum):
    VALID = "valid"
    INVALID = "invalid"


class MuMethod(str, Enum):
    DEGREE = "degree"
    SWEEP = "sweep"
    BOTH = "both"


class OrnamentKind(str, Enum):
    BORROMEAN = "borromean"
    TRIVIAL = "trivial"
    RANDOM = "random"
    SCRAMBLED_BORROMEAN = "scrambled-borromean"


class TrackKind(str, Enum):
    TO_TRIVIAL = "to-trivial"
    PERTURBATION = "perturbation"


class NonGenericReason(str, Enum):
    SINGULAR = "singular"
    BOUNDARY = "boundary"
    ZERO_RAY = "zero-ray"


# Ornament models
class TriangulatedManifold(_Frozen):
    dim: int
    vertex_count: int
    facets: Tuple[Tuple[int, ...], ...]

    @model_validator(mode="after")
    def _check_shape(self):
        if self.dim < 1:
            raise DimensionMismatch(f"manifold dimension must be at least 1, got {self.dim}")
        for index, facet in enumerate(self.facets):
            if len(facet) != self.dim + 1:
                raise DimensionMismatch(f"facet {index} has {len(facet)} vertices, expected {self.dim + 1}")
            if any(v < 0 or v >= self.vertex_count for v in facet):
                raise DimensionMismatch(f"facet {index} uses a vertex outside 0..{self.vertex_count - 1}")
        return self


class PLMap(_Frozen):
    domain: TriangulatedManifold
    ambient_dim: int
    images: Tuple[Vector, ...]
    name: str = ""

    @model_validator(mode="after")
    def _check_images(self):
        if len(self.images) != self.domain.vertex_count:
            raise DimensionMismatch(f"{len(self.images)} vertex images for {self.domain.vertex_count} vertices")
        for index, image in enumerate(self.images):
            if len(image) != self.ambient_dim:
                raise DimensionMismatch(f"vertex {index} image has length {len(image)}, expected {self.ambient_dim}")
        return self

    def facet_images(self, facet: int) -> Tuple[Vector, ...]:
        return tuple(self.images[v] for v in self.domain.facets[facet])


class Ornament(_Frozen):
    components: Tuple[PLMap, PLMap, PLMap]

    @model_validator(mode="after")
    def _check_ambient(self):
        dims = {c.ambient_dim for c in self.components}
        if len(dims) != 1:
            raise DimensionMismatch(f"components live in different ambient dimensions {sorted(dims)}")
        return self

    @property
    def ambient_dim(self) -> int:
        return self.components[0].ambient_dim


class Witness(_Frozen):
    facets: Tuple[int, ...] = ()
    barycentric: Tuple[Vector, ...] = ()
    point: Optional[Vector] = None
    face: Optional[Tuple[int, ...]] = None
    detail: str = ""


class ValidationReport(_Frozen):
    status: ReportStatus
    witness: Optional[Witness] = None

    @property
    def is_valid(self) -> bool:
        return self.status == ReportStatus.VALID


# Degree models
class RayDirection(_Frozen):
    v: Vector
    seed: Optional[int] = None

    @field_validator("v")
    @classmethod
    def _nonzero(cls, value):
        if not any(value):
            raise ValueError("ray direction must be nonzero")
        return value


class PreimageSolution(_Frozen):
    facets: Tuple[int, int, int]
    barycentric: Tuple[Vector, Vector, Vector]
    s: Fraction
    sign: int


class SignConvention(_Frozen):
    k: int
    global_sign: int


class DegreeResult(_Frozen):
    mu: int
    solutions: Tuple[PreimageSolution, ...]
    direction: RayDirection


# Homotopy models
class Keyframe(_Frozen):
    t: Fraction
    images: Tuple[Tuple[Vector, ...], Tuple[Vector, ...], Tuple[Vector, ...]]


class HomotopyTrack(_Frozen):
    domains: Tuple[TriangulatedManifold, TriangulatedManifold, TriangulatedManifold]
    ambient_dim: int
    keyframes: Tuple[Keyframe, ...]
    names: Tuple[str, str, str] = ("X1", "X2", "X3")

    @model_validator(mode="after")
    def _check_keyframes(self):
        if len(self.keyframes) < 2:
            raise DimensionMismatch("a track needs at least two keyframes")
        times = [frame.t for frame in self.keyframes]
        if times[0] != 0 or times[-1] != 1 or any(a >= b for a, b in zip(times, times[1:])):
            raise DimensionMismatch(f"keyframe times must increase from 0 to 1, got {times}")
        for frame in self.keyframes:
            for domain, images in zip(self.domains, frame.images):
                if len(images) != domain.vertex_count or any(len(v) != self.ambient_dim for v in images):
                    raise DimensionMismatch(f"keyframe at t={frame.t} does not match the domains")
        return self

    def ornament_at(self, index: int) -> Ornament:
        frame = self.keyframes[index]
        return Ornament(components=tuple(
            PLMap(domain=domain, ambient_dim=self.ambient_dim, images=images, name=name)
            for domain, images, name in zip(self.domains, frame.images, self.names)
        ))

    @property
    def start(self) -> Ornament:
        return self.ornament_at(0)

    @property
    def end(self) -> Ornament:
        return self.ornament_at(len(self.keyframes) - 1)


class PrismCell(_Frozen):
    component: int
    facet: int
    interval: int
    vertices: Tuple[Tuple[int, int], ...]  # (vertex index, keyframe index)


class SignedTriplePoint(_Frozen):
    cells: Tuple[PrismCell, PrismCell, PrismCell]
    barycentric: Tuple[Vector, Vector, Vector]
    t: Fraction
    point: Vector
    sign: int


class TriplePointPairing(_Frozen):
    pairs: Tuple[Tuple[SignedTriplePoint, SignedTriplePoint], ...]
    unpaired: Tuple[SignedTriplePoint, ...]


class SweepResult(_Frozen):
    track: HomotopyTrack
    points: Tuple[SignedTriplePoint, ...]

    @property
    def total(self) -> int:
        return sum(p.sign for p in self.points)


# Interchange documents
def _check_rational_rows(rows: List[List[str]]) -> List[List[str]]:
    for i, row in enumerate(rows):
        for j, text in enumerate(row):
            try:
                parse_rational(text)
            except ValueError as e:
                raise ValueError(f"[{i}][{j}]: {e}")
    return rows


class ComponentDocument(BaseModel):
    name: str = ""
    dim: int
    vertices: List[List[str]]
    facets: List[List[int]]

    @field_validator("vertices", mode="before")
    @classmethod
    def _stringify(cls, value):
        if isinstance(value, list):
            return [[str(x) if isinstance(x, int) and not isinstance(x, bool) else x for x in row]
                    if isinstance(row, list) else row for row in value]
        return value

    @field_validator("vertices")
    @classmethod
    def _rationals(cls, value):
        return _check_rational_rows(value)


class OrnamentDocument(BaseModel):
    m: int
    components: List[ComponentDocument] = Field(min_length=3, max_length=3)


class KeyframeDocument(BaseModel):
    t: str
    vertices: List[List[List[str]]] = Field(min_length=3, max_length=3)

    @field_validator("t")
    @classmethod
    def _time(cls, value):
        parse_rational(value)
        return value

    @field_validator("vertices")
    @classmethod
    def _rationals(cls, value):
        for rows in value:
            _check_rational_rows(rows)
        return value


class HomotopyDocument(OrnamentDocument):
    keyframes: List[KeyframeDocument] = Field(min_length=2)
