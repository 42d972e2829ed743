"""
JSON interchange: ornament and homotopy documents, plus report payloads.

Rationals are "p/q" strings in canonical reduced form, so dumping a loaded
document reproduces it byte for byte.
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

from pydantic import BaseModel, ValidationError

from models import (
    ComponentDocument,
    DegreeResult,
    HomotopyDocument,
    HomotopyTrack,
    Keyframe,
    KeyframeDocument,
    Ornament,
    OrnamentDocument,
    PLMap,
    SignedTriplePoint,
    TriangulatedManifold,
    TriplePointPairing,
    ValidationReport,
)
from services.errors import DimensionMismatch, DocumentError
from services.geometry_kernel import Vector, format_rational, parse_rational


def _location(loc: Sequence[Union[str, int]]) -> str:
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "document"


def _rows(points: Sequence[Vector]) -> List[List[str]]:
    return [[format_rational(x) for x in p] for p in points]


def _points(rows: Sequence[Sequence[str]]) -> tuple:
    return tuple(tuple(parse_rational(x) for x in row) for row in rows)


def _parse(text: str, model: type) -> BaseModel:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise DocumentError(e.msg, f"line {e.lineno} column {e.colno}")
    try:
        return model.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        raise DocumentError(first["msg"], _location(first["loc"]))


def _dump(doc: BaseModel) -> str:
    return json.dumps(doc.model_dump(), indent=2) + "\n"


def _read(source: Union[str, Path]) -> str:
    try:
        return Path(source).read_text(encoding="utf-8")
    except OSError as e:
        raise DocumentError(e.strerror or str(e), str(source))


# Ornament documents

def ornament_to_document(o: Ornament) -> OrnamentDocument:
    return OrnamentDocument(
        m=o.ambient_dim,
        components=[
            ComponentDocument(
                name=c.name or f"X{i + 1}",
                dim=c.domain.dim,
                vertices=_rows(c.images),
                facets=[list(f) for f in c.domain.facets],
            )
            for i, c in enumerate(o.components)
        ],
    )


def _domain(component: ComponentDocument, index: int) -> TriangulatedManifold:
    try:
        return TriangulatedManifold(
            dim=component.dim,
            vertex_count=len(component.vertices),
            facets=tuple(tuple(f) for f in component.facets),
        )
    except DimensionMismatch as e:
        raise DocumentError(str(e), f"components[{index}].facets")


def document_to_ornament(doc: OrnamentDocument) -> Ornament:
    components = []
    for i, c in enumerate(doc.components):
        try:
            components.append(PLMap(domain=_domain(c, i), ambient_dim=doc.m, images=_points(c.vertices), name=c.name))
        except DimensionMismatch as e:
            raise DocumentError(str(e), f"components[{i}].vertices")
    return Ornament(components=tuple(components))


def loads_ornament(text: str) -> Ornament:
    return document_to_ornament(_parse(text, OrnamentDocument))


def load_ornament(source: Union[str, Path]) -> Ornament:
    return loads_ornament(_read(source))


def dumps_ornament(o: Ornament) -> str:
    return _dump(ornament_to_document(o))


# Homotopy documents

def track_to_document(track: HomotopyTrack) -> HomotopyDocument:
    start = ornament_to_document(track.start)
    return HomotopyDocument(
        m=start.m,
        components=start.components,
        keyframes=[
            KeyframeDocument(t=format_rational(f.t), vertices=[_rows(images) for images in f.images])
            for f in track.keyframes
        ],
    )


def document_to_track(doc: HomotopyDocument) -> HomotopyTrack:
    start = document_to_ornament(doc)
    for i, (component, images) in enumerate(zip(doc.components, doc.keyframes[0].vertices)):
        if _points(component.vertices) != _points(images):
            raise DocumentError("first keyframe differs from the component vertices", f"keyframes[0].vertices[{i}]")
    try:
        return HomotopyTrack(
            domains=tuple(c.domain for c in start.components),
            ambient_dim=doc.m,
            keyframes=tuple(
                Keyframe(t=parse_rational(f.t), images=tuple(_points(rows) for rows in f.vertices))
                for f in doc.keyframes
            ),
            names=tuple(c.name for c in start.components),
        )
    except DimensionMismatch as e:
        raise DocumentError(str(e), "keyframes")


def loads_track(text: str) -> HomotopyTrack:
    return document_to_track(_parse(text, HomotopyDocument))


def load_track(source: Union[str, Path]) -> HomotopyTrack:
    return loads_track(_read(source))


def dumps_track(track: HomotopyTrack) -> str:
    return _dump(track_to_document(track))


# Report payloads

def report_payload(report: ValidationReport) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"status": report.status.value}
    w = report.witness
    if w is not None:
        witness: Dict[str, Any] = {"facets": list(w.facets), "detail": w.detail}
        if w.barycentric:
            witness["barycentric"] = _rows(w.barycentric)
        if w.point is not None:
            witness["point"] = [format_rational(x) for x in w.point]
        if w.face is not None:
            witness["face"] = list(w.face)
        payload["witness"] = witness
    return payload


def degree_payload(result: DegreeResult) -> Dict[str, Any]:
    return {
        "mu": result.mu,
        "direction": [format_rational(x) for x in result.direction.v],
        "solutions": [
            {
                "facets": list(p.facets),
                "barycentric": _rows(p.barycentric),
                "s": format_rational(p.s),
                "sign": p.sign,
            }
            for p in result.solutions
        ],
    }


def triple_point_payload(p: SignedTriplePoint) -> Dict[str, Any]:
    return {
        "cells": [
            {"component": c.component, "facet": c.facet, "interval": c.interval, "vertices": [list(v) for v in c.vertices]}
            for c in p.cells
        ],
        "barycentric": _rows(p.barycentric),
        "t": format_rational(p.t),
        "point": [format_rational(x) for x in p.point],
        "sign": p.sign,
    }


def pairing_payload(pairing: TriplePointPairing) -> Dict[str, Any]:
    return {
        "pairs": [[format_rational(a.t), format_rational(b.t)] for a, b in pairing.pairs],
        "unpaired": [{"t": format_rational(p.t), "sign": p.sign} for p in pairing.unpaired],
    }
