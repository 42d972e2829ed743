import json
from fractions import Fraction as F

import pytest

from models import ReportStatus
from services.errors import DocumentError
from services.interchange import (
    degree_payload,
    dumps_ornament,
    dumps_track,
    load_ornament,
    loads_ornament,
    loads_track,
    report_payload,
)
from services.mu_degree import compute_mu_degree
from services.mu_sweep import straight_line_homotopy_to_trivial
from services.ornament_model import validate_ornament
from tests.conftest import point

FAR = (point(20, 0), point(0, 20), point(-20, -20))


def segment_doc(vertices):
    return {"name": "X", "dim": 1, "vertices": vertices, "facets": [[0, 1]]}


def document(components, m=2):
    return json.dumps({"m": m, "components": components})


def test_ornament_round_trip_is_byte_identical(borromean1):
    text = dumps_ornament(borromean1)
    again = loads_ornament(text)
    assert again == borromean1
    assert dumps_ornament(again) == text
    assert text.endswith("\n")


def test_rationals_are_canonical_strings(borromean1):
    data = json.loads(dumps_ornament(borromean1))
    assert data["m"] == 2
    assert [c["name"] for c in data["components"]] == ["X1", "X2", "X3"]
    for row in data["components"][0]["vertices"]:
        for x in row:
            assert isinstance(x, str)
            assert str(F(x)) == x


def test_integer_coordinates_are_accepted():
    text = document([segment_doc([[0, 0], [1, "1/2"]])] * 3)
    o = loads_ornament(text)
    assert o.components[0].images == (point(0, 0), (F(1), F(1, 2)))


def test_zero_denominator_is_located():
    text = document([segment_doc([["3/0", "0"], ["1", "1"]])] + [segment_doc([["0", "0"], ["1", "1"]])] * 2)
    with pytest.raises(DocumentError) as info:
        loads_ornament(text)
    assert info.value.location == "components[0].vertices"


def test_bad_json_is_located():
    with pytest.raises(DocumentError) as info:
        loads_ornament('{"m": 2,')
    assert info.value.location.startswith("line 1")


def test_wrong_component_count():
    with pytest.raises(DocumentError) as info:
        loads_ornament(document([segment_doc([["0", "0"], ["1", "1"]])] * 2))
    assert info.value.location == "components"


def test_facet_out_of_range():
    bad = {"name": "X", "dim": 1, "vertices": [["0", "0"], ["1", "1"]], "facets": [[0, 2]]}
    good = segment_doc([["0", "0"], ["1", "1"]])
    with pytest.raises(DocumentError) as info:
        loads_ornament(document([good, bad, good]))
    assert info.value.location == "components[1].facets"


def test_wrong_vertex_length():
    good = segment_doc([["0", "0"], ["1", "1"]])
    with pytest.raises(DocumentError) as info:
        loads_ornament(document([good, good, segment_doc([["0", "0", "0"], ["1", "1", "1"]])]))
    assert info.value.location == "components[2].vertices"


def test_missing_file(tmp_path):
    with pytest.raises(DocumentError):
        load_ornament(tmp_path / "nothing.json")


def test_track_round_trip(borromean1):
    track = straight_line_homotopy_to_trivial(borromean1, FAR)
    text = dumps_track(track)
    again = loads_track(text)
    assert again == track
    assert dumps_track(again) == text
    assert again.start == borromean1


def test_first_keyframe_must_match(borromean1):
    data = json.loads(dumps_track(straight_line_homotopy_to_trivial(borromean1, FAR)))
    data["keyframes"][0]["vertices"][1][0] = ["7", "7"]
    with pytest.raises(DocumentError) as info:
        loads_track(json.dumps(data))
    assert info.value.location == "keyframes[0].vertices[1]"


def test_track_needs_two_keyframes(borromean1):
    data = json.loads(dumps_track(straight_line_homotopy_to_trivial(borromean1, FAR)))
    data["keyframes"] = data["keyframes"][:1]
    with pytest.raises(DocumentError) as info:
        loads_track(json.dumps(data))
    assert info.value.location == "keyframes"


def test_report_payload_witness(three_segments):
    payload = report_payload(validate_ornament(three_segments))
    assert payload["status"] == ReportStatus.INVALID.value
    assert payload["witness"]["facets"] == [0, 0, 0]
    assert payload["witness"]["point"] == ["0", "0"]


def test_report_payload_valid(three_triangles):
    assert report_payload(validate_ornament(three_triangles)) == {"status": ReportStatus.VALID.value}


def test_degree_payload(borromean1):
    payload = degree_payload(compute_mu_degree(borromean1, seed=0))
    assert payload["mu"] == 1
    assert sum(s["sign"] for s in payload["solutions"]) == 1
    assert all(F(s["s"]) > 0 for s in payload["solutions"])
