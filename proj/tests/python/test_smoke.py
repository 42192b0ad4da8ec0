import math
import pathlib

import pytest

import geoanim

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "fixtures"


def square(lon0, lat0, lon1, lat1):
    ring = [[lon0, lat0], [lon1, lat0], [lon1, lat1], [lon0, lat1], [lon0, lat0]]
    return {"type": "Polygon", "coordinates": [ring]}


def test_haversine_matches_law_of_cosines():
    p1, p2 = math.radians(51.5074), math.radians(43.6532)
    dl = math.radians(-79.3832 + 0.1278)
    oracle = 6371.0088 * math.acos(math.sin(p1) * math.sin(p2) + math.cos(p1) * math.cos(p2) * math.cos(dl))
    assert geoanim.haversine_km(51.5074, -0.1278, 43.6532, -79.3832) == pytest.approx(oracle, rel=1e-3)


def test_boolean_operations():
    a, b = square(0, 0, 2, 1), square(1, 0, 3, 1)
    merged = geoanim.union([a, b])
    assert geoanim.area_km2(merged) == pytest.approx(geoanim.area_km2(square(0, 0, 3, 1)), rel=1e-9)
    left = geoanim.difference(a, b)
    assert geoanim.area_km2(left) == pytest.approx(geoanim.area_km2(square(0, 0, 1, 1)), rel=1e-9)
    assert geoanim.contains(merged, 0.5, 2.5)
    assert not geoanim.contains(left, 0.5, 1.5)


def test_morph_endpoints():
    start = geoanim.morph(square(0, 0, 1, 1), square(3, 1, 5, 2), 0.0)
    for lon, lat in start["coordinates"][0]:
        assert 0 <= lon <= 1 and 0 <= lat <= 1


def test_river_avon_query():
    q = geoanim.build_query("River Avon", ["gb"], viewbox=(-2.8, 51.3, -1.5, 51.6), bounded=True)
    assert q == "q=River+Avon&format=geojson&polygon_geojson=1&countrycodes=gb&viewbox=-2.8,51.3,-1.5,51.6&bounded=1"


def test_errors_carry_kind():
    with pytest.raises(geoanim.Error) as info:
        geoanim.build_query("  ")
    assert info.value.kind == "validation"


def test_replayed_project_compiles_and_plays():
    project = geoanim.replay_scenario(FIXTURES, "mace")
    assert [i["kind"] for i in project["breakdown"]["items"]] == [
        "camera_zoom", "element_route", "camera_zoom", "highlight_area"]
    assert (FIXTURES / "projects" / "mace.json").read_text().strip() == \
        geoanim._core.replay_scenario(str(FIXTURES), "mace")

    timeline = geoanim.compile(project["breakdown"], target_duration=30)
    assert timeline == project["timeline"]
    assert not [v for v in geoanim.validate_timeline(timeline)["violations"] if v["severity"] == "error"]

    frames = geoanim.export_frames(timeline, 2)
    assert len(frames) == 61
    assert frames[20] == geoanim.evaluate(timeline, 10.0)
