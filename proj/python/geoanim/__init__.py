"""Map animation engine: geometry, scheduling and frame evaluation.

Shapes are GeoJSON geometry dicts, timelines and breakdowns are the same
documents the service speaks.
"""

import json

from . import _core
from ._core import Error, haversine_km

__all__ = [
    "Error",
    "area_km2",
    "build_query",
    "compile",
    "contains",
    "difference",
    "evaluate",
    "export_frames",
    "haversine_km",
    "morph",
    "replay_scenario",
    "union",
    "validate_timeline",
]


def _dump(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def area_km2(geometry):
    return _core.area_km2(_dump(geometry))


def union(geometries):
    return json.loads(_core.union([_dump(g) for g in geometries]))


def difference(geometry, mask):
    return json.loads(_core.difference(_dump(geometry), _dump(mask)))


def contains(geometry, lat, lon):
    return _core.contains(_dump(geometry), lat, lon)


def morph(source, target, fraction):
    return json.loads(_core.morph(_dump(source), _dump(target), fraction))


def build_query(query, country_codes=(), viewbox=None, bounded=False):
    """Nominatim search parameters; viewbox is (min_lon, min_lat, max_lon, max_lat)."""
    request = {"query": query, "country_codes": list(country_codes), "bounded": bounded}
    if viewbox is not None:
        min_lon, min_lat, max_lon, max_lat = viewbox
        request["viewbox"] = {"min": {"lat": min_lat, "lon": min_lon}, "max": {"lat": max_lat, "lon": max_lon}}
    return _core.build_query(json.dumps(request))


def compile(breakdown, **options):
    return json.loads(_core.compile(_dump(breakdown), json.dumps(options)))


def validate_timeline(timeline):
    return json.loads(_core.validate_timeline(_dump(timeline)))


def evaluate(timeline, t):
    return json.loads(_core.evaluate(_dump(timeline), t))


def export_frames(timeline, fps):
    return [json.loads(line) for line in _core.export_frames(_dump(timeline), fps).splitlines()]


def replay_scenario(fixtures_dir, name):
    return json.loads(_core.replay_scenario(str(fixtures_dir), name))
