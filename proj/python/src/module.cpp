// Python bindings. Documents cross the boundary as canonical JSON text; the
// geoanim package turns them into dicts.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "geoanim/breakdown.hpp"
#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/geocoder.hpp"
#include "geoanim/geometry.hpp"
#include "geoanim/scenario.hpp"
#include "geoanim/sequencer.hpp"
#include "geoanim/timeline.hpp"

namespace py = pybind11;
namespace geo = geoanim::geometry;
namespace seq = geoanim::sequencer;
using geoanim::codec::json;

namespace {

geoanim::GeoShape shape(const std::string& geojson) {
  return geoanim::codec::shape_from_geojson_geometry(json::parse(geojson));
}

std::string geojson(const geoanim::GeoShape& s) { return geoanim::codec::dump(geoanim::codec::geometry_to_geojson(s)); }

geoanim::Timeline timeline(const std::string& text) { return geoanim::codec::timeline_from_json(json::parse(text)); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "geoanim core: geometry, geocoder queries, scheduling and frame evaluation";

  static py::exception<geoanim::Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const geoanim::Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error.ptr())(e.what());
      inst.attr("kind") = geoanim::to_string(e.kind());
      inst.attr("detail") = geoanim::codec::dump(e.detail());
      PyErr_SetObject(error.ptr(), inst.ptr());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("haversine_km", [](double lat1, double lon1, double lat2, double lon2) {
    return geo::haversine({lat1, lon1}, {lat2, lon2});
  });
  m.def("area_km2", [](const std::string& g) { return geo::area(shape(g)); }, py::arg("geometry"));
  m.def(
      "union",
      [](const std::vector<std::string>& gs) {
        std::vector<geoanim::GeoShape> shapes;
        for (const auto& g : gs) shapes.push_back(shape(g));
        return geojson(geo::union_of(shapes));
      },
      py::arg("geometries"));
  m.def("difference", [](const std::string& a, const std::string& b) { return geojson(geo::difference(shape(a), shape(b))); },
        py::arg("geometry"), py::arg("mask"));
  m.def("contains", [](const std::string& g, double lat, double lon) { return geo::contains(shape(g), {lat, lon}); },
        py::arg("geometry"), py::arg("lat"), py::arg("lon"));
  m.def("morph", [](const std::string& a, const std::string& b, double f) { return geojson(geo::morph(shape(a), shape(b), f)); },
        py::arg("source"), py::arg("target"), py::arg("fraction"));

  m.def("build_query",
        [](const std::string& request) { return geoanim::build_query(geoanim::codec::geocode_request_from_json(json::parse(request))); },
        py::arg("request"));

  m.def(
      "compile",
      [](const std::string& breakdown, const std::string& options) {
        const auto b = geoanim::codec::breakdown_from_json(json::parse(breakdown));
        const auto o = geoanim::breakdown_options_from_json(json::parse(options));
        return geoanim::codec::dump(geoanim::codec::to_json(geoanim::compile(b, o)));
      },
      py::arg("breakdown"), py::arg("options") = "{}");
  m.def("validate_timeline",
        [](const std::string& t) { return geoanim::codec::dump(geoanim::codec::to_json(geoanim::validate_timeline(timeline(t)))); },
        py::arg("timeline"));
  m.def("evaluate", [](const std::string& t, double at) { return geoanim::codec::dump(seq::to_json(seq::evaluate(timeline(t), at))); },
        py::arg("timeline"), py::arg("t"));
  m.def(
      "export_frames",
      [](const std::string& t, int fps) {
        const auto tl = timeline(t);
        py::gil_scoped_release release;
        return seq::export_frames(tl, fps);
      },
      py::arg("timeline"), py::arg("fps"));

  m.def(
      "replay_scenario",
      [](const std::string& fixtures_dir, const std::string& name) {
        const auto manifest = geoanim::load_scenarios(fixtures_dir);
        auto rt = geoanim::replay_runtime(fixtures_dir);
        return geoanim::codec::serialize(geoanim::run_scenario(geoanim::find_scenario(manifest, name), rt, fixtures_dir).project);
      },
      py::arg("fixtures_dir"), py::arg("name"));
}
