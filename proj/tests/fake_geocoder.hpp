#pragma once

// In-memory geocoder transport keyed by the form-encoded q parameter.

#include <map>
#include <string>

#include "geoanim/codec.hpp"
#include "geoanim/geocoder.hpp"

namespace geoanim::testing {

inline nlohmann::json place_feature(const std::string& name, const GeoShape& shape) {
  return nlohmann::json{{"type", "Feature"},
                        {"properties", {{"display_name", name}, {"importance", 0.8}, {"osm_type", "relation"}, {"osm_id", 7}}},
                        {"geometry", codec::geometry_to_geojson(shape)}};
}

/// Unknown places answer with an empty collection.
class PlaceTransport : public GeocoderTransport {
 public:
  std::map<std::string, GeoShape> places;
  int calls = 0;

  std::string fetch(const std::string& query) override {
    ++calls;
    const auto start = query.find("q=") + 2;
    const auto q = query.substr(start, query.find('&', start) - start);
    nlohmann::json features = nlohmann::json::array();
    if (auto it = places.find(q); it != places.end()) features.push_back(place_feature(q, it->second));
    return nlohmann::json{{"type", "FeatureCollection"}, {"features", features}}.dump();
  }
};

}  // namespace geoanim::testing
