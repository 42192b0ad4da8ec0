#include "geoanim/schema.hpp"

#include <algorithm>
#include <cmath>

#include "geoanim/errors.hpp"

namespace geoanim::schema {
namespace {

struct Walker {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  std::optional<double> as_number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (!v.is_string()) return std::nullopt;
    const auto& s = v.get_ref<const std::string&>();
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used == s.size() && std::isfinite(d)) return d;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }

  json walk(const json& schema, const json& value, const std::string& path) {
    const std::string type = schema.value("type", "");
    json out = value;
    const std::string where = path.empty() ? "arguments" : path;

    if (type == "object") {
      if (!value.is_object()) {
        errors.push_back(where + ": expected object");
        return value;
      }
      out = json::object();
      const json props = schema.value("properties", json::object());
      const json required = schema.value("required", json::array());
      for (auto it = props.begin(); it != props.end(); ++it) {
        const auto found = value.find(it.key());
        if (found != value.end() && !found->is_null()) {
          out[it.key()] = walk(*it, *found, join(path, it.key()));
        } else if (it->contains("default")) {
          out[it.key()] = (*it)["default"];
        } else if (std::find(required.begin(), required.end(), it.key()) != required.end()) {
          errors.push_back(join(path, it.key()) + ": missing required field");
        }
      }
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (props.contains(it.key())) continue;
        if (schema.value("additionalProperties", false) == true) {
          out[it.key()] = *it;
        } else {
          warnings.push_back("dropped unknown field '" + join(path, it.key()) + "'");
        }
      }
    } else if (type == "array") {
      if (!value.is_array()) {
        errors.push_back(where + ": expected array");
        return value;
      }
      out = json::array();
      const json items = schema.value("items", json::object());
      for (std::size_t i = 0; i < value.size(); ++i) {
        out.push_back(walk(items, value[i], path + "[" + std::to_string(i) + "]"));
      }
      if (schema.contains("minItems") && value.size() < schema["minItems"].get<std::size_t>()) {
        errors.push_back(where + ": expected at least " + schema["minItems"].dump() + " items");
      }
      if (schema.contains("maxItems") && value.size() > schema["maxItems"].get<std::size_t>()) {
        errors.push_back(where + ": expected at most " + schema["maxItems"].dump() + " items");
      }
    } else if (type == "number" || type == "integer") {
      auto d = as_number(value);
      if (!d) {
        errors.push_back(where + ": expected " + type);
        return value;
      }
      if (type == "integer") {
        if (*d != std::floor(*d)) {
          errors.push_back(where + ": expected integer");
          return value;
        }
        out = static_cast<std::int64_t>(*d);
      } else {
        out = *d;
      }
      if (schema.contains("minimum") && *d < schema["minimum"].get<double>()) {
        errors.push_back(where + ": below minimum " + schema["minimum"].dump());
      }
      if (schema.contains("maximum") && *d > schema["maximum"].get<double>()) {
        errors.push_back(where + ": above maximum " + schema["maximum"].dump());
      }
    } else if (type == "boolean") {
      if (value.is_boolean()) {
        out = value;
      } else if (value == "true" || value == "false") {
        out = value == "true";
      } else {
        errors.push_back(where + ": expected boolean");
        return value;
      }
    } else if (type == "string") {
      if (!value.is_string()) {
        errors.push_back(where + ": expected string");
        return value;
      }
    }

    if (schema.contains("enum")) {
      const auto& allowed = schema["enum"];
      if (std::find(allowed.begin(), allowed.end(), out) == allowed.end()) {
        errors.push_back(where + ": value " + out.dump() + " not in " + allowed.dump());
      }
    }
    return out;
  }
};

void check_schema(const json& schema, const std::string& path, std::vector<std::string>& problems) {
  static const std::vector<std::string> kTypes = {"object", "array", "string", "number", "integer", "boolean"};
  if (!schema.is_object()) {
    problems.push_back(path + ": schema must be an object");
    return;
  }
  const std::string type = schema.value("type", "");
  if (std::find(kTypes.begin(), kTypes.end(), type) == kTypes.end()) {
    problems.push_back(path + ": unknown type '" + type + "'");
    return;
  }
  if (type == "object") {
    const json props = schema.value("properties", json::object());
    if (!props.is_object()) problems.push_back(path + ": properties must be an object");
    for (auto it = props.begin(); it != props.end(); ++it) check_schema(*it, path + "." + it.key(), problems);
    for (const auto& r : schema.value("required", json::array())) {
      if (!r.is_string() || !props.contains(r.get<std::string>())) {
        problems.push_back(path + ": required field " + r.dump() + " is not declared");
      }
    }
  }
  if (type == "array") check_schema(schema.value("items", json::object()), path + "[]", problems);
}

}  // namespace

Conformed conform(const json& schema, const json& value) {
  Walker w;
  json out = w.walk(schema, value, "");
  if (!w.errors.empty()) {
    std::string msg = "tool arguments violate schema: " + w.errors.front();
    if (w.errors.size() > 1) msg += " (+" + std::to_string(w.errors.size() - 1) + " more)";
    throw SchemaViolationError(msg, {{"fields", w.errors}});
  }
  return {std::move(out), std::move(w.warnings)};
}

std::vector<std::string> schema_problems(const json& schema) {
  std::vector<std::string> problems;
  check_schema(schema, "parameters", problems);
  return problems;
}

}  // namespace geoanim::schema
