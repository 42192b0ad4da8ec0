#pragma once

// The subset of JSON Schema used by tool definitions: type, properties,
// required, enum, items, default, minItems/maxItems, minimum/maximum.

#include <string>
#include <vector>

#include <json.hpp>

namespace geoanim::schema {

using json = nlohmann::json;

struct Conformed {
  json value;
  std::vector<std::string> warnings;
};

/// Coerces `value` to `schema`: numeric and boolean strings become numbers
/// and booleans, absent optional fields take declared defaults, unknown
/// object fields are dropped with a warning. Throws SchemaViolationError
/// whose detail lists every failing field path.
Conformed conform(const json& schema, const json& value);

/// Problems with a schema document itself; empty when usable.
std::vector<std::string> schema_problems(const json& schema);

}  // namespace geoanim::schema
