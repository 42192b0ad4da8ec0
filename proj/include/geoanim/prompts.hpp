#pragma once

// Agent prompts, shipped as text files under prompts/ and embedded at build
// time. Each file starts with an "@version N" line.

#include <map>
#include <string>

namespace geoanim::prompts {

struct Prompt {
  std::string id;
  int version = 0;
  std::string text;
  std::string sha256;  // of text
};

/// Raw file contents keyed by file stem (generated translation unit).
const std::map<std::string, std::string>& all();

/// Throws NotFoundError for unknown ids.
const Prompt& get(const std::string& id);

/// Replaces every "{{key}}" in the template.
std::string fill(std::string text, const std::map<std::string, std::string>& values);

}  // namespace geoanim::prompts
