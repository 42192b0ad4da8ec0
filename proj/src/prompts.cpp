#include "geoanim/prompts.hpp"


#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"

namespace geoanim::prompts {

const Prompt& get(const std::string& id) {
  static const std::map<std::string, Prompt> parsed = [] {
    std::map<std::string, Prompt> out;
    for (const auto& [stem, raw] : all()) {
      Prompt p;
      p.id = stem;
      std::string body = raw;
      if (body.rfind("@version ", 0) == 0) {
        const auto eol = body.find('\n');
        p.version = std::stoi(body.substr(9, eol - 9));
        body = eol == std::string::npos ? std::string{} : body.substr(eol + 1);
      }
      while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.pop_back();
      p.text = std::move(body);
      p.sha256 = sha256_hex(p.text);
      out.emplace(stem, std::move(p));
    }
    return out;
  }();
  auto it = parsed.find(id);
  if (it == parsed.end()) throw NotFoundError("unknown prompt '" + id + "'");
  return it->second;
}

std::string fill(std::string text, const std::map<std::string, std::string>& values) {
  for (const auto& [key, value] : values) {
    const std::string marker = "{{" + key + "}}";
    for (auto pos = text.find(marker); pos != std::string::npos; pos = text.find(marker, pos + value.size())) {
      text.replace(pos, marker.size(), value);
    }
  }
  return text;
}

}  // namespace geoanim::prompts
