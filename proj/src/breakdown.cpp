#include "geoanim/breakdown.hpp"

#include <algorithm>
#include <cmath>
#include <regex>
#include <limits>
#include <set>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/prompts.hpp"
#include "geoanim/timeline.hpp"

namespace geoanim {
namespace {

using codec::json;

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

llm::PromptInfo info(const prompts::Prompt& p) { return {p.id, p.version, p.sha256}; }

json items_for_prompt(const SceneBreakdown& b) {
  json out = json::array();
  for (const auto& item : b.items) {
    json j{{"id", item.id},
           {"kind", to_string(item.kind)},
           {"short_description", item.short_description},
           {"long_description", item.long_description}};
    if (!item.user_notes.empty()) j["user_notes"] = item.user_notes;
    out.push_back(j);
  }
  return out;
}

struct ProposedItem {
  std::string id;
  BlockKind kind;
  std::string short_description;
  std::string long_description;
};

std::vector<ProposedItem> read_items(const json& args) {
  std::vector<ProposedItem> out;
  const auto& items = args.at("items");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& j = items[i];
    ProposedItem p;
    p.id = j.value("id", "");
    p.kind = *parse_block_kind(j.at("kind").get<std::string>());
    p.short_description = j.at("short_description").get<std::string>();
    p.long_description = j.at("long_description").get<std::string>();
    const std::string where = "items[" + std::to_string(i) + "]";
    if (blank(p.short_description)) throw ValidationError(where + ".short_description is empty");
    if (blank(p.long_description)) throw ValidationError(where + ".long_description is empty");
    out.push_back(std::move(p));
  }
  return out;
}

// Runs a request with the repair policy: every unusable answer is echoed
// back with the reason until `max_repairs` re-prompts are spent. `check`
// turns the tool arguments into a result or throws Error.
template <class Result, class Check>
Result converse(llm::Gateway& gateway, llm::ChatRequest req, int max_repairs, Check&& check) {
  const auto& tool = BreakdownAgent::tool();
  std::string last_raw;
  std::string last_error;
  for (int attempt = 0; attempt <= max_repairs; ++attempt) {
    const auto resp = gateway.complete(req);
    std::string answer = resp.text.value_or("");
    try {
      const auto parsed = llm::parse_tool_call(resp, tool);
      answer = parsed.raw;
      return check(parsed.arguments);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::schema_violation && e.kind() != ErrorKind::missing_tool_call &&
          e.kind() != ErrorKind::validation) {
        throw;
      }
      if (!resp.tool_calls.empty()) answer = resp.tool_calls.front().raw_arguments;
      last_raw = answer;
      last_error = e.what();
      if (e.detail().contains("fields")) last_error += " " + e.detail()["fields"].dump();
    }
    req.messages.push_back({ChatRole::assistant, answer.empty() ? "(no answer)" : answer});
    req.messages.push_back({ChatRole::user, "That answer could not be used: " + last_error +
                                                ". Call emit_breakdown again with the complete, corrected list."});
  }
  throw BreakdownFailedError("scene breakdown failed after " + std::to_string(max_repairs) + " repair attempts: " + last_error,
                             {{"raw", last_raw}, {"reason", last_error}});
}

}  // namespace

void BreakdownOptions::validate() const {
  if (!(target_duration > 0) || !(default_block_seconds > 0) || !(camera_lead_seconds >= 0)) {
    throw ValidationError("breakdown options must be positive");
  }
  if (camera_lead_seconds >= target_duration) {
    throw ValidationError("camera lead must be shorter than the target duration");
  }
}

SceneBreakdown apply_item_edits(const SceneBreakdown& breakdown, const std::vector<ItemEdit>& edits) {
  SceneBreakdown out = breakdown;
  auto locate = [&](const std::string& id) {
    auto it = std::find_if(out.items.begin(), out.items.end(), [&](const auto& i) { return i.id == id; });
    if (it == out.items.end()) throw NotFoundError("no breakdown item '" + id + "'", {{"id", id}});
    return it;
  };
  std::uint64_t inserted = 0;
  for (const auto& edit : edits) {
    std::visit(
        [&](const auto& e) {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, item_edits::Delete>) {
            out.items.erase(locate(e.id));
          } else if constexpr (std::is_same_v<T, item_edits::Move>) {
            auto it = locate(e.id);
            auto item = *it;
            out.items.erase(it);
            out.items.insert(out.items.begin() + static_cast<std::ptrdiff_t>(std::min(e.index, out.items.size())), item);
          } else if constexpr (std::is_same_v<T, item_edits::Update>) {
            auto& item = *locate(e.id);
            bool invalidates = false;
            if (e.kind && *e.kind != item.kind) {
              item.kind = *e.kind;
              invalidates = true;
            }
            if (e.long_description && *e.long_description != item.long_description) {
              item.long_description = *e.long_description;
              invalidates = true;
            }
            if (e.short_description) item.short_description = *e.short_description;
            if (e.user_notes) item.user_notes = *e.user_notes;
            if (invalidates) {
              item.resolved = false;
              item.args.reset();
            }
          } else {
            auto item = e.item;
            if (item.id.empty()) {
              item.id = derived_id(sha256_hex(codec::dump(codec::to_json(out)) + codec::dump(codec::to_json(item))), inserted++);
            }
            if (out.find(item.id)) throw InvariantError("duplicate breakdown item id '" + item.id + "'");
            const auto at = std::min(e.index.value_or(out.items.size()), out.items.size());
            out.items.insert(out.items.begin() + static_cast<std::ptrdiff_t>(at), item);
          }
        },
        edit);
  }
  return out;
}

std::optional<double> duration_hint(const std::string& text) {
  static const std::regex re(R"(duration\s*[:=]?\s*(\d+(?:\.\d+)?)\s*(?:s|sec|secs|seconds)\b)", std::regex::icase);
  std::smatch m;
  if (!std::regex_search(text, m, re)) return std::nullopt;
  const double d = std::stod(m[1].str());
  if (!(d > 0)) return std::nullopt;
  return d;
}

// --- Agent ---------------------------------------------------------------------

BreakdownAgent::BreakdownAgent(llm::Gateway& gateway) : gateway_(gateway) {}

const llm::ToolSchema& BreakdownAgent::tool() {
  static const llm::ToolSchema schema = [] {
    json kinds = json::array();
    for (auto k : kAllBlockKinds) kinds.push_back(to_string(k));
    json item{{"type", "object"},
              {"properties",
               {{"id", {{"type", "string"}, {"default", ""}, {"description", "Existing item id to keep; omit for new items."}}},
                {"kind", {{"type", "string"}, {"enum", kinds}}},
                {"short_description", {{"type", "string"}, {"description", "A few words naming the step."}}},
                {"long_description",
                 {{"type", "string"}, {"description", "Places, intent and any initial parameters for this step."}}}}},
              {"required", {"kind", "short_description", "long_description"}}};
    return llm::ToolSchema{
        "emit_breakdown", "Emit the ordered list of animation blocks for the script.",
        json{{"type", "object"},
             {"properties", {{"items", {{"type", "array"}, {"items", item}, {"minItems", 1}}}}},
             {"required", {"items"}}}};
  }();
  return schema;
}

llm::ChatRequest BreakdownAgent::initial_request(const std::string& script, const BreakdownOptions& options) const {
  const auto& system = prompts::get("breakdown_system");
  llm::ChatRequest req;
  req.agent = "breakdown";
  req.model_id = gateway_.model_for("breakdown");
  req.prompt = info(system);
  req.tools = {tool()};
  req.messages = {{ChatRole::system, system.text},
                  {ChatRole::user, "Script:\n" + script + "\n\nThe finished animation should last about " +
                                       codec::dump(json(codec::seconds(options.target_duration))) + " seconds."}};
  return req;
}

SceneBreakdown BreakdownAgent::breakdown(const std::string& script, const BreakdownOptions& options) {
  if (blank(script)) throw PreconditionError("script is empty");
  options.validate();
  const auto script_hash = sha256_hex(script);
  return converse<SceneBreakdown>(gateway_, initial_request(script, options), kMaxRepairs, [&](const json& args) {
    SceneBreakdown out;
    out.source_script_hash = script_hash;
    const auto proposed = read_items(args);
    for (std::size_t i = 0; i < proposed.size(); ++i) {
      SceneBreakdownItem item;
      item.id = derived_id("breakdown:" + script_hash, i);
      item.kind = proposed[i].kind;
      item.short_description = proposed[i].short_description;
      item.long_description = proposed[i].long_description;
      out.items.push_back(std::move(item));
    }
    return out;
  });
}

SceneBreakdown BreakdownAgent::regenerate(const SceneBreakdown& breakdown, const std::vector<ItemEdit>& edits,
                                          const std::string& script) {
  if (blank(script)) throw PreconditionError("script is empty");
  const SceneBreakdown edited = apply_item_edits(breakdown, edits);
  const auto script_hash = sha256_hex(script);
  const auto items_text = items_for_prompt(edited).dump(1);
  const auto& system = prompts::get("breakdown_system");
  const auto& follow = prompts::get("breakdown_regenerate");
  llm::ChatRequest req;
  req.agent = "breakdown";
  req.model_id = gateway_.model_for("breakdown");
  req.prompt = info(system);
  req.tools = {tool()};
  req.messages = {{ChatRole::system, system.text},
                  {ChatRole::user, prompts::fill(follow.text, {{"script", script}, {"items", items_text}})}};
  const std::string seed = "regenerate:" + sha256_hex(script_hash + items_text);

  // Pinned items (non-empty user_notes) must survive with their kind; one
  // extra re-prompt is allowed for that rule on top of the schema repairs.
  int note_repairs = 0;
  while (true) {
    try {
      return converse<SceneBreakdown>(gateway_, req, kMaxRepairs, [&](const json& args) {
        const auto proposed = read_items(args);
        std::set<std::string> seen;
        for (const auto& p : proposed) seen.insert(p.id);
        for (const auto& pinned : edited.items) {
          if (pinned.user_notes.empty()) continue;
          auto it = std::find_if(proposed.begin(), proposed.end(), [&](const auto& p) { return p.id == pinned.id; });
          if (it == proposed.end() || it->kind != pinned.kind) {
            throw ContractViolation("item " + pinned.id + " has user notes and must keep its id and kind (" +
                                        to_string(pinned.kind) + ")",
                                    {{"id", pinned.id}, {"raw", args.dump()}});
          }
        }
        SceneBreakdown out;
        out.source_script_hash = script_hash;
        std::set<std::string> used;
        for (std::size_t i = 0; i < proposed.size(); ++i) {
          const auto& p = proposed[i];
          const SceneBreakdownItem* prior = p.id.empty() || used.count(p.id) ? nullptr : edited.find(p.id);
          SceneBreakdownItem item;
          item.id = prior ? p.id : derived_id(seed, i);
          item.kind = p.kind;
          item.short_description = p.short_description;
          item.long_description = p.long_description;
          if (prior) {
            item.user_notes = prior->user_notes;
            item.style = prior->style;
            if (prior->kind == p.kind && prior->long_description == p.long_description) {
              item.resolved = prior->resolved;
              item.args = prior->args;
            }
          }
          used.insert(item.id);
          out.items.push_back(std::move(item));
        }
        return out;
      });
    } catch (const ContractViolation& e) {
      if (note_repairs++ >= 1) {
        throw BreakdownFailedError(std::string("regenerated breakdown dropped a pinned item: ") + e.what(), e.detail());
      }
      req.messages.push_back({ChatRole::assistant, e.detail().value("raw", std::string{})});
      req.messages.push_back({ChatRole::user, std::string("That answer could not be used: ") + e.what() +
                                                  ". Call emit_breakdown again with the complete, corrected list."});
    }
  }
}

// --- Compile -------------------------------------------------------------------

Timeline compile(const SceneBreakdown& breakdown, const BreakdownOptions& options, const std::string* script) {
  options.validate();
  if (script && sha256_hex(*script) != breakdown.source_script_hash) {
    throw CompileBlockedError("breakdown was generated from a different script; regenerate it first",
                              {{"expected", breakdown.source_script_hash}, {"actual", sha256_hex(*script)}});
  }
  std::set<std::string> ids;
  for (const auto& item : breakdown.items) {
    if (!ids.insert(item.id).second) throw InvariantError("duplicate breakdown item id '" + item.id + "'");
    if (!item.resolved || !item.args) {
      throw CompileBlockedError("item " + item.id + " (" + item.short_description + ") is not resolved",
                                {{"id", item.id}});
    }
    if (args_kind(*item.args) != item.kind) {
      throw CompileBlockedError("item " + item.id + " carries arguments for another block kind", {{"id", item.id}});
    }
  }

  // A slot is one stretch of the sequence: a content item with its optional
  // lead camera, or a camera with nothing to introduce.
  struct Slot {
    const SceneBreakdownItem* content = nullptr;
    const SceneBreakdownItem* camera = nullptr;
    double weight = 0.0;
  };
  auto weight_of = [&](const SceneBreakdownItem& item) {
    return duration_hint(item.long_description).value_or(options.default_block_seconds);
  };
  std::vector<Slot> slots;
  std::vector<const SceneBreakdownItem*> pending;
  for (const auto& item : breakdown.items) {
    if (is_camera(item.kind)) {
      pending.push_back(&item);
      continue;
    }
    for (std::size_t i = 0; i + 1 < pending.size(); ++i) slots.push_back({nullptr, pending[i], weight_of(*pending[i])});
    slots.push_back({&item, pending.empty() ? nullptr : pending.back(), weight_of(item)});
    pending.clear();
  }
  for (const auto* cam : pending) slots.push_back({nullptr, cam, weight_of(*cam)});

  Timeline timeline;
  if (slots.empty()) return timeline;

  const double lead = options.camera_lead_seconds;
  const double offset = slots.front().content && slots.front().camera ? lead : 0.0;
  double total = 0.0;
  for (const auto& s : slots) total += s.weight;
  const double scale = (options.target_duration - offset) / total;

  auto make_block = [](const SceneBreakdownItem& item, double start, double end) {
    return AnimationBlock{item.id, item.kind, codec::seconds(start), codec::seconds(end), *item.args, item.style};
  };

  double cursor = offset;
  double previous_length = std::numeric_limits<double>::infinity();
  std::vector<AnimationBlock> cameras;
  std::vector<AnimationBlock> contents;
  for (const auto& s : slots) {
    const double length = s.weight * scale;
    const double start = cursor;
    const double end = cursor + length;
    if (s.content) {
      contents.push_back(make_block(*s.content, start, end));
      if (s.camera) {
        const double this_lead = std::min(lead, previous_length * 0.5);
        cameras.push_back(make_block(*s.camera, std::max(0.0, start - this_lead), end));
      }
    } else {
      cameras.push_back(make_block(*s.camera, start, end));
    }
    cursor = end;
    previous_length = length;
  }
  // Cameras never overlap: an earlier one yields to the next.
  for (std::size_t i = 0; i + 1 < cameras.size(); ++i) {
    cameras[i].end_time = std::min(cameras[i].end_time, cameras[i + 1].start_time);
  }

  // Emit in breakdown item order.
  std::map<std::string, AnimationBlock> by_id;
  for (auto& b : cameras) by_id.emplace(b.id, std::move(b));
  for (auto& b : contents) by_id.emplace(b.id, std::move(b));
  for (const auto& item : breakdown.items) timeline.blocks.push_back(by_id.at(item.id));

  const auto report = validate_timeline(timeline);
  if (report.has_errors()) {
    throw InvariantError("compiled timeline failed validation", codec::to_json(report));
  }
  return timeline;
}

}  // namespace geoanim
