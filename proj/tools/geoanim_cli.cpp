// geoanim: headless driver for the authoring pipeline.
//
// Exit codes: 0 success, 1 pipeline/domain failure, 2 usage error.
// Machine output goes to files or stdout; diagnostics go to stderr.

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"
#include "geoanim/pipeline.hpp"
#include "geoanim/sequencer.hpp"
#include "geoanim/service.hpp"
#include "geoanim/timeline.hpp"

namespace {

using namespace geoanim;
using codec::json;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot read " + path, {{"path", path}});
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  const std::string temp = path + ".partial";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << text;
    if (!out.flush()) throw IoError("cannot write " + path);
  }
  std::filesystem::rename(temp, path);
}

Project read_project(const std::string& path) { return codec::parse_project(read_text(path)); }

void write_project(const std::string& path, const Project& p) { write_text(path, codec::serialize(p) + "\n"); }

void report_error(const Error& e) {
  std::cerr << "error: " << e.what() << "\n" << codec::dump(service::api_error(e).to_json()) << "\n";
}

struct Common {
  std::string mode;
  std::string fixtures;
  std::string data_dir = env_or("DATA_DIR", "data");

  Runtime runtime(std::optional<llm::Mode> forced = std::nullopt) const {
    if (!fixtures.empty()) ::setenv("LLM_FIXTURES_DIR", fixtures.c_str(), 1);
    std::optional<llm::Mode> m = forced;
    if (!m && !mode.empty()) m = llm::parse_mode(mode);
    return make_runtime(m, data_dir);
  }
};

struct PlanFlags {
  double duration = 30.0;
  double block_seconds = 4.0;
  double lead = 0.5;

  BreakdownOptions options() const {
    BreakdownOptions o{duration, block_seconds, lead};
    o.validate();
    return o;
  }
  void add(CLI::App* cmd) {
    cmd->add_option("--duration", duration, "Target timeline length in seconds")->capture_default_str();
    cmd->add_option("--block-seconds", block_seconds, "Default seconds per block")->capture_default_str();
    cmd->add_option("--camera-lead", lead, "Seconds a camera move leads its content")->capture_default_str();
  }
};

std::string project_id_for(const Runtime& rt, const std::string& script, const std::string& requested) {
  if (!requested.empty()) return requested;
  return rt.mode == llm::Mode::replay ? derived_id("project:" + sha256_hex(script), 0) : new_ulid();
}

int report_failures(const std::map<std::string, std::string>& failures) {
  for (const auto& [id, err] : failures) std::cerr << "item " << id << ": " << err << "\n";
  return failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geoanim: plan, research, compile and render map animations from a script"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--mode", common.mode, "LLM and geocoder transport mode (overrides LLM_MODE)")
      ->check(CLI::IsMember({"live", "record", "replay"}));
  app.add_option("--fixtures", common.fixtures, "Fixture directory (overrides LLM_FIXTURES_DIR)");
  app.add_option("--data-dir", common.data_dir, "Data directory for caches and the service store");

  std::string script_path, project_path, out_path, id;
  bool force = false;
  int fps = 30;
  std::string bind;
  PlanFlags plan;

  auto* breakdown = app.add_subcommand("breakdown", "Plan a script into a scene breakdown; writes a project file");
  breakdown->add_option("script", script_path, "Script text file")->required();
  breakdown->add_option("-o,--output", out_path, "Project file to write (stdout when omitted)");
  breakdown->add_option("--id", id, "Project id");
  plan.add(breakdown);

  auto* research = app.add_subcommand("research", "Resolve geometry for every breakdown item");
  research->add_option("project", project_path, "Project file")->required()->check(CLI::ExistingFile);
  research->add_option("-o,--output", out_path, "Output file (defaults to updating the project in place)");
  research->add_flag("--force", force, "Research items that are already resolved");

  auto* compile_cmd = app.add_subcommand("compile", "Lay out resolved items on a timeline");
  compile_cmd->add_option("project", project_path, "Project file")->required()->check(CLI::ExistingFile);
  compile_cmd->add_option("-o,--output", out_path, "Output file (defaults to updating the project in place)");
  plan.add(compile_cmd);

  auto* frames = app.add_subcommand("frames", "Export the frame stream (one JSON frame per line)");
  frames->add_option("project", project_path, "Project file")->required()->check(CLI::ExistingFile);
  frames->add_option("--fps", fps, "Frames per second")->capture_default_str()->check(CLI::PositiveNumber);
  frames->add_option("-o,--output", out_path, "Stream file (stdout when omitted)");

  auto* validate = app.add_subcommand("validate", "Print the timeline validation report; exit 1 on errors");
  validate->add_option("project", project_path, "Project file")->required()->check(CLI::ExistingFile);

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--bind", bind, "host:port (overrides BIND_ADDR)");

  auto* record = app.add_subcommand("record-fixtures", "Run the pipeline live and record LLM and geocoder fixtures");
  record->add_option("script", script_path, "Script text file")->required()->check(CLI::ExistingFile);
  record->add_option("-o,--output", out_path, "Project file to write");
  record->add_option("--id", id, "Project id");
  plan.add(record);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*breakdown) {
      auto rt = common.runtime();
      const auto script = read_text(script_path);
      auto project = new_project(script, project_id_for(rt, script, id), rt.clock);
      run_breakdown(project, rt, plan.options());
      write_project(out_path, project);
      return 0;
    }
    if (*research) {
      auto rt = common.runtime();
      auto project = read_project(project_path);
      const auto failures = run_research(project, rt, force);
      write_project(out_path.empty() ? project_path : out_path, project);
      return report_failures(failures);
    }
    if (*compile_cmd) {
      auto project = read_project(project_path);
      run_compile(project, plan.options());
      write_project(out_path.empty() ? project_path : out_path, project);
      const auto report = validate_timeline(project.timeline);
      if (report.has_errors()) std::cerr << codec::dump(codec::to_json(report)) << "\n";
      return report.has_errors() ? 1 : 0;
    }
    if (*frames) {
      const auto project = read_project(project_path);
      if (out_path.empty() || out_path == "-") {
        sequencer::export_frames(project.timeline, fps, std::cout);
      } else {
        write_text(out_path, sequencer::export_frames(project.timeline, fps));
      }
      return 0;
    }
    if (*validate) {
      const auto project = read_project(project_path);
      auto report = validate_timeline(project.timeline);
      json out = codec::to_json(report);
      out["dangling_sessions"] = dangling_sessions(project);
      std::cout << codec::dump(out) << "\n";
      return report.has_errors() ? 1 : 0;
    }
    if (*serve) {
      auto config = service::ServerConfig::from_env();
      if (!bind.empty()) std::tie(config.host, config.port) = service::parse_bind_addr(bind);
      if (common.data_dir != env_or("DATA_DIR", "data")) config.data_dir = common.data_dir;
      common.data_dir = config.data_dir.string();
      auto store = std::make_shared<ProjectStore>(config.data_dir);
      service::Service svc(store, common.runtime());
      service::HttpServer server(svc);
      const int port = server.bind(config.host, config.port);
      std::cerr << "geoanim serving on " << config.host << ":" << port << " (mode "
                << llm::to_string(svc.runtime().mode) << ", data " << config.data_dir.string() << ")\n";
      server.listen();
      return 0;
    }
    if (*record) {
      auto rt = common.runtime(llm::Mode::record);
      const auto script = read_text(script_path);
      auto project = new_project(script, project_id_for(rt, script, id), rt.clock);
      run_breakdown(project, rt, plan.options());
      const int failed = report_failures(run_research(project, rt));
      if (!failed) run_compile(project, plan.options());
      if (!out_path.empty()) write_project(out_path, project);
      return failed;
    }
  } catch (const Error& e) {
    report_error(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
