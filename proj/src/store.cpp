#include "geoanim/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "geoanim/codec.hpp"
#include "geoanim/errors.hpp"
#include "geoanim/ids.hpp"

namespace geoanim {
namespace fs = std::filesystem;
namespace {

constexpr const char* kStoreFormat = "geoanim.store/1";
constexpr const char* kTempMarker = ".tmp.";

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("no such file " + path.filename().string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

[[noreturn]] void io_fail(const std::string& what, const fs::path& path) {
  throw IoError(what + " " + path.string() + ": " + std::strerror(errno));
}

void sync_dir(const fs::path& dir) {
  const int fd = ::open(dir.c_str(), O_RDONLY | O_DIRECTORY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

}  // namespace

void validate_store_id(const std::string& id) {
  const bool ok = !id.empty() && id.size() <= 64 && std::all_of(id.begin(), id.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
  if (!ok) throw ValidationError("invalid id '" + id + "'", {{"id", id}});
}

std::string store_document(const Project& project, std::uint64_t revision) {
  return codec::dump({{"format", kStoreFormat}, {"revision", revision}, {"project", codec::to_json(project)}});
}

ProjectStore::ProjectStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "projects");
  fs::create_directories(root_ / "assets");
  for (const auto& sub : {"projects", "assets"}) {
    for (const auto& entry : fs::directory_iterator(root_ / sub)) {
      if (entry.path().filename().string().find(kTempMarker) != std::string::npos) fs::remove(entry.path());
    }
  }
}

fs::path ProjectStore::project_path(const std::string& id) const {
  validate_store_id(id);
  return root_ / "projects" / (id + ".json");
}

std::shared_ptr<std::mutex> ProjectStore::lock_for(const std::string& id) {
  std::lock_guard guard(locks_mutex_);
  auto& slot = locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void ProjectStore::set_fault_hook(StoreFaultHook hook) {
  std::lock_guard guard(locks_mutex_);
  fault_hook_ = std::move(hook);
}

void ProjectStore::write_atomic(const fs::path& target, const std::string& bytes) {
  static thread_local std::mt19937_64 rng{std::random_device{}()};
  const fs::path temp = target.string() + kTempMarker + std::to_string(rng());
  const int fd = ::open(temp.c_str(), O_WRONLY | O_CREAT | O_EXCL | O_CLOEXEC, 0644);
  if (fd < 0) io_fail("cannot create", temp);
  std::size_t done = 0;
  while (done < bytes.size()) {
    const auto n = ::write(fd, bytes.data() + done, bytes.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      fs::remove(temp);
      io_fail("cannot write", temp);
    }
    done += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0 || ::close(fd) != 0) {
    fs::remove(temp);
    io_fail("cannot sync", temp);
  }
  StoreFaultHook hook;
  {
    std::lock_guard guard(locks_mutex_);
    hook = fault_hook_;
  }
  if (hook) {
    try {
      hook(temp);
    } catch (...) {
      std::error_code ec;
      fs::remove(temp, ec);
      throw IoError("write of " + target.filename().string() + " interrupted");
    }
  }
  if (std::rename(temp.c_str(), target.c_str()) != 0) {
    std::error_code ec;
    fs::remove(temp, ec);
    io_fail("cannot replace", target);
  }
  sync_dir(target.parent_path());
}

StoredProject ProjectStore::create(const Project& project) {
  const auto path = project_path(project.id);
  auto lock = lock_for(project.id);
  std::lock_guard guard(*lock);
  if (fs::exists(path)) throw ConflictError("project " + project.id + " already exists", {{"id", project.id}});
  write_atomic(path, store_document(project, 1));
  return {project, 1};
}

StoredProject ProjectStore::load(const std::string& id) const {
  const auto path = project_path(id);
  std::string text;
  try {
    text = read_file(path);
  } catch (const NotFoundError&) {
    throw NotFoundError("project " + id + " not found", {{"id", id}});
  }
  try {
    const auto doc = codec::json::parse(text);
    if (doc.value("format", "") != kStoreFormat) throw ParseError("unexpected store format");
    return {codec::project_from_json(doc.at("project")), doc.at("revision").get<std::uint64_t>()};
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw ParseError("project file " + path.filename().string() + " is unreadable: " + e.what());
  }
}

bool ProjectStore::exists(const std::string& id) const { return fs::exists(project_path(id)); }

std::vector<std::string> ProjectStore::list() const {
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(root_ / "projects")) {
    const auto name = entry.path().filename().string();
    if (entry.path().extension() == ".json" && name.find(kTempMarker) == std::string::npos) ids.push_back(entry.path().stem().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

StoredProject ProjectStore::update(const std::string& id, std::uint64_t expected_revision,
                                   const std::function<void(Project&)>& mutate) {
  const auto path = project_path(id);
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  auto current = load(id);
  if (current.revision != expected_revision) {
    throw ConflictError("project " + id + " is at revision " + std::to_string(current.revision) + ", not " +
                            std::to_string(expected_revision),
                        {{"current_revision", current.revision}, {"expected_revision", expected_revision}});
  }
  Project next = current.project;
  mutate(next);
  if (next.id != id) throw ContractViolation("a project update may not change its id");
  write_atomic(path, store_document(next, current.revision + 1));
  return {std::move(next), current.revision + 1};
}

void ProjectStore::remove(const std::string& id, std::uint64_t expected_revision) {
  const auto path = project_path(id);
  auto lock = lock_for(id);
  std::lock_guard guard(*lock);
  const auto current = load(id);
  if (current.revision != expected_revision) {
    throw ConflictError("project " + id + " is at revision " + std::to_string(current.revision),
                        {{"current_revision", current.revision}, {"expected_revision", expected_revision}});
  }
  fs::remove(path);
  sync_dir(path.parent_path());
}

std::string ProjectStore::put_asset(const std::string& bytes) {
  if (bytes.empty()) throw ValidationError("asset is empty");
  const auto id = sha256_hex(bytes).substr(0, 32);
  const auto path = root_ / "assets" / id;
  auto lock = lock_for("asset:" + id);
  std::lock_guard guard(*lock);
  if (!fs::exists(path)) write_atomic(path, bytes);
  return id;
}

std::string ProjectStore::get_asset(const std::string& id) const {
  validate_store_id(id);
  try {
    return read_file(root_ / "assets" / id);
  } catch (const NotFoundError&) {
    throw NotFoundError("asset " + id + " not found", {{"id", id}});
  }
}

}  // namespace geoanim
