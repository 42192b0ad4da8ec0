#pragma once

// File-per-project persistence with revisions and atomic replacement.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "geoanim/model.hpp"

namespace geoanim {

struct StoredProject {
  Project project;
  std::uint64_t revision = 0;
};

/// Called after the temp file is complete and synced, before the rename.
/// Throwing from it simulates a crash at that point.
using StoreFaultHook = std::function<void(const std::filesystem::path& temp_file)>;

class ProjectStore {
 public:
  /// Creates root/projects and root/assets; sweeps temp files left by
  /// interrupted writes.
  explicit ProjectStore(std::filesystem::path root);

  /// Revision 1. ConflictError if the id is taken.
  StoredProject create(const Project& project);
  /// NotFoundError for unknown ids, ParseError for unreadable files.
  StoredProject load(const std::string& id) const;
  bool exists(const std::string& id) const;
  std::vector<std::string> list() const;

  /// Load, check `expected_revision` (ConflictError when stale), mutate, write
  /// revision + 1. Nothing is written when `mutate` throws. Writes to one
  /// project are serialized.
  StoredProject update(const std::string& id, std::uint64_t expected_revision,
                       const std::function<void(Project&)>& mutate);
  void remove(const std::string& id, std::uint64_t expected_revision);

  /// Content-addressed blobs; returns the asset id.
  std::string put_asset(const std::string& bytes);
  std::string get_asset(const std::string& id) const;

  void set_fault_hook(StoreFaultHook hook);
  const std::filesystem::path& root() const { return root_; }
  std::filesystem::path project_path(const std::string& id) const;

 private:
  std::shared_ptr<std::mutex> lock_for(const std::string& id);
  void write_atomic(const std::filesystem::path& target, const std::string& bytes);

  std::filesystem::path root_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  StoreFaultHook fault_hook_;
};

/// Store file body for a project at a revision (canonical JSON).
std::string store_document(const Project& project, std::uint64_t revision);

/// Throws ValidationError unless the id is 1-64 of [A-Za-z0-9_-].
void validate_store_id(const std::string& id);

}  // namespace geoanim
