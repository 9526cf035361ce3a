#pragma once

// Persistent, append-ordered store of prior edits.
//
// On-disk layout under the cache root:
//   manifest.jsonl         header line + one JSON object per entry
//   keys/<id>.traj         camera trajectory key (novel-view caches)
//   keys/<id>.emb          descriptor key as a 1-frame embedding file (edit caches)
//   payloads/<id>.bin      opaque latent payload, never decoded
//
// Inserts write key and payload files first, then replace the manifest with
// write-to-temp + fsync + rename. A reader therefore sees either the old or
// the new manifest, and files not named by the manifest are invisible.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "memctx/camera_geometry.hpp"
#include "memctx/feature_retrieval.hpp"
#include "memctx/latent_shape.hpp"

namespace memctx {

enum class Task { novel_view, text_edit };

std::string_view to_string(Task task) noexcept;
std::optional<Task> parse_task(std::string_view text) noexcept;

using CacheKey = std::variant<CameraTrajectory, SegmentDescriptor>;

struct CacheEntry {
  std::uint64_t entry_id = 0;
  Task task = Task::novel_view;
  LatentShape latent_shape;
  CacheKey key;
  std::optional<std::string> payload_ref;  // relative to the cache root
  std::uint64_t created_seq = 0;

  const CameraTrajectory* trajectory() const noexcept { return std::get_if<CameraTrajectory>(&key); }
  const SegmentDescriptor* segment() const noexcept { return std::get_if<SegmentDescriptor>(&key); }

  friend bool operator==(const CacheEntry&, const CacheEntry&) = default;
};

// Immutable view of the cache contents at one point in time. Cheap to copy
// and safe to share across threads.
class CacheSnapshot {
 public:
  CacheSnapshot() : entries_(std::make_shared<const std::vector<CacheEntry>>()) {}
  CacheSnapshot(std::shared_ptr<const std::vector<CacheEntry>> entries, std::optional<Task> task)
      : entries_(std::move(entries)), task_(task) {}

  const std::vector<CacheEntry>& entries() const noexcept { return *entries_; }
  std::size_t size() const noexcept { return entries_->size(); }
  bool empty() const noexcept { return entries_->empty(); }
  std::optional<Task> task() const noexcept { return task_; }
  auto begin() const noexcept { return entries_->begin(); }
  auto end() const noexcept { return entries_->end(); }

 private:
  std::shared_ptr<const std::vector<CacheEntry>> entries_;
  std::optional<Task> task_;
};

inline constexpr std::uint32_t kManifestVersion = 1;

// Points at which an insert can be interrupted by the test hook.
enum class WriteStage { key_written, payload_written, manifest_temp_written };

class Cache {
 public:
  using FailureHook = std::function<void(WriteStage)>;

  // Loads `root`; throws Error(load) when the manifest is missing or corrupt.
  static Cache load(const std::filesystem::path& root);
  // Loads `root` if it has a manifest, otherwise starts an empty cache there.
  static Cache open(const std::filesystem::path& root);

  Cache(Cache&& other) noexcept;
  Cache& operator=(Cache&& other) noexcept;

  // Appends `entry`, assigning entry_id = max + 1 and the next created_seq.
  // `payload_source`, when given, is copied to payloads/<id>.bin and
  // overrides entry.payload_ref. The manifest is replaced atomically; on any
  // failure the in-memory and on-disk state are unchanged.
  CacheEntry insert(CacheEntry entry, const std::optional<std::filesystem::path>& payload_source = std::nullopt);

  CacheSnapshot snapshot() const;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::uint32_t manifest_version() const noexcept { return manifest_version_; }
  std::optional<Task> task() const;
  std::size_t size() const;

  // Removes files under keys/ and payloads/ (and stale temporaries) that the
  // manifest does not reference. Returns the removed paths, sorted.
  std::vector<std::filesystem::path> gc();

  // Called at each WriteStage of insert; throwing from it aborts the insert.
  void set_failure_hook(FailureHook hook) { hook_ = std::move(hook); }

 private:
  explicit Cache(std::filesystem::path root);

  void write_manifest(const std::vector<CacheEntry>& entries, std::optional<Task> task);

  std::filesystem::path root_;
  std::uint32_t manifest_version_ = kManifestVersion;
  FailureHook hook_;
  mutable std::mutex mutex_;
  std::shared_ptr<const std::vector<CacheEntry>> entries_;
  std::optional<Task> task_;
};

// Manifest text for the given state; exposed for format tests.
std::string render_manifest(const std::vector<CacheEntry>& entries, std::optional<Task> task);

}  // namespace memctx
