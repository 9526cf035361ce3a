#include "memctx/memory_cache.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <set>

#include "json.hpp"
#include "memctx/error.hpp"

namespace memctx {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

constexpr const char* kModule = "memory_cache";
constexpr const char* kManifestName = "manifest.jsonl";
constexpr const char* kManifestFormat = "memctx-cache";

std::string key_ref(const CacheEntry& e) {
  return "keys/" + std::to_string(e.entry_id) + (e.task == Task::novel_view ? ".traj" : ".emb");
}

std::string payload_name(std::uint64_t id) { return "payloads/" + std::to_string(id) + ".bin"; }

[[noreturn]] void io_error(const std::string& what, const fs::path& path) {
  throw Error(ErrorKind::io, kModule, what + " " + path.string() + ": " + std::strerror(errno));
}

void fsync_write(const fs::path& path, const std::string& data) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) io_error("cannot create", path);
  std::size_t written = 0;
  while (written < data.size()) {
    const ssize_t n = ::write(fd, data.data() + written, data.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      ::close(fd);
      io_error("write failed for", path);
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fsync(fd) != 0) {
    ::close(fd);
    io_error("fsync failed for", path);
  }
  if (::close(fd) != 0) io_error("close failed for", path);
}

void rename_into_place(const fs::path& from, const fs::path& to) {
  std::error_code ec;
  fs::rename(from, to, ec);
  if (ec) throw Error(ErrorKind::io, kModule, "rename " + from.string() + " -> " + to.string() + ": " + ec.message());
}

// Descriptor keys are stored as float32, so the in-memory key is rounded the
// same way to keep load(save(C)) == C.
SegmentDescriptor round_to_storage(SegmentDescriptor d) {
  for (double& v : d.vector) v = static_cast<double>(static_cast<float>(v));
  return d;
}

Json entry_json(const CacheEntry& e) {
  Json j;
  j["entry_id"] = e.entry_id;
  j["created_seq"] = e.created_seq;
  j["task"] = std::string(to_string(e.task));
  const auto& s = e.latent_shape;
  j["latent_shape"] = {s.frames, s.height, s.width, s.channels};
  j["key"] = key_ref(e);
  if (const auto* seg = e.segment()) j["descriptor_frames"] = seg->frame_count;
  j["payload"] = e.payload_ref ? Json(*e.payload_ref) : Json(nullptr);
  return j;
}

class ManifestParser {
 public:
  ManifestParser(const fs::path& root, std::string text) : root_(root), text_(std::move(text)) {}

  void parse(std::vector<CacheEntry>& entries, std::optional<Task>& task, std::uint32_t& version) {
    if (text_.empty()) fail(0, "empty manifest");
    std::size_t offset = 0;
    std::size_t declared = 0;
    bool header = true;
    while (offset < text_.size()) {
      const std::size_t nl = text_.find('\n', offset);
      if (nl == std::string::npos) fail(text_.size(), "unterminated line (truncated manifest)");
      const std::string_view line(text_.data() + offset, nl - offset);
      Json j;
      try {
        j = Json::parse(line);
      } catch (const Json::parse_error& e) {
        fail(offset + (e.byte > 0 ? e.byte - 1 : 0), std::string("invalid JSON: ") + e.what());
      }
      if (!j.is_object()) fail(offset, "expected a JSON object");
      if (header) {
        parse_header(j, offset, task, version, declared);
        header = false;
      } else {
        entries.push_back(parse_entry(j, offset, task));
      }
      offset = nl + 1;
    }
    if (entries.size() != declared) {
      fail(text_.size(), "manifest declares " + std::to_string(declared) + " entries but holds " +
                             std::to_string(entries.size()) + " (truncated manifest)");
    }
  }

 private:
  [[noreturn]] void fail(std::size_t offset, const std::string& why) const {
    throw Error(ErrorKind::load, kModule,
                (root_ / kManifestName).string() + ": byte offset " + std::to_string(offset) + ": " + why);
  }

  template <class T>
  T field(const Json& j, const char* name, std::size_t offset) const {
    const auto it = j.find(name);
    if (it == j.end()) fail(offset, std::string("missing field '") + name + "'");
    try {
      return it->template get<T>();
    } catch (const Json::exception&) {
      fail(offset, std::string("field '") + name + "' has the wrong type");
    }
  }

  std::uint64_t unsigned_field(const Json& j, const char* name, std::size_t offset) const {
    const auto it = j.find(name);
    if (it == j.end() || !it->is_number_unsigned()) fail(offset, std::string("field '") + name + "' must be unsigned");
    return it->get<std::uint64_t>();
  }

  void parse_header(const Json& j, std::size_t offset, std::optional<Task>& task, std::uint32_t& version,
                    std::size_t& declared) const {
    if (field<std::string>(j, "format", offset) != kManifestFormat) fail(offset, "not a memctx cache manifest");
    const auto v = unsigned_field(j, "manifest_version", offset);
    if (v < 1 || v > UINT32_MAX) fail(offset, "bad manifest_version");
    version = static_cast<std::uint32_t>(v);
    declared = unsigned_field(j, "entry_count", offset);
    const auto t = j.find("task");
    if (t == j.end()) fail(offset, "missing field 'task'");
    if (!t->is_null()) {
      if (!t->is_string()) fail(offset, "field 'task' has the wrong type");
      task = parse_task(t->get<std::string>());
      if (!task) fail(offset, "unknown task '" + t->get<std::string>() + "'");
    }
  }

  CacheEntry parse_entry(const Json& j, std::size_t offset, const std::optional<Task>& task) const {
    CacheEntry e;
    e.entry_id = unsigned_field(j, "entry_id", offset);
    e.created_seq = unsigned_field(j, "created_seq", offset);
    const auto parsed_task = parse_task(field<std::string>(j, "task", offset));
    if (!parsed_task || parsed_task != task) fail(offset, "entry task does not match the cache task");
    e.task = *parsed_task;
    const auto shape = field<std::vector<std::uint32_t>>(j, "latent_shape", offset);
    if (shape.size() != 4) fail(offset, "latent_shape must have 4 extents");
    e.latent_shape = {shape[0], shape[1], shape[2], shape[3]};
    if (!e.latent_shape.positive()) fail(offset, "latent_shape extents must be positive");
    const auto key = field<std::string>(j, "key", offset);
    if (key != key_ref(e)) fail(offset, "unexpected key path '" + key + "'");
    if (const auto p = j.find("payload"); p != j.end() && !p->is_null()) {
      if (!p->is_string()) fail(offset, "field 'payload' has the wrong type");
      e.payload_ref = p->get<std::string>();
    }
    const fs::path key_path = root_ / key;
    try {
      if (e.task == Task::novel_view) {
        e.key = read_trajectory(key_path);
      } else {
        const auto frames = read_embeddings(key_path);
        if (frames.frame_count != 1) fail(offset, "descriptor key " + key_path.string() + " must hold one row");
        SegmentDescriptor d{{frames.values.begin(), frames.values.end()}, 0};
        const auto n = unsigned_field(j, "descriptor_frames", offset);
        if (n == 0 || n > UINT32_MAX) fail(offset, "bad descriptor_frames");
        d.frame_count = static_cast<std::uint32_t>(n);
        e.key = std::move(d);
      }
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::load) throw;
      fail(offset, "cannot read key " + key_path.string() + ": " + err.what());
    }
    return e;
  }

  fs::path root_;
  std::string text_;
};

void validate_order(const std::vector<CacheEntry>& entries, const fs::path& root) {
  for (std::size_t i = 1; i < entries.size(); ++i) {
    if (entries[i].created_seq <= entries[i - 1].created_seq || entries[i].entry_id <= entries[i - 1].entry_id) {
      throw Error(ErrorKind::load, kModule,
                  (root / kManifestName).string() + ": entries are not in increasing created_seq/entry_id order");
    }
  }
}

}  // namespace

std::string_view to_string(Task task) noexcept {
  return task == Task::novel_view ? "novel_view" : "text_edit";
}

std::optional<Task> parse_task(std::string_view text) noexcept {
  if (text == "novel_view" || text == "nvs") return Task::novel_view;
  if (text == "text_edit" || text == "edit") return Task::text_edit;
  return std::nullopt;
}

std::string render_manifest(const std::vector<CacheEntry>& entries, std::optional<Task> task) {
  Json header;
  header["format"] = kManifestFormat;
  header["manifest_version"] = kManifestVersion;
  header["task"] = task ? Json(std::string(to_string(*task))) : Json(nullptr);
  header["entry_count"] = entries.size();
  std::string out = header.dump() + "\n";
  for (const auto& e : entries) out += entry_json(e).dump() + "\n";
  return out;
}

Cache::Cache(fs::path root) : root_(std::move(root)), entries_(std::make_shared<const std::vector<CacheEntry>>()) {}

Cache::Cache(Cache&& other) noexcept
    : root_(std::move(other.root_)),
      manifest_version_(other.manifest_version_),
      hook_(std::move(other.hook_)),
      entries_(std::move(other.entries_)),
      task_(other.task_) {}

Cache& Cache::operator=(Cache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    root_ = std::move(other.root_);
    manifest_version_ = other.manifest_version_;
    hook_ = std::move(other.hook_);
    entries_ = std::move(other.entries_);
    task_ = other.task_;
  }
  return *this;
}

Cache Cache::load(const fs::path& root) {
  const fs::path manifest = root / kManifestName;
  std::ifstream in(manifest, std::ios::binary);
  if (!in) throw Error(ErrorKind::load, kModule, "missing manifest " + manifest.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<CacheEntry> entries;
  std::optional<Task> task;
  std::uint32_t version = 0;
  ManifestParser(root, std::move(text)).parse(entries, task, version);
  validate_order(entries, root);

  Cache cache(root);
  cache.manifest_version_ = version;
  cache.task_ = task;
  cache.entries_ = std::make_shared<const std::vector<CacheEntry>>(std::move(entries));
  return cache;
}

Cache Cache::open(const fs::path& root) {
  if (fs::exists(root / kManifestName)) return load(root);
  return Cache(root);
}

std::optional<Task> Cache::task() const {
  std::lock_guard lock(mutex_);
  return task_;
}

std::size_t Cache::size() const {
  std::lock_guard lock(mutex_);
  return entries_->size();
}

CacheSnapshot Cache::snapshot() const {
  std::lock_guard lock(mutex_);
  return CacheSnapshot(entries_, task_);
}

CacheEntry Cache::insert(CacheEntry entry, const std::optional<fs::path>& payload_source) {
  std::lock_guard lock(mutex_);
  if (task_ && *task_ != entry.task) {
    throw Error(ErrorKind::task_mismatch, kModule,
                "cannot insert a " + std::string(to_string(entry.task)) + " entry into a " +
                    std::string(to_string(*task_)) + " cache at " + root_.string());
  }
  const bool key_matches = entry.task == Task::novel_view ? entry.trajectory() != nullptr : entry.segment() != nullptr;
  if (!key_matches) throw Error(ErrorKind::task_mismatch, kModule, "entry key does not match its task");
  if (!entry.latent_shape.positive()) {
    throw Error(ErrorKind::invalid_argument, kModule, "latent shape extents must be positive");
  }
  if (const auto* traj = entry.trajectory()) {
    if (traj->empty()) throw Error(ErrorKind::invalid_argument, kModule, "empty trajectory key");
    for (const auto& f : traj->frames) validate_pose(f.pose);
  } else {
    const auto& seg = *entry.segment();
    if (seg.vector.empty() || seg.frame_count == 0) {
      throw Error(ErrorKind::invalid_argument, kModule, "descriptor key needs dim > 0 and frame_count >= 1");
    }
    entry.key = round_to_storage(seg);
  }

  const auto& current = *entries_;
  entry.entry_id = current.empty() ? 1 : current.back().entry_id + 1;
  entry.created_seq = current.empty() ? 1 : current.back().created_seq + 1;

  std::error_code ec;
  fs::create_directories(root_ / "keys", ec);
  if (!ec) fs::create_directories(root_ / "payloads", ec);
  if (ec) throw Error(ErrorKind::io, kModule, "cannot create cache directories under " + root_.string() + ": " + ec.message());

  const fs::path key_path = root_ / key_ref(entry);
  const fs::path key_tmp = key_path.string() + ".tmp";
  if (const auto* traj = entry.trajectory()) {
    write_trajectory(key_tmp, *traj);
  } else {
    const auto& seg = *entry.segment();
    EmbeddingFrames row{1, static_cast<std::uint32_t>(seg.dim()), {seg.vector.begin(), seg.vector.end()}};
    write_embeddings(key_tmp, row);
  }
  rename_into_place(key_tmp, key_path);
  if (hook_) hook_(WriteStage::key_written);

  if (payload_source) {
    const fs::path dest = root_ / payload_name(entry.entry_id);
    const fs::path tmp = dest.string() + ".tmp";
    fs::copy_file(*payload_source, tmp, fs::copy_options::overwrite_existing, ec);
    if (ec) throw Error(ErrorKind::io, kModule, "cannot copy payload " + payload_source->string() + ": " + ec.message());
    rename_into_place(tmp, dest);
    entry.payload_ref = payload_name(entry.entry_id);
    if (hook_) hook_(WriteStage::payload_written);
  }

  auto next = std::make_shared<std::vector<CacheEntry>>(current);
  next->push_back(std::move(entry));
  write_manifest(*next, next->back().task);

  task_ = next->back().task;
  manifest_version_ = kManifestVersion;
  entries_ = std::move(next);
  return entries_->back();
}

void Cache::write_manifest(const std::vector<CacheEntry>& entries, std::optional<Task> task) {
  const fs::path manifest = root_ / kManifestName;
  const fs::path tmp = root_ / (std::string(kManifestName) + ".tmp");
  fsync_write(tmp, render_manifest(entries, task));
  if (hook_) hook_(WriteStage::manifest_temp_written);
  rename_into_place(tmp, manifest);
}

std::vector<fs::path> Cache::gc() {
  std::lock_guard lock(mutex_);
  std::set<std::string> live;
  for (const auto& e : *entries_) {
    live.insert(key_ref(e));
    if (e.payload_ref) live.insert(*e.payload_ref);
  }
  std::vector<fs::path> removed;
  for (const char* dir : {"keys", "payloads"}) {
    const fs::path d = root_ / dir;
    if (!fs::is_directory(d)) continue;
    for (const auto& item : fs::directory_iterator(d)) {
      const std::string rel = std::string(dir) + "/" + item.path().filename().string();
      if (!live.contains(rel)) removed.push_back(item.path());
    }
  }
  const fs::path stale = root_ / (std::string(kManifestName) + ".tmp");
  if (fs::exists(stale)) removed.push_back(stale);
  std::sort(removed.begin(), removed.end());
  for (const auto& p : removed) {
    std::error_code ec;
    fs::remove(p, ec);
    if (ec) throw Error(ErrorKind::io, kModule, "cannot remove " + p.string() + ": " + ec.message());
  }
  return removed;
}

}  // namespace memctx
