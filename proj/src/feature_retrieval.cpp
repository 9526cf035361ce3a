#include "memctx/feature_retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "binary_io.hpp"
#include "memctx/error.hpp"
#include "memctx/simd/kernels.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "feature_retrieval";

SegmentDescriptor finish_mean(std::vector<double> sum, std::size_t count) {
  const double inv = 1.0 / static_cast<double>(count);
  for (double& v : sum) {
    v *= inv;
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, kModule, "non-finite embedding value");
  }
  return {std::move(sum), static_cast<std::uint32_t>(count)};
}

}  // namespace

SegmentDescriptor descriptor(const std::vector<std::vector<double>>& frames) {
  if (frames.empty()) throw Error(ErrorKind::invalid_argument, kModule, "descriptor needs at least one frame");
  const std::size_t dim = frames.front().size();
  if (dim == 0) throw Error(ErrorKind::invalid_argument, kModule, "zero-dimensional embedding");
  std::vector<double> sum(dim, 0.0);
  for (const auto& f : frames) {
    if (f.size() != dim) throw Error(ErrorKind::invalid_argument, kModule, "ragged embedding dimensions");
    simd::accumulate(sum, f);
  }
  return finish_mean(std::move(sum), frames.size());
}

SegmentDescriptor descriptor(const EmbeddingFrames& frames) {
  if (frames.frame_count == 0 || frames.dim == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, "descriptor needs at least one frame of positive dim");
  }
  if (frames.values.size() != static_cast<std::size_t>(frames.frame_count) * frames.dim) {
    throw Error(ErrorKind::invalid_argument, kModule, "embedding buffer size does not match frame_count * dim");
  }
  std::vector<double> sum(frames.dim, 0.0);
  std::vector<double> row(frames.dim);
  for (std::size_t t = 0; t < frames.frame_count; ++t) {
    const auto f = frames.frame(t);
    std::copy(f.begin(), f.end(), row.begin());
    simd::accumulate(sum, row);
  }
  return finish_mean(std::move(sum), frames.frame_count);
}

double cosine_sim(const SegmentDescriptor& a, const SegmentDescriptor& b) {
  if (a.dim() != b.dim() || a.dim() == 0) {
    throw Error(ErrorKind::invalid_argument, kModule, "descriptor dimensions differ");
  }
  const double na = std::sqrt(simd::dot(a.vector, a.vector));
  const double nb = std::sqrt(simd::dot(b.vector, b.vector));
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw Error(ErrorKind::degenerate_descriptor, kModule, "zero-norm descriptor");
  }
  return std::clamp(simd::dot(a.vector, b.vector) / (na * nb), -1.0, 1.0);
}

SegmentRanking rank_segments(const SegmentDescriptor& target, std::span<const SegmentDescriptor> history,
                             std::size_t k, bool enforce_recent_first) {
  SegmentRanking out;
  out.similarities.reserve(history.size());
  for (const auto& h : history) out.similarities.push_back(cosine_sim(target, h));

  std::vector<std::size_t> order(history.size());
  std::iota(order.begin(), order.end(), std::size_t{1});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const double sx = out.similarities[x - 1];
    const double sy = out.similarities[y - 1];
    if (sx != sy) return sx > sy;
    return x > y;
  });
  if (enforce_recent_first && !order.empty()) {
    const auto last = std::find(order.begin(), order.end(), history.size());
    std::rotate(order.begin(), last, last + 1);
  }
  order.resize(std::min(k, order.size()));
  out.order = std::move(order);
  return out;
}

EmbeddingFrames read_embeddings(const std::filesystem::path& path) {
  auto reader = detail::LittleEndianReader::open(path.string(), kModule, ErrorKind::io);
  constexpr auto bad = ErrorKind::invalid_argument;
  if (reader.u32(bad) != kEmbeddingMagic) {
    throw Error(bad, kModule, path.string() + ": bad magic, not an embedding file");
  }
  if (const auto version = reader.u32(bad); version != kEmbeddingVersion) {
    throw Error(bad, kModule, path.string() + ": unsupported embedding version " + std::to_string(version));
  }
  EmbeddingFrames frames;
  frames.frame_count = reader.u32(bad);
  frames.dim = reader.u32(bad);
  const std::uint64_t n = static_cast<std::uint64_t>(frames.frame_count) * frames.dim;
  reader.need_items(n, 4, bad);
  frames.values.resize(n);
  for (auto& v : frames.values) v = reader.f32(bad);
  if (reader.remaining() != 0) {
    throw Error(bad, kModule, path.string() + ": trailing bytes after offset " + std::to_string(reader.offset()));
  }
  return frames;
}

void write_embeddings(const std::filesystem::path& path, const EmbeddingFrames& frames) {
  if (frames.values.size() != static_cast<std::size_t>(frames.frame_count) * frames.dim) {
    throw Error(ErrorKind::invalid_argument, kModule, "embedding buffer size does not match frame_count * dim");
  }
  std::vector<unsigned char> bytes;
  bytes.reserve(16 + frames.values.size() * 4);
  detail::put_u32(bytes, kEmbeddingMagic);
  detail::put_u32(bytes, kEmbeddingVersion);
  detail::put_u32(bytes, frames.frame_count);
  detail::put_u32(bytes, frames.dim);
  for (float v : frames.values) detail::put_f32(bytes, v);
  detail::write_bytes(path.string(), bytes, kModule);
}

}  // namespace memctx
