#include "memctx/responsiveness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>

#include "binary_io.hpp"
#include "memctx/error.hpp"
#include "memctx/simd/kernels.hpp"

namespace memctx {
namespace {

constexpr const char* kModule = "responsiveness";

[[noreturn]] void bad_slab(const std::string& why) { throw Error(ErrorKind::invalid_slab, kModule, why); }

MetricSummary summarize(const std::vector<double>& values, std::size_t skipped) {
  MetricSummary s;
  s.count = values.size();
  s.skipped = skipped;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace

std::uint32_t AttentionSlab::n_frames() const noexcept {
  if (frame_index.empty()) return 0;
  return *std::max_element(frame_index.begin(), frame_index.end()) + 1;
}

void validate_slab(const AttentionSlab& slab) {
  if (slab.n_tokens == 0 || slab.dim == 0) bad_slab("slab needs N >= 1 and D >= 1");
  const std::size_t nd = static_cast<std::size_t>(slab.n_tokens) * slab.dim;
  if (slab.queries.size() != nd || slab.keys.size() != nd) bad_slab("query/key buffers do not hold N x D values");
  if (slab.frame_index.size() != slab.n_tokens || slab.target_mask.size() != slab.n_tokens) {
    bad_slab("frame_index and target_mask must have N entries");
  }
  if (slab.n_frames() > slab.n_tokens) bad_slab("frame indices are not contiguous from 0");
  std::vector<std::uint32_t> per_frame(slab.n_frames(), 0);
  for (auto f : slab.frame_index) ++per_frame[f];
  for (std::size_t t = 0; t < per_frame.size(); ++t) {
    if (per_frame[t] == 0) bad_slab("frame " + std::to_string(t) + " has no tokens");
  }
  if (std::none_of(slab.target_mask.begin(), slab.target_mask.end(), [](std::uint8_t m) { return m != 0; })) {
    bad_slab("slab has no target query tokens");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(slab.queries.begin(), slab.queries.end(), finite) ||
      !std::all_of(slab.keys.begin(), slab.keys.end(), finite)) {
    bad_slab("non-finite query or key value");
  }
}

std::vector<double> aggregate_keys(const AttentionSlab& slab) {
  validate_slab(slab);
  const std::size_t d = slab.dim;
  const std::uint32_t frames = slab.n_frames();
  std::vector<double> sums(static_cast<std::size_t>(frames) * d, 0.0);
  std::vector<std::uint32_t> counts(frames, 0);
  const auto& k = simd::kernels();
  for (std::size_t i = 0; i < slab.n_tokens; ++i) {
    const auto f = slab.frame_index[i];
    k.accumulate(sums.data() + f * d, slab.keys.data() + i * d, d);
    ++counts[f];
  }
  for (std::size_t f = 0; f < frames; ++f) {
    const double inv = 1.0 / counts[f];
    for (std::size_t j = 0; j < d; ++j) sums[f * d + j] *= inv;
  }
  return sums;
}

ResponsivenessVector responsiveness(const AttentionSlab& slab) {
  const std::vector<double> mean_keys = aggregate_keys(slab);
  const std::size_t d = slab.dim;
  const std::size_t frames = slab.n_frames();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  const auto& k = simd::kernels();

  ResponsivenessVector out;
  out.scores.assign(frames, 0.0);
  std::vector<double> p(frames);
  for (std::size_t i = 0; i < slab.n_tokens; ++i) {
    if (!slab.target_mask[i]) continue;
    const double* q = slab.queries.data() + i * d;
    double peak = -INFINITY;
    for (std::size_t t = 0; t < frames; ++t) {
      p[t] = k.dot(q, mean_keys.data() + t * d, d) * scale;
      peak = std::max(peak, p[t]);
    }
    double z = 0.0;
    for (double& v : p) {
      v = std::exp(v - peak);
      z += v;
    }
    double total = 0.0;
    for (double& v : p) {
      v /= z;
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::logic_error("responsiveness: softmax over frames does not sum to 1");
    }
    for (std::size_t t = 0; t < frames; ++t) out.scores[t] = std::max(out.scores[t], p[t]);
  }
  return out;
}

std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) return std::nullopt;
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return std::nullopt;
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> average_ranks(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[order[m]] = rank;
    i = j + 1;
  }
  return ranks;
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return std::nullopt;
  return pearson(average_ranks(a), average_ranks(b));
}

std::vector<std::size_t> bottom_k(const std::vector<double>& scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });
  idx.resize(std::min(k, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

double bottom_k_overlap(const std::vector<double>& a, const std::vector<double>& b, double k_fraction) {
  if (a.size() != b.size() || a.empty() || !(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, kModule, "bottom-k overlap needs equal non-empty vectors and 0 < k <= 1");
  }
  const auto k = static_cast<std::size_t>(std::ceil(k_fraction * static_cast<double>(a.size())));
  const auto ba = bottom_k(a, k);
  const auto bb = bottom_k(b, k);
  std::vector<std::size_t> common;
  std::set_intersection(ba.begin(), ba.end(), bb.begin(), bb.end(), std::back_inserter(common));
  return static_cast<double>(common.size()) / static_cast<double>(k);
}

BlockStability block_stability(const std::vector<ResponsivenessVector>& per_block, std::size_t anchor,
                               double k_fraction, std::optional<std::size_t> first, std::optional<std::size_t> last) {
  if (per_block.size() < 2) throw Error(ErrorKind::invalid_argument, kModule, "block stability needs >= 2 blocks");
  if (anchor >= per_block.size()) throw Error(ErrorKind::invalid_argument, kModule, "anchor block out of range");
  if (!(k_fraction > 0.0 && k_fraction <= 1.0)) {
    throw Error(ErrorKind::invalid_argument, kModule, "k fraction must lie in (0, 1]");
  }
  const std::size_t frames = per_block[anchor].frame_count();
  for (const auto& b : per_block) {
    if (b.frame_count() != frames || frames == 0) {
      throw Error(ErrorKind::invalid_argument, kModule, "all blocks must score the same non-zero number of frames");
    }
  }
  const std::size_t begin = first.value_or(anchor + 1);
  const std::size_t end = std::min(last.value_or(per_block.size()), per_block.size());

  std::vector<double> rs, rhos, overlaps;
  std::size_t pearson_skipped = 0, spearman_skipped = 0;
  const auto& ref = per_block[anchor].scores;
  for (std::size_t b = begin; b < end; ++b) {
    if (b == anchor) continue;
    const auto& cur = per_block[b].scores;
    if (const auto r = pearson(ref, cur)) rs.push_back(*r); else ++pearson_skipped;
    if (const auto rho = spearman(ref, cur)) rhos.push_back(*rho); else ++spearman_skipped;
    overlaps.push_back(bottom_k_overlap(ref, cur, k_fraction));
  }
  if (overlaps.empty()) throw Error(ErrorKind::invalid_argument, kModule, "no blocks to compare with the anchor");
  return {anchor, summarize(rs, pearson_skipped), summarize(rhos, spearman_skipped), summarize(overlaps, 0)};
}

AttentionSlab read_slab(const std::filesystem::path& path) {
  auto r = detail::LittleEndianReader::open(path.string(), kModule, ErrorKind::io);
  constexpr auto bad = ErrorKind::invalid_slab;
  if (r.u32(bad) != kSlabMagic) bad_slab(path.string() + ": bad magic, not a slab file");
  AttentionSlab slab;
  slab.n_tokens = r.u32(bad);
  slab.dim = r.u32(bad);
  const std::uint32_t n_frames = r.u32(bad);
  const std::uint32_t n_target = r.u32(bad);
  const std::size_t n = slab.n_tokens;
  const std::uint64_t nd = static_cast<std::uint64_t>(n) * slab.dim;
  // Bound every allocation by the file size before touching the payload.
  r.need_items(n, 4, bad);
  r.need_items(n_target, 4, bad);
  r.need_items(nd, 8, bad);
  slab.frame_index.resize(n);
  for (auto& f : slab.frame_index) {
    f = r.u32(bad);
    if (f >= n_frames) bad_slab(path.string() + ": frame index " + std::to_string(f) + " >= n_frames");
  }
  slab.target_mask.assign(n, 0);
  for (std::uint32_t i = 0; i < n_target; ++i) {
    const auto t = r.u32(bad);
    if (t >= n) bad_slab(path.string() + ": target token " + std::to_string(t) + " out of range");
    if (slab.target_mask[t]) bad_slab(path.string() + ": target token " + std::to_string(t) + " listed twice");
    slab.target_mask[t] = 1;
  }
  slab.queries.resize(nd);
  for (auto& v : slab.queries) v = r.f32(bad);
  slab.keys.resize(nd);
  for (auto& v : slab.keys) v = r.f32(bad);
  if (r.remaining() != 0) bad_slab(path.string() + ": trailing bytes after offset " + std::to_string(r.offset()));
  if (slab.n_frames() != n_frames) bad_slab(path.string() + ": header n_frames does not match frame_index");
  validate_slab(slab);
  return slab;
}

void write_slab(const std::filesystem::path& path, const AttentionSlab& slab) {
  validate_slab(slab);
  std::vector<std::uint32_t> targets;
  for (std::uint32_t i = 0; i < slab.n_tokens; ++i) {
    if (slab.target_mask[i]) targets.push_back(i);
  }
  std::vector<unsigned char> bytes;
  detail::put_u32(bytes, kSlabMagic);
  detail::put_u32(bytes, slab.n_tokens);
  detail::put_u32(bytes, slab.dim);
  detail::put_u32(bytes, slab.n_frames());
  detail::put_u32(bytes, static_cast<std::uint32_t>(targets.size()));
  for (auto f : slab.frame_index) detail::put_u32(bytes, f);
  for (auto t : targets) detail::put_u32(bytes, t);
  for (double v : slab.queries) detail::put_f32(bytes, static_cast<float>(v));
  for (double v : slab.keys) detail::put_f32(bytes, static_cast<float>(v));
  detail::write_bytes(path.string(), bytes, kModule);
}

}  // namespace memctx
