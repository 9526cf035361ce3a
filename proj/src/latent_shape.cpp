#include "memctx/latent_shape.hpp"

#include <charconv>

#include "memctx/error.hpp"

namespace memctx {

LatentShape parse_latent_shape(std::string_view text) {
  std::uint32_t dims[4] = {};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    const std::size_t end = i < 3 ? text.find('x', pos) : text.size();
    if (end == std::string_view::npos) break;
    const auto field = text.substr(pos, end - pos);
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), dims[i]);
    if (ec != std::errc{} || ptr != field.data() + field.size() || field.empty()) break;
    if (i == 3) {
      const LatentShape shape{dims[0], dims[1], dims[2], dims[3]};
      if (!shape.positive()) break;
      return shape;
    }
    pos = end + 1;
  }
  throw Error(ErrorKind::invalid_argument, "token_budget",
              "malformed latent shape '" + std::string(text) + "', expected FxHxWxC with positive extents");
}

std::string format_latent_shape(const LatentShape& s) {
  return std::to_string(s.frames) + "x" + std::to_string(s.height) + "x" + std::to_string(s.width) + "x" +
         std::to_string(s.channels);
}

}  // namespace memctx
