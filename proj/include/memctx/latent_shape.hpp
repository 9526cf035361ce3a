#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace memctx {

// Shape of a VAE latent video: frames x height x width x channels.
struct LatentShape {
  std::uint32_t frames = 0;
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;

  bool positive() const noexcept { return frames > 0 && height > 0 && width > 0 && channels > 0; }
  friend bool operator==(const LatentShape&, const LatentShape&) = default;
};

// Parses "FxHxWxC". Throws Error(invalid_argument) on malformed or zero extents.
LatentShape parse_latent_shape(std::string_view text);
std::string format_latent_shape(const LatentShape& shape);

}  // namespace memctx
