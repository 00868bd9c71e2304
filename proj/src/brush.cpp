#include "cnp/brush.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <stdexcept>

#include "cnp/errors.hpp"
#include "cnp/io.hpp"

namespace cnp {

std::uint64_t BrushTexture::hash() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const unsigned char* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  const std::int64_t dims[2] = {alpha.width, alpha.height};
  mix(reinterpret_cast<const unsigned char*>(dims), sizeof(dims));
  mix(reinterpret_cast<const unsigned char*>(alpha.data.data()),
      alpha.data.size() * sizeof(double));
  return h;
}

namespace {

double falloff(double rho) {
  // alpha 1 up to 85% of the half-extent, smoothstep to 0 at the boundary.
  if (rho <= 0.85) return 1.0;
  if (rho >= 1.0) return 0.0;
  const double t = (1.0 - rho) / 0.15;
  return t * t * (3.0 - 2.0 * t);
}

BrushTexture normalized(ImageBuffer alpha, std::string name) {
  const double peak = *std::max_element(alpha.data.begin(), alpha.data.end());
  if (peak <= 0.0) {
    throw std::invalid_argument("brush '" + name + "' has an all-zero alpha");
  }
  for (double& v : alpha.data) v /= peak;
  return BrushTexture{std::move(alpha), std::move(name)};
}

}  // namespace

BrushTexture builtin_brush(const std::string& id, int grid_size) {
  if (grid_size < 8) {
    throw std::invalid_argument("builtin_brush: grid too small");
  }
  ImageBuffer alpha(grid_size, grid_size, 1);
  for (int y = 0; y < grid_size; ++y) {
    for (int x = 0; x < grid_size; ++x) {
      // Texel centers over [-1, 1]^2.
      const double u = (2.0 * (x + 0.5) / grid_size) - 1.0;
      const double v = (2.0 * (y + 0.5) / grid_size) - 1.0;
      double rho;
      if (id == "oval") {
        rho = std::pow(std::pow(std::abs(u), 4.0) + std::pow(std::abs(v), 4.0), 0.25);
      } else if (id == "rect-soft") {
        rho = std::max(std::abs(u), std::abs(v));
      } else {
        throw std::invalid_argument("unknown builtin brush id: " + id);
      }
      alpha.at(x, y, 0) = falloff(rho);
    }
  }
  return normalized(std::move(alpha), id);
}

BrushTexture load_brush(const std::string& source) {
  if (source == "oval" || source == "rect-soft") {
    return builtin_brush(source);
  }
  std::string path = source;
  if (!std::filesystem::exists(path)) {
    if (const char* dir = std::getenv("CNP_BRUSH_DIR")) {
      const auto alt = std::filesystem::path(dir) / source;
      if (std::filesystem::exists(alt)) path = alt.string();
    }
  }
  ImageBuffer img = luminance(read_image(path));
  if (img.width != img.height) {
    // Pad to square so the unit-square mapping stays isotropic.
    const int side = std::max(img.width, img.height);
    ImageBuffer padded(side, side, 1);
    const int ox = (side - img.width) / 2;
    const int oy = (side - img.height) / 2;
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        padded.at(x + ox, y + oy, 0) = img.at(x, y, 0);
      }
    }
    img = std::move(padded);
  }
  return normalized(std::move(img), source);
}

}  // namespace cnp
