#pragma once

#include <cstdint>
#include <string>

#include "cnp/image.hpp"

namespace cnp {

/// Grayscale stroke footprint on a square grid, normalized so max = 1.
struct BrushTexture {
  ImageBuffer alpha;   // single channel
  std::string name;    // builtin id or source path

  std::uint64_t hash() const;  // FNV-1a over the sample bit patterns
};

/// Resolve a brush source: the builtin ids "oval" and "rect-soft", or an
/// image file path (RGB converted by luminance). Relative paths that do not
/// exist are retried against $CNP_BRUSH_DIR. Throws IoError for unreadable
/// files and std::invalid_argument for an all-zero alpha.
BrushTexture load_brush(const std::string& source);

/// Procedural builtin footprints on a grid_size^2 grid.
///   "oval":      superellipse exponent 4, alpha 1 inside 85% of the
///                half-extent with a smoothstep falloff over the outer 15%.
///   "rect-soft": same falloff profile on the Chebyshev radius.
BrushTexture builtin_brush(const std::string& id, int grid_size = 64);

}  // namespace cnp
