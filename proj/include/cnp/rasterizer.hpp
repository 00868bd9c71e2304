#pragma once

#include <array>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "cnp/brush.hpp"
#include "cnp/image.hpp"

namespace cnp {

/// One brushstroke: center and extents as fractions of the working frame,
/// rotation as a fraction of the angular span, RGB color.
///
/// Extents may exceed 1 so a single stroke can cover the whole frame even
/// though the builtin footprints fade out at the brush-square boundary.
struct StrokeParams {
  double x = 0.5;
  double y = 0.5;
  double w = 0.5;
  double h = 0.5;
  double theta = 0.0;  // angle = theta * span (pi for symmetric brushes)
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  static constexpr double kMinSize = 0.01;
  static constexpr double kMaxSize = 1.5;

  std::array<double, 8> to_array() const { return {x, y, w, h, theta, r, g, b}; }
  static StrokeParams from_array(const std::array<double, 8>& a) {
    return {a[0], a[1], a[2], a[3], a[4], a[5], a[6], a[7]};
  }

  /// All eight fields forced into their valid ranges.
  StrokeParams clamped() const;
  bool valid() const;
};

/// (u, v) -> (a*u + b*v + tx, c*u + d*v + ty).
struct AffineMap {
  double a = 1.0, b = 0.0, tx = 0.0;
  double c = 0.0, d = 1.0, ty = 0.0;

  static AffineMap identity() { return {}; }
  static AffineMap scale_translate(double sx, double sy, double tx, double ty) {
    return {sx, 0.0, tx, 0.0, sy, ty};
  }
  double det() const { return a * d - b * c; }
  std::array<double, 2> apply(double u, double v) const {
    return {a * u + b * v + tx, c * u + d * v + ty};
  }
};

/// outer after inner: (outer ∘ inner)(p) = outer(inner(p)).
AffineMap compose(const AffineMap& outer, const AffineMap& inner);

/// Map from the brush unit square [-0.5, 0.5]^2 to frame pixel coordinates:
/// scale by (w * frame_w, h * frame_h), rotate by theta * theta_span,
/// translate to (x * frame_w, y * frame_h).
AffineMap stroke_affine(const StrokeParams& s, double frame_w, double frame_h,
                        double theta_span = std::numbers::pi);

struct SoftRaster {
  ImageBuffer mask;  // [0, 1]
  ImageBuffer edge;  // |grad mask| by central differences, max-normalized
};

/// Soft differentiable footprint: brush alpha sampled bilinearly at the
/// inverse-mapped pixel center (0 outside the grid), pushed through a
/// sigmoid of sharpness k renormalized so alpha 0 -> 0 and alpha 1 -> 1.
SoftRaster rasterize_soft(const BrushTexture& brush, const AffineMap& map,
                          int frame_w, int frame_h, double k);

/// Hard ground-truth footprint: same sampling, thresholded at alpha 0.5.
ImageBuffer rasterize_reference(const BrushTexture& brush, const AffineMap& map,
                                int frame_w, int frame_h);

/// Per-channel mask * color.
ImageBuffer stroke_image(const ImageBuffer& mask, double r, double g, double b);

/// A stroke bound to its placement: params live in a local_w x local_h
/// working frame; outer maps that frame into canvas pixels; compositing is
/// restricted to clip when given.
struct PlacedStroke {
  StrokeParams s;
  double local_w = 1.0;
  double local_h = 1.0;
  AffineMap outer = AffineMap::identity();
  std::optional<RegionPx> clip;
};

/// Sequential composite of the strokes into a copy of the canvas, in list
/// order (later strokes paint over earlier ones).
ImageBuffer render_sequence(const BrushTexture& brush,
                            std::span<const PlacedStroke> placed,
                            const ImageBuffer& canvas, double k);

/// Convenience wrapper: every stroke shares one placement.
ImageBuffer render_strokes(const BrushTexture& brush,
                           std::span<const StrokeParams> strokes,
                           const AffineMap& outer, double local_w, double local_h,
                           const ImageBuffer& canvas, double k,
                           std::optional<RegionPx> clip = std::nullopt);

/// d/d{x, y, w, h, theta, r, g, b}.
using ParamGrad = std::array<double, 8>;

/// Gradients of an arbitrary scalar loss through the compositing chain:
/// dloss_dcanvas is dL/d(final canvas); the result is dL/d(params) for every
/// placed stroke. Deterministic fixed-order reductions.
std::vector<ParamGrad> backprop_sequence(const BrushTexture& brush,
                                         std::span<const PlacedStroke> placed,
                                         const ImageBuffer& canvas,
                                         const ImageBuffer& dloss_dcanvas,
                                         double k);

/// Analytic gradient of || target - render_strokes(...) ||_2^2 with respect
/// to every stroke parameter.
std::vector<ParamGrad> grad_strokes(const BrushTexture& brush,
                                    std::span<const StrokeParams> strokes,
                                    const AffineMap& outer, double local_w,
                                    double local_h, const ImageBuffer& canvas,
                                    const ImageBuffer& target, double k,
                                    std::optional<RegionPx> clip = std::nullopt);

/// The soft mask and edge of one placed stroke rendered at canvas scale
/// (zero outside its clip). Used by the stylization edge chain.
SoftRaster placed_raster(const BrushTexture& brush, const PlacedStroke& ps,
                         int frame_w, int frame_h, double k);

/// Gradient of sum_p dloss_dedge(p) * edge(p) for one placed stroke, where
/// edge is placed_raster's edge field. The max normalizer inside the edge is
/// treated as a constant (stop-gradient), documented in the README. Color
/// entries of the result are zero.
ParamGrad backprop_stroke_edge(const BrushTexture& brush, const PlacedStroke& ps,
                               int frame_w, int frame_h,
                               const ImageBuffer& dloss_dedge, double k);

}  // namespace cnp
