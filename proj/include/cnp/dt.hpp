#pragma once

#include <optional>
#include <vector>

#include "cnp/image.hpp"

namespace cnp {

/// K x K table of Euclidean distances from the window center.
struct DtKernel {
  int K = 0;
  std::vector<double> values;  // row-major, entry (di + K/2, dj + K/2)
  double d_max = 0.0;

  double at(int di, int dj) const {
    const int half = K / 2;
    return values[static_cast<std::size_t>(di + half) * K + (dj + half)];
  }
};

/// Window side K must be odd and >= 3.
DtKernel dt_kernel(int K);

/// Temperature for dt operations; nullopt selects the hard minimum.
using Softness = std::optional<double>;
inline constexpr std::nullopt_t kHardMin = std::nullopt;

/// Weighted average sum_i softmax(-d_i / lambda) * d_i, evaluated with a
/// min-shift so arbitrarily large magnitudes neither underflow nor overflow.
/// Approaches min(values) as lambda -> 0+. Throws on an empty list.
double softmin(const std::vector<double>& values, double lambda_temp);

/// Windowed distance transform of an edge map: per pixel the (soft)min over
/// its K x K neighbourhood of E*D + (1-E)*d_max. Out-of-image neighbours
/// count as non-edge (d_max). E is single-channel; soft values in [0, 1]
/// enter the formula as written.
ImageBuffer dt_matrix(const ImageBuffer& edges, const DtKernel& kern,
                      Softness lambda_temp);

/// Brute-force exact Euclidean distance transform: per pixel the distance to
/// the nearest edge pixel, +inf when the map has no edges. Test oracle;
/// O(pixels * edges).
ImageBuffer dt_exact(const ImageBuffer& edges);

/// mean over pixels of dt_matrix(rendered)_(i,j) * reference_(i,j).
double dt_loss(const ImageBuffer& rendered_edges,
               const ImageBuffer& reference_edges, const DtKernel& kern,
               Softness lambda_temp);

/// Gradient of dt_loss with respect to every sample of rendered_edges.
/// Defined for the soft-min form only (the hard min is piecewise constant
/// in E almost nowhere differentiable at switches).
ImageBuffer dt_loss_grad(const ImageBuffer& rendered_edges,
                         const ImageBuffer& reference_edges,
                         const DtKernel& kern, double lambda_temp);

/// Luminance -> 3x3 Sobel magnitude -> normalize by max -> threshold.
/// Output is strictly binary {0, 1}.
ImageBuffer extract_edges(const ImageBuffer& img, double threshold = 0.2);

}  // namespace cnp
