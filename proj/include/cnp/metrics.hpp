#pragma once

#include "cnp/image.hpp"

namespace cnp {

/// Mean squared difference over all pixels and channels.
double l2_distance(const ImageBuffer& a, const ImageBuffer& b);

/// 10 * log10(1 / l2_distance) for unit-range images, capped at 100 dB
/// when l2_distance < 1e-10.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

}  // namespace cnp
