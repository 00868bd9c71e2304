#pragma once

#include "cnp/image.hpp"

namespace cnp {

/// Constants of the phasic reward.
///
/// alpha <= 0 selects the continuity default ln((2 - threshold) /
/// (threshold + epsilon)), which makes the amplified branch meet the plain
/// branch exactly at d = threshold.
struct RewardConfig {
  double threshold = 0.005;
  double alpha = 0.0;  // <= 0: continuity default
  double epsilon = 1e-6;

  double effective_alpha() const;
};

/// d = ||I - C||_2 / ||I||_2 (Frobenius norms over all pixels and channels).
/// Throws std::domain_error when ||I||_2 = 0.
double normalized_distance(const ImageBuffer& target, const ImageBuffer& canvas);

/// Step improvement d(I, C_t) - d(I, C_next).
double reward_original(const ImageBuffer& target, const ImageBuffer& canvas_t,
                       const ImageBuffer& canvas_next);

/// f(x) = (1/alpha) * ln((1 + x) / (1 - x + epsilon)), x in (-1, 1).
double inverse_sigmoid(double x, double alpha, double epsilon);

/// Improvement reward amplified once the residual distance falls below the
/// threshold: beta = 1 for d > threshold, f(1 - d) otherwise, where
/// d = d(I, C_next).
double reward_phasic(const ImageBuffer& target, const ImageBuffer& canvas_t,
                     const ImageBuffer& canvas_next, const RewardConfig& cfg);

}  // namespace cnp
