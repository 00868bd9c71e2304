#include "cnp/reward.hpp"

#include <cmath>
#include <stdexcept>

namespace cnp {

double RewardConfig::effective_alpha() const {
  if (alpha > 0.0) return alpha;
  return std::log((2.0 - threshold) / (threshold + epsilon));
}

double normalized_distance(const ImageBuffer& target, const ImageBuffer& canvas) {
  if (!target.same_shape(canvas)) {
    throw std::invalid_argument("normalized_distance: shape mismatch");
  }
  double diff = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < target.data.size(); ++i) {
    const double d = target.data[i] - canvas.data[i];
    diff += d * d;
    norm += target.data[i] * target.data[i];
  }
  if (norm <= 0.0) {
    throw std::domain_error("normalized_distance: all-black target");
  }
  return std::sqrt(diff) / std::sqrt(norm);
}

double reward_original(const ImageBuffer& target, const ImageBuffer& canvas_t,
                       const ImageBuffer& canvas_next) {
  return normalized_distance(target, canvas_t) -
         normalized_distance(target, canvas_next);
}

double inverse_sigmoid(double x, double alpha, double epsilon) {
  return std::log((1.0 + x) / (1.0 - x + epsilon)) / alpha;
}

double reward_phasic(const ImageBuffer& target, const ImageBuffer& canvas_t,
                     const ImageBuffer& canvas_next, const RewardConfig& cfg) {
  const double d = normalized_distance(target, canvas_next);
  double beta = 1.0;
  if (d <= cfg.threshold) {
    beta = inverse_sigmoid(1.0 - d, cfg.effective_alpha(), cfg.epsilon);
  }
  return beta * (normalized_distance(target, canvas_t) - d);
}

}  // namespace cnp
