#include "cnp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace cnp {

double l2_distance(const ImageBuffer& a, const ImageBuffer& b) {
  if (!a.same_shape(b)) {
    throw std::invalid_argument("l2_distance: shape mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.data.size());
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
  const double mse = l2_distance(a, b);
  if (mse < 1e-10) return 100.0;
  return -10.0 * std::log10(mse);
}

}  // namespace cnp
