#include "cnp/dt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cnp {

DtKernel dt_kernel(int K) {
  if (K < 3 || K % 2 == 0) {
    throw std::invalid_argument("dt_kernel: K must be odd and >= 3");
  }
  DtKernel kern;
  kern.K = K;
  kern.values.resize(static_cast<std::size_t>(K) * K);
  const int half = K / 2;
  for (int di = -half; di <= half; ++di) {
    for (int dj = -half; dj <= half; ++dj) {
      kern.values[static_cast<std::size_t>(di + half) * K + (dj + half)] =
          std::sqrt(static_cast<double>(di * di + dj * dj));
    }
  }
  kern.d_max = std::sqrt(2.0) * half;
  return kern;
}

double softmin(const std::vector<double>& values, double lambda_temp) {
  if (values.empty()) throw std::invalid_argument("softmin: empty list");
  if (lambda_temp <= 0.0) throw std::invalid_argument("softmin: lambda must be > 0");
  const double lo = *std::min_element(values.begin(), values.end());
  double wsum = 0.0;
  double acc = 0.0;
  for (const double v : values) {
    const double w = std::exp(-(v - lo) / lambda_temp);
    wsum += w;
    acc += w * v;
  }
  return acc / wsum;
}

namespace {

void check_single_channel(const ImageBuffer& e, const char* who) {
  if (e.channels != 1) {
    throw std::invalid_argument(std::string(who) + ": edge map must be single-channel");
  }
}

// Fill the candidate list E*D + (1-E)*d_max for the window centred at (x, y).
// Out-of-image neighbours contribute d_max.
void window_candidates(const ImageBuffer& e, const DtKernel& kern, int x, int y,
                       std::vector<double>& out) {
  const int half = kern.K / 2;
  out.clear();
  for (int di = -half; di <= half; ++di) {
    const int ny = y + di;
    for (int dj = -half; dj <= half; ++dj) {
      const int nx = x + dj;
      if (nx < 0 || ny < 0 || nx >= e.width || ny >= e.height) {
        out.push_back(kern.d_max);
        continue;
      }
      const double ev = e.at(nx, ny, 0);
      out.push_back(ev * kern.at(di, dj) + (1.0 - ev) * kern.d_max);
    }
  }
}

}  // namespace

ImageBuffer dt_matrix(const ImageBuffer& edges, const DtKernel& kern,
                      Softness lambda_temp) {
  check_single_channel(edges, "dt_matrix");
  ImageBuffer out(edges.width, edges.height, 1);
  std::vector<double> cand;
  cand.reserve(static_cast<std::size_t>(kern.K) * kern.K);
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      window_candidates(edges, kern, x, y, cand);
      if (lambda_temp) {
        out.at(x, y, 0) = softmin(cand, *lambda_temp);
      } else {
        out.at(x, y, 0) = *std::min_element(cand.begin(), cand.end());
      }
    }
  }
  return out;
}

ImageBuffer dt_exact(const ImageBuffer& edges) {
  check_single_channel(edges, "dt_exact");
  std::vector<std::pair<int, int>> pts;
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      if (edges.at(x, y, 0) > 0.5) pts.emplace_back(x, y);
    }
  }
  ImageBuffer out(edges.width, edges.height, 1,
                  std::numeric_limits<double>::infinity());
  if (pts.empty()) return out;
  for (int y = 0; y < edges.height; ++y) {
    for (int x = 0; x < edges.width; ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& [px, py] : pts) {
        const double dx = px - x;
        const double dy = py - y;
        best = std::min(best, dx * dx + dy * dy);
      }
      out.at(x, y, 0) = std::sqrt(best);
    }
  }
  return out;
}

double dt_loss(const ImageBuffer& rendered_edges,
               const ImageBuffer& reference_edges, const DtKernel& kern,
               Softness lambda_temp) {
  check_single_channel(rendered_edges, "dt_loss");
  check_single_channel(reference_edges, "dt_loss");
  if (!rendered_edges.same_shape(reference_edges)) {
    throw std::invalid_argument("dt_loss: shape mismatch");
  }
  const ImageBuffer dt = dt_matrix(rendered_edges, kern, lambda_temp);
  double acc = 0.0;
  for (std::size_t i = 0; i < dt.data.size(); ++i) {
    acc += dt.data[i] * reference_edges.data[i];
  }
  return acc / static_cast<double>(dt.data.size());
}

ImageBuffer dt_loss_grad(const ImageBuffer& rendered_edges,
                         const ImageBuffer& reference_edges,
                         const DtKernel& kern, double lambda_temp) {
  check_single_channel(rendered_edges, "dt_loss_grad");
  check_single_channel(reference_edges, "dt_loss_grad");
  if (!rendered_edges.same_shape(reference_edges)) {
    throw std::invalid_argument("dt_loss_grad: shape mismatch");
  }
  ImageBuffer grad(rendered_edges.width, rendered_edges.height, 1);
  const double n = static_cast<double>(grad.data.size());
  const int half = kern.K / 2;
  std::vector<double> cand;
  cand.reserve(static_cast<std::size_t>(kern.K) * kern.K);

  for (int y = 0; y < rendered_edges.height; ++y) {
    for (int x = 0; x < rendered_edges.width; ++x) {
      const double ref = reference_edges.at(x, y, 0);
      if (ref == 0.0) continue;
      window_candidates(rendered_edges, kern, x, y, cand);
      const double lo = *std::min_element(cand.begin(), cand.end());
      double wsum = 0.0;
      double acc = 0.0;
      for (const double c : cand) {
        const double w = std::exp(-(c - lo) / lambda_temp);
        wsum += w;
        acc += w * c;
      }
      const double smin = acc / wsum;

      // dS/dc_j = w_j * (1 + (S - c_j) / lambda); dc_j/dE = D - d_max.
      std::size_t idx = 0;
      for (int di = -half; di <= half; ++di) {
        const int ny = y + di;
        for (int dj = -half; dj <= half; ++dj, ++idx) {
          const int nx = x + dj;
          if (nx < 0 || ny < 0 || nx >= grad.width || ny >= grad.height) continue;
          const double c = cand[idx];
          const double w = std::exp(-(c - lo) / lambda_temp) / wsum;
          const double ds_dc = w * (1.0 + (smin - c) / lambda_temp);
          grad.at(nx, ny, 0) +=
              (ref / n) * ds_dc * (kern.at(di, dj) - kern.d_max);
        }
      }
    }
  }
  return grad;
}

ImageBuffer extract_edges(const ImageBuffer& img, double threshold) {
  const ImageBuffer luma = luminance(img);
  ImageBuffer mag(luma.width, luma.height, 1);
  auto sample = [&luma](int x, int y) {
    x = std::clamp(x, 0, luma.width - 1);
    y = std::clamp(y, 0, luma.height - 1);
    return luma.at(x, y, 0);
  };
  double maxmag = 0.0;
  for (int y = 0; y < luma.height; ++y) {
    for (int x = 0; x < luma.width; ++x) {
      const double gx = -sample(x - 1, y - 1) + sample(x + 1, y - 1) -
                        2.0 * sample(x - 1, y) + 2.0 * sample(x + 1, y) -
                        sample(x - 1, y + 1) + sample(x + 1, y + 1);
      const double gy = -sample(x - 1, y - 1) - 2.0 * sample(x, y - 1) -
                        sample(x + 1, y - 1) + sample(x - 1, y + 1) +
                        2.0 * sample(x, y + 1) + sample(x + 1, y + 1);
      const double m = std::sqrt(gx * gx + gy * gy);
      mag.at(x, y, 0) = m;
      maxmag = std::max(maxmag, m);
    }
  }
  ImageBuffer out(luma.width, luma.height, 1);
  if (maxmag <= 0.0) return out;
  for (std::size_t i = 0; i < mag.data.size(); ++i) {
    out.data[i] = mag.data[i] / maxmag > threshold ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace cnp
