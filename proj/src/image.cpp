#include "cnp/image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cnp {

RegionPx round_region(const RegionNorm& r, int width, int height, int min_px) {
  // std::round is round-half-away-from-zero, which keeps the result
  // platform-independent.
  auto rnd = [](double v) { return static_cast<int>(std::round(v)); };

  int w = rnd(r.w * width);
  int h = rnd(r.h * height);
  w = std::clamp(std::max(w, min_px), 1, width);
  h = std::clamp(std::max(h, min_px), 1, height);

  int x0 = rnd(r.x * width);
  int y0 = rnd(r.y * height);
  x0 = std::clamp(x0, 0, width - w);
  y0 = std::clamp(y0, 0, height - h);
  return RegionPx{x0, y0, w, h};
}

ImageBuffer crop(const ImageBuffer& img, const RegionPx& r) {
  if (r.x0 < 0 || r.y0 < 0 || r.w <= 0 || r.h <= 0 ||
      r.x0 + r.w > img.width || r.y0 + r.h > img.height) {
    throw std::out_of_range("crop: region outside image bounds");
  }
  ImageBuffer out(r.w, r.h, img.channels);
  for (int y = 0; y < r.h; ++y) {
    const double* src = &img.data[(static_cast<std::size_t>(y + r.y0) * img.width + r.x0) * img.channels];
    double* dst = &out.data[static_cast<std::size_t>(y) * r.w * img.channels];
    std::copy(src, src + static_cast<std::size_t>(r.w) * img.channels, dst);
  }
  return out;
}

ImageBuffer paste(const ImageBuffer& canvas, const ImageBuffer& patch,
                  const RegionPx& r) {
  if (patch.width != r.w || patch.height != r.h ||
      patch.channels != canvas.channels) {
    throw std::invalid_argument("paste: patch shape does not match region");
  }
  if (r.x0 < 0 || r.y0 < 0 || r.x0 + r.w > canvas.width ||
      r.y0 + r.h > canvas.height) {
    throw std::out_of_range("paste: region outside canvas bounds");
  }
  ImageBuffer out = canvas;
  for (int y = 0; y < r.h; ++y) {
    const double* src = &patch.data[static_cast<std::size_t>(y) * r.w * patch.channels];
    double* dst = &out.data[(static_cast<std::size_t>(y + r.y0) * canvas.width + r.x0) * canvas.channels];
    std::copy(src, src + static_cast<std::size_t>(r.w) * patch.channels, dst);
  }
  return out;
}

ImageBuffer composite(const ImageBuffer& canvas, const ImageBuffer& stroke,
                      const ImageBuffer& mask) {
  if (!canvas.same_shape(stroke) || mask.width != canvas.width ||
      mask.height != canvas.height || mask.channels != 1) {
    throw std::invalid_argument("composite: shape mismatch");
  }
  ImageBuffer out(canvas.width, canvas.height, canvas.channels);
  const int c = canvas.channels;
  const std::size_t n = static_cast<std::size_t>(canvas.width) * canvas.height;
  for (std::size_t p = 0; p < n; ++p) {
    const double m = mask.data[p];
    for (int k = 0; k < c; ++k) {
      out.data[p * c + k] =
          stroke.data[p * c + k] * m + canvas.data[p * c + k] * (1.0 - m);
    }
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& img, int w, int h) {
  if (w < 1 || h < 1) {
    throw std::invalid_argument("resize_bilinear: target extents must be >= 1");
  }
  ImageBuffer out(w, h, img.channels);
  const double sx = static_cast<double>(img.width) / w;
  const double sy = static_cast<double>(img.height) / h;
  for (int y = 0; y < h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(x0, y0, c) * (1.0 - wx) + img.at(x1, y0, c) * wx;
        const double bot = img.at(x0, y1, c) * (1.0 - wx) + img.at(x1, y1, c) * wx;
        out.at(x, y, c) = top * (1.0 - wy) + bot * wy;
      }
    }
  }
  return out;
}

ImageBuffer clamp01(ImageBuffer img) {
  for (double& v : img.data) v = std::clamp(v, 0.0, 1.0);
  return img;
}

ImageBuffer luminance(const ImageBuffer& img) {
  if (img.channels == 1) return img;
  if (img.channels != 3) {
    throw std::invalid_argument("luminance: expected 1 or 3 channels");
  }
  ImageBuffer out(img.width, img.height, 1);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t p = 0; p < n; ++p) {
    out.data[p] = 0.299 * img.data[p * 3] + 0.587 * img.data[p * 3 + 1] +
                  0.114 * img.data[p * 3 + 2];
  }
  return out;
}

}  // namespace cnp
