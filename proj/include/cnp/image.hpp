#pragma once

#include <cstddef>
#include <vector>

namespace cnp {

/// Row-major H x W x C raster of doubles. Images loaded from files and
/// produced by the renderer keep every sample in [0, 1]; scalar fields
/// (residual maps, distance transforms) reuse the container with their own
/// natural range.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<double> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, int c, double fill = 0.0)
      : width(w), height(h), channels(c),
        data(static_cast<std::size_t>(w) * h * c, fill) {}

  double& at(int x, int y, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  std::size_t size() const { return data.size(); }
  bool same_shape(const ImageBuffer& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
};

/// Rectangle in canvas fractions; (x, y) is the upper-left corner.
struct RegionNorm {
  double x = 0.0;
  double y = 0.0;
  double w = 1.0;
  double h = 1.0;
};

/// Rectangle in integer pixels; x0/y0 upper-left, w/h extents.
struct RegionPx {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  bool operator==(const RegionPx&) const = default;
};

/// Nearest-integer (half away from zero) rounding of a normalized region,
/// with extents grown to min_px and the rectangle clamped inside the image.
/// Total: every input produces a valid region.
RegionPx round_region(const RegionNorm& r, int width, int height, int min_px);

/// The w x h sub-image under r. Throws std::out_of_range if r leaves img.
ImageBuffer crop(const ImageBuffer& img, const RegionPx& r);

/// Copy of canvas with the pixels under r replaced by patch. Patch extents
/// must equal r. Throws std::invalid_argument on mismatch.
ImageBuffer paste(const ImageBuffer& canvas, const ImageBuffer& patch,
                  const RegionPx& r);

/// out = stroke ⊙ mask + canvas ⊙ (1 - mask), per channel. mask is
/// single-channel; soft values allowed.
ImageBuffer composite(const ImageBuffer& canvas, const ImageBuffer& stroke,
                      const ImageBuffer& mask);

/// Bilinear resample with half-pixel-centered sampling:
///   src_x = (dst_x + 0.5) * src_w / dst_w - 0.5, clamped to [0, src_w - 1]
/// (same for y), then the four neighbours are blended by fractional weight.
ImageBuffer resize_bilinear(const ImageBuffer& img, int w, int h);

/// Clamp every sample into [0, 1].
ImageBuffer clamp01(ImageBuffer img);

/// Rec.601 luma; identity for single-channel input.
ImageBuffer luminance(const ImageBuffer& img);

}  // namespace cnp
