#pragma once

#include <string>

#include "cnp/image.hpp"

namespace cnp {

/// Load an 8-bit PNG or PPM (P6/P5) file. Samples are mapped to [0, 1]
/// by v / 255. Grayscale files load as 1 channel, everything else as 3
/// (alpha is dropped). Throws IoError on unreadable or malformed input.
ImageBuffer read_image(const std::string& path);

/// Write an 8-bit PNG or PPM depending on the file extension (.png / .ppm).
/// Samples are quantized by round(v * 255) after clamping to [0, 1].
void write_image(const ImageBuffer& img, const std::string& path);

}  // namespace cnp
