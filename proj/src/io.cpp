#include "cnp/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include "cnp/errors.hpp"

namespace cnp {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

bool has_suffix(const std::string& s, const std::string& suffix) {
  if (s.size() < suffix.size()) return false;
  std::string tail = s.substr(s.size() - suffix.size());
  std::transform(tail.begin(), tail.end(), tail.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return tail == suffix;
}

ImageBuffer from_bytes(const std::vector<unsigned char>& bytes, int w, int h,
                       int channels) {
  ImageBuffer img(w, h, channels);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = bytes[i] / 255.0;
  }
  return img;
}

std::vector<unsigned char> to_bytes(const ImageBuffer& img) {
  std::vector<unsigned char> bytes(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const double v = std::clamp(img.data[i], 0.0, 1.0);
    bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
  }
  return bytes;
}

ImageBuffer read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open file: " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("malformed PNG: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG channel count: " + path);
  }

  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * channels);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  return from_bytes(bytes, static_cast<int>(w), static_cast<int>(h), channels);
}

void write_png(const ImageBuffer& img, const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open file for writing: " + path);

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("PNG write failed: " + path);
  }

  png_init_io(png, fp.get());
  const int color_type =
      img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, img.width, img.height, 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<unsigned char> bytes = to_bytes(img);
  std::vector<png_bytep> rows(img.height);
  for (int y = 0; y < img.height; ++y) {
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width * img.channels;
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageBuffer read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path);

  std::string magic;
  in >> magic;
  if (magic != "P6" && magic != "P5") {
    throw IoError("unsupported PPM magic in " + path);
  }
  auto next_int = [&in, &path]() {
    // Skip whitespace and `#` comment lines between header fields.
    while (true) {
      const int c = in.peek();
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else if (std::isspace(c)) {
        in.get();
      } else {
        break;
      }
    }
    int v = -1;
    in >> v;
    if (!in || v < 0) throw IoError("malformed PPM header in " + path);
    return v;
  };

  const int w = next_int();
  const int h = next_int();
  const int maxval = next_int();
  if (maxval <= 0 || maxval > 255) throw IoError("unsupported PPM depth in " + path);
  in.get();  // single whitespace before raster

  const int channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> bytes(static_cast<std::size_t>(w) * h * channels);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw IoError("truncated PPM raster in " + path);
  }
  ImageBuffer img = from_bytes(bytes, w, h, channels);
  if (maxval != 255) {
    for (double& v : img.data) v *= 255.0 / maxval;
  }
  return img;
}

void write_ppm(const ImageBuffer& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open file for writing: " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  const std::vector<unsigned char> bytes = to_bytes(img);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("PPM write failed: " + path);
}

}  // namespace

ImageBuffer read_image(const std::string& path) {
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm")) {
    return read_ppm(path);
  }
  return read_png(path);
}

void write_image(const ImageBuffer& img, const std::string& path) {
  if (img.width < 1 || img.height < 1 ||
      (img.channels != 1 && img.channels != 3)) {
    throw IoError("write_image: image must be 1- or 3-channel and non-empty");
  }
  if (has_suffix(path, ".ppm") || has_suffix(path, ".pgm")) {
    write_ppm(img, path);
  } else {
    write_png(img, path);
  }
}

}  // namespace cnp
