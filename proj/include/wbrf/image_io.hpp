#pragma once

// 8-bit PNG (libpng simplified API) and binary PPM (P6) readers/writers.

#include <png.h>

#include <cctype>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "wbrf/color.hpp"

namespace wbrf {

struct ImageSize {
  std::size_t width = 0;
  std::size_t height = 0;
};

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

inline bool looks_like_png(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0;
}

/// Reads only the PNG header.
inline ImageSize png_size(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::IoError, std::string("png decode: ") + image.message);
  }
  const ImageSize size{image.width, image.height};
  png_image_free(&image);
  return size;
}

inline PixelMatrix decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorCode::IoError, std::string("png decode: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> rgb(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, rgb.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorCode::IoError, "png decode: " + msg);
  }
  return PixelMatrix::from_8bit(image.width, image.height, rgb);
}

/// Deterministic encoding: no timestamps or text chunks.
inline std::vector<std::uint8_t> encode_png(const PixelMatrix& img) {
  const std::vector<std::uint8_t> rgb = img.to_8bit();
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_get_memory_size(image, size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(ErrorCode::IoError, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

inline std::vector<std::uint8_t> encode_ppm(const PixelMatrix& img) {
  const std::string header =
      "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const std::vector<std::uint8_t> rgb = img.to_8bit();
  out.insert(out.end(), rgb.begin(), rgb.end());
  return out;
}

inline PixelMatrix decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  const auto skip_space_and_comments = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  const auto read_uint = [&]() -> std::size_t {
    skip_space_and_comments();
    std::size_t v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (++digits > 9) throw Error(ErrorCode::IoError, "ppm header number too large");
    }
    if (digits == 0) throw Error(ErrorCode::IoError, "malformed ppm header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') {
    throw Error(ErrorCode::IoError, "not a binary ppm (P6)");
  }
  pos = 2;
  const std::size_t w = read_uint();
  const std::size_t h = read_uint();
  const std::size_t maxval = read_uint();
  if (maxval != 255) throw Error(ErrorCode::IoError, "only 8-bit ppm is supported");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw Error(ErrorCode::IoError, "malformed ppm header");
  }
  ++pos;
  if (w == 0 || h == 0 || bytes.size() - pos < 3 * w * h) {
    throw Error(ErrorCode::IoError, "truncated ppm payload");
  }
  return PixelMatrix::from_8bit(w, h, bytes.subspan(pos, 3 * w * h));
}

inline PixelMatrix decode_image(std::span<const std::uint8_t> bytes) {
  return looks_like_png(bytes) ? decode_png(bytes) : decode_ppm(bytes);
}

inline PixelMatrix read_image(const std::filesystem::path& path) {
  return decode_image(read_file_bytes(path));
}

/// Format chosen by extension: .ppm writes P6, anything else PNG.
inline void write_image(const std::filesystem::path& path, const PixelMatrix& img) {
  const bool ppm = path.extension() == ".ppm" || path.extension() == ".PPM";
  write_file_bytes(path, ppm ? encode_ppm(img) : encode_png(img));
}

}  // namespace wbrf
