#pragma once

// RectificationModel and its binary file format.
//
//   offset  size  field
//   0       4     magic "WBRF"
//   4       4     format version (u32)
//   8       4     header byte count that follows (u32, currently 20)
//   12      4     k (u32)
//   16      4     kernel layout tag (u32)
//   20      1     estimator kind (0 = gray-world, 1 = shades-of-gray)
//   21      1     estimator flags (bit 0 pre-linearize, bit 1 saturation mask)
//   22      2     reserved, zero
//   24      8     Minkowski p (f64)
//   32      ...   k centers, 3 f64 each
//           ...   k rectification matrices, 33x3 f64 each, row-major
//   end-4   4     CRC32 of every preceding byte
//
// All integers and doubles are little-endian.

#include <zlib.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "wbrf/estimation.hpp"
#include "wbrf/fitting.hpp"

namespace wbrf {

inline constexpr std::uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'W', 'B', 'R', 'F'};
inline constexpr std::size_t kModelHeaderBytes = 32;

struct RectificationModel {
  std::vector<CastVector> centers;
  std::vector<RectMatrix> rects;
  EstimatorConfig estimator;

  std::size_t k() const noexcept { return centers.size(); }

  void validate() const {
    if (centers.empty() || centers.size() != rects.size()) {
      throw Error(ErrorCode::InvalidArgument, "model needs k >= 1 centers and as many matrices");
    }
    for (const CastVector& c : centers) {
      const double norm2 = c.dot(c);
      if (std::abs(norm2 - 1.0) > 1e-9) throw Error(ErrorCode::InvalidArgument, "center not unit");
    }
    for (const RectMatrix& h : rects) {
      if (!h.allFinite()) throw Error(ErrorCode::InvalidArgument, "non-finite rectification entry");
    }
  }

  std::size_t parameter_count() const noexcept { return k() * (3 + kPolyMapSize * 3); }

  friend bool operator==(const RectificationModel& a, const RectificationModel& b) {
    return a.centers == b.centers && a.rects == b.rects && a.estimator == b.estimator;
  }
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

inline std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

inline double get_f64(std::span<const std::uint8_t> in, std::size_t at) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

inline std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; models are far below 4 GiB.
  crc = crc32(crc, bytes.data(), static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

struct ModelEncoding {
  std::uint32_t version = kModelFormatVersion;
  std::uint32_t layout_tag = kLayoutColumnMajor3x11;
};

inline std::vector<std::uint8_t> encode_model(const RectificationModel& model,
                                              const ModelEncoding& enc) {
  std::vector<std::uint8_t> out;
  out.reserve(kModelHeaderBytes + model.parameter_count() * 8 + 4);
  out.insert(out.end(), std::begin(kModelMagic), std::end(kModelMagic));
  put_u32(out, enc.version);
  put_u32(out, static_cast<std::uint32_t>(kModelHeaderBytes - 12));
  put_u32(out, static_cast<std::uint32_t>(model.k()));
  put_u32(out, enc.layout_tag);
  out.push_back(static_cast<std::uint8_t>(model.estimator.kind));
  out.push_back(static_cast<std::uint8_t>((model.estimator.pre_linearize ? 1 : 0) |
                                          (model.estimator.mask_saturated ? 2 : 0)));
  out.push_back(0);
  out.push_back(0);
  put_f64(out, model.estimator.minkowski_p);
  for (const CastVector& c : model.centers) {
    for (int i = 0; i < 3; ++i) put_f64(out, c[i]);
  }
  for (const RectMatrix& h : model.rects) {
    for (int r = 0; r < kPolyMapSize; ++r) {
      for (int c = 0; c < 3; ++c) put_f64(out, h(r, c));
    }
  }
  put_u32(out, crc32_of(out));
  return out;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_model(const RectificationModel& model) {
  model.validate();
  return detail::encode_model(model, {});
}

inline RectificationModel deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kModelHeaderBytes + 4 ||
      std::memcmp(bytes.data(), kModelMagic, sizeof(kModelMagic)) != 0) {
    throw Error(ErrorCode::CorruptFile, "not a model file or truncated header");
  }
  const std::size_t body = bytes.size() - 4;
  if (detail::crc32_of(bytes.first(body)) != detail::get_u32(bytes, body)) {
    throw Error(ErrorCode::CorruptFile, "checksum mismatch");
  }
  const std::uint32_t version = detail::get_u32(bytes, 4);
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::FormatVersionMismatch,
                "file version " + std::to_string(version) + ", expected " +
                    std::to_string(kModelFormatVersion));
  }
  const std::uint32_t header_rest = detail::get_u32(bytes, 8);
  const std::uint32_t layout = detail::get_u32(bytes, 16);
  if (layout != kLayoutColumnMajor3x11) {
    throw Error(ErrorCode::FormatVersionMismatch, "unsupported kernel layout tag");
  }
  if (header_rest != kModelHeaderBytes - 12) {
    throw Error(ErrorCode::CorruptFile, "unexpected header length");
  }
  const std::uint32_t k = detail::get_u32(bytes, 12);
  const std::size_t params = static_cast<std::size_t>(k) * (3 + kPolyMapSize * 3);
  if (k == 0 || body != kModelHeaderBytes + params * 8) {
    throw Error(ErrorCode::CorruptFile, "payload size does not match k");
  }

  RectificationModel model;
  const std::uint8_t kind = bytes[20];
  if (kind > 1) throw Error(ErrorCode::CorruptFile, "unknown estimator kind");
  model.estimator.kind = static_cast<EstimatorKind>(kind);
  model.estimator.pre_linearize = (bytes[21] & 1) != 0;
  model.estimator.mask_saturated = (bytes[21] & 2) != 0;
  model.estimator.minkowski_p = detail::get_f64(bytes, 24);

  std::size_t at = kModelHeaderBytes;
  for (std::uint32_t c = 0; c < k; ++c) {
    const Rgb raw{detail::get_f64(bytes, at), detail::get_f64(bytes, at + 8),
                  detail::get_f64(bytes, at + 16)};
    at += 24;
    try {
      model.centers.push_back(CastVector::from_unit(raw));
    } catch (const Error&) {
      throw Error(ErrorCode::CorruptFile, "stored center is not a positive unit vector");
    }
  }
  for (std::uint32_t c = 0; c < k; ++c) {
    RectMatrix h;
    for (int r = 0; r < kPolyMapSize; ++r) {
      for (int col = 0; col < 3; ++col, at += 8) h(r, col) = detail::get_f64(bytes, at);
    }
    model.rects.push_back(h);
  }
  model.validate();
  return model;
}

inline void save_model(const RectificationModel& model, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoError, "short write to " + path.string());
}

inline RectificationModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

}  // namespace wbrf
