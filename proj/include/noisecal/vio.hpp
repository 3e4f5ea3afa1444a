#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "noisecal/errors.hpp"
#include "noisecal/tensor.hpp"

namespace noisecal::vio {

namespace fs = std::filesystem;

/// Writes `bytes` to a sibling temp file and renames it over `path`, so readers
/// never observe a partial file.
inline void write_file_atomic(const fs::path& path, const std::string& bytes) {
  static std::atomic<unsigned long> counter{0};
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(counter++) + "-" + std::to_string(std::random_device{}());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move " + tmp.string() + " to " + path.string());
  }
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- PNM ------------------------------------------------------------------

/// 8-bit image with interleaved channels (1 = gray, 3 = RGB).
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  std::vector<std::uint8_t> pixels;
};

/// Parses binary P5 (gray) or P6 (RGB) with maxval 255.
inline Image decode_pnm(const std::string& bytes, const std::string& name = "image") {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&](const char* field) {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      throw FormatError(name + ": malformed PNM header (" + field + ")");
    }
    std::size_t v = 0;
    while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
      v = v * 10 + static_cast<std::size_t>(bytes[pos++] - '0');
      if (v > (1u << 24)) throw FormatError(name + ": PNM " + field + " too large");
    }
    return v;
  };

  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
    throw BadMagicError(name + ": bad magic, expected binary P5 or P6");
  }
  Image img;
  img.channels = bytes[1] == '5' ? 1 : 3;
  pos = 2;
  img.width = read_uint("width");
  img.height = read_uint("height");
  const std::size_t maxval = read_uint("maxval");
  if (img.width == 0 || img.height == 0) throw FormatError(name + ": zero-sized image");
  if (maxval != 255) throw FormatError(name + ": only maxval 255 is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw FormatError(name + ": malformed PNM header");
  }
  ++pos;
  const std::size_t n = img.width * img.height * img.channels;
  if (bytes.size() - pos < n) throw TruncatedError(name + ": truncated pixel data");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

inline std::string encode_pnm(const Image& img) {
  std::string out = (img.channels == 1 ? "P5\n" : "P6\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.append(img.pixels.begin(), img.pixels.end());
  return out;
}

/// Clamp to [0, 1], then round half up: byte = ⌊v·255 + 0.5⌋.
inline std::uint8_t quantize(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(c * 255.0 + 0.5));
}

// --- frame directories ----------------------------------------------------

inline std::string frame_name(std::size_t index, std::size_t channels) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.%s", index, channels == 1 ? "pgm" : "ppm");
  return buf;
}

/// Frame files of a directory keyed by index.
inline std::map<std::size_t, fs::path> list_frames(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  static const std::regex pattern(R"(frame_(\d{5})\.(ppm|pgm))");
  std::map<std::size_t, fs::path> frames;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!std::regex_match(name, m, pattern)) continue;
    const auto index = static_cast<std::size_t>(std::stoul(m[1].str()));
    if (!frames.emplace(index, entry.path()).second) {
      throw FormatError(dir.string() + ": duplicate frame index " + std::to_string(index));
    }
  }
  return frames;
}

/// Reads frame_00000.p?m … as an (F, C, H, W) tensor with values v/255.
inline VideoTensor read_video(const fs::path& dir) {
  const auto frames = list_frames(dir);
  if (frames.empty()) throw IoError(dir.string() + ": no frame files");
  std::size_t expected = 0;
  for (const auto& [index, path] : frames) {
    if (index != expected) {
      throw FormatError(dir.string() + ": missing frame " + frame_name(expected, 1).substr(0, 11) +
                        " (gap before index " + std::to_string(index) + ")");
    }
    ++expected;
  }

  Shape shape{};
  std::vector<double> data;
  for (const auto& [index, path] : frames) {
    const Image img = decode_pnm(read_file(path), path.filename().string());
    if (index == 0) {
      shape = {frames.size(), img.channels, img.height, img.width};
      data.resize(shape.size());
    } else if (img.channels != shape.channels || img.height != shape.height || img.width != shape.width) {
      throw FormatError(path.filename().string() + ": dimensions differ from frame_00000");
    }
    const std::size_t plane = shape.plane_size();
    for (std::size_t p = 0; p < plane; ++p) {
      for (std::size_t c = 0; c < shape.channels; ++c) {
        data[(index * shape.channels + c) * plane + p] = img.pixels[p * shape.channels + c] / 255.0;
      }
    }
  }
  return {shape, std::move(data)};
}

/// Encodes frame f of x as PGM/PPM bytes.
inline std::string encode_frame(const VideoTensor& x, std::size_t f) {
  const Shape& s = x.shape();
  if (s.channels != 1 && s.channels != 3) {
    throw ShapeError("frames need 1 or 3 channels, got " + std::to_string(s.channels));
  }
  Image img{s.width, s.height, s.channels, std::vector<std::uint8_t>(s.plane_size() * s.channels)};
  for (std::size_t c = 0; c < s.channels; ++c) {
    const auto plane = x.plane(f, c);
    for (std::size_t p = 0; p < plane.size(); ++p) img.pixels[p * s.channels + c] = quantize(plane[p]);
  }
  return encode_pnm(img);
}

/// Writes x as frame_00000.p?m … into dir (created if needed), replacing any
/// frame files already there.
inline void write_video(const VideoTensor& x, const fs::path& dir) {
  const Shape& s = x.shape();
  if (s.channels != 1 && s.channels != 3) {
    throw ShapeError("frames need 1 or 3 channels, got " + std::to_string(s.channels));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  for (const auto& [index, path] : list_frames(dir)) {
    if (index >= s.frames || path.filename() != frame_name(index, s.channels)) fs::remove(path, ec);
  }
  for (std::size_t f = 0; f < s.frames; ++f) write_file_atomic(dir / frame_name(f, s.channels), encode_frame(x, f));
}

// --- VNT1 raw tensors -----------------------------------------------------

inline constexpr std::array<char, 4> kTensorMagic{'V', 'N', 'T', '1'};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

inline std::uint32_t get_u32(const std::string& in, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<unsigned char>(in[pos + i])} << (8 * i);
  return v;
}

} // namespace detail

/// "VNT1", u32 LE dim count, u32 LE dims, row-major f32 LE payload.
inline std::string encode_tensor(const VideoTensor& x) {
  const Shape& s = x.shape();
  std::string out(kTensorMagic.begin(), kTensorMagic.end());
  detail::put_u32(out, 4);
  for (std::size_t d : {s.frames, s.channels, s.height, s.width}) detail::put_u32(out, static_cast<std::uint32_t>(d));
  out.reserve(out.size() + 4 * x.size());
  for (double v : x.values()) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

/// Inverse of encode_tensor. Fewer than four dims are padded with leading 1s.
inline VideoTensor decode_tensor(const std::string& bytes, const std::string& name = "tensor") {
  if (bytes.size() < 4 || !std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
    throw BadMagicError(name + ": bad magic, expected VNT1");
  }
  if (bytes.size() < 8) throw TruncatedError(name + ": truncated header");
  const std::uint32_t ndims = detail::get_u32(bytes, 4);
  if (ndims < 1 || ndims > 4) throw FormatError(name + ": unsupported dim count " + std::to_string(ndims));
  if (bytes.size() < 8 + 4 * std::size_t{ndims}) throw TruncatedError(name + ": truncated header");
  std::array<std::size_t, 4> dims{1, 1, 1, 1};
  for (std::uint32_t i = 0; i < ndims; ++i) dims[4 - ndims + i] = detail::get_u32(bytes, 8 + 4 * i);
  const Shape shape{dims[0], dims[1], dims[2], dims[3]};
  if (!shape.valid()) throw FormatError(name + ": zero-sized dimension");
  const std::size_t offset = 8 + 4 * std::size_t{ndims};
  const std::size_t payload = bytes.size() - offset;
  if (payload < 4 * shape.size()) throw TruncatedError(name + ": truncated payload");
  if (payload > 4 * shape.size()) throw FormatError(name + ": trailing bytes after payload");
  std::vector<double> data(shape.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<double>(std::bit_cast<float>(detail::get_u32(bytes, offset + 4 * i)));
  }
  return {shape, std::move(data)};
}

inline void write_tensor(const VideoTensor& x, const fs::path& path) { write_file_atomic(path, encode_tensor(x)); }

inline VideoTensor read_tensor(const fs::path& path) { return decode_tensor(read_file(path), path.string()); }

} // namespace noisecal::vio
