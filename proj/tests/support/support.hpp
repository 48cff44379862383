#pragma once

// Shared test helpers: temp directories, seeded generators, file writers.

#include <stdlib.h>

#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "avsz/core/bytes.hpp"
#include "avsz/core/types.hpp"
#include "avsz/error.hpp"

namespace avsz::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "avsz-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Error code thrown by fn; a non-throwing fn is a test failure.
template <typename Fn>
Errc code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::kIoError;
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& data) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

// Seeded generator with the handful of draws the property tests need.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::mt19937_64& engine() { return rng_; }

  std::uint64_t below(std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng_); }
  std::uint64_t between(std::uint64_t lo, std::uint64_t hi) {
    return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng_);
  }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }
  bool coin(double p = 0.5) { return unit() < p; }
  double normal(double stddev = 1.0) { return std::normal_distribution<double>(0.0, stddev)(rng_); }

  Mask mask(std::uint32_t w, std::uint32_t h, double density = 0.5) {
    std::vector<std::uint8_t> bits(static_cast<std::size_t>(w) * h);
    for (auto& b : bits) b = coin(density) ? 1 : 0;
    return Mask(w, h, std::move(bits));
  }

  Mask nonempty_mask(std::uint32_t w, std::uint32_t h, double density = 0.5) {
    Mask m = mask(w, h, density);
    if (m.count() == 0) m.set_index(below(m.size()), true);
    return m;
  }

  // Scores in [0,1]; a small alphabet forces many ties.
  ScoreMap scores(std::uint32_t w, std::uint32_t h, std::size_t alphabet = 0) {
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (auto& s : v) {
      s = alphabet ? static_cast<float>(below(alphabet)) / static_cast<float>(alphabet > 1 ? alphabet - 1 : 1)
                   : static_cast<float>(unit());
    }
    return ScoreMap(w, h, std::move(v));
  }

 private:
  std::mt19937_64 rng_;
};

// Minimal PNG writer independent of libpng: 8-bit grayscale, stored
// (uncompressed) deflate blocks, hand-rolled CRC-32 and Adler-32.
namespace png_oracle {

inline std::uint32_t crc32(const std::uint8_t* data, std::size_t n, std::uint32_t crc = 0) {
  crc = ~crc;
  for (std::size_t i = 0; i < n; ++i) {
    crc ^= data[i];
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0xEDB88320u & (0u - (crc & 1u)));
  }
  return ~crc;
}

inline std::uint32_t adler32(const std::vector<std::uint8_t>& data) {
  std::uint32_t a = 1, b = 0;
  for (std::uint8_t byte : data) {
    a = (a + byte) % 65521;
    b = (b + a) % 65521;
  }
  return (b << 16) | a;
}

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void chunk(std::vector<std::uint8_t>& out, const char* type, const std::vector<std::uint8_t>& body) {
  put_be32(out, static_cast<std::uint32_t>(body.size()));
  std::vector<std::uint8_t> crc_input(type, type + 4);
  crc_input.insert(crc_input.end(), body.begin(), body.end());
  out.insert(out.end(), crc_input.begin(), crc_input.end());
  put_be32(out, crc32(crc_input.data(), crc_input.size()));
}

// color_type 0 (gray) or 4 (gray+alpha, alpha 255), bit depth 8.
inline std::vector<std::uint8_t> gray8(std::uint32_t w, std::uint32_t h, const std::vector<std::uint8_t>& pixels,
                                       bool with_alpha = false) {
  std::vector<std::uint8_t> raw;
  for (std::uint32_t y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    for (std::uint32_t x = 0; x < w; ++x) {
      raw.push_back(pixels[static_cast<std::size_t>(y) * w + x]);
      if (with_alpha) raw.push_back(255);
    }
  }
  std::vector<std::uint8_t> z = {0x78, 0x01};
  std::size_t pos = 0;
  do {
    const std::size_t len = std::min<std::size_t>(65535, raw.size() - pos);
    const bool last = pos + len == raw.size();
    z.push_back(last ? 1 : 0);
    z.push_back(static_cast<std::uint8_t>(len & 0xFF));
    z.push_back(static_cast<std::uint8_t>(len >> 8));
    z.push_back(static_cast<std::uint8_t>(~len & 0xFF));
    z.push_back(static_cast<std::uint8_t>((~len >> 8) & 0xFF));
    z.insert(z.end(), raw.begin() + static_cast<std::ptrdiff_t>(pos), raw.begin() + static_cast<std::ptrdiff_t>(pos + len));
    pos += len;
  } while (pos < raw.size());
  put_be32(z, adler32(raw));

  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, w);
  put_be32(ihdr, h);
  ihdr.insert(ihdr.end(), {8, static_cast<std::uint8_t>(with_alpha ? 4 : 0), 0, 0, 0});
  chunk(out, "IHDR", ihdr);
  chunk(out, "IDAT", z);
  chunk(out, "IEND", {});
  return out;
}

// 8-bit RGB image, for rejection tests.
inline std::vector<std::uint8_t> rgb8(std::uint32_t w, std::uint32_t h) {
  std::vector<std::uint8_t> raw;
  for (std::uint32_t y = 0; y < h; ++y) {
    raw.push_back(0);
    for (std::uint32_t x = 0; x < 3 * w; ++x) raw.push_back(static_cast<std::uint8_t>(x * 40));
  }
  std::vector<std::uint8_t> z = {0x78, 0x01, 1};
  const auto len = static_cast<std::uint16_t>(raw.size());
  z.insert(z.end(), {static_cast<std::uint8_t>(len & 0xFF), static_cast<std::uint8_t>(len >> 8),
                     static_cast<std::uint8_t>(~len & 0xFF), static_cast<std::uint8_t>((~len >> 8) & 0xFF)});
  z.insert(z.end(), raw.begin(), raw.end());
  put_be32(z, adler32(raw));
  std::vector<std::uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  std::vector<std::uint8_t> ihdr;
  put_be32(ihdr, w);
  put_be32(ihdr, h);
  ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});
  chunk(out, "IHDR", ihdr);
  chunk(out, "IDAT", z);
  chunk(out, "IEND", {});
  return out;
}

}  // namespace png_oracle

// Canonical 16-bit mono PCM WAV with n zero samples.
inline std::vector<std::uint8_t> wav_bytes(std::uint32_t n, std::uint32_t rate = 16000) {
  std::vector<std::uint8_t> out = {'R', 'I', 'F', 'F'};
  bytes::put_u32le(out, 36 + 2 * n);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  bytes::put_u32le(out, 16);
  out.insert(out.end(), {1, 0, 1, 0});
  bytes::put_u32le(out, rate);
  bytes::put_u32le(out, rate * 2);
  out.insert(out.end(), {2, 0, 16, 0});
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  bytes::put_u32le(out, 2 * n);
  out.resize(out.size() + 2 * n, 0);
  return out;
}

}  // namespace avsz::testing
