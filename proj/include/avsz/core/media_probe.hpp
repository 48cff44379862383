#pragma once

// Header-only probes for asset metadata. No pixel or sample decoding.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <vector>

#include "avsz/core/bytes.hpp"
#include "avsz/core/mask_codec.hpp"

namespace avsz {

struct ImageSize {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

struct WavInfo {
  std::uint64_t num_samples = 0;
  std::uint32_t sample_rate = 0;
};

namespace detail {

inline std::vector<std::uint8_t> read_prefix(const std::filesystem::path& path, std::size_t n) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::vector<std::uint8_t> buf(n);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
  buf.resize(static_cast<std::size_t>(in.gcount()));
  return buf;
}

inline std::optional<ImageSize> probe_jpeg(std::span<const std::uint8_t> d) {
  std::size_t i = 2;
  while (i + 9 < d.size()) {
    if (d[i] != 0xFF) return std::nullopt;
    const std::uint8_t marker = d[i + 1];
    if (marker == 0xFF) {
      ++i;
      continue;
    }
    const std::size_t seg_len = (static_cast<std::size_t>(d[i + 2]) << 8) | d[i + 3];
    const bool is_sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 &&
                        marker != 0xCC;
    if (is_sof) {
      const std::uint32_t h = (static_cast<std::uint32_t>(d[i + 5]) << 8) | d[i + 6];
      const std::uint32_t w = (static_cast<std::uint32_t>(d[i + 7]) << 8) | d[i + 8];
      return ImageSize{w, h};
    }
    i += 2 + seg_len;
  }
  return std::nullopt;
}

}  // namespace detail

// PNG, JPEG and AVSM are recognised. Returns nullopt for anything else.
inline std::optional<ImageSize> probe_image_size(const std::filesystem::path& path) {
  const auto head = detail::read_prefix(path, 1 << 16);
  if (head.size() >= 24 && std::memcmp(head.data(), kPngMagic, 8) == 0) {
    return ImageSize{bytes::get_u32be(head, 16), bytes::get_u32be(head, 20)};
  }
  if (head.size() >= 12 && std::memcmp(head.data(), kAvsmMagic, 4) == 0) {
    return ImageSize{bytes::get_u32le(head, 4), bytes::get_u32le(head, 8)};
  }
  if (head.size() >= 4 && head[0] == 0xFF && head[1] == 0xD8) return detail::probe_jpeg(head);
  return std::nullopt;
}

// RIFF/WAVE: frames = data bytes / block_align.
inline std::optional<WavInfo> probe_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::uint8_t riff[12];
  if (!in.read(reinterpret_cast<char*>(riff), 12)) return std::nullopt;
  if (std::memcmp(riff, "RIFF", 4) != 0 || std::memcmp(riff + 8, "WAVE", 4) != 0) return std::nullopt;

  std::uint32_t sample_rate = 0;
  std::uint16_t block_align = 0;
  std::uint8_t header[8];
  while (in.read(reinterpret_cast<char*>(header), 8)) {
    const std::uint32_t size = bytes::get_u32le(header, 4);
    if (std::memcmp(header, "fmt ", 4) == 0) {
      std::vector<std::uint8_t> fmt(size);
      if (size < 16 || !in.read(reinterpret_cast<char*>(fmt.data()), size)) return std::nullopt;
      sample_rate = bytes::get_u32le(fmt, 4);
      block_align = bytes::get_u16le(fmt, 12);
      if (size % 2) in.ignore(1);
    } else if (std::memcmp(header, "data", 4) == 0) {
      if (block_align == 0) return std::nullopt;
      return WavInfo{size / block_align, sample_rate};
    } else {
      in.ignore(size + (size % 2));
    }
  }
  return std::nullopt;
}

}  // namespace avsz
