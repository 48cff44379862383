#pragma once

// AVSS score-map encoding: "AVSS", u32le width, u32le height, then
// width*height IEEE-754 binary32 little-endian values, row-major.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <span>
#include <vector>

#include "avsz/core/bytes.hpp"
#include "avsz/core/types.hpp"
#include "avsz/error.hpp"

namespace avsz::bridge {

inline constexpr char kAvssMagic[4] = {'A', 'V', 'S', 'S'};

inline bytes::Buffer encode_scoremap(const ScoreMap& map) {
  if (map.empty()) throw Error(Errc::kInvalidArgument, "cannot encode an empty score map");
  bytes::Buffer out(kAvssMagic, kAvssMagic + 4);
  out.reserve(12 + 4 * map.size());
  bytes::put_u32le(out, map.width());
  bytes::put_u32le(out, map.height());
  for (float v : map.scores()) bytes::put_u32le(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline ScoreMap decode_scoremap(std::span<const std::uint8_t> data) {
  if (data.size() < 12 || std::memcmp(data.data(), kAvssMagic, 4) != 0) {
    throw Error(Errc::kDecodeError, "missing AVSS header");
  }
  const std::uint32_t width = bytes::get_u32le(data, 4);
  const std::uint32_t height = bytes::get_u32le(data, 8);
  if (width < 1 || height < 1) throw Error(Errc::kDecodeError, "AVSS dimensions must be >= 1");
  const std::uint64_t expected = 12 + 4ull * width * height;
  if (data.size() != expected) {
    throw Error(Errc::kDecodeError, "AVSS stream is " + std::to_string(data.size()) +
                                        " bytes, header implies " + std::to_string(expected));
  }
  std::vector<float> scores(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = std::bit_cast<float>(bytes::get_u32le(data, 12 + 4 * i));
  }
  return ScoreMap(width, height, std::move(scores));  // range-checked
}

inline ScoreMap read_scoremap(const std::filesystem::path& path) {
  return decode_scoremap(bytes::read_file(path));
}

inline void write_scoremap(const ScoreMap& map, const std::filesystem::path& path) {
  bytes::write_file_atomic(path, encode_scoremap(map));
}

}  // namespace avsz::bridge
