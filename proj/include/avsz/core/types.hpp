#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avsz/error.hpp"

namespace avsz {

struct ImageRef {
  std::filesystem::path path;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

// Audio is an opaque payload for the engine; only backends decode it.
struct AudioRef {
  std::filesystem::path path;
  std::uint64_t num_samples = 0;
  std::uint32_t sample_rate = 0;
};

// Binary H×W bitmap, row-major, one byte per pixel holding 0 or 1.
class Mask {
 public:
  Mask() = default;

  // All-zero mask of the given size.
  Mask(std::uint32_t width, std::uint32_t height)
      : width_(width), height_(height), bits_(checked_area(width, height), 0) {}

  Mask(std::uint32_t width, std::uint32_t height, std::vector<std::uint8_t> bits)
      : width_(width), height_(height), bits_(std::move(bits)) {
    if (bits_.size() != checked_area(width, height)) {
      throw Error(Errc::kInvalidArgument, "mask bits length " + std::to_string(bits_.size()) +
                                              " != " + std::to_string(width) + "x" +
                                              std::to_string(height));
    }
    for (auto b : bits_) {
      if (b > 1) throw Error(Errc::kInvalidArgument, "mask bit outside {0,1}");
    }
  }

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return bits_.size(); }
  bool empty() const noexcept { return bits_.empty(); }

  std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return bits_[index(x, y)]; }
  void set(std::uint32_t x, std::uint32_t y, bool on) { bits_[index(x, y)] = on ? 1 : 0; }
  void set_index(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }

  std::span<const std::uint8_t> bits() const noexcept { return bits_; }

  std::size_t count() const noexcept {
    std::size_t n = 0;
    for (auto b : bits_) n += b;
    return n;
  }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  static std::size_t checked_area(std::uint32_t width, std::uint32_t height) {
    if (width < 1 || height < 1) {
      throw Error(Errc::kInvalidArgument, "mask dimensions must be >= 1, got " +
                                              std::to_string(width) + "x" + std::to_string(height));
    }
    return static_cast<std::size_t>(width) * height;
  }
  std::size_t index(std::uint32_t x, std::uint32_t y) const {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<std::uint8_t> bits_;
};

// Real-valued relevance map in [0,1] returned by a segmentation backend.
class ScoreMap {
 public:
  ScoreMap() = default;

  ScoreMap(std::uint32_t width, std::uint32_t height, std::vector<float> scores)
      : width_(width), height_(height), scores_(std::move(scores)) {
    if (width < 1 || height < 1) {
      throw Error(Errc::kInvalidArgument, "score map dimensions must be >= 1");
    }
    if (scores_.size() != static_cast<std::size_t>(width) * height) {
      throw Error(Errc::kInvalidArgument, "score map carries " + std::to_string(scores_.size()) +
                                              " values for " + std::to_string(width) + "x" +
                                              std::to_string(height));
    }
    for (std::size_t i = 0; i < scores_.size(); ++i) {
      const float s = scores_[i];
      if (!std::isfinite(s) || s < 0.0f || s > 1.0f) {
        throw Error(Errc::kRangeViolation,
                    "score " + std::to_string(s) + " at index " + std::to_string(i) +
                        " outside [0,1]");
      }
    }
  }

  std::uint32_t width() const noexcept { return width_; }
  std::uint32_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return scores_.size(); }
  bool empty() const noexcept { return scores_.empty(); }
  float at(std::uint32_t x, std::uint32_t y) const {
    return scores_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<const float> scores() const noexcept { return scores_; }

  // Bitwise equality (distinguishes -0.0f from 0.0f).
  friend bool operator==(const ScoreMap& a, const ScoreMap& b) {
    if (a.width_ != b.width_ || a.height_ != b.height_) return false;
    for (std::size_t i = 0; i < a.scores_.size(); ++i) {
      if (std::bit_cast<std::uint32_t>(a.scores_[i]) != std::bit_cast<std::uint32_t>(b.scores_[i]))
        return false;
    }
    return true;
  }

 private:
  std::uint32_t width_ = 0;
  std::uint32_t height_ = 0;
  std::vector<float> scores_;
};

struct Sample {
  std::string sample_id;
  ImageRef image;
  AudioRef audio;
  std::filesystem::path gt_mask;
  std::string dataset_tag;
};

}  // namespace avsz
