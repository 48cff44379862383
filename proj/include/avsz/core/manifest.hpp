#pragma once

// Dataset manifests: one JSON object per line with keys sample_id, image,
// audio, gt_mask and optional dataset_tag. Paths are relative to the
// manifest's directory. Image and audio metadata come from the optional
// keys width/height and audio_num_samples/audio_sample_rate, else from
// the asset headers.

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/core/mask_codec.hpp"
#include "avsz/core/media_probe.hpp"
#include "avsz/core/types.hpp"
#include "avsz/error.hpp"

namespace avsz {

struct ManifestOptions {
  // Require every referenced asset (image, audio, GT mask) to exist.
  bool strict = false;
};

struct Warning {
  std::string sample_id;
  std::string message;
};

inline constexpr const char* kEmptyGtWarning = "empty GT; excluded from metrics";

namespace detail {

inline std::string required_string(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw Error(Errc::kParseError,
                "line " + std::to_string(line) + ": missing or non-string key '" + key + "'");
  }
  return it->get<std::string>();
}

template <typename T>
std::optional<T> optional_uint(const nlohmann::json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end()) return std::nullopt;
  if (!it->is_number_unsigned()) {
    throw Error(Errc::kParseError,
                "line " + std::to_string(line) + ": key '" + key + "' must be a non-negative integer");
  }
  return it->get<T>();
}

}  // namespace detail

inline std::vector<Sample> load_manifest(const std::filesystem::path& path,
                                         const ManifestOptions& options = {}) {
  namespace fs = std::filesystem;
  std::ifstream in(path);
  if (!in) throw Error(Errc::kMissingFile, "cannot open manifest " + path.string());
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");

  std::vector<Sample> samples;
  std::unordered_set<std::string> seen;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::kParseError, "line " + std::to_string(line) + ": " + e.what());
    }
    if (!rec.is_object()) {
      throw Error(Errc::kParseError, "line " + std::to_string(line) + ": record is not an object");
    }

    Sample s;
    s.sample_id = detail::required_string(rec, "sample_id", line);
    s.image.path = base / detail::required_string(rec, "image", line);
    s.audio.path = base / detail::required_string(rec, "audio", line);
    s.gt_mask = base / detail::required_string(rec, "gt_mask", line);
    if (auto it = rec.find("dataset_tag"); it != rec.end()) {
      if (!it->is_string()) {
        throw Error(Errc::kParseError, "line " + std::to_string(line) + ": dataset_tag must be a string");
      }
      s.dataset_tag = it->get<std::string>();
    }
    if (!seen.insert(s.sample_id).second) {
      throw Error(Errc::kDuplicateId,
                  "line " + std::to_string(line) + ": sample_id '" + s.sample_id + "' repeated");
    }

    if (options.strict) {
      for (const fs::path* p : {&s.image.path, &s.audio.path, &s.gt_mask}) {
        if (!fs::exists(*p)) {
          throw Error(Errc::kMissingFile, "line " + std::to_string(line) + ": " + p->string());
        }
      }
    }

    const auto width = detail::optional_uint<std::uint32_t>(rec, "width", line);
    const auto height = detail::optional_uint<std::uint32_t>(rec, "height", line);
    if (width && height) {
      s.image.width = *width;
      s.image.height = *height;
    } else if (auto size = probe_image_size(s.image.path)) {
      s.image.width = size->width;
      s.image.height = size->height;
    }
    if (s.image.width < 1 || s.image.height < 1) {
      throw Error(Errc::kParseError, "line " + std::to_string(line) +
                                         ": cannot determine image dimensions for " +
                                         s.image.path.string());
    }

    const auto num_samples = detail::optional_uint<std::uint64_t>(rec, "audio_num_samples", line);
    const auto sample_rate = detail::optional_uint<std::uint32_t>(rec, "audio_sample_rate", line);
    if (num_samples) {
      s.audio.num_samples = *num_samples;
      s.audio.sample_rate = sample_rate.value_or(0);
    } else if (auto wav = probe_wav(s.audio.path)) {
      s.audio.num_samples = wav->num_samples;
      s.audio.sample_rate = sample_rate.value_or(wav->sample_rate);
    }
    if (s.audio.num_samples < 1) {
      throw Error(Errc::kParseError, "line " + std::to_string(line) +
                                         ": cannot determine audio length for " +
                                         s.audio.path.string());
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

// Never throws; unreadable GT is reported as a warning too.
inline std::vector<Warning> validate_sample(const Sample& sample) {
  std::vector<Warning> warnings;
  Mask gt;
  try {
    gt = decode_mask(sample.gt_mask);
  } catch (const Error& e) {
    warnings.push_back({sample.sample_id, std::string("GT unreadable: ") + e.detail()});
    return warnings;
  }
  if (gt.count() == 0) warnings.push_back({sample.sample_id, kEmptyGtWarning});
  if (gt.width() != sample.image.width || gt.height() != sample.image.height) {
    warnings.push_back({sample.sample_id,
                        "dimension mismatch: GT " + std::to_string(gt.width()) + "x" +
                            std::to_string(gt.height()) + " vs image " +
                            std::to_string(sample.image.width) + "x" +
                            std::to_string(sample.image.height)});
  }
  return warnings;
}

}  // namespace avsz
