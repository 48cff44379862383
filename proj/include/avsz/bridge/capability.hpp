#pragma once

#include <array>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "avsz/error.hpp"

namespace avsz::bridge {

// One named model function reachable over the wire protocol.
enum class Capability {
  kAudioClassify,
  kAudioCaption,
  kImageCaption,
  kAudioClassifyOpenVocab,
  kImageClassifyOpenVocab,
  kAudioEmbed,
  kRisSegment,
  kRisSegmentEmbedding,
  kTextEncodeGrad,  // optional
  kNlpChunk,        // optional
};

inline constexpr std::array<Capability, 10> kAllCapabilities = {
    Capability::kAudioClassify,          Capability::kAudioCaption,
    Capability::kImageCaption,           Capability::kAudioClassifyOpenVocab,
    Capability::kImageClassifyOpenVocab, Capability::kAudioEmbed,
    Capability::kRisSegment,             Capability::kRisSegmentEmbedding,
    Capability::kTextEncodeGrad,         Capability::kNlpChunk,
};

inline constexpr std::string_view to_string(Capability c) {
  switch (c) {
    case Capability::kAudioClassify: return "audio_classify";
    case Capability::kAudioCaption: return "audio_caption";
    case Capability::kImageCaption: return "image_caption";
    case Capability::kAudioClassifyOpenVocab: return "audio_classify_openvocab";
    case Capability::kImageClassifyOpenVocab: return "image_classify_openvocab";
    case Capability::kAudioEmbed: return "audio_embed";
    case Capability::kRisSegment: return "ris_segment";
    case Capability::kRisSegmentEmbedding: return "ris_segment_embedding";
    case Capability::kTextEncodeGrad: return "text_encode_grad";
    case Capability::kNlpChunk: return "nlp_chunk";
  }
  return "unknown";
}

inline std::optional<Capability> capability_from_string(std::string_view name) {
  for (Capability c : kAllCapabilities) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

inline Capability parse_capability(std::string_view name) {
  if (auto c = capability_from_string(name)) return *c;
  throw Error(Errc::kParseError, "unknown capability '" + std::string(name) + "'");
}

// Request parts each capability requires. Optional parts are not listed.
inline std::vector<std::string_view> required_parts(Capability c) {
  switch (c) {
    case Capability::kAudioClassify:
    case Capability::kAudioCaption:
    case Capability::kAudioEmbed:
      return {"audio"};
    case Capability::kImageCaption:
      return {"image"};
    case Capability::kAudioClassifyOpenVocab:
      return {"audio", "candidates"};
    case Capability::kImageClassifyOpenVocab:
      return {"image", "candidates"};
    case Capability::kRisSegment:
      return {"image", "text"};
    case Capability::kRisSegmentEmbedding:
      return {"image", "embedding"};
    case Capability::kTextEncodeGrad:
      return {"tokens"};
    case Capability::kNlpChunk:
      return {"text"};
  }
  return {};
}

struct BackendInfo {
  std::string name;
  std::string version;
  std::set<Capability> capabilities;
  // Binarization threshold of the backend's segmentation model, used for
  // the thresholded J/F metrics.
  std::optional<double> ris_threshold;

  bool supports(Capability c) const { return capabilities.contains(c); }
};

}  // namespace avsz::bridge
