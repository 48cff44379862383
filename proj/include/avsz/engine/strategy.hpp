#pragma once

// The five bridging strategies. Each turns one sample into referring text
// (or injected token embeddings) and calls the segmentation capability
// exactly once.

#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "avsz/bridge/roster.hpp"
#include "avsz/core/bytes.hpp"
#include "avsz/core/types.hpp"
#include "avsz/engine/prompt.hpp"
#include "avsz/engine/record.hpp"
#include "avsz/engine/remote_encoder.hpp"
#include "avsz/inversion/encoder.hpp"
#include "avsz/inversion/invert.hpp"
#include "avsz/text/default_lexicon.hpp"

namespace avsz::engine {

using bridge::BackendSet;
using bridge::Capability;

struct EngineConfig {
  PromptTemplate prompt;
  inversion::InversionConfig inversion;
  // Pseudo-token width for inversion (toy or remote encoder).
  std::size_t token_dim = inversion::kToyTokenDim;
  std::uint64_t encoder_seed = 0;
  const text::ChunkerLexicon* lexicon = nullptr;  // null: built-in lexicon
};

// Capabilities a strategy cannot run without. Fallback paths are not
// included; a missing fallback capability fails only the affected sample.
inline std::vector<Capability> required_capabilities(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::kClassification:
      return {Capability::kAudioClassify, Capability::kRisSegment};
    case StrategyKind::kCaptioning:
      return {Capability::kAudioCaption, Capability::kRisSegment};
    case StrategyKind::kInversion:
      return {Capability::kAudioEmbed, Capability::kRisSegmentEmbedding};
    case StrategyKind::kVcapAcls:
      return {Capability::kImageCaption, Capability::kAudioClassifyOpenVocab, Capability::kRisSegment};
    case StrategyKind::kAcapVcls:
      return {Capability::kAudioCaption, Capability::kImageClassifyOpenVocab, Capability::kRisSegment};
  }
  return {};
}

// Throws UnsupportedCapability naming every missing capability.
inline void preflight(StrategyKind kind, const BackendSet& backends) {
  std::string missing;
  for (Capability c : required_capabilities(kind)) {
    if (!backends.has(c)) missing += (missing.empty() ? "" : ", ") + std::string(bridge::to_string(c));
  }
  if (!missing.empty()) {
    throw Error(Errc::kUnsupportedCapability,
                "strategy " + std::string(cli_name(kind)) + " needs " + missing + " but no backend provides it");
  }
}

namespace detail {

class SampleContext {
 public:
  SampleContext(const Sample& sample, const BackendSet& backends, const EngineConfig& config,
                PredictionRecord& record)
      : sample_(sample), backends_(backends), config_(config), record_(record) {}

  const Sample& sample() const { return sample_; }
  const BackendSet& backends() const { return backends_; }
  const EngineConfig& config() const { return config_; }
  PredictionRecord& record() { return record_; }

  const text::ChunkerLexicon& lexicon() const {
    return config_.lexicon ? *config_.lexicon : text::default_lexicon();
  }

  bridge::CapabilityRequest request(Capability c) const {
    bridge::CapabilityRequest req;
    req.capability = c;
    req.sample_id = sample_.sample_id;
    return req;
  }

  const bytes::Buffer& image() {
    if (!image_) image_ = bytes::read_file(sample_.image.path);
    return *image_;
  }
  const bytes::Buffer& audio() {
    if (!audio_) audio_ = bytes::read_file(sample_.audio.path);
    return *audio_;
  }

  // Validated response body; time is charged to the capability's stage.
  json invoke(const bridge::CapabilityRequest& req) {
    Stopwatch watch(*this, std::string(bridge::to_string(req.capability)));
    return backends_.invoke(req).response.body;
  }

  class Stopwatch {
   public:
    Stopwatch(SampleContext& ctx, std::string stage)
        : ctx_(ctx), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
    ~Stopwatch() {
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
      ctx_.add_time(stage_, ms);
    }
    Stopwatch(const Stopwatch&) = delete;
    Stopwatch& operator=(const Stopwatch&) = delete;

   private:
    SampleContext& ctx_;
    std::string stage_;
    std::chrono::steady_clock::time_point start_;
  };

  void add_time(const std::string& stage, double ms) {
    for (auto& [name, total] : record_.timings) {
      if (name == stage) {
        total += ms;
        return;
      }
    }
    record_.timings.emplace_back(stage, ms);
  }

 private:
  const Sample& sample_;
  const BackendSet& backends_;
  const EngineConfig& config_;
  PredictionRecord& record_;
  std::optional<bytes::Buffer> image_;
  std::optional<bytes::Buffer> audio_;
};

inline std::optional<double> threshold_of(const BackendSet& backends, Capability c) {
  auto backend = backends.route(c);
  return backend ? backend->info().ris_threshold : std::nullopt;
}

// Final stage for text strategies.
inline void segment_text(SampleContext& ctx, const std::string& referring_text) {
  auto req = ctx.request(Capability::kRisSegment);
  req.with_binary("image", ctx.image()).with_text("text", referring_text);
  const json body = ctx.invoke(req);
  auto& rec = ctx.record();
  rec.derived_text = referring_text;
  rec.score_map = bridge::body_scoremap(Capability::kRisSegment, body);
  rec.ris_threshold = threshold_of(ctx.backends(), Capability::kRisSegment);
}

inline bridge::RankedLabel top_label(SampleContext& ctx) {
  auto req = ctx.request(Capability::kAudioClassify);
  req.with_binary("audio", ctx.audio());
  const auto labels = bridge::body_ranked_labels(Capability::kAudioClassify, ctx.invoke(req));
  if (labels.empty()) throw Error(Errc::kBackendError, "audio_classify: empty");
  const bridge::RankedLabel* best = &labels.front();
  for (const auto& l : labels) {
    if (l.score > best->score) best = &l;
  }
  return *best;
}

inline std::string fetch_caption(SampleContext& ctx, Capability c) {
  auto req = ctx.request(c);
  if (c == Capability::kImageCaption) {
    req.with_binary("image", ctx.image());
  } else {
    req.with_binary("audio", ctx.audio());
  }
  return bridge::body_text(c, ctx.invoke(req));
}

inline void classification_path(SampleContext& ctx) {
  const auto top = top_label(ctx);
  auto& rec = ctx.record();
  rec.label = normalize_label(top.label);
  rec.label_score = top.score;
  segment_text(ctx, build_prompt(top.label, ctx.config().prompt));
}

// The caption goes to RIS as-is apart from whitespace cleanup.
inline void captioning_path(SampleContext& ctx, const std::string& caption) {
  ctx.record().caption = caption;
  const std::string d = normalize_referring_text(caption, false);
  if (d.empty()) throw Error(Errc::kEmptyCaption, "caption for '" + ctx.sample().sample_id + "' is empty");
  segment_text(ctx, d);
}

inline std::vector<text::Candidate> candidates_from(SampleContext& ctx, const std::string& caption) {
  if (!ctx.backends().has(Capability::kNlpChunk)) return text::extract_noun_phrases(caption, ctx.lexicon());
  auto req = ctx.request(Capability::kNlpChunk);
  req.with_text("text", caption);
  const auto phrases = bridge::body_phrases(Capability::kNlpChunk, ctx.invoke(req));
  const std::string lowered = text::detail::lower(caption);
  std::vector<text::Candidate> out;
  std::unordered_set<std::string> seen;
  for (const auto& p : phrases) {
    std::string phrase = text::normalize_phrase(p, ctx.lexicon());
    if (phrase.empty() || !seen.insert(phrase).second) continue;
    const auto at = lowered.find(phrase);
    const std::size_t begin = at == std::string::npos ? 0 : at;
    const std::size_t end = at == std::string::npos ? 0 : at + phrase.size();
    out.push_back({std::move(phrase), begin, end});
  }
  return out;
}

// Scores the caption's candidates with the other modality's open-vocabulary
// classifier. Winner: highest raw score, earliest candidate on ties.
inline void verified_path(SampleContext& ctx, Capability caption_cap, Capability scorer_cap) {
  const std::string caption = fetch_caption(ctx, caption_cap);
  auto& rec = ctx.record();
  rec.caption = caption;
  VerificationTrace trace;
  trace.caption = caption;
  {
    SampleContext::Stopwatch watch(ctx, "chunk");
    trace.candidates = candidates_from(ctx, caption);
  }

  if (trace.candidates.empty()) {
    trace.fallback_used = true;
    rec.verification = trace;
    if (scorer_cap == Capability::kAudioClassifyOpenVocab) {
      classification_path(ctx);
      rec.verification->winner = rec.label.value_or("");
    } else {
      captioning_path(ctx, caption);
    }
    return;
  }

  std::vector<std::string> phrases;
  for (const auto& c : trace.candidates) phrases.push_back(c.phrase);
  auto req = ctx.request(scorer_cap);
  if (scorer_cap == Capability::kAudioClassifyOpenVocab) {
    req.with_binary("audio", ctx.audio());
  } else {
    req.with_binary("image", ctx.image());
  }
  req.with_text("candidates", bridge::candidates_payload(phrases));
  const auto scores = bridge::body_scores(scorer_cap, ctx.invoke(req), phrases.size());

  std::size_t best = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    trace.candidate_scores.emplace_back(phrases[i], scores[i]);
    if (scores[i] > scores[best]) best = i;
  }
  trace.winner = phrases[best];
  rec.label = trace.winner;
  rec.label_score = scores[best];
  rec.verification = std::move(trace);
  segment_text(ctx, build_prompt(rec.label.value(), ctx.config().prompt));
}

}  // namespace detail

namespace detail {

inline void inversion_path(SampleContext& ctx) {
  const auto& backends = ctx.backends();
  if (!backends.has(Capability::kRisSegmentEmbedding)) {
    throw Error(Errc::kUnsupportedCapability, "no backend accepts injected embeddings (ris_segment_embedding)");
  }
  auto req = ctx.request(Capability::kAudioEmbed);
  req.with_binary("audio", ctx.audio());
  const auto target = bridge::body_embedding(Capability::kAudioEmbed, ctx.invoke(req));

  const auto& cfg = ctx.config();
  std::unique_ptr<inversion::DifferentiableEncoder> encoder;
  std::string encoder_name;
  if (backends.has(Capability::kTextEncodeGrad)) {
    encoder = std::make_unique<RemoteEncoder>(backends, ctx.sample().sample_id, cfg.token_dim, target.size());
    encoder_name = "remote";
  } else {
    encoder = std::make_unique<inversion::ToyEncoder>(cfg.encoder_seed, cfg.token_dim, target.size());
    encoder_name = "toy";
  }
  inversion::InversionResult result;
  {
    SampleContext::Stopwatch watch(ctx, "invert");
    result = inversion::invert(target, *encoder, cfg.inversion);
  }

  auto& rec = ctx.record();
  rec.inversion = InversionTrace{encoder_name, result.final_similarity, result.iters,
                                 result.tokens.num_tokens(), result.tokens.dim()};
  auto ris = ctx.request(Capability::kRisSegmentEmbedding);
  ris.with_binary("image", ctx.image()).with_text("embedding", bridge::tokens_payload(result.tokens));
  const json body = ctx.invoke(ris);
  rec.embedding = std::move(result.tokens);
  rec.score_map = bridge::body_scoremap(Capability::kRisSegmentEmbedding, body);
  rec.ris_threshold = threshold_of(backends, Capability::kRisSegmentEmbedding);
}

inline void run_into(StrategyKind kind, SampleContext& ctx) {
  switch (kind) {
    case StrategyKind::kClassification:
      classification_path(ctx);
      break;
    case StrategyKind::kCaptioning:
      captioning_path(ctx, fetch_caption(ctx, Capability::kAudioCaption));
      break;
    case StrategyKind::kInversion:
      inversion_path(ctx);
      break;
    case StrategyKind::kVcapAcls:
      verified_path(ctx, Capability::kImageCaption, Capability::kAudioClassifyOpenVocab);
      break;
    case StrategyKind::kAcapVcls:
      verified_path(ctx, Capability::kAudioCaption, Capability::kImageClassifyOpenVocab);
      break;
  }
}

}  // namespace detail

// Runs one strategy; errors propagate.
inline PredictionRecord run_strategy(StrategyKind kind, const Sample& sample, const BackendSet& backends,
                                     const EngineConfig& config = {}) {
  PredictionRecord rec;
  rec.sample_id = sample.sample_id;
  rec.strategy = kind;
  detail::SampleContext ctx(sample, backends, config, rec);
  detail::run_into(kind, ctx);
  return rec;
}

inline PredictionRecord run_classification(const Sample& s, const BackendSet& b, const EngineConfig& c = {}) {
  return run_strategy(StrategyKind::kClassification, s, b, c);
}
inline PredictionRecord run_captioning(const Sample& s, const BackendSet& b, const EngineConfig& c = {}) {
  return run_strategy(StrategyKind::kCaptioning, s, b, c);
}
inline PredictionRecord run_inversion(const Sample& s, const BackendSet& b, const EngineConfig& c = {}) {
  return run_strategy(StrategyKind::kInversion, s, b, c);
}
inline PredictionRecord run_vcap_acls(const Sample& s, const BackendSet& b, const EngineConfig& c = {}) {
  return run_strategy(StrategyKind::kVcapAcls, s, b, c);
}
inline PredictionRecord run_acap_vcls(const Sample& s, const BackendSet& b, const EngineConfig& c = {}) {
  return run_strategy(StrategyKind::kAcapVcls, s, b, c);
}

// Like run_strategy, but a failure becomes an error record that keeps
// whatever trace was gathered before the failing stage.
inline PredictionRecord run_sample(StrategyKind kind, const Sample& sample, const BackendSet& backends,
                                   const EngineConfig& config = {}) {
  PredictionRecord rec;
  rec.sample_id = sample.sample_id;
  rec.strategy = kind;
  detail::SampleContext ctx(sample, backends, config, rec);
  try {
    detail::run_into(kind, ctx);
  } catch (const Error& e) {
    rec.error = RecordError{e.code(), e.detail()};
  } catch (const std::exception& e) {
    rec.error = RecordError{Errc::kBackendError, e.what()};
  }
  if (rec.error) {
    rec.score_map.reset();
    rec.embedding.reset();
  }
  return rec;
}

}  // namespace avsz::engine
