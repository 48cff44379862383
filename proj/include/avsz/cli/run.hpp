#pragma once

// `run`: every manifest sample through one strategy. Output directory:
//   records.jsonl    one record per sample, manifest order, no timings
//   timings.jsonl    per-stage milliseconds, same order
//   score_maps/      AVSS score maps referenced by the records
//   embeddings/      injected token embeddings (inversion only)

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/hash.hpp"
#include "avsz/bridge/roster.hpp"
#include "avsz/bridge/scoremap_codec.hpp"
#include "avsz/cli/config.hpp"
#include "avsz/core/bytes.hpp"
#include "avsz/core/manifest.hpp"
#include "avsz/engine/strategy.hpp"
#include "avsz/text/phrase_extractor.hpp"

namespace avsz::cli {

inline constexpr const char* kRecordsFile = "records.jsonl";
inline constexpr const char* kTimingsFile = "timings.jsonl";

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitAllFailed = 2 };

// Manifest-ordered results; samples are distributed over `workers` threads.
inline std::vector<engine::PredictionRecord> run_samples(engine::StrategyKind kind,
                                                         const std::vector<Sample>& samples,
                                                         const bridge::BackendSet& backends,
                                                         const engine::EngineConfig& config,
                                                         std::size_t workers) {
  std::vector<engine::PredictionRecord> out(samples.size());
  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      out[i] = engine::run_sample(kind, samples[i], backends, config);
    }
  };
  workers = std::max<std::size_t>(1, std::min(workers, samples.size()));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

// File-name-safe stem: manifest position plus the id with unsafe bytes
// replaced, so distinct samples never collide.
inline std::string artifact_stem(std::size_t index, const std::string& sample_id) {
  std::string safe;
  for (unsigned char c : sample_id) safe.push_back(std::isalnum(c) || c == '-' || c == '_' || c == '.' ? c : '_');
  char prefix[16];
  std::snprintf(prefix, sizeof(prefix), "%05zu_", index);
  return prefix + safe;
}

inline void write_outputs(std::vector<engine::PredictionRecord>& records, const fs::path& dir) {
  fs::create_directories(dir);
  std::string lines;
  std::string timings;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& rec = records[i];
    const std::string stem = artifact_stem(i, rec.sample_id);
    if (rec.score_map) {
      rec.score_map_ref = "score_maps/" + stem + ".avss";
      bridge::write_scoremap(*rec.score_map, dir / rec.score_map_ref);
    }
    if (rec.embedding) {
      rec.embedding_ref = "embeddings/" + stem + ".json";
      const std::string payload = bridge::tokens_payload(*rec.embedding);
      rec.embedding_sha256 = bridge::sha256_hex(payload);
      bytes::write_text_atomic(dir / rec.embedding_ref, payload);
    }
    lines += engine::record_to_json(rec).dump() + "\n";
    timings += nlohmann::json{{"sample_id", rec.sample_id}, {"timings", engine::timings_json(rec)}}.dump() + "\n";
  }
  bytes::write_text_atomic(dir / kRecordsFile, lines);
  bytes::write_text_atomic(dir / kTimingsFile, timings);
}

inline engine::EngineConfig engine_config(const RunConfig& cfg, const text::ChunkerLexicon* lexicon) {
  engine::EngineConfig ec;
  ec.prompt = engine::PromptTemplate(cfg.prompt_template);
  ec.inversion = cfg.inversion_config;
  ec.token_dim = cfg.token_dim;
  ec.encoder_seed = cfg.encoder_seed;
  ec.lexicon = lexicon;
  return ec;
}

// Runs with an already-assembled backend set (tests inject mocks here).
inline int run_with_backends(const RunConfig& cfg, bridge::BackendSet backends, std::ostream& log) {
  std::vector<Sample> samples;
  std::optional<text::ChunkerLexicon> lexicon;
  try {
    cfg.validate();
    samples = load_manifest(cfg.manifest, ManifestOptions{cfg.strict_manifest});
    if (samples.empty()) throw Error(Errc::kConfigError, "manifest has no samples");
    if (cfg.lexicon) lexicon = text::load_lexicon(*cfg.lexicon);
    engine::preflight(cfg.strategy, backends);
    if (cfg.use_cache) {
      backends.set_cache(bridge::ResponseCache(bridge::resolve_cache_dir(cfg.cache_dir, cfg.output / "cache")));
    }
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto records = run_samples(cfg.strategy, samples, backends, engine_config(cfg, lexicon ? &*lexicon : nullptr),
                             cfg.workers);
  try {
    write_outputs(records, cfg.output);
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::size_t ok = 0;
  for (const auto& r : records) {
    if (r.ok()) {
      ++ok;
    } else {
      log << "sample " << r.sample_id << " failed: " << errc_name(r.error->code) << ": " << r.error->message << "\n";
    }
  }
  log << ok << "/" << records.size() << " samples succeeded; records in " << (cfg.output / kRecordsFile).string()
      << "\n";
  return ok > 0 ? kExitOk : kExitAllFailed;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& log) {
  bridge::BackendSet backends;
  try {
    if (cfg.backend_roster.empty()) throw Error(Errc::kConfigError, "backend roster path is required");
    backends = bridge::make_backend_set(bridge::load_roster(cfg.backend_roster));
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return run_with_backends(cfg, std::move(backends), log);
}

}  // namespace avsz::cli
