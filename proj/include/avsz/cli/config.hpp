#pragma once

// Run configuration: defaults, then a config file, then explicit flags.

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "avsz/core/bytes.hpp"
#include "avsz/core/keyvalue.hpp"
#include "avsz/engine/prompt.hpp"
#include "avsz/engine/record.hpp"
#include "avsz/inversion/encoder.hpp"
#include "avsz/inversion/invert.hpp"
#include "avsz/metrics/metrics.hpp"

namespace avsz::cli {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path manifest;
  engine::StrategyKind strategy = engine::StrategyKind::kClassification;
  fs::path backend_roster;
  std::optional<fs::path> cache_dir;  // unset: $AVSZ_CACHE_DIR, else <output>/cache
  bool use_cache = true;
  std::size_t workers = 1;
  fs::path output;
  bool strict_manifest = true;
  metrics::MetricConfig metric_config;
  inversion::InversionConfig inversion_config;
  std::size_t token_dim = inversion::kToyTokenDim;
  std::uint64_t encoder_seed = 0;
  std::string prompt_template{engine::kDefaultPromptTemplate};
  std::optional<fs::path> lexicon;

  void validate() const {
    if (manifest.empty()) throw Error(Errc::kConfigError, "manifest path is required");
    if (backend_roster.empty()) throw Error(Errc::kConfigError, "backend roster path is required");
    if (output.empty()) throw Error(Errc::kConfigError, "output directory is required");
    if (workers < 1) throw Error(Errc::kConfigError, "workers must be >= 1");
    if (token_dim < 1) throw Error(Errc::kConfigError, "inversion.token_dim must be >= 1");
    if (!fs::exists(manifest)) throw Error(Errc::kConfigError, "manifest not found: " + manifest.string());
    if (!fs::exists(backend_roster)) throw Error(Errc::kConfigError, "roster not found: " + backend_roster.string());
    if (lexicon && !fs::exists(*lexicon)) throw Error(Errc::kConfigError, "lexicon not found: " + lexicon->string());
    engine::PromptTemplate{prompt_template};
    inversion_config.validate();
    validate_metric_config(metric_config);
  }

  static void validate_metric_config(const metrics::MetricConfig& m) {
    metrics::auc_intervals(m.auc_step);
    if (!(m.beta_squared > 0.0)) throw Error(Errc::kConfigError, "metrics.beta_squared must be > 0");
    if (!(m.jf_threshold >= 0.0 && m.jf_threshold <= 1.0)) {
      throw Error(Errc::kConfigError, "metrics.jf_threshold must be in [0,1]");
    }
  }
};

namespace detail {

inline Error bad_type(const std::string& key, const char* kind) {
  return Error(Errc::kConfigError, "config key '" + key + "' must be " + kind);
}

inline std::string as_string(const std::string& key, const kv::Value& v) {
  if (auto p = std::get_if<std::string>(&v)) return *p;
  throw bad_type(key, "a string");
}

inline double as_number(const std::string& key, const kv::Value& v) {
  if (auto p = std::get_if<double>(&v)) return *p;
  throw bad_type(key, "a number");
}

inline std::uint64_t as_count(const std::string& key, const kv::Value& v) {
  const double d = as_number(key, v);
  if (!(d >= 0.0) || d != static_cast<double>(static_cast<std::uint64_t>(d))) {
    throw bad_type(key, "a non-negative integer");
  }
  return static_cast<std::uint64_t>(d);
}

inline bool as_bool(const std::string& key, const kv::Value& v) {
  if (auto p = std::get_if<bool>(&v)) return *p;
  throw bad_type(key, "true or false");
}

}  // namespace detail

// Applies `key = value` settings; relative paths resolve against base_dir.
// Unknown keys are errors so typos do not silently fall back to defaults.
inline void apply_settings(RunConfig& cfg, const std::map<std::string, kv::Entry>& settings,
                           const fs::path& base_dir) {
  using namespace detail;
  const auto path = [&](const std::string& key, const kv::Value& v) {
    const fs::path p = as_string(key, v);
    return p.is_absolute() ? p : base_dir / p;
  };
  for (const auto& [key, entry] : settings) {
    const kv::Value& v = entry.value;
    if (key == "manifest") cfg.manifest = path(key, v);
    else if (key == "strategy") cfg.strategy = engine::parse_strategy(as_string(key, v));
    else if (key == "backend_roster" || key == "roster") cfg.backend_roster = path(key, v);
    else if (key == "cache_dir") cfg.cache_dir = path(key, v);
    else if (key == "no_cache") cfg.use_cache = !as_bool(key, v);
    else if (key == "workers") cfg.workers = as_count(key, v);
    else if (key == "output") cfg.output = path(key, v);
    else if (key == "strict") cfg.strict_manifest = as_bool(key, v);
    else if (key == "prompt_template") cfg.prompt_template = as_string(key, v);
    else if (key == "lexicon") cfg.lexicon = path(key, v);
    else if (key == "metrics.beta_squared") cfg.metric_config.beta_squared = as_number(key, v);
    else if (key == "metrics.auc_step") cfg.metric_config.auc_step = as_number(key, v);
    else if (key == "metrics.jf_threshold") cfg.metric_config.jf_threshold = as_number(key, v);
    else if (key == "metrics.ciou_strict") cfg.metric_config.ciou_strict = as_bool(key, v);
    else if (key == "inversion.num_tokens") cfg.inversion_config.num_tokens = as_count(key, v);
    else if (key == "inversion.step_size") cfg.inversion_config.step_size = as_number(key, v);
    else if (key == "inversion.max_iters") cfg.inversion_config.max_iters = as_count(key, v);
    else if (key == "inversion.tol") cfg.inversion_config.tol = as_number(key, v);
    else if (key == "inversion.seed") cfg.inversion_config.seed = as_count(key, v);
    else if (key == "inversion.init_stddev") cfg.inversion_config.init_stddev = as_number(key, v);
    else if (key == "inversion.token_dim") cfg.token_dim = as_count(key, v);
    else if (key == "inversion.encoder_seed") cfg.encoder_seed = as_count(key, v);
    else throw Error(Errc::kConfigError, "line " + std::to_string(entry.line) + ": unknown config key '" + key + "'");
  }
}

inline void load_config_file(RunConfig& cfg, const fs::path& file) {
  std::string text;
  try {
    text = bytes::read_text(file);
  } catch (const Error& e) {
    throw Error(Errc::kConfigError, e.detail());
  }
  std::map<std::string, kv::Entry> settings;
  try {
    settings = kv::flatten(kv::parse(text));
  } catch (const Error& e) {
    throw Error(Errc::kConfigError, file.string() + ": " + e.detail());
  }
  apply_settings(cfg, settings, file.has_parent_path() ? file.parent_path() : fs::path("."));
}

}  // namespace avsz::cli
