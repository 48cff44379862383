#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "avsz/cli/config.hpp"
#include "avsz/cli/eval.hpp"
#include "avsz/cli/report.hpp"
#include "avsz/cli/run.hpp"
#include "avsz/core/bytes.hpp"

namespace {

namespace fs = std::filesystem;
using avsz::cli::RunConfig;

// Flag values; unset ones leave the config-file (or default) value alone.
struct MetricFlags {
  std::optional<double> beta_squared, auc_step, jf_threshold;
  std::optional<bool> ciou_strict;

  void add_to(CLI::App& app) {
    app.add_option("--metrics.beta_squared", beta_squared, "F-score beta^2 (default 0.3)");
    app.add_option("--metrics.auc_step", auc_step, "AUC threshold grid step (default 0.05)");
    app.add_option("--metrics.jf_threshold", jf_threshold, "J/F threshold when a record has none (default 0.5)");
    app.add_option("--metrics.ciou_strict", ciou_strict, "count IoU > 0.5 (true) or >= 0.5 (false)");
  }
  void apply(avsz::metrics::MetricConfig& m) const {
    if (beta_squared) m.beta_squared = *beta_squared;
    if (auc_step) m.auc_step = *auc_step;
    if (jf_threshold) m.jf_threshold = *jf_threshold;
    if (ciou_strict) m.ciou_strict = *ciou_strict;
  }
};

struct RunFlags {
  std::optional<std::string> config, manifest, strategy, roster, cache_dir, output, prompt_template, lexicon;
  std::optional<std::size_t> workers, num_tokens, max_iters, token_dim;
  std::optional<double> step_size, tol, init_stddev;
  std::optional<std::uint64_t> seed, encoder_seed;
  bool no_cache = false;
  bool lenient = false;
  MetricFlags metric;

  RunConfig resolve() const {
    RunConfig cfg;
    if (config) avsz::cli::load_config_file(cfg, *config);
    if (manifest) cfg.manifest = *manifest;
    if (strategy) cfg.strategy = avsz::engine::parse_strategy(*strategy);
    if (roster) cfg.backend_roster = *roster;
    if (cache_dir) cfg.cache_dir = fs::path(*cache_dir);
    if (no_cache) cfg.use_cache = false;
    if (workers) cfg.workers = *workers;
    if (output) cfg.output = *output;
    if (lenient) cfg.strict_manifest = false;
    if (prompt_template) cfg.prompt_template = *prompt_template;
    if (lexicon) cfg.lexicon = fs::path(*lexicon);
    if (num_tokens) cfg.inversion_config.num_tokens = *num_tokens;
    if (step_size) cfg.inversion_config.step_size = *step_size;
    if (max_iters) cfg.inversion_config.max_iters = *max_iters;
    if (tol) cfg.inversion_config.tol = *tol;
    if (seed) cfg.inversion_config.seed = *seed;
    if (init_stddev) cfg.inversion_config.init_stddev = *init_stddev;
    if (token_dim) cfg.token_dim = *token_dim;
    if (encoder_seed) cfg.encoder_seed = *encoder_seed;
    metric.apply(cfg.metric_config);
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot audiovisual segmentation pipeline and evaluation"};
  app.require_subcommand(1);

  RunFlags rf;
  auto* run = app.add_subcommand("run", "run a strategy over a manifest");
  run->add_option("--config", rf.config, "settings file (flags win)");
  run->add_option("--manifest", rf.manifest, "newline-delimited sample manifest");
  run->add_option("--strategy", rf.strategy, "classification|captioning|inversion|vcap-acls|acap-vcls");
  run->add_option("--roster,--backend-roster", rf.roster, "backend roster file");
  run->add_option("--cache-dir", rf.cache_dir, "response cache (default $AVSZ_CACHE_DIR, then <output>/cache)");
  run->add_flag("--no-cache", rf.no_cache, "disable the response cache");
  run->add_option("--workers", rf.workers, "samples processed concurrently");
  run->add_option("--output,-o", rf.output, "output directory");
  run->add_flag("--lenient", rf.lenient, "do not require referenced files to exist at load time");
  run->add_option("--prompt-template", rf.prompt_template, "prompt with one {c} (default \"a photo of {c}.\")");
  run->add_option("--lexicon", rf.lexicon, "chunker lexicon file");
  run->add_option("--inversion.num_tokens", rf.num_tokens);
  run->add_option("--inversion.step_size", rf.step_size);
  run->add_option("--inversion.max_iters", rf.max_iters);
  run->add_option("--inversion.tol", rf.tol);
  run->add_option("--inversion.seed", rf.seed);
  run->add_option("--inversion.init_stddev", rf.init_stddev);
  run->add_option("--inversion.token_dim", rf.token_dim);
  run->add_option("--inversion.encoder_seed", rf.encoder_seed);
  rf.metric.add_to(*run);

  std::optional<std::string> eval_config;
  std::string predictions, eval_manifest, eval_out;
  MetricFlags ef;
  auto* eval = app.add_subcommand("eval", "score a run against ground truth");
  eval->add_option("--predictions,-p", predictions, "run output directory or records file")->required();
  eval->add_option("--manifest", eval_manifest, "manifest with GT masks")->required();
  eval->add_option("--config", eval_config, "settings file (metrics.* keys are used)");
  eval->add_option("--output,-o", eval_out, "report path (default stdout)");
  ef.add_to(*eval);

  std::vector<std::string> report_files;
  std::string format = "md";
  auto* report = app.add_subcommand("report", "render one or more eval reports");
  report->add_option("reports", report_files, "report files")->required();
  report->add_option("--format", format, "md or json")->check(CLI::IsMember({"md", "markdown", "json"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // --help and friends exit 0; every usage error maps to the config exit code
    return app.exit(e) == 0 ? 0 : avsz::cli::kExitConfig;
  }

  try {
    if (*run) {
      RunConfig cfg;
      try {
        cfg = rf.resolve();
      } catch (const avsz::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return avsz::cli::kExitConfig;
      }
      return avsz::cli::cmd_run(cfg, std::cerr);
    }
    if (*eval) {
      RunConfig cfg;
      if (eval_config) avsz::cli::load_config_file(cfg, *eval_config);
      ef.apply(cfg.metric_config);
      const auto result = avsz::cli::cmd_eval(predictions, eval_manifest, cfg.metric_config);
      for (const auto& e : result.errors) {
        std::cerr << "excluded " << e.sample_id << ": " << avsz::errc_name(e.error->code) << ": "
                  << e.error->message << "\n";
      }
      const std::string text = avsz::cli::eval_to_json(result).dump(2) + "\n";
      if (eval_out.empty()) {
        std::cout << text;
      } else {
        avsz::bytes::write_text_atomic(eval_out, text);
      }
      return 0;
    }
    if (*report) {
      std::vector<fs::path> files(report_files.begin(), report_files.end());
      std::cout << avsz::cli::cmd_report(files, avsz::cli::parse_report_format(format));
      return 0;
    }
  } catch (const avsz::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
