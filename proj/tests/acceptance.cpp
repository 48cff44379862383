// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <Eigen/Dense>
#include <chrono>
#include <cstring>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>

#include "avsz/bridge/scoremap_codec.hpp"
#include "avsz/cli/eval.hpp"
#include "avsz/cli/run.hpp"
#include "avsz/core/mask_codec.hpp"
#include "avsz/inversion/invert.hpp"
#include "avsz/metrics/metrics.hpp"
#include "support/oracles.hpp"
#include "support/world.hpp"

namespace {

using namespace avsz;
namespace fs = std::filesystem;
namespace oracle = avsz::testing::oracle;
using avsz::testing::Gen;
using avsz::testing::TempDir;

struct Outcome {
  bool pass = false;
  std::string detail;
};

Outcome fail(const std::string& why) { return {false, why}; }

template <typename Fn>
bool throws_code(Fn&& fn, Errc code) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code() == code;
  }
  return false;
}

Mask mask_from_bits(std::uint32_t w, std::uint32_t h, std::uint32_t bits) {
  Mask m(w, h);
  for (std::size_t i = 0; i < m.size(); ++i) m.set_index(i, (bits >> i) & 1u);
  return m;
}

// Exactly k selected, selected scores dominate, ties broken row-major.
bool topk_contract(const ScoreMap& s, std::size_t k, const Mask& got) {
  if (got.count() != k) return false;
  float min_in = 2.0f, max_out = -1.0f;
  std::size_t last_in = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (got.bits()[i]) min_in = std::min(min_in, s.scores()[i]);
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (got.bits()[i] && s.scores()[i] == min_in) last_in = i;
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (got.bits()[i]) continue;
    max_out = std::max(max_out, s.scores()[i]);
    // an unselected pixel tied with the cut-off must come after every selected one at that level
    if (s.scores()[i] == min_in && i < last_in) return false;
  }
  return min_in >= max_out;
}

Outcome metric_oracles() {
  const auto started = std::chrono::steady_clock::now();
  std::size_t compared = 0;
  for (std::uint32_t g = 0; g < 512; ++g) {
    const Mask gt = mask_from_bits(3, 3, g);
    for (std::uint32_t p = 0; p < 512; ++p) {
      const Mask pred = mask_from_bits(3, 3, p);
      if (g == 0) {
        if (!throws_code([&] { metrics::iou(pred, gt); }, Errc::kEmptyGT)) return fail("empty GT accepted by iou");
        if (!throws_code([&] { metrics::f_beta(pred, gt); }, Errc::kEmptyGT)) return fail("empty GT accepted by f_beta");
        continue;
      }
      if (metrics::iou(pred, gt) != oracle::iou(pred, gt)) return fail("iou differs at 3x3 pair " + std::to_string(g) + "," + std::to_string(p));
      if (metrics::f_beta(pred, gt) != oracle::f_beta(pred, gt)) return fail("f_beta differs at 3x3 pair " + std::to_string(g) + "," + std::to_string(p));
      ++compared;
    }
    // the GT mask doubles as a binary score map, with every k
    const std::vector<float> levels = [&] {
      std::vector<float> v(9);
      for (std::size_t i = 0; i < 9; ++i) v[i] = gt.bits()[i] ? 1.0f : 0.0f;
      return v;
    }();
    const ScoreMap s(3, 3, levels);
    for (std::size_t k = 1; k <= 9; ++k) {
      if (metrics::adaptive_topk_binarize(s, k) != oracle::topk(s, k)) return fail("top-k differs on 3x3 map " + std::to_string(g));
      ++compared;
    }
  }
  Gen gen(2024);
  for (int i = 0; i < 1000; ++i) {
    const Mask gt = gen.nonempty_mask(16, 16, gen.unit());
    const Mask pred = gen.mask(16, 16, gen.unit());
    const ScoreMap s = gen.scores(16, 16, gen.below(6));
    const std::size_t k = gen.between(1, 256);
    if (metrics::iou(pred, gt) != oracle::iou(pred, gt)) return fail("iou differs on random 16x16 case " + std::to_string(i));
    if (metrics::f_beta(pred, gt) != oracle::f_beta(pred, gt)) return fail("f_beta differs on random 16x16 case " + std::to_string(i));
    if (metrics::adaptive_topk_binarize(s, k) != oracle::topk(s, k)) return fail("top-k differs on random 16x16 case " + std::to_string(i));
    compared += 3;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (secs >= 10.0) return fail("took " + std::to_string(secs) + " s");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%zu exact comparisons in %.2f s", compared, secs);
  return {true, buf};
}

Outcome topk_selection() {
  Gen gen(7);
  for (int i = 0; i < 1000; ++i) {
    const auto w = static_cast<std::uint32_t>(gen.between(1, 16));
    const auto h = static_cast<std::uint32_t>(gen.between(1, 16));
    const ScoreMap s = gen.scores(w, h, i % 3 == 0 ? 0 : gen.between(1, 5));
    const std::size_t k = gen.between(1, s.size());
    const Mask got = metrics::adaptive_topk_binarize(s, k);
    if (!topk_contract(s, k, got)) return fail("contract broken on case " + std::to_string(i));
    if (got != oracle::topk(s, k)) return fail("differs from full sort on case " + std::to_string(i));
  }
  return {true, "1000 maps, k set bits, dominance and row-major ties"};
}

// GT = first k pixels of a 16x16 grid, scores 1 on [k-overlap, 2k-overlap):
// adaptive IoU is overlap / (2k - overlap).
metrics::SampleMetrics realized(std::size_t k, std::size_t overlap) {
  Mask gt(16, 16);
  std::vector<float> v(256, 0.0f);
  for (std::size_t i = 0; i < k; ++i) gt.set_index(i, true);
  for (std::size_t i = k - overlap; i < 2 * k - overlap; ++i) v[i] = 1.0f;
  return metrics::evaluate_sample("x", ScoreMap(16, 16, v), gt, 0.5, {});
}

Outcome aggregate_fixture() {
  const std::vector<metrics::SampleMetrics> three = {realized(4, 3), realized(7, 4), realized(151, 102)};
  if (three[0].iou_adaptive != 0.6 || three[1].iou_adaptive != 0.4 || three[2].iou_adaptive != 0.51) {
    return fail("fixture IoUs are not {0.6, 0.4, 0.51}");
  }
  const auto r = metrics::aggregate(three);
  // 2 of 3 exceed 0.5; mean (0.6 + 0.4 + 0.51) / 3
  if (std::abs(r.ciou - 2.0 / 3.0) > 1e-9) return fail("ciou " + std::to_string(r.ciou));
  if (std::abs(r.miou - 1.51 / 3.0) > 1e-9) return fail("miou " + std::to_string(r.miou));
  char shown[64];
  std::snprintf(shown, sizeof(shown), "%.4f %.4f", r.ciou, r.miou);
  if (std::string(shown) != "0.6667 0.5033") return fail(std::string("rounded to ") + shown);
  const auto half = realized(3, 2);
  if (half.iou_adaptive != 0.5) return fail("half fixture IoU is not 0.5");
  if (metrics::aggregate(std::vector{half}).ciou != 0.0) return fail("IoU 0.5 counted as correct");
  if (metrics::aggregate(std::vector{half, three[0]}).ciou != 0.5) return fail("IoU 0.5 changes the count");
  return {true, std::string("ciou/miou = ") + shown + ", IoU exactly 0.5 contributes 0"};
}

Outcome auc_properties() {
  for (std::size_t n : {1u, 2u, 7u, 50u}) {
    const std::vector<double> ones(n, 1.0);
    if (metrics::success_auc(ones, 0.05) != 1.0) return fail("constant 1.0 set of " + std::to_string(n));
    std::vector<metrics::SampleMetrics> per(n);
    for (auto& m : per) m.iou_adaptive = 1.0;
    if (metrics::aggregate(per).auc != 1.0) return fail("aggregate of perfect set");
  }
  Gen gen(99);
  for (int f = 0; f < 100; ++f) {
    std::vector<double> ious(gen.between(1, 60));
    for (double& v : ious) v = gen.coin(0.2) ? std::round(gen.unit() * 20.0) / 20.0 : gen.unit();
    double prev = metrics::success_auc(ious, 0.05);
    // degrade one sample at a time; AUC may never increase
    for (int step = 0; step < 10; ++step) {
      double& v = ious[gen.below(ious.size())];
      v = gen.coin(0.3) ? 0.0 : v * gen.unit();
      const double next = metrics::success_auc(ious, 0.05);
      if (next > prev) return fail("AUC rose after degradation in fixture " + std::to_string(f));
      prev = next;
    }
  }
  return {true, "perfect set = 1.0 exactly; monotone over 100 fixtures"};
}

Outcome inversion_checks() {
  using namespace avsz::inversion;
  std::size_t recovered = 0;
  double worst_sim = 1.0;
  std::size_t worst_iters = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyEncoder enc(seed, kToyTokenDim, kToyOutputDim);
    TokenEmbeddings source(4, kToyTokenDim);
    Gen gen(1000 + seed);
    for (double& v : source.values()) v = gen.normal();
    InversionConfig cfg;
    cfg.seed = seed;
    const auto r = invert(enc.encode(source), enc, cfg);
    worst_sim = std::min(worst_sim, r.final_similarity);
    worst_iters = std::max(worst_iters, r.iters);
    if (r.final_similarity >= 0.999 && r.iters <= 500) ++recovered;
  }
  if (recovered != 20) return fail(std::to_string(recovered) + "/20 seeds recovered");

  const ToyEncoder enc(11, kToyTokenDim, kToyOutputDim);
  double worst_grad = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Gen gen(500 + i);
    TokenEmbeddings point(4, kToyTokenDim);
    for (double& v : point.values()) v = gen.normal();
    EmbeddingVector target(kToyOutputDim);
    for (double& v : target) v = gen.normal();
    worst_grad = std::max(worst_grad, check_gradient(enc, point, normalized(target), i));
  }
  if (worst_grad >= 1e-5) return fail("gradient relative error " + std::to_string(worst_grad));

  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyEncoder narrow(seed, 16, 32);
    Gen gen(300 + seed);
    EmbeddingVector target(32);
    for (double& v : target) v = gen.normal();
    const auto w = narrow.weights();
    const Eigen::MatrixXd W = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), 32, 16);
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), 32).normalized();
    const double bound = (W * W.colPivHouseholderQr().solve(t)).norm();
    InversionConfig cfg;
    cfg.seed = seed;
    worst_gap = std::max(worst_gap, std::abs(invert(target, narrow, cfg).final_similarity - bound));
  }
  if (worst_gap > 1e-3) return fail("unreachable target off projection bound by " + std::to_string(worst_gap));

  char buf[160];
  std::snprintf(buf, sizeof(buf), "20/20 seeds (min sim %.6f, max %zu iters); grad err %.2e; projection gap %.2e",
                worst_sim, worst_iters, worst_grad, worst_gap);
  return {true, buf};
}

Outcome verification_rejection() {
  using namespace avsz::bridge;
  log::ScopedCapture quiet;
  avsz::testing::SampleFiles files;
  const Sample sample = files.add("v");
  auto mock = std::make_shared<MockBackend>(avsz::testing::mock_info(avsz::testing::strategy_capabilities()));
  avsz::testing::RisRecorder ris(ScoreMap(1, 1, {1.0f}));
  mock->add(Capability::kRisSegment, {"*"}, ris.reply());
  BackendSet set;
  set.add(mock);

  const auto corpus = avsz::testing::verification_corpus(50, 1);
  std::size_t checked = 0;
  for (const auto& c : corpus) {
    mock->add(Capability::kImageCaption, {"*"}, reply_text(c.caption));
    mock->add(Capability::kAudioClassify, {"*"}, reply_labels({{c.distractor, 0.99}}));
    mock->add(Capability::kAudioClassifyOpenVocab, {"*"}, reply_scores_by_label(c.audio_scores));
    const auto rec = engine::run_vcap_acls(sample, set);
    if (rec.verification->fallback_used) continue;
    ++checked;
    if (std::find(c.phrases.begin(), c.phrases.end(), rec.verification->winner) == c.phrases.end()) {
      return fail("winner '" + rec.verification->winner + "' not from caption '" + c.caption + "'");
    }
  }
  if (checked != corpus.size()) return fail("corpus cases fell back: " + std::to_string(corpus.size() - checked));

  mock->add(Capability::kImageCaption, {"*"}, reply_text("a man holding an electric shaver"));
  mock->add(Capability::kAudioClassify, {"*"}, reply_labels({{"bee", 0.95}, {"electric shaver", 0.05}}));
  mock->add(Capability::kAudioClassifyOpenVocab, {"*"},
            reply_scores_by_label({{"bee", 0.97}, {"man", 0.1}, {"electric shaver", 0.3}}));
  const auto rec = engine::run_vcap_acls(sample, set);
  if (rec.verification->winner != "electric shaver") return fail("bee fixture chose '" + rec.verification->winner + "'");
  if (ris.seen().back() != "a photo of electric shaver.") return fail("bee fixture prompt '" + ris.seen().back() + "'");
  return {true, "50/50 winners from caption candidates; bee fixture -> electric shaver"};
}

// Counts segmentation requests per sample on the way to the real backend.
class RisCounter final : public bridge::Backend {
 public:
  explicit RisCounter(bridge::BackendHandle inner) : inner_(std::move(inner)) {}
  const bridge::BackendInfo& info() const override { return inner_->info(); }
  bridge::CapabilityResponse invoke(const bridge::CapabilityRequest& request) override {
    if (request.capability == bridge::Capability::kRisSegment ||
        request.capability == bridge::Capability::kRisSegmentEmbedding) {
      std::lock_guard<std::mutex> lock(mutex_);
      ++per_sample_[request.sample_id];
    }
    return inner_->invoke(request);
  }
  std::map<std::string, int> counts() const { return per_sample_; }

 private:
  bridge::BackendHandle inner_;
  std::mutex mutex_;
  std::map<std::string, int> per_sample_;
};

std::map<std::string, std::string> artifacts(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    const auto rel = fs::relative(e.path(), dir).generic_string();
    if (!e.is_regular_file() || rel.rfind("cache/", 0) == 0 || rel == cli::kTimingsFile) continue;
    out[rel] = bytes::read_text(e.path());
  }
  return out;
}

Outcome end_to_end_determinism() {
  const fs::path fixtures = avsz::testing::kE2eDir;
  const auto spec = bridge::load_roster(fixtures / "roster.toml").at(0);
  TempDir tmp;
  std::ostringstream detail;
  for (auto kind : engine::kAllStrategies) {
    const std::string name(engine::cli_name(kind));
    struct Pass {
      const char* label;
      fs::path cache;
    };
    const Pass passes[] = {{"cold", tmp / name / "cache-a"}, {"repeat", tmp / name / "cache-b"},
                           {"warm", tmp / name / "cache-a"}};
    std::map<std::string, std::string> first;
    std::string first_report;
    for (const auto& pass : passes) {
      const fs::path out = tmp / name / pass.label;
      auto counter = std::make_shared<RisCounter>(bridge::make_backend(spec));
      bridge::BackendSet set;
      set.add(counter);
      cli::RunConfig cfg;
      cfg.manifest = fixtures / "manifest.jsonl";
      cfg.backend_roster = fixtures / "roster.toml";
      cfg.strategy = kind;
      cfg.output = out;
      cfg.cache_dir = pass.cache;
      std::ostringstream log;
      if (cli::run_with_backends(cfg, std::move(set), log) != cli::kExitOk) return fail(name + " " + pass.label + ": " + log.str());
      const auto counts = counter->counts();
      const bool warm = std::string(pass.label) == "warm";
      if (warm ? !counts.empty() : counts.size() != 5) return fail(name + " " + pass.label + ": RIS reached " + std::to_string(counts.size()) + " samples");
      for (const auto& [id, n] : counts) {
        if (n != 1) return fail(name + ": RIS called " + std::to_string(n) + " times for " + id);
      }
      const std::string report = cli::eval_to_json(cli::cmd_eval(out, cfg.manifest)).dump(2);
      const auto files = artifacts(out);
      if (first.empty()) {
        first = files;
        first_report = report;
      } else {
        if (files != first) return fail(name + ": " + pass.label + " artifacts differ from cold run");
        if (report != first_report) return fail(name + ": " + pass.label + " report differs from cold run");
      }
    }
    detail << (detail.tellp() > 0 ? ", " : "") << name << " " << first.size() << " files";
  }
  return {true, "identical across cold/repeat/warm, RIS once per sample; " + detail.str()};
}

Outcome codec_round_trips() {
  Gen gen(4242);
  TempDir tmp;
  for (int i = 0; i < 1000; ++i) {
    const auto w = static_cast<std::uint32_t>(gen.between(1, 48));
    const auto h = static_cast<std::uint32_t>(gen.between(1, 48));
    const Mask m = gen.mask(w, h, gen.unit());
    encode_mask(m, tmp / "m.png");
    if (decode_mask(tmp / "m.png") != m) return fail("PNG mask " + std::to_string(i));
    if (decode_mask_bytes(encode_avsm(m)) != m) return fail("AVSM mask " + std::to_string(i));
    // an independently written PNG decodes to the same mask
    std::vector<std::uint8_t> px(m.size());
    for (std::size_t p = 0; p < px.size(); ++p) px[p] = m.bits()[p] ? 255 : 0;
    if (decode_mask_bytes(avsz::testing::png_oracle::gray8(w, h, px)) != m) return fail("oracle PNG " + std::to_string(i));
  }
  for (int i = 0; i < 1000; ++i) {
    const auto w = static_cast<std::uint32_t>(gen.between(1, 64));
    const auto h = static_cast<std::uint32_t>(gen.between(1, 64));
    std::vector<float> v(static_cast<std::size_t>(w) * h);
    for (float& s : v) {
      // any float bit pattern in [0, 1], subnormals included
      const auto bits = static_cast<std::uint32_t>(gen.below(0x3f800001u));
      std::memcpy(&s, &bits, sizeof(s));
    }
    const ScoreMap map(w, h, v);
    const auto encoded = bridge::encode_scoremap(map);
    const ScoreMap back = bridge::decode_scoremap(encoded);
    if (back.width() != w || back.height() != h) return fail("AVSS shape " + std::to_string(i));
    if (std::memcmp(back.scores().data(), v.data(), v.size() * sizeof(float)) != 0) return fail("AVSS bits " + std::to_string(i));
    if (bridge::encode_scoremap(back) != encoded) return fail("AVSS re-encode " + std::to_string(i));
  }
  return {true, "1000 masks (PNG, AVSM, oracle PNG) and 1000 AVSS maps bit-exact"};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"metric-oracle-equivalence", metric_oracles},
      {"adaptive-selection-contract", topk_selection},
      {"aggregate-fixture", aggregate_fixture},
      {"auc-properties", auc_properties},
      {"inversion", inversion_checks},
      {"verification-rejection", verification_rejection},
      {"end-to-end-determinism", end_to_end_determinism},
      {"codec-round-trips", codec_round_trips},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  std::cout << (std::size(criteria) - failed) << "/" << std::size(criteria) << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
