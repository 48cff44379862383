#pragma once

// Mask-level segmentation metrics: adaptive top-k and threshold
// binarization, IoU, F-beta, and the dataset-level aggregates
// (cIoU, AUC, mIoU, F-score, J, F).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "avsz/core/types.hpp"
#include "avsz/error.hpp"

namespace avsz::metrics {

struct MetricConfig {
  double beta_squared = 0.3;
  double auc_step = 0.05;
  // Fallback when a prediction carries no backend-provided threshold.
  double jf_threshold = 0.5;
  // cIoU counts IoU > 0.5 when true, IoU >= 0.5 otherwise.
  bool ciou_strict = true;
};

struct SampleMetrics {
  std::string sample_id;
  double iou_adaptive = 0.0;
  double f_adaptive = 0.0;
  double iou_thresholded = 0.0;
  double f_thresholded = 0.0;
};

struct AggregateReport {
  double ciou = 0.0;
  double auc = 0.0;
  double miou = 0.0;
  double fscore = 0.0;
  double j = 0.0;
  double f = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_excluded = 0;
};

struct PixelCounts {
  std::size_t pred = 0;
  std::size_t gt = 0;
  std::size_t intersection = 0;
};

inline PixelCounts count_pixels(const Mask& pred, const Mask& gt) {
  if (pred.width() != gt.width() || pred.height() != gt.height()) {
    throw Error(Errc::kDimensionMismatch,
                std::to_string(pred.width()) + "x" + std::to_string(pred.height()) + " vs " +
                    std::to_string(gt.width()) + "x" + std::to_string(gt.height()));
  }
  PixelCounts c;
  const auto p = pred.bits();
  const auto g = gt.bits();
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.pred += p[i];
    c.gt += g[i];
    c.intersection += p[i] & g[i];
  }
  if (c.gt == 0) throw Error(Errc::kEmptyGT, "ground-truth mask has no foreground pixels");
  return c;
}

inline double iou(const Mask& pred, const Mask& gt) {
  const PixelCounts c = count_pixels(pred, gt);
  const std::size_t uni = c.pred + c.gt - c.intersection;
  return static_cast<double>(c.intersection) / static_cast<double>(uni);
}

// F = (1 + b2) P R / (b2 P + R), with b2 the squared beta. Zero when the
// prediction is empty or shares no pixel with the GT.
inline double f_beta(const Mask& pred, const Mask& gt, double beta_squared = 0.3) {
  const PixelCounts c = count_pixels(pred, gt);
  if (c.pred == 0 || c.intersection == 0) return 0.0;
  const double precision = static_cast<double>(c.intersection) / static_cast<double>(c.pred);
  const double recall = static_cast<double>(c.intersection) / static_cast<double>(c.gt);
  return (1.0 + beta_squared) * precision * recall / (beta_squared * precision + recall);
}

// Selects exactly k pixels: highest scores first, equal scores in ascending
// row-major order.
inline Mask adaptive_topk_binarize(const ScoreMap& scores, std::size_t k) {
  if (scores.empty()) throw Error(Errc::kInvalidArgument, "empty score map");
  const std::size_t n = scores.size();
  if (k == 0 || k > n) {
    throw Error(Errc::kInvalidK, "k=" + std::to_string(k) + " outside [1," + std::to_string(n) + "]");
  }
  const auto s = scores.scores();
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const auto before = [&s](std::uint32_t a, std::uint32_t b) {
    return s[a] > s[b] || (s[a] == s[b] && a < b);
  };
  if (k < n) std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(), before);

  Mask out(scores.width(), scores.height());
  for (std::size_t i = 0; i < k; ++i) out.set_index(order[i], true);
  return out;
}

// bit = 1 iff score >= threshold.
inline Mask threshold_binarize(const ScoreMap& scores, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(Errc::kInvalidThreshold, "threshold " + std::to_string(threshold) + " outside [0,1]");
  }
  if (scores.empty()) throw Error(Errc::kInvalidArgument, "empty score map");
  Mask out(scores.width(), scores.height());
  const auto s = scores.scores();
  for (std::size_t i = 0; i < s.size(); ++i) out.set_index(i, static_cast<double>(s[i]) >= threshold);
  return out;
}

// Nearest-neighbour resampling, used to bring GT onto the score-map grid.
inline Mask resample_nearest(const Mask& mask, std::uint32_t width, std::uint32_t height) {
  if (mask.width() == width && mask.height() == height) return mask;
  Mask out(width, height);
  for (std::uint32_t y = 0; y < height; ++y) {
    const auto sy = static_cast<std::uint32_t>((static_cast<std::uint64_t>(y) * mask.height()) / height);
    for (std::uint32_t x = 0; x < width; ++x) {
      const auto sx = static_cast<std::uint32_t>((static_cast<std::uint64_t>(x) * mask.width()) / width);
      out.set(x, y, mask.at(sx, sy));
    }
  }
  return out;
}

// Adaptive metrics use k = |GT|; thresholded ones use `threshold`. The GT
// must already be on the score-map grid.
inline SampleMetrics evaluate_sample(std::string sample_id, const ScoreMap& scores, const Mask& gt,
                                     double threshold, const MetricConfig& config) {
  const std::size_t k = gt.count();
  if (k == 0) throw Error(Errc::kEmptyGT, sample_id);
  SampleMetrics m;
  m.sample_id = std::move(sample_id);
  const Mask adaptive = adaptive_topk_binarize(scores, k);
  m.iou_adaptive = iou(adaptive, gt);
  m.f_adaptive = f_beta(adaptive, gt, config.beta_squared);
  const Mask thresholded = threshold_binarize(scores, threshold);
  m.iou_thresholded = iou(thresholded, gt);
  m.f_thresholded = f_beta(thresholded, gt, config.beta_squared);
  return m;
}

// Number of intervals of the AUC threshold grid; the step must divide 1.
inline std::size_t auc_intervals(double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw Error(Errc::kConfigError, "auc_step must be in (0,1]");
  }
  const double n = std::round(1.0 / step);
  if (std::abs(n * step - 1.0) > 1e-9) {
    throw Error(Errc::kConfigError, "auc_step must divide 1 evenly");
  }
  return static_cast<std::size_t>(n);
}

// Area under tau -> fraction(IoU >= tau) on the evenly spaced grid, by the
// trapezoidal rule.
inline double success_auc(std::span<const double> ious, double step) {
  if (ious.empty()) throw Error(Errc::kEmptyInput, "no IoU values");
  const std::size_t intervals = auc_intervals(step);
  std::vector<double> curve(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    const double tau = static_cast<double>(i) / static_cast<double>(intervals);
    std::size_t hits = 0;
    for (double v : ious) hits += v >= tau ? 1 : 0;
    curve[i] = static_cast<double>(hits) / static_cast<double>(ious.size());
  }
  double area = 0.0;
  for (std::size_t i = 0; i < intervals; ++i) area += 0.5 * (curve[i] + curve[i + 1]);
  return area / static_cast<double>(intervals);
}

namespace detail {
// Order-independent mean: sum in sorted order so permutations agree bitwise.
inline double stable_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}
}  // namespace detail

inline AggregateReport aggregate(std::span<const SampleMetrics> per_sample,
                                 const MetricConfig& config = {}) {
  if (per_sample.empty()) throw Error(Errc::kEmptyInput, "no per-sample metrics to aggregate");
  std::vector<double> iou_a, f_a, iou_t, f_t;
  std::size_t passing = 0;
  for (const auto& m : per_sample) {
    iou_a.push_back(m.iou_adaptive);
    f_a.push_back(m.f_adaptive);
    iou_t.push_back(m.iou_thresholded);
    f_t.push_back(m.f_thresholded);
    passing += (config.ciou_strict ? m.iou_adaptive > 0.5 : m.iou_adaptive >= 0.5) ? 1 : 0;
  }
  AggregateReport r;
  r.n_samples = per_sample.size();
  r.ciou = static_cast<double>(passing) / static_cast<double>(per_sample.size());
  r.auc = success_auc(iou_a, config.auc_step);
  r.miou = detail::stable_mean(iou_a);
  r.fscore = detail::stable_mean(f_a);
  r.j = detail::stable_mean(iou_t);
  r.f = detail::stable_mean(f_t);
  return r;
}

}  // namespace avsz::metrics
