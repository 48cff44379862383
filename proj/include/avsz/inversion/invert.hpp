#pragma once

// Text inversion: find pseudo-token embeddings whose encoding aligns with a
// target (audio) embedding, by gradient ascent on cosine similarity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "avsz/error.hpp"
#include "avsz/inversion/embedding.hpp"
#include "avsz/inversion/encoder.hpp"

namespace avsz::inversion {

struct InversionConfig {
  std::size_t num_tokens = 4;
  double step_size = 0.1;
  std::size_t max_iters = 500;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  double init_stddev = 0.02;

  void validate() const {
    if (num_tokens < 1) throw Error(Errc::kConfigError, "inversion.num_tokens must be >= 1");
    if (!(step_size > 0.0)) throw Error(Errc::kConfigError, "inversion.step_size must be > 0");
    if (max_iters < 1) throw Error(Errc::kConfigError, "inversion.max_iters must be >= 1");
    if (!(tol > 0.0)) throw Error(Errc::kConfigError, "inversion.tol must be > 0");
    if (!(init_stddev > 0.0)) throw Error(Errc::kConfigError, "inversion.init_stddev must be > 0");
  }
};

struct InversionResult {
  TokenEmbeddings tokens;      // best iterate
  double final_similarity = 0.0;
  std::size_t iters = 0;       // updates applied
  // best-so-far similarity, starting with the initial point
  std::vector<double> best_history;
};

namespace detail {

// Anything thrown by an encoder, other than our own argument errors,
// surfaces as EncoderFailure.
template <typename Fn>
auto guarded(const char* what, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == Errc::kDimensionMismatch || e.code() == Errc::kZeroVector ||
        e.code() == Errc::kEncoderFailure || e.code() == Errc::kUnsupportedCapability) {
      throw;
    }
    throw Error(Errc::kEncoderFailure, std::string(what) + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(Errc::kEncoderFailure, std::string(what) + ": " + e.what());
  }
}

}  // namespace detail

inline InversionResult invert(const EmbeddingVector& target, const DifferentiableEncoder& encoder,
                              const InversionConfig& config) {
  config.validate();
  if (target.size() != encoder.output_dim()) {
    throw Error(Errc::kDimensionMismatch, "target has " + std::to_string(target.size()) +
                                              " dims, encoder outputs " +
                                              std::to_string(encoder.output_dim()));
  }
  // Cosine similarity ignores the target's scale; fixing it here makes
  // positively rescaled targets follow the same trajectory.
  const EmbeddingVector unit_target = normalized(target);

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> init(0.0, config.init_stddev);
  TokenEmbeddings current(config.num_tokens, encoder.token_dim());
  for (double& v : current.values()) v = init(rng);

  const auto similarity = [&](const TokenEmbeddings& e) {
    const EmbeddingVector out = detail::guarded("encode", [&] { return encoder.encode(e); });
    return cosine_similarity(unit_target, out);
  };

  InversionResult result;
  double sim = similarity(current);
  result.tokens = current;
  result.final_similarity = sim;
  result.best_history.push_back(sim);

  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const TokenEmbeddings grad =
        detail::guarded("encode_grad", [&] { return encoder.encode_grad(current, unit_target); });
    if (grad.num_tokens() != current.num_tokens() || grad.dim() != current.dim()) {
      throw Error(Errc::kEncoderFailure, "gradient shape does not match token shape");
    }
    if (!grad.all_finite()) {
      throw Error(Errc::kNonFiniteGradient, "non-finite gradient at iteration " + std::to_string(it));
    }
    for (std::size_t i = 0; i < current.size(); ++i) current[i] += config.step_size * grad[i];
    result.iters = it;

    const double next = similarity(current);
    if (next > result.final_similarity) {
      result.final_similarity = next;
      result.tokens = current;
    }
    result.best_history.push_back(result.final_similarity);
    if (std::abs(next - sim) < config.tol) break;
    sim = next;
  }
  return result;
}

// Central finite differences (step 1e-4) of cos(target, encode(point)) on
// every coordinate, or on a seeded 64-coordinate subset for larger points.
// Returns max|analytic - numeric| / max(|analytic|_inf, |numeric|_inf), or
// the absolute error when both gradients vanish.
inline double check_gradient(const DifferentiableEncoder& encoder, const TokenEmbeddings& point,
                             const EmbeddingVector& target, std::uint64_t subset_seed = 0) {
  constexpr double kStep = 1e-4;
  constexpr std::size_t kMaxCoords = 64;
  constexpr double kZeroGradient = 1e-8;

  const TokenEmbeddings analytic =
      detail::guarded("encode_grad", [&] { return encoder.encode_grad(point, target); });
  if (analytic.size() != point.size()) {
    throw Error(Errc::kEncoderFailure, "gradient shape does not match token shape");
  }

  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (coords.size() > kMaxCoords) {
    std::mt19937_64 rng(subset_seed);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(kMaxCoords);
    std::sort(coords.begin(), coords.end());
  }

  const auto objective = [&](const TokenEmbeddings& e) {
    const EmbeddingVector out = detail::guarded("encode", [&] { return encoder.encode(e); });
    return cosine_similarity(target, out);
  };

  double max_abs_diff = 0.0;
  double scale = 0.0;
  TokenEmbeddings probe = point;
  for (std::size_t c : coords) {
    const double original = probe[c];
    probe[c] = original + kStep;
    const double up = objective(probe);
    probe[c] = original - kStep;
    const double down = objective(probe);
    probe[c] = original;
    const double numeric = (up - down) / (2.0 * kStep);
    max_abs_diff = std::max(max_abs_diff, std::abs(analytic[c] - numeric));
    scale = std::max({scale, std::abs(analytic[c]), std::abs(numeric)});
  }
  return scale < kZeroGradient ? max_abs_diff : max_abs_diff / scale;
}

}  // namespace avsz::inversion
