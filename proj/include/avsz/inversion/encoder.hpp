#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "avsz/error.hpp"
#include "avsz/inversion/embedding.hpp"

namespace avsz::inversion {

// A text encoder with the token-embedding layer removed: maps pseudo-token
// embeddings to a unit-norm output embedding, and reports the gradient of
// cos(target, encode(tokens)) with respect to the token values.
class DifferentiableEncoder {
 public:
  virtual ~DifferentiableEncoder() = default;
  virtual std::size_t token_dim() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual EmbeddingVector encode(const TokenEmbeddings& tokens) const = 0;
  virtual TokenEmbeddings encode_grad(const TokenEmbeddings& tokens,
                                      const EmbeddingVector& target) const = 0;
};

// Desk-scale stand-in: encode(E) = normalize(W * mean_rows(E)) with W a
// fixed pseudo-random output_dim x token_dim matrix, entries
// N(0, 1/token_dim), drawn from `seed`.
class ToyEncoder final : public DifferentiableEncoder {
 public:
  ToyEncoder(std::uint64_t seed, std::size_t token_dim, std::size_t output_dim)
      : token_dim_(token_dim), output_dim_(output_dim), weights_(token_dim * output_dim) {
    if (token_dim < 1 || output_dim < 1) throw Error(Errc::kInvalidArgument, "toy encoder dims must be >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(token_dim)));
    for (double& w : weights_) w = normal(rng);
  }

  std::size_t token_dim() const override { return token_dim_; }
  std::size_t output_dim() const override { return output_dim_; }

  // Row-major output_dim x token_dim.
  std::span<const double> weights() const { return weights_; }

  EmbeddingVector encode(const TokenEmbeddings& tokens) const override {
    return normalized(project(mean_row(tokens)));
  }

  TokenEmbeddings encode_grad(const TokenEmbeddings& tokens,
                              const EmbeddingVector& target) const override {
    if (target.size() != output_dim_) {
      throw Error(Errc::kDimensionMismatch, "target has " + std::to_string(target.size()) +
                                                " dims, encoder outputs " + std::to_string(output_dim_));
    }
    const EmbeddingVector u = project(mean_row(tokens));
    const double u_norm = l2_norm(u);
    if (!(u_norm > 0.0)) throw Error(Errc::kZeroVector, "encoder pre-activation is zero");
    const EmbeddingVector t = normalized(target);

    // d/du of t.(u/|u|) = (t - (t.y) y) / |u|, y = u/|u|.
    EmbeddingVector y(u);
    for (double& v : y) v /= u_norm;
    const double ty = dot(t, y);
    EmbeddingVector du(output_dim_);
    for (std::size_t i = 0; i < output_dim_; ++i) du[i] = (t[i] - ty * y[i]) / u_norm;

    // Back through W, then spread evenly over the averaged rows.
    EmbeddingVector dx(token_dim_, 0.0);
    for (std::size_t i = 0; i < output_dim_; ++i) {
      for (std::size_t j = 0; j < token_dim_; ++j) dx[j] += weights_[i * token_dim_ + j] * du[i];
    }
    TokenEmbeddings grad(tokens.num_tokens(), token_dim_);
    const double inv_m = 1.0 / static_cast<double>(tokens.num_tokens());
    for (std::size_t r = 0; r < tokens.num_tokens(); ++r) {
      for (std::size_t j = 0; j < token_dim_; ++j) grad[r * token_dim_ + j] = dx[j] * inv_m;
    }
    return grad;
  }

 private:
  EmbeddingVector mean_row(const TokenEmbeddings& tokens) const {
    if (tokens.dim() != token_dim_) {
      throw Error(Errc::kDimensionMismatch, "tokens have width " + std::to_string(tokens.dim()) +
                                                ", encoder expects " + std::to_string(token_dim_));
    }
    EmbeddingVector mean(token_dim_, 0.0);
    for (std::size_t r = 0; r < tokens.num_tokens(); ++r) {
      const auto row = tokens.row(r);
      for (std::size_t j = 0; j < token_dim_; ++j) mean[j] += row[j];
    }
    for (double& v : mean) v /= static_cast<double>(tokens.num_tokens());
    return mean;
  }

  EmbeddingVector project(const EmbeddingVector& x) const {
    EmbeddingVector u(output_dim_, 0.0);
    for (std::size_t i = 0; i < output_dim_; ++i) {
      for (std::size_t j = 0; j < token_dim_; ++j) u[i] += weights_[i * token_dim_ + j] * x[j];
    }
    return u;
  }

  std::size_t token_dim_;
  std::size_t output_dim_;
  std::vector<double> weights_;
};

// Toy dimensions used by the engine when no remote encoder is configured.
// The token side must stay wider than the output side: near-square
// projections are ill-conditioned and plain ascent stalls at step 0.1.
inline constexpr std::size_t kToyTokenDim = 64;
inline constexpr std::size_t kToyOutputDim = 32;

inline EmbeddingVector toy_encode(const TokenEmbeddings& tokens, std::uint64_t seed,
                                  std::size_t output_dim = kToyOutputDim) {
  return ToyEncoder(seed, tokens.dim(), output_dim).encode(tokens);
}

}  // namespace avsz::inversion
