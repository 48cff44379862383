#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "avsz/error.hpp"

namespace avsz::inversion {

// m pseudo-token embeddings of width dim, stored row-major.
class TokenEmbeddings {
 public:
  TokenEmbeddings() = default;
  TokenEmbeddings(std::size_t num_tokens, std::size_t dim)
      : num_tokens_(num_tokens), dim_(dim), values_(num_tokens * dim, 0.0) {
    if (num_tokens < 1 || dim < 1) throw Error(Errc::kInvalidArgument, "token matrix must be at least 1x1");
  }
  TokenEmbeddings(std::size_t num_tokens, std::size_t dim, std::vector<double> values)
      : num_tokens_(num_tokens), dim_(dim), values_(std::move(values)) {
    if (num_tokens < 1 || dim < 1) throw Error(Errc::kInvalidArgument, "token matrix must be at least 1x1");
    if (values_.size() != num_tokens * dim) {
      throw Error(Errc::kDimensionMismatch, "token values length " + std::to_string(values_.size()) +
                                                " != " + std::to_string(num_tokens) + "x" +
                                                std::to_string(dim));
    }
    if (!all_finite()) throw Error(Errc::kInvalidArgument, "token embeddings must be finite");
  }

  std::size_t num_tokens() const noexcept { return num_tokens_; }
  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * dim_, dim_}; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  bool all_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const TokenEmbeddings&, const TokenEmbeddings&) = default;

 private:
  std::size_t num_tokens_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

using EmbeddingVector = std::vector<double>;

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline EmbeddingVector normalized(std::span<const double> v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) throw Error(Errc::kZeroVector, "cannot normalize a zero vector");
  EmbeddingVector out(v.begin(), v.end());
  for (double& x : out) x /= n;
  return out;
}

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(Errc::kDimensionMismatch,
                "cosine of " + std::to_string(a.size()) + "-d and " + std::to_string(b.size()) + "-d vectors");
  }
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > 0.0) || !(nb > 0.0)) throw Error(Errc::kZeroVector, "cosine similarity with a zero vector");
  const double c = dot(a, b) / (na * nb);
  return std::clamp(c, -1.0, 1.0);
}

}  // namespace avsz::inversion
