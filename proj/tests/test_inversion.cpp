#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <random>

#include "avsz/inversion/invert.hpp"
#include "support/support.hpp"

namespace {

using namespace avsz;
using namespace avsz::inversion;
using avsz::testing::code_of;

TokenEmbeddings random_tokens(std::size_t m, std::size_t dim, std::uint64_t seed, double stddev = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, stddev);
  TokenEmbeddings e(m, dim);
  for (double& v : e.values()) v = n(rng);
  return e;
}

EmbeddingVector random_vector(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  EmbeddingVector v(dim);
  for (double& x : v) x = n(rng);
  return v;
}

Eigen::MatrixXd weights_of(const ToyEncoder& enc) {
  const auto w = enc.weights();
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      w.data(), static_cast<Eigen::Index>(enc.output_dim()), static_cast<Eigen::Index>(enc.token_dim()));
}

// Wraps an encoder and perturbs its gradient.
class FlippedGradient final : public DifferentiableEncoder {
 public:
  explicit FlippedGradient(const DifferentiableEncoder& inner) : inner_(inner) {}
  std::size_t token_dim() const override { return inner_.token_dim(); }
  std::size_t output_dim() const override { return inner_.output_dim(); }
  EmbeddingVector encode(const TokenEmbeddings& t) const override { return inner_.encode(t); }
  TokenEmbeddings encode_grad(const TokenEmbeddings& t, const EmbeddingVector& target) const override {
    TokenEmbeddings g = inner_.encode_grad(t, target);
    for (double& v : g.values()) v = -v;
    return g;
  }

 private:
  const DifferentiableEncoder& inner_;
};

class ConstantEncoder final : public DifferentiableEncoder {
 public:
  std::size_t token_dim() const override { return 8; }
  std::size_t output_dim() const override { return 3; }
  EmbeddingVector encode(const TokenEmbeddings&) const override { return {0.0, 1.0, 0.0}; }
  TokenEmbeddings encode_grad(const TokenEmbeddings& t, const EmbeddingVector&) const override {
    return TokenEmbeddings(t.num_tokens(), t.dim());
  }
};

class NanGradient final : public DifferentiableEncoder {
 public:
  std::size_t token_dim() const override { return 4; }
  std::size_t output_dim() const override { return 2; }
  EmbeddingVector encode(const TokenEmbeddings&) const override { return {1.0, 0.0}; }
  TokenEmbeddings encode_grad(const TokenEmbeddings& t, const EmbeddingVector&) const override {
    TokenEmbeddings g(t.num_tokens(), t.dim());
    g[0] = std::numeric_limits<double>::quiet_NaN();
    return g;
  }
};

class Throwing final : public DifferentiableEncoder {
 public:
  std::size_t token_dim() const override { return 4; }
  std::size_t output_dim() const override { return 2; }
  EmbeddingVector encode(const TokenEmbeddings&) const override { throw std::runtime_error("device lost"); }
  TokenEmbeddings encode_grad(const TokenEmbeddings& t, const EmbeddingVector&) const override { return t; }
};

TEST(Cosine, Examples) {
  const EmbeddingVector v = {0.3, -2.0, 5.0};
  EXPECT_DOUBLE_EQ(cosine_similarity(v, v), 1.0);
  EXPECT_EQ(cosine_similarity(EmbeddingVector{1, 0}, EmbeddingVector{0, 1}), 0.0);
  EXPECT_NEAR(cosine_similarity(EmbeddingVector{1, 1}, EmbeddingVector{1, 0}), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(cosine_similarity(EmbeddingVector{1, 1}, EmbeddingVector{1, 0}), 0.70711, 1e-5);
  EXPECT_EQ(code_of([] { cosine_similarity(EmbeddingVector{1}, EmbeddingVector{1, 0}); }), Errc::kDimensionMismatch);
  EXPECT_EQ(code_of([] { cosine_similarity(EmbeddingVector{0, 0}, EmbeddingVector{1, 0}); }), Errc::kZeroVector);
}

TEST(Tokens, RejectsBadShapes) {
  EXPECT_EQ(code_of([] { TokenEmbeddings(0, 4); }), Errc::kInvalidArgument);
  EXPECT_EQ(code_of([] { TokenEmbeddings(2, 2, {1, 2, 3}); }), Errc::kDimensionMismatch);
  EXPECT_EQ(code_of([] { TokenEmbeddings(1, 1, {std::nan("")}); }), Errc::kInvalidArgument);
}

TEST(ToyEncoder, SingleRowMatchesMatrixOracle) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyEncoder enc(seed, kToyTokenDim, kToyOutputDim);
    const TokenEmbeddings row = random_tokens(1, kToyTokenDim, 100 + seed);
    const Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(row.values().data(), kToyTokenDim);
    const Eigen::VectorXd expect = (weights_of(enc) * r).normalized();
    const EmbeddingVector got = toy_encode(row, seed);
    ASSERT_EQ(got.size(), kToyOutputDim);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], expect(static_cast<Eigen::Index>(i)), 1e-12);
  }
}

TEST(ToyEncoder, WeightDistribution) {
  const ToyEncoder enc(3, 256, 128);
  const Eigen::MatrixXd w = weights_of(enc);
  const double mean = w.mean();
  const double var = (w.array() - mean).square().mean();
  EXPECT_NEAR(mean, 0.0, 0.005);
  EXPECT_NEAR(var, 1.0 / 256.0, 0.0002);
}

TEST(ToyEncoder, DeterministicAndErrors) {
  const TokenEmbeddings t = random_tokens(4, kToyTokenDim, 1);
  EXPECT_EQ(toy_encode(t, 9), toy_encode(t, 9));
  EXPECT_NE(toy_encode(t, 9), toy_encode(t, 10));
  EXPECT_EQ(code_of([] { toy_encode(TokenEmbeddings(2, kToyTokenDim), 0); }), Errc::kZeroVector);
  const ToyEncoder enc(0, kToyTokenDim, kToyOutputDim);
  EXPECT_EQ(code_of([&] { enc.encode(TokenEmbeddings(2, 3)); }), Errc::kDimensionMismatch);
  EXPECT_EQ(code_of([&] { enc.encode_grad(t, EmbeddingVector(5, 1.0)); }), Errc::kDimensionMismatch);
}

TEST(Invert, RecoversReachableTargets) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyEncoder enc(seed, kToyTokenDim, kToyOutputDim);
    const EmbeddingVector target = enc.encode(random_tokens(4, kToyTokenDim, 1000 + seed));
    InversionConfig cfg;
    cfg.seed = seed;
    const auto r = invert(target, enc, cfg);
    EXPECT_GE(r.final_similarity, 0.999) << "seed " << seed;
    EXPECT_LE(r.iters, 500u);
    EXPECT_DOUBLE_EQ(r.final_similarity, cosine_similarity(target, enc.encode(r.tokens)));
  }
}

TEST(Invert, OneIteration) {
  const ToyEncoder enc(1, kToyTokenDim, kToyOutputDim);
  InversionConfig cfg;
  cfg.max_iters = 1;
  const auto r = invert(random_vector(kToyOutputDim, 5), enc, cfg);
  EXPECT_EQ(r.iters, 1u);
  EXPECT_EQ(r.best_history.size(), 2u);
}

TEST(Invert, Deterministic) {
  const ToyEncoder enc(2, kToyTokenDim, kToyOutputDim);
  const EmbeddingVector target = random_vector(kToyOutputDim, 6);
  InversionConfig cfg;
  cfg.seed = 77;
  const auto a = invert(target, enc, cfg);
  const auto b = invert(target, enc, cfg);
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.final_similarity, b.final_similarity);
  EXPECT_EQ(a.best_history, b.best_history);
  cfg.seed = 78;
  EXPECT_NE(invert(target, enc, cfg).tokens, a.tokens);
}

TEST(Invert, BestSoFarIsNondecreasing) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyEncoder enc(seed, 16, 8);
    InversionConfig cfg;
    cfg.seed = seed;
    cfg.step_size = 5.0;  // large steps overshoot, so raw similarity oscillates
    cfg.max_iters = 50;
    const auto r = invert(random_vector(8, seed + 50), enc, cfg);
    for (std::size_t i = 1; i < r.best_history.size(); ++i) {
      ASSERT_GE(r.best_history[i], r.best_history[i - 1]);
    }
    EXPECT_EQ(r.best_history.back(), r.final_similarity);
  }
}

TEST(Invert, ScaleInvariantInTarget) {
  const ToyEncoder enc(4, kToyTokenDim, kToyOutputDim);
  const EmbeddingVector target = random_vector(kToyOutputDim, 8);
  InversionConfig cfg;
  cfg.max_iters = 40;
  const auto base = invert(target, enc, cfg);
  // Power-of-two factors rescale exactly, so the trajectories must agree bit for bit.
  for (double c : {0.25, 2.0, 1024.0}) {
    EmbeddingVector scaled = target;
    for (double& v : scaled) v *= c;
    const auto r = invert(scaled, enc, cfg);
    EXPECT_EQ(r.tokens, base.tokens) << c;
    EXPECT_EQ(r.best_history, base.best_history) << c;
  }
  EmbeddingVector tripled = target;
  for (double& v : tripled) v *= 3.0;
  EXPECT_NEAR(invert(tripled, enc, cfg).final_similarity, base.final_similarity, 1e-12);
}

TEST(Invert, UnreachableTargetMatchesProjectionOracle) {
  // 16-wide tokens into 32 outputs: W has rank 16, so generic targets lie
  // partly outside its column space.
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyEncoder enc(seed, 16, 32);
    const EmbeddingVector target = random_vector(32, 300 + seed);
    const Eigen::MatrixXd w = weights_of(enc);
    const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(target.data(), 32).normalized();
    const Eigen::VectorXd x = w.colPivHouseholderQr().solve(t);
    const double bound = (w * x).norm();
    ASSERT_LT(bound, 0.95);
    InversionConfig cfg;
    cfg.seed = seed;
    const auto r = invert(target, enc, cfg);
    EXPECT_NEAR(r.final_similarity, bound, 1e-3) << "seed " << seed;
    EXPECT_LE(r.final_similarity, bound + 1e-12);
  }
}

TEST(Invert, Errors) {
  const ToyEncoder enc(0, 8, 4);
  EXPECT_EQ(code_of([&] { invert(EmbeddingVector(3, 1.0), enc, {}); }), Errc::kDimensionMismatch);
  InversionConfig bad;
  bad.step_size = 0.0;
  EXPECT_EQ(code_of([&] { invert(EmbeddingVector(4, 1.0), enc, bad); }), Errc::kConfigError);
  EXPECT_EQ(code_of([] { invert({1.0, 0.0}, NanGradient{}, {}); }), Errc::kNonFiniteGradient);
  EXPECT_EQ(code_of([] { invert({1.0, 0.0}, Throwing{}, {}); }), Errc::kEncoderFailure);
}

TEST(GradientCheck, ToyEncoderOverRandomPoints) {
  const ToyEncoder enc(11, kToyTokenDim, kToyOutputDim);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < 100; ++i) {
    const TokenEmbeddings point = random_tokens(4, kToyTokenDim, 500 + i);
    const EmbeddingVector target = normalized(random_vector(kToyOutputDim, 900 + i));
    worst = std::max(worst, check_gradient(enc, point, target, i));
  }
  EXPECT_LT(worst, 1e-5);
}

TEST(GradientCheck, DetectsSignFlip) {
  const ToyEncoder enc(12, kToyTokenDim, kToyOutputDim);
  const FlippedGradient flipped(enc);
  const TokenEmbeddings point = random_tokens(4, kToyTokenDim, 7);
  const EmbeddingVector target = normalized(random_vector(kToyOutputDim, 8));
  EXPECT_NEAR(check_gradient(flipped, point, target), 2.0, 1e-4);
}

TEST(GradientCheck, ZeroGradientUsesAbsoluteError) {
  EXPECT_LT(check_gradient(ConstantEncoder{}, random_tokens(2, 8, 1), {1.0, 0.0, 0.0}), 1e-8);
}

TEST(GradientCheck, SmallPointsUseEveryCoordinate) {
  // 2x8 = 16 coordinates: a corrupted gradient in any one is caught.
  const ToyEncoder enc(13, 8, 4);
  class OneBad final : public DifferentiableEncoder {
   public:
    explicit OneBad(const ToyEncoder& e) : e_(e) {}
    std::size_t token_dim() const override { return e_.token_dim(); }
    std::size_t output_dim() const override { return e_.output_dim(); }
    EmbeddingVector encode(const TokenEmbeddings& t) const override { return e_.encode(t); }
    TokenEmbeddings encode_grad(const TokenEmbeddings& t, const EmbeddingVector& y) const override {
      auto g = e_.encode_grad(t, y);
      g[15] += 1.0;
      return g;
    }

   private:
    const ToyEncoder& e_;
  };
  const OneBad bad(enc);
  EXPECT_GT(check_gradient(bad, random_tokens(2, 8, 3), normalized(random_vector(4, 4))), 0.1);
}

}  // namespace
