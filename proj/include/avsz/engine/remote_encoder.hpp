#pragma once

// Text encoder behind the text_encode_grad capability. The request carries
// the pseudo-token embeddings ("tokens") and, when a gradient is wanted,
// the target embedding ("target", JSON array); the backend answers with the
// encoding and the gradient of cos(target, encode(tokens)) w.r.t. tokens.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avsz/bridge/roster.hpp"
#include "avsz/inversion/encoder.hpp"

namespace avsz::engine {

class RemoteEncoder final : public inversion::DifferentiableEncoder {
 public:
  RemoteEncoder(const bridge::BackendSet& backends, std::string sample_id, std::size_t token_dim,
                std::size_t output_dim)
      : backends_(backends), sample_id_(std::move(sample_id)), token_dim_(token_dim), output_dim_(output_dim) {}

  std::size_t token_dim() const override { return token_dim_; }
  std::size_t output_dim() const override { return output_dim_; }

  inversion::EmbeddingVector encode(const inversion::TokenEmbeddings& tokens) const override {
    return inversion::normalized(exchange(tokens, nullptr).embedding);
  }

  inversion::TokenEmbeddings encode_grad(const inversion::TokenEmbeddings& tokens,
                                         const inversion::EmbeddingVector& target) const override {
    if (target.size() != output_dim_) {
      throw Error(Errc::kDimensionMismatch, "target has " + std::to_string(target.size()) + " dims, encoder outputs " +
                                                std::to_string(output_dim_));
    }
    return *exchange(tokens, &target).gradient;
  }

 private:
  bridge::EncodeGradResult exchange(const inversion::TokenEmbeddings& tokens,
                                    const inversion::EmbeddingVector* target) const {
    bridge::CapabilityRequest req;
    req.capability = bridge::Capability::kTextEncodeGrad;
    req.sample_id = sample_id_;
    req.with_text("tokens", bridge::tokens_payload(tokens));
    if (target) req.with_text("target", nlohmann::json(*target).dump());
    auto result = bridge::body_encode_grad(req.capability, backends_.invoke(req).response.body, tokens,
                                           target != nullptr);
    if (result.embedding.size() != output_dim_) {
      throw Error(Errc::kDimensionMismatch, "text_encode_grad returned " + std::to_string(result.embedding.size()) +
                                                " dims, expected " + std::to_string(output_dim_));
    }
    return result;
  }

  const bridge::BackendSet& backends_;
  std::string sample_id_;
  std::size_t token_dim_;
  std::size_t output_dim_;
};

}  // namespace avsz::engine
