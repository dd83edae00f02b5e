#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "taxon/embedding.hpp"

namespace taxon {

struct RemoteOptions {
  // 0 accepts the dimension advertised by /health.
  std::size_t expected_dim = 0;
  // Extra attempts after the first failed one (connection errors and 5xx).
  int retries = 2;
  std::chrono::milliseconds retry_backoff{200};
  std::chrono::seconds timeout{60};
  std::size_t max_batch = 64;
};

struct RemoteHealth {
  std::string model;
  std::size_t dim = 0;
};

// GET {endpoint}/health. Throws RemoteUnavailable or MalformedResponse.
RemoteHealth remote_health(const std::string& endpoint, const RemoteOptions& opts = {});

// POST {endpoint}/embed with {"texts": [...]}. Checks one vector per text and
// that every vector has `advertised_dim` entries (the response's own "dim"
// field when advertised_dim is 0). Vectors are re-normalized to unit length.
std::vector<EmbeddingVector> remote_embed_batch(const std::string& endpoint,
                                                const std::vector<std::string>& texts,
                                                std::size_t advertised_dim = 0,
                                                const RemoteOptions& opts = {});

// Client for the embedding sidecar's /embed + /health protocol.
class RemoteHttpProvider final : public EmbeddingProvider {
 public:
  RemoteHttpProvider(std::string endpoint, RemoteOptions opts = {});

  std::size_t dim() const override { return health_.dim; }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  const std::string& model() const { return health_.model; }

 private:
  std::string endpoint_;
  RemoteOptions opts_;
  RemoteHealth health_;
};

}  // namespace taxon
