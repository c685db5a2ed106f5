#pragma once

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include "elembed/embedding.hpp"

namespace elembed {

struct RemoteProviderConfig {
  std::string base_url;  // "http://127.0.0.1:8000", optionally with a path prefix
  std::string model_id;
  std::size_t in_flight_limit = 4;
  double timeout_seconds = 60.0;
};

// Client for the embedding sidecar.
//
//   POST {base}/embed  {"model", "text", "pooling", "span"?}
//   200 -> {"model", "dim", "values"}     4xx/5xx -> {"error"}
//
// Connection failures and 5xx map to ProviderUnavailable, a 400 whose error
// mentions BadSpan maps to BadSpan, and an empty values array maps to
// EmptyModelOutput. The first dimension seen is pinned; later vectors with
// another dimension raise DimensionMismatch.
class RemoteProvider final : public EmbeddingProvider {
 public:
  explicit RemoteProvider(RemoteProviderConfig config);
  ~RemoteProvider() override;

  std::string model_id() const override { return config_.model_id; }
  EmbeddingVector embed(const EmbeddingRequest& request) override;

  // Issues requests concurrently, never more than in_flight_limit at once.
  std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) override;

  const RemoteProviderConfig& config() const noexcept { return config_; }

 private:
  EmbeddingVector post_embed(const EmbeddingRequest& request);

  RemoteProviderConfig config_;
  std::string host_;   // scheme://host:port
  std::string prefix_; // path prefix without trailing slash
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::mutex dim_mutex_;
  std::optional<std::size_t> dim_;
};

}  // namespace elembed
