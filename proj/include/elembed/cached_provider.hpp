#pragma once

#include <atomic>
#include <cstddef>

#include "elembed/embedding.hpp"
#include "elembed/embedding_cache.hpp"

namespace elembed {

// Read-through cache in front of another provider. Whatever the inner
// provider returns first for a key is frozen, so repeated requests are
// bit-identical even when the backend is not.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(EmbeddingProvider& inner, EmbeddingCache& cache) : inner_(inner), cache_(cache) {}

  std::string model_id() const override { return inner_.model_id(); }
  EmbeddingVector embed(const EmbeddingRequest& request) override;

  // Cache hits are answered locally; only the misses go to the inner provider,
  // as a single batch.
  std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests) override;

  // Requests forwarded to the inner provider.
  std::size_t forwarded() const noexcept { return forwarded_.load(); }

 private:
  EmbeddingProvider& inner_;
  EmbeddingCache& cache_;
  std::atomic<std::size_t> forwarded_{0};
};

}  // namespace elembed
