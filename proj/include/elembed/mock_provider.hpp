#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <string>

#include "elembed/embedding.hpp"

namespace elembed {

// Deterministic provider for tests and offline runs.
//
// Each vector is drawn from a counter-based SplitMix64 stream seeded with
// key_hash(model_id, request): draw k is mix(seed + (k + 1) * 0x9E3779B97F4A7C15),
// mapped to a uniform in (0, 1] as ((draw >> 11) + 1) * 2^-53. Consecutive
// uniform pairs (u1, u2) become standard normals through Box-Muller
// (r = sqrt(-2 ln u1); r cos(2 pi u2), r sin(2 pi u2)). The dim normals are then
// divided by their Euclidean norm, so every vector has unit length.
class MockProvider final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDefaultDim = 64;

  explicit MockProvider(std::string model_id = "mock", std::size_t dim = kDefaultDim);

  std::string model_id() const override { return model_id_; }
  std::size_t dim() const noexcept { return dim_; }
  EmbeddingVector embed(const EmbeddingRequest& request) override;

  // Number of embed calls served, including those made through embed_batch.
  std::size_t call_count() const noexcept { return calls_.load(); }
  void reset_call_count() noexcept { calls_.store(0); }

 private:
  std::string model_id_;
  std::size_t dim_;
  std::atomic<std::size_t> calls_{0};
};

// The raw generator, exposed for tests.
std::uint64_t splitmix64_at(std::uint64_t seed, std::uint64_t index) noexcept;

}  // namespace elembed
