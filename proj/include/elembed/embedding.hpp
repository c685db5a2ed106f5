#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace elembed {

// Fixed-dimension, finite, 64-bit embedding.
class EmbeddingVector {
 public:
  // Throws Errc::EmptyModelOutput for an empty vector and
  // Errc::NonFiniteScore when a value is NaN or infinite.
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  EmbeddingVector scaled(double factor) const;

  // Bit-level equality (distinguishes -0.0 from 0.0).
  bool bit_identical(const EmbeddingVector& other) const noexcept;
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

enum class Pooling { WholeInput, TargetSpan };

std::string_view pooling_name(Pooling p) noexcept;
// Accepts "whole_input" and "target_span".
std::optional<Pooling> parse_pooling(std::string_view name) noexcept;

// Half-open character (byte) range [start, end) into the request text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct EmbeddingRequest {
  std::string text;
  Pooling pooling = Pooling::WholeInput;
  std::optional<CharSpan> span;

  static EmbeddingRequest whole(std::string text);
  static EmbeddingRequest target(std::string text, CharSpan span);

  // Errc::BadSpan unless span is present exactly for TargetSpan pooling and is
  // a non-empty in-bounds range.
  void validate() const;

  friend bool operator==(const EmbeddingRequest&, const EmbeddingRequest&) = default;
};

struct ProviderKey {
  std::string model_id;
  EmbeddingRequest request;
  friend bool operator==(const ProviderKey&, const ProviderKey&) = default;
};

// 64-bit FNV-1a over length-prefixed (model_id, text, pooling, span). Used as
// the cache record key and as the mock provider's seed.
std::uint64_t key_hash(const ProviderKey& key) noexcept;

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::string model_id() const = 0;
  virtual EmbeddingVector embed(const EmbeddingRequest& request) = 0;

  // Order-preserving map of embed over `requests`. Throws Errc::EmptyBatch for
  // an empty list and BatchError carrying the failing index otherwise.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const EmbeddingRequest> requests);
};

// Throws Errc::DimensionMismatch unless all vectors share one dimension.
void require_same_dim(std::span<const EmbeddingVector> vectors);

}  // namespace elembed
