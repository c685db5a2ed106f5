#include "elembed/embedding.hpp"

#include <cmath>
#include <cstring>

#include "elembed/errors.hpp"

namespace elembed {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw Error(Errc::EmptyModelOutput, "embedding has no values");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      throw Error(Errc::NonFiniteScore, "embedding value " + std::to_string(i) + " is not finite");
  }
}

EmbeddingVector EmbeddingVector::scaled(double factor) const {
  std::vector<double> out(values_);
  for (double& v : out) v *= factor;
  return EmbeddingVector(std::move(out));
}

bool EmbeddingVector::bit_identical(const EmbeddingVector& other) const noexcept {
  return values_.size() == other.values_.size() &&
         std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(double)) == 0;
}

std::string_view pooling_name(Pooling p) noexcept {
  return p == Pooling::WholeInput ? "whole_input" : "target_span";
}

std::optional<Pooling> parse_pooling(std::string_view name) noexcept {
  if (name == "whole_input") return Pooling::WholeInput;
  if (name == "target_span") return Pooling::TargetSpan;
  return std::nullopt;
}

EmbeddingRequest EmbeddingRequest::whole(std::string text) {
  return EmbeddingRequest{std::move(text), Pooling::WholeInput, std::nullopt};
}

EmbeddingRequest EmbeddingRequest::target(std::string text, CharSpan span) {
  return EmbeddingRequest{std::move(text), Pooling::TargetSpan, span};
}

void EmbeddingRequest::validate() const {
  if (pooling == Pooling::WholeInput) {
    if (span) throw Error(Errc::BadSpan, "span given for whole_input pooling");
    return;
  }
  if (!span) throw Error(Errc::BadSpan, "target_span pooling requires a span");
  if (span->start >= span->end || span->end > text.size())
    throw Error(Errc::BadSpan, "span [" + std::to_string(span->start) + ", " +
                                   std::to_string(span->end) + ") is empty or outside '" + text +
                                   "'");
}

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void fnv_u64(std::uint64_t& h, std::uint64_t v) {
  unsigned char le[8];
  for (int i = 0; i < 8; ++i) le[i] = static_cast<unsigned char>(v >> (8 * i));
  fnv_bytes(h, le, 8);
}

void fnv_field(std::uint64_t& h, std::string_view s) {
  fnv_u64(h, s.size());
  fnv_bytes(h, s.data(), s.size());
}

}  // namespace

std::uint64_t key_hash(const ProviderKey& key) noexcept {
  std::uint64_t h = kFnvOffset;
  fnv_field(h, key.model_id);
  fnv_field(h, key.request.text);
  fnv_field(h, pooling_name(key.request.pooling));
  if (key.request.span) {
    fnv_u64(h, 1);
    fnv_u64(h, key.request.span->start);
    fnv_u64(h, key.request.span->end);
  } else {
    fnv_u64(h, 0);
  }
  return h;
}

std::vector<EmbeddingVector> EmbeddingProvider::embed_batch(
    std::span<const EmbeddingRequest> requests) {
  if (requests.empty()) throw Error(Errc::EmptyBatch, "embed_batch called with no requests");
  std::vector<EmbeddingVector> out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      out.push_back(embed(requests[i]));
    } catch (const Error& e) {
      throw BatchError(i, e);
    }
  }
  return out;
}

void require_same_dim(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) return;
  const std::size_t dim = vectors.front().dim();
  for (std::size_t i = 1; i < vectors.size(); ++i) {
    if (vectors[i].dim() != dim)
      throw Error(Errc::DimensionMismatch, "vector " + std::to_string(i) + " has dim " +
                                               std::to_string(vectors[i].dim()) + ", expected " +
                                               std::to_string(dim));
  }
}

}  // namespace elembed
