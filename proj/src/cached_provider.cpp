#include "elembed/cached_provider.hpp"

#include <optional>

#include "elembed/errors.hpp"

namespace elembed {

EmbeddingVector CachedProvider::embed(const EmbeddingRequest& request) {
  request.validate();
  const ProviderKey key{inner_.model_id(), request};
  if (auto hit = cache_.get(key)) return *std::move(hit);
  forwarded_.fetch_add(1);
  EmbeddingVector v = inner_.embed(request);
  cache_.put(key, v);
  // Another thread may have stored the key first; return what the cache holds.
  return cache_.get(key).value_or(v);
}

std::vector<EmbeddingVector> CachedProvider::embed_batch(
    std::span<const EmbeddingRequest> requests) {
  if (requests.empty()) throw Error(Errc::EmptyBatch, "embed_batch called with no requests");

  const std::string model = inner_.model_id();
  std::vector<std::optional<EmbeddingVector>> out(requests.size());
  std::vector<EmbeddingRequest> misses;
  std::vector<std::size_t> miss_index;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      requests[i].validate();
    } catch (const Error& e) {
      throw BatchError(i, e);
    }
    if (auto hit = cache_.get(ProviderKey{model, requests[i]})) {
      out[i] = std::move(hit);
    } else {
      misses.push_back(requests[i]);
      miss_index.push_back(i);
    }
  }

  if (!misses.empty()) {
    forwarded_.fetch_add(misses.size());
    std::vector<EmbeddingVector> fetched;
    try {
      fetched = inner_.embed_batch(misses);
    } catch (const BatchError& e) {
      throw BatchError(miss_index[e.index()], e);
    }
    for (std::size_t j = 0; j < fetched.size(); ++j) {
      const ProviderKey key{model, misses[j]};
      cache_.put(key, fetched[j]);
      out[miss_index[j]] = cache_.get(key).value_or(fetched[j]);
    }
  }

  std::vector<EmbeddingVector> result;
  result.reserve(out.size());
  for (auto& v : out) result.push_back(*std::move(v));
  return result;
}

}  // namespace elembed
