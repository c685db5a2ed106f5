#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <shared_mutex>
#include <unordered_map>

#include "elembed/embedding.hpp"

namespace elembed {

// Persistent append-only store of embeddings keyed by key_hash(ProviderKey).
//
// On-disk record, all integers little-endian:
//   u64 key hash | u32 dim | dim x f64 (IEEE-754) | u32 CRC-32 of the preceding bytes
//
// Records that fail their checksum, or a truncated tail, are dropped on load
// with a warning and the file is rewritten without them. The first vector
// stored under a key wins; later puts for the same key are ignored.
class EmbeddingCache {
 public:
  struct Stats {
    std::size_t entries = 0;
    std::size_t evicted_on_load = 0;
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::uintmax_t file_bytes = 0;
  };

  // An empty path gives a purely in-memory cache.
  explicit EmbeddingCache(std::filesystem::path path = {});

  std::optional<EmbeddingVector> get(const ProviderKey& key) const;
  void put(const ProviderKey& key, const EmbeddingVector& vector);

  Stats stats() const;
  const std::filesystem::path& path() const noexcept { return path_; }

  // Drops every entry and truncates the file.
  void clear();

 private:
  void load();
  void rewrite_locked() const;

  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, EmbeddingVector> entries_;
  std::size_t evicted_ = 0;
  mutable std::atomic<std::size_t> hits_{0};
  mutable std::atomic<std::size_t> misses_{0};
};

}  // namespace elembed
