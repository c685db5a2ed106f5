#include "elembed/embedding_cache.hpp"

#include <bit>
#include <fstream>
#include <mutex>
#include <vector>

#include <boost/crc.hpp>
#include <spdlog/spdlog.h>

#include "elembed/errors.hpp"

namespace elembed {
namespace {

constexpr std::size_t kHeaderBytes = 8 + 4;
constexpr std::size_t kCrcBytes = 4;

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<unsigned char>(value >> (8 * i)));
}

template <typename T>
T get_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

std::uint32_t crc32(const unsigned char* data, std::size_t n) {
  boost::crc_32_type crc;
  crc.process_bytes(data, n);
  return crc.checksum();
}

std::vector<unsigned char> encode_record(std::uint64_t key, const EmbeddingVector& v) {
  std::vector<unsigned char> rec;
  rec.reserve(kHeaderBytes + 8 * v.dim() + kCrcBytes);
  put_le<std::uint64_t>(rec, key);
  put_le<std::uint32_t>(rec, static_cast<std::uint32_t>(v.dim()));
  for (double x : v.values()) put_le<std::uint64_t>(rec, std::bit_cast<std::uint64_t>(x));
  put_le<std::uint32_t>(rec, crc32(rec.data(), rec.size()));
  return rec;
}

void append_bytes(const std::filesystem::path& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(Errc::OutputUnwritable, "cannot append to cache file " + path.string());
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path path) : path_(std::move(path)) {
  if (!path_.empty()) load();
}

void EmbeddingCache::load() {
  std::error_code ec;
  if (!std::filesystem::exists(path_, ec)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path(), ec);
    return;
  }
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::FileUnreadable, "cannot open cache file " + path_.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t remaining = bytes.size() - pos;
    if (remaining < kHeaderBytes + kCrcBytes) {
      spdlog::warn("CacheCorrupt: {}: {} trailing bytes do not form a record; dropped",
                   path_.string(), remaining);
      ++evicted_;
      break;
    }
    const auto key = get_le<std::uint64_t>(&bytes[pos]);
    const auto dim = get_le<std::uint32_t>(&bytes[pos + 8]);
    const std::size_t length = kHeaderBytes + 8 * static_cast<std::size_t>(dim) + kCrcBytes;
    if (dim == 0 || length > remaining) {
      spdlog::warn("CacheCorrupt: {}: record at offset {} has implausible dim {}; dropping the rest",
                   path_.string(), pos, dim);
      ++evicted_;
      break;
    }
    const auto stored_crc = get_le<std::uint32_t>(&bytes[pos + length - kCrcBytes]);
    if (stored_crc != crc32(&bytes[pos], length - kCrcBytes)) {
      spdlog::warn("CacheCorrupt: {}: checksum mismatch at offset {}; entry evicted",
                   path_.string(), pos);
      ++evicted_;
      pos += length;
      continue;
    }
    std::vector<double> values(dim);
    for (std::size_t i = 0; i < dim; ++i)
      values[i] = std::bit_cast<double>(get_le<std::uint64_t>(&bytes[pos + kHeaderBytes + 8 * i]));
    try {
      entries_.emplace(key, EmbeddingVector(std::move(values)));
    } catch (const Error&) {
      spdlog::warn("CacheCorrupt: {}: non-finite values at offset {}; entry evicted",
                   path_.string(), pos);
      ++evicted_;
    }
    pos += length;
  }
  if (evicted_ > 0) rewrite_locked();
}

void EmbeddingCache::rewrite_locked() const {
  const auto tmp = std::filesystem::path(path_.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    for (const auto& [key, vec] : entries_) {
      const auto rec = encode_record(key, vec);
      out.write(reinterpret_cast<const char*>(rec.data()), static_cast<std::streamsize>(rec.size()));
    }
    if (!out) throw Error(Errc::OutputUnwritable, "cannot rewrite cache file " + tmp.string());
  }
  std::filesystem::rename(tmp, path_);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const ProviderKey& key) const {
  const std::uint64_t h = key_hash(key);
  std::shared_lock lock(mutex_);
  auto it = entries_.find(h);
  if (it == entries_.end()) {
    misses_.fetch_add(1);
    return std::nullopt;
  }
  hits_.fetch_add(1);
  return it->second;
}

void EmbeddingCache::put(const ProviderKey& key, const EmbeddingVector& vector) {
  const std::uint64_t h = key_hash(key);
  std::unique_lock lock(mutex_);
  if (entries_.contains(h)) return;
  if (!path_.empty()) append_bytes(path_, encode_record(h, vector));
  entries_.emplace(h, vector);
}

EmbeddingCache::Stats EmbeddingCache::stats() const {
  std::shared_lock lock(mutex_);
  Stats s;
  s.entries = entries_.size();
  s.evicted_on_load = evicted_;
  s.hits = hits_.load();
  s.misses = misses_.load();
  std::error_code ec;
  if (!path_.empty() && std::filesystem::exists(path_, ec))
    s.file_bytes = std::filesystem::file_size(path_, ec);
  return s;
}

void EmbeddingCache::clear() {
  std::unique_lock lock(mutex_);
  entries_.clear();
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::OutputUnwritable, "cannot truncate cache file " + path_.string());
  }
}

}  // namespace elembed
