#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>

#include "taxon/embedding.hpp"

namespace taxon {

using CacheKey = std::array<std::uint8_t, 32>;

// SHA-256 over fingerprint bytes, one NUL byte, then the exact text bytes.
CacheKey cache_key(std::string_view fingerprint, std::string_view text);

// Thread-safe key-value store of embeddings. Persisted as one binary file:
//   "TXEC" | u32 version=1 | u64 count | count x (32-byte key | u32 dim | dim x f32)
// with all integers and floats little-endian, entries sorted by key.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;

  // Missing file yields an empty cache; a damaged one throws CorruptFile.
  static EmbeddingCache load(const std::string& path);
  // Writes to a temporary sibling and renames it into place.
  void save(const std::string& path) const;

  std::optional<EmbeddingVector> get(const CacheKey& key) const;
  void put(const CacheKey& key, EmbeddingVector value);
  std::size_t size() const;

  EmbeddingCache(EmbeddingCache&& other) noexcept;
  EmbeddingCache& operator=(EmbeddingCache&& other) noexcept;

 private:
  mutable std::shared_mutex mutex_;
  std::map<CacheKey, EmbeddingVector> entries_;
};

// Provider decorator that consults `cache` before delegating to `inner`.
// Repeated texts within one batch are computed once.
class CachedProvider final : public EmbeddingProvider {
 public:
  CachedProvider(const EmbeddingProvider& inner, EmbeddingCache& cache)
      : inner_(inner), cache_(cache) {}

  std::size_t dim() const override { return inner_.dim(); }
  std::string fingerprint() const override { return inner_.fingerprint(); }
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

  // Number of texts forwarded to the inner provider so far.
  std::size_t provider_calls() const { return provider_calls_.load(); }
  std::size_t hits() const { return hits_.load(); }

 private:
  const EmbeddingProvider& inner_;
  EmbeddingCache& cache_;
  mutable std::atomic<std::size_t> provider_calls_{0};
  mutable std::atomic<std::size_t> hits_{0};
};

inline std::vector<EmbeddingVector> cached_embed(const CachedProvider& provider,
                                                 std::span<const std::string> texts) {
  return provider.embed_batch(texts);
}

}  // namespace taxon
