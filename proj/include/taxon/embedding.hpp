#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taxon {

// Fixed-dimension text representation. Providers return vectors whose L2
// norm is either 0 (text normalized to nothing) or 1 within 1e-4.
struct EmbeddingVector {
  std::vector<float> values;

  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> v) : values(std::move(v)) {}

  std::size_t dim() const { return values.size(); }
  std::span<const float> span() const { return values; }

  bool operator==(const EmbeddingVector&) const = default;
};

double l2_norm(std::span<const float> v);

// Scales `v` to unit norm in place; an all-zero vector is left unchanged.
void l2_normalize(std::vector<float>& v);

// dot(a, b) / (|a| |b|), accumulated in double. Returns 0.0 when either
// vector has zero norm. Throws DimensionMismatch when sizes differ.
double cosine_similarity(std::span<const float> a, std::span<const float> b);
inline double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine_similarity(a.span(), b.span());
}

// Lowercased maximal runs of alphanumeric bytes. Bytes >= 0x80 count as
// word characters so UTF-8 words survive intact.
std::vector<std::string> tokenize(std::string_view text);

// Word unigrams followed by adjacent bigrams joined with a single space.
std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens);

// Signed feature hashing: each n-gram hashes with seeded XXH64 to h, adds
// +1 at h % dim when bit 1 of h is set and -1 otherwise, then the result is
// L2-normalized. Throws InvalidArgument when dim < 2.
EmbeddingVector hashed_ngram_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dim() const = 0;
  // Identifies everything that determines the vectors this provider emits.
  virtual std::string fingerprint() const = 0;
  // One vector per input, in input order.
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const = 0;

  EmbeddingVector embed(const std::string& text) const;
};

class HashedNgramProvider final : public EmbeddingProvider {
 public:
  HashedNgramProvider(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const override { return dim_; }
  std::string fingerprint() const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

enum class ProviderKind { kHashedNgram, kRemoteHttp };

struct EmbeddingProviderConfig {
  ProviderKind kind = ProviderKind::kHashedNgram;
  // For the remote provider 0 means "accept whatever the server advertises".
  std::size_t dim = 256;
  std::uint64_t seed = 1;
  std::string endpoint;
  int retries = 2;
};

// Remote providers contact the endpoint during construction and throw
// RemoteUnavailable if it cannot be reached.
std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config);

inline EmbeddingVector embed_text(const EmbeddingProvider& provider, const std::string& text) {
  return provider.embed(text);
}

}  // namespace taxon
