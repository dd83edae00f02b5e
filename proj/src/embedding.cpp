#include "taxon/embedding.hpp"

#include <cmath>

#include "taxon/error.hpp"
#include "taxon/remote_embedder.hpp"
#include "taxon/xxhash64.hpp"

namespace taxon {

double l2_norm(std::span<const float> v) {
  double sum = 0.0;
  for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
  return std::sqrt(sum);
}

void l2_normalize(std::vector<float>& v) {
  double norm = l2_norm(v);
  if (norm == 0.0) return;
  for (auto& x : v) x = static_cast<float>(static_cast<double>(x) / norm);
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw DimensionMismatch("cosine over dims " + std::to_string(a.size()) + " and " +
                            std::to_string(b.size()));
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  // Rounding can push |c| a hair past 1.
  if (c > 1.0) c = 1.0;
  if (c < -1.0) c = -1.0;
  return c;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char ch : text) {
    bool word = (ch >= '0' && ch <= '9') || (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') ||
                ch >= 0x80;
    if (word) {
      current.push_back(static_cast<char>(ch >= 'A' && ch <= 'Z' ? ch - 'A' + 'a' : ch));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> word_ngrams(const std::vector<std::string>& tokens) {
  std::vector<std::string> grams(tokens.begin(), tokens.end());
  for (std::size_t i = 1; i < tokens.size(); ++i) grams.push_back(tokens[i - 1] + ' ' + tokens[i]);
  return grams;
}

EmbeddingVector hashed_ngram_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 2) throw InvalidArgument("hashed embedding dim must be >= 2");
  std::vector<double> acc(dim, 0.0);
  for (const auto& gram : word_ngrams(tokenize(text))) {
    const std::uint64_t h = xxh64(gram, seed);
    acc[h % dim] += ((h >> 1) & 1U) ? 1.0 : -1.0;
  }
  double sum = 0.0;
  for (double x : acc) sum += x * x;
  std::vector<float> values(dim, 0.0F);
  if (sum > 0.0) {
    const double norm = std::sqrt(sum);
    for (std::size_t i = 0; i < dim; ++i) values[i] = static_cast<float>(acc[i] / norm);
  }
  return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingProvider::embed(const std::string& text) const {
  auto out = embed_batch(std::span<const std::string>(&text, 1));
  return std::move(out.front());
}

HashedNgramProvider::HashedNgramProvider(std::size_t dim, std::uint64_t seed)
    : dim_(dim), seed_(seed) {
  if (dim < 2) throw InvalidArgument("hashed embedding dim must be >= 2");
}

std::string HashedNgramProvider::fingerprint() const {
  return "hashed-ngram:xxh64:uni+bi:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
}

std::vector<EmbeddingVector> HashedNgramProvider::embed_batch(
    std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hashed_ngram_embed(t, dim_, seed_));
  return out;
}

std::unique_ptr<EmbeddingProvider> make_provider(const EmbeddingProviderConfig& config) {
  switch (config.kind) {
    case ProviderKind::kHashedNgram:
      return std::make_unique<HashedNgramProvider>(config.dim, config.seed);
    case ProviderKind::kRemoteHttp: {
      RemoteOptions opts;
      opts.expected_dim = config.dim;
      opts.retries = config.retries;
      return std::make_unique<RemoteHttpProvider>(config.endpoint, opts);
    }
  }
  throw InvalidArgument("unknown provider kind");
}

}  // namespace taxon
