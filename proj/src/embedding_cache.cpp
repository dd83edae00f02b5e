#include "taxon/embedding_cache.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "taxon/error.hpp"

namespace taxon {
namespace {

constexpr char kMagic[4] = {'T', 'X', 'E', 'C'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  U bits = std::bit_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view data) : data_(data) {}

  template <typename T>
  T get_le() {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    need(sizeof(T));
    U bits = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      bits |= static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return std::bit_cast<T>(bits);
  }

  void get_bytes(void* dst, std::size_t n) {
    need(n);
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::size_t n) const {
    if (data_.size() - pos_ < n) throw CorruptFile("embedding cache truncated");
  }

  std::string_view data_;
  std::size_t pos_ = 0;
};

}  // namespace

CacheKey cache_key(std::string_view fingerprint, std::string_view text) {
  CacheKey key{};
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  const char nul = '\0';
  bool ok = ctx && EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) == 1 &&
            EVP_DigestUpdate(ctx, fingerprint.data(), fingerprint.size()) == 1 &&
            EVP_DigestUpdate(ctx, &nul, 1) == 1 &&
            EVP_DigestUpdate(ctx, text.data(), text.size()) == 1 &&
            EVP_DigestFinal_ex(ctx, key.data(), &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok || len != key.size()) throw std::runtime_error("SHA-256 digest failed");
  return key;
}

EmbeddingCache::EmbeddingCache(EmbeddingCache&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  entries_ = std::move(other.entries_);
}

EmbeddingCache& EmbeddingCache::operator=(EmbeddingCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

EmbeddingCache EmbeddingCache::load(const std::string& path) {
  EmbeddingCache cache;
  std::ifstream in(path, std::ios::binary);
  if (!in) return cache;
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();

  Reader r(data);
  char magic[4];
  r.get_bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0) throw CorruptFile(path + ": bad magic");
  if (auto v = r.get_le<std::uint32_t>(); v != kVersion) {
    throw CorruptFile(path + ": unsupported cache version " + std::to_string(v));
  }
  const auto count = r.get_le<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    CacheKey key;
    r.get_bytes(key.data(), key.size());
    const auto dim = r.get_le<std::uint32_t>();
    std::vector<float> values(dim);
    for (auto& x : values) x = r.get_le<float>();
    cache.entries_.emplace(key, EmbeddingVector(std::move(values)));
  }
  if (!r.done()) throw CorruptFile(path + ": trailing bytes");
  return cache;
}

void EmbeddingCache::save(const std::string& path) const {
  std::string out;
  {
    std::shared_lock lock(mutex_);
    out.append(kMagic, 4);
    put_le(out, kVersion);
    put_le(out, static_cast<std::uint64_t>(entries_.size()));
    for (const auto& [key, vec] : entries_) {
      out.append(reinterpret_cast<const char*>(key.data()), key.size());
      put_le(out, static_cast<std::uint32_t>(vec.dim()));
      for (float x : vec.values) put_le(out, x);
    }
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw InvalidArgument("cannot write " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw InvalidArgument("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<EmbeddingVector> EmbeddingCache::get(const CacheKey& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const CacheKey& key, EmbeddingVector value) {
  std::unique_lock lock(mutex_);
  entries_.insert_or_assign(key, std::move(value));
}

std::size_t EmbeddingCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

std::vector<EmbeddingVector> CachedProvider::embed_batch(std::span<const std::string> texts) const {
  const std::string fp = inner_.fingerprint();
  std::vector<std::optional<EmbeddingVector>> slots(texts.size());
  std::vector<CacheKey> keys(texts.size());
  std::vector<std::string> missing;
  std::unordered_map<std::string_view, std::size_t> missing_index;
  std::vector<std::size_t> slot_to_missing(texts.size(), SIZE_MAX);

  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys[i] = cache_key(fp, texts[i]);
    if (auto hit = cache_.get(keys[i])) {
      slots[i] = std::move(hit);
      ++hits_;
      continue;
    }
    auto [it, fresh] = missing_index.emplace(texts[i], missing.size());
    if (fresh) missing.push_back(texts[i]);
    slot_to_missing[i] = it->second;
  }

  if (!missing.empty()) {
    auto computed = inner_.embed_batch(missing);
    provider_calls_ += missing.size();
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (slot_to_missing[i] == SIZE_MAX) continue;
      const auto& v = computed[slot_to_missing[i]];
      slots[i] = v;
    }
    for (std::size_t m = 0; m < missing.size(); ++m) {
      cache_.put(cache_key(fp, missing[m]), computed[m]);
    }
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace taxon
