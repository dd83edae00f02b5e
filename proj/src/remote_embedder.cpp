#include "taxon/remote_embedder.hpp"

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "taxon/error.hpp"

namespace taxon {
namespace {

using nlohmann::json;

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw InvalidArgument("endpoint needs a scheme: " + url);
  auto slash = url.find('/', scheme + 3);
  Endpoint e;
  e.origin = url.substr(0, slash);
  if (slash != std::string::npos) {
    e.prefix = url.substr(slash);
    while (!e.prefix.empty() && e.prefix.back() == '/') e.prefix.pop_back();
  }
  return e;
}

std::string error_message(const httplib::Result& res) {
  if (!res) return httplib::to_string(res.error());
  try {
    auto j = json::parse(res->body);
    if (j.is_object() && j.contains("error")) return j["error"].dump();
  } catch (const json::exception&) {
  }
  return "HTTP " + std::to_string(res->status);
}

// Issues `call` with retries on transport errors and 5xx. Returns the 200
// response body; throws on anything else.
template <typename Call>
std::string with_retries(const std::string& what, const RemoteOptions& opts, Call&& call) {
  std::string last;
  for (int attempt = 0; attempt <= opts.retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(opts.retry_backoff * attempt);
    httplib::Result res = call();
    if (res && res->status == 200) return res->body;
    last = error_message(res);
    if (res && res->status >= 400 && res->status < 500) {
      throw MalformedResponse(what + " rejected: " + last);
    }
  }
  throw RemoteUnavailable(what + " failed after " + std::to_string(opts.retries + 1) +
                          " attempt(s): " + last);
}

httplib::Client make_client(const Endpoint& e, const RemoteOptions& opts) {
  httplib::Client cli(e.origin);
  cli.set_connection_timeout(opts.timeout);
  cli.set_read_timeout(opts.timeout);
  cli.set_write_timeout(opts.timeout);
  return cli;
}

}  // namespace

RemoteHealth remote_health(const std::string& endpoint, const RemoteOptions& opts) {
  auto e = split_endpoint(endpoint);
  auto cli = make_client(e, opts);
  auto body = with_retries("GET /health", opts, [&] { return cli.Get(e.prefix + "/health"); });
  try {
    auto j = json::parse(body);
    RemoteHealth h;
    h.model = j.at("model").get<std::string>();
    auto dim = j.at("dim").get<std::int64_t>();
    if (dim <= 0) throw MalformedResponse("/health advertised non-positive dim");
    h.dim = static_cast<std::size_t>(dim);
    return h;
  } catch (const json::exception& ex) {
    throw MalformedResponse(std::string("/health: ") + ex.what());
  }
}

std::vector<EmbeddingVector> remote_embed_batch(const std::string& endpoint,
                                                const std::vector<std::string>& texts,
                                                std::size_t advertised_dim,
                                                const RemoteOptions& opts) {
  if (texts.empty()) throw InvalidArgument("remote_embed_batch needs at least one text");
  auto e = split_endpoint(endpoint);
  auto cli = make_client(e, opts);

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  const std::size_t chunk = opts.max_batch == 0 ? texts.size() : opts.max_batch;
  for (std::size_t begin = 0; begin < texts.size(); begin += chunk) {
    const std::size_t end = std::min(texts.size(), begin + chunk);
    json req;
    req["texts"] = json::array();
    for (std::size_t i = begin; i < end; ++i) req["texts"].push_back(texts[i]);
    const std::string payload = req.dump();
    auto body = with_retries("POST /embed", opts, [&] {
      return cli.Post(e.prefix + "/embed", payload, "application/json");
    });

    json resp;
    try {
      resp = json::parse(body);
    } catch (const json::exception& ex) {
      throw MalformedResponse(std::string("/embed: ") + ex.what());
    }
    if (!resp.is_object() || !resp.contains("vectors") || !resp["vectors"].is_array() ||
        !resp.contains("dim") || !resp["dim"].is_number_integer()) {
      throw MalformedResponse("/embed response lacks dim/vectors");
    }
    const auto& vectors = resp["vectors"];
    if (vectors.size() != end - begin) {
      throw MalformedResponse("/embed returned " + std::to_string(vectors.size()) +
                              " vectors for " + std::to_string(end - begin) + " texts");
    }
    const auto response_dim = resp["dim"].get<std::int64_t>();
    const std::size_t want = advertised_dim ? advertised_dim : static_cast<std::size_t>(response_dim);
    if (response_dim <= 0 || static_cast<std::size_t>(response_dim) != want) {
      throw DimensionMismatch("server advertised dim " + std::to_string(want) +
                              ", response declares " + std::to_string(response_dim));
    }
    for (const auto& v : vectors) {
      if (!v.is_array()) throw MalformedResponse("/embed vector is not an array");
      if (v.size() != want) {
        throw DimensionMismatch("expected " + std::to_string(want) + " values, got " +
                                std::to_string(v.size()));
      }
      std::vector<float> values;
      values.reserve(v.size());
      for (const auto& x : v) {
        if (!x.is_number()) throw MalformedResponse("/embed vector holds a non-number");
        values.push_back(x.get<float>());
      }
      l2_normalize(values);
      out.emplace_back(std::move(values));
    }
  }
  return out;
}

RemoteHttpProvider::RemoteHttpProvider(std::string endpoint, RemoteOptions opts)
    : endpoint_(std::move(endpoint)), opts_(opts) {
  health_ = remote_health(endpoint_, opts_);
  if (opts_.expected_dim != 0 && opts_.expected_dim != health_.dim) {
    throw DimensionMismatch("configured dim " + std::to_string(opts_.expected_dim) +
                            " but server advertises " + std::to_string(health_.dim));
  }
}

std::string RemoteHttpProvider::fingerprint() const {
  return "remote-http:model=" + health_.model + ":dim=" + std::to_string(health_.dim);
}

std::vector<EmbeddingVector> RemoteHttpProvider::embed_batch(
    std::span<const std::string> texts) const {
  if (texts.empty()) return {};
  return remote_embed_batch(endpoint_, std::vector<std::string>(texts.begin(), texts.end()),
                            health_.dim, opts_);
}

}  // namespace taxon
