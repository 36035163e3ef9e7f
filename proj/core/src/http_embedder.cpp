#include <httplib.h>

#include <nlohmann/json.hpp>

#include "ledgerlens/embedder.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/http_url.hpp"

namespace ledgerlens {

HttpEmbedder::HttpEmbedder(HttpEmbedderConfig config) : config_(std::move(config)) {
  if (config_.dimension == 0) throw DimensionMismatch("embedding dimension must be positive");
}

EmbeddingVector HttpEmbedder::embed(std::string_view text) const {
  std::vector<std::string> one{std::string(text)};
  return embed_batch(one).front();
}

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(std::span<const std::string> texts) const {
  const auto url = parse_http_url(config_.url);
  httplib::Client client(url.origin);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (!config_.bearer_token.empty()) client.set_bearer_token_auth(config_.bearer_token);

  nlohmann::json body{{"texts", std::vector<std::string>(texts.begin(), texts.end())}};
  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) throw Timeout("embedding request to " + config_.url + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw BadResponse("embedding endpoint returned HTTP " + std::to_string(res->status));
  }

  std::vector<EmbeddingVector> out;
  try {
    auto doc = nlohmann::json::parse(res->body);
    const auto& vectors = doc.at("vectors");
    if (!vectors.is_array() || vectors.size() != texts.size()) {
      throw BadResponse("embedding endpoint returned " + std::to_string(vectors.size()) + " vectors for " +
                        std::to_string(texts.size()) + " texts");
    }
    for (const auto& v : vectors) {
      auto values = v.get<std::vector<double>>();
      if (values.size() != config_.dimension) {
        throw BadResponse("embedding of dimension " + std::to_string(values.size()) + ", expected " +
                          std::to_string(config_.dimension));
      }
      EmbeddingVector e(std::move(values));
      e.normalize();
      out.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    throw BadResponse(std::string("malformed embedding response: ") + e.what());
  }
  return out;
}

}  // namespace ledgerlens

namespace ledgerlens {

HttpUrl parse_http_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos) throw Error("url without scheme: " + std::string(url));
  const auto path_at = url.find('/', scheme + 3);
  if (path_at == std::string_view::npos) return {std::string(url), "/"};
  return {std::string(url.substr(0, path_at)), std::string(url.substr(path_at))};
}

}  // namespace ledgerlens
