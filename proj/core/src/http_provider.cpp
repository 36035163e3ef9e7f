#include <httplib.h>

#include <cstdlib>
#include <thread>

#include <spdlog/spdlog.h>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/http_url.hpp"
#include "ledgerlens/llm_gateway.hpp"

namespace ledgerlens {

namespace {

bool retryable(int status) { return status == 429 || status >= 500; }

class HttpProvider final : public LlmProvider {
 public:
  explicit HttpProvider(ProviderConfig config) : config_(std::move(config)), url_(parse_http_url(config_.endpoint)) {}

  const ProviderConfig& config() const override { return config_; }

  std::string generate(const CompletionRequest& request) const override {
    httplib::Client client(url_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());
    if (!config_.api_key_env.empty()) {
      if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key) client.set_bearer_token_auth(key);
    }
    const std::string body =
        nlohmann::json{{"prompt", request.prompt}, {"max_tokens", config_.max_output_tokens}}.dump();

    int last_status = 0;
    std::string last_error;
    auto delay = config_.backoff_base;
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) {
        spdlog::warn("provider {}: attempt {} failed ({}), retrying in {} ms", config_.name, attempt, last_error,
                     delay.count());
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      auto res = client.Post(url_.path, body, "application/json");
      if (!res) {
        last_status = 0;
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 200) return parse(res->body);
      last_status = res->status;
      last_error = "HTTP " + std::to_string(res->status);
      if (!retryable(res->status)) throw ProviderError(res->status, res->body.substr(0, 200));
    }
    if (last_status != 0) throw ProviderError(last_status, "retries exhausted");
    throw Timeout("provider " + config_.name + ": retries exhausted: " + last_error);
  }

 private:
  std::string parse(const std::string& body) const {
    try {
      auto doc = nlohmann::json::parse(body);
      return doc.at("text").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(200, std::string("malformed completion body: ") + e.what());
    }
  }

  ProviderConfig config_;
  HttpUrl url_;
};

}  // namespace

std::unique_ptr<LlmProvider> make_http_provider(ProviderConfig config) {
  return std::make_unique<HttpProvider>(std::move(config));
}

}  // namespace ledgerlens
