#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <semaphore>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/prompt_builder.hpp"

namespace ledgerlens {

enum class ProviderKind { Http, MockFaithful, MockAdversarial };

enum class AdversarialMode { FabricateNumber, EntitySwap, VerbatimCopy, WrongSign, OffTopic };

std::string_view to_string(AdversarialMode mode);
AdversarialMode parse_adversarial_mode(std::string_view name);
inline constexpr std::array<AdversarialMode, 5> kAllAdversarialModes{
    AdversarialMode::FabricateNumber, AdversarialMode::EntitySwap, AdversarialMode::VerbatimCopy,
    AdversarialMode::WrongSign, AdversarialMode::OffTopic};

struct ProviderConfig {
  std::string name;
  ProviderKind kind = ProviderKind::Http;
  std::string endpoint;                 // http only
  std::string api_key_env;              // environment variable holding a bearer token
  std::size_t token_limit = 4096;
  double cost_per_token = 0.0;          // USD per prompt token
  double token_multiplier = kDefaultTokenMultiplier;
  std::size_t max_output_tokens = 512;
  std::chrono::milliseconds timeout{30000};
  int retries = 3;
  std::chrono::milliseconds backoff_base{1000};  // doubles on each retry
  std::size_t max_concurrency = 4;
  AdversarialMode mode = AdversarialMode::FabricateNumber;
  std::uint64_t seed = 0;
  bool legacy = false;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProviderConfig& c);

struct CompletionRequest {
  std::string prompt;
  std::size_t estimated_tokens = 0;
  const PromptBundle* bundle = nullptr;          // mocks need it
  const KeywordDictionary* lexicon = nullptr;    // mocks need it
};

struct CompletionResult {
  std::string text;
  std::string provider;
  double latency_seconds = 0.0;
  double estimated_cost = 0.0;
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual const ProviderConfig& config() const = 0;
  // Raw completion. Must be safe to call from several threads.
  virtual std::string generate(const CompletionRequest& request) const = 0;
};

double cost_estimate(std::size_t tokens, const ProviderConfig& config);

// Checks the token limit, calls the provider and times the call.
// Throws TokenLimitExceeded before any network traffic.
CompletionResult complete(const CompletionRequest& request, const LlmProvider& provider);
CompletionResult complete(const PromptBundle& bundle, const LlmProvider& provider,
                          const KeywordDictionary* lexicon = nullptr);

// HTTP text-completion provider: POST {"prompt","max_tokens"} -> {"text"}.
// Retries connection failures, timeouts, 429 and 5xx with exponential
// backoff. Exhaustion raises Timeout, or ProviderError when the last attempt
// produced an HTTP status.
std::unique_ptr<LlmProvider> make_http_provider(ProviderConfig config);

std::unique_ptr<LlmProvider> make_mock_provider(ProviderConfig config);

// Test hook: any callable as a provider.
using CompletionFn = std::function<std::string(const CompletionRequest&)>;
std::unique_ptr<LlmProvider> make_callback_provider(ProviderConfig config, CompletionFn fn);

// Named providers plus a per-provider cap on concurrent calls.
class ProviderRegistry {
 public:
  ProviderRegistry() = default;
  ProviderRegistry(ProviderRegistry&&) noexcept = default;
  ProviderRegistry& operator=(ProviderRegistry&&) noexcept = default;

  // {"default": "...", "providers": [ {...}, ... ]}
  static ProviderRegistry from_json(const nlohmann::json& doc);
  static ProviderRegistry load(const std::filesystem::path& path);

  void add(std::unique_ptr<LlmProvider> provider);
  bool contains(const std::string& name) const;
  const LlmProvider& get(const std::string& name) const;  // throws UnknownProvider
  std::vector<std::string> names() const;

  const std::string& default_name() const noexcept { return default_; }
  void set_default(std::string name);

  // Blocks while the provider is at its concurrency cap.
  CompletionResult complete(const std::string& name, const CompletionRequest& request) const;

 private:
  struct Entry {
    std::unique_ptr<LlmProvider> provider;
    std::unique_ptr<std::counting_semaphore<>> slots;
  };
  std::map<std::string, Entry> providers_;
  std::string default_;
};

// Deterministic mock generators.
std::string mock_faithful(const PromptBundle& bundle, const KeywordDictionary& lexicon);
// Throws DefectImpossible when the bundle offers nothing to corrupt.
std::string mock_adversarial(const PromptBundle& bundle, const KeywordDictionary& lexicon, AdversarialMode mode,
                             std::uint64_t seed = 0);

}  // namespace ledgerlens
