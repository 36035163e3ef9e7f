#include "ledgerlens/llm_gateway.hpp"

#include <fstream>

#include "ledgerlens/errors.hpp"

namespace ledgerlens {

namespace {

class CallbackProvider final : public LlmProvider {
 public:
  CallbackProvider(ProviderConfig config, CompletionFn fn) : config_(std::move(config)), fn_(std::move(fn)) {}
  const ProviderConfig& config() const override { return config_; }
  std::string generate(const CompletionRequest& request) const override { return fn_(request); }

 private:
  ProviderConfig config_;
  CompletionFn fn_;
};

ProviderKind parse_kind(const std::string& s) {
  if (s == "http") return ProviderKind::Http;
  if (s == "mock_faithful") return ProviderKind::MockFaithful;
  if (s == "mock_adversarial") return ProviderKind::MockAdversarial;
  throw SchemaError("unknown provider kind: " + s);
}

std::string_view kind_name(ProviderKind k) {
  switch (k) {
    case ProviderKind::Http: return "http";
    case ProviderKind::MockFaithful: return "mock_faithful";
    case ProviderKind::MockAdversarial: return "mock_adversarial";
  }
  return "http";
}

}  // namespace

std::string_view to_string(AdversarialMode mode) {
  switch (mode) {
    case AdversarialMode::FabricateNumber: return "fabricate_number";
    case AdversarialMode::EntitySwap: return "entity_swap";
    case AdversarialMode::VerbatimCopy: return "verbatim_copy";
    case AdversarialMode::WrongSign: return "wrong_sign";
    case AdversarialMode::OffTopic: return "off_topic";
  }
  return "fabricate_number";
}

AdversarialMode parse_adversarial_mode(std::string_view name) {
  for (auto m : kAllAdversarialModes)
    if (to_string(m) == name) return m;
  throw SchemaError("unknown adversarial mode: " + std::string(name));
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  try {
    c.name = j.at("name").get<std::string>();
    c.kind = parse_kind(j.value("kind", std::string("http")));
    c.endpoint = j.value("endpoint", std::string());
    c.api_key_env = j.value("api_key_env", std::string());
    c.token_limit = j.at("token_limit").get<std::size_t>();
    c.cost_per_token = j.value("cost_per_token", 0.0);
    c.token_multiplier = j.value("token_multiplier", kDefaultTokenMultiplier);
    c.max_output_tokens = j.value("max_output_tokens", std::size_t{512});
    c.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
    c.retries = j.value("retries", 3);
    c.backoff_base = std::chrono::milliseconds(j.value("backoff_ms", 1000));
    c.max_concurrency = j.value("max_concurrency", std::size_t{4});
    if (j.contains("mode")) c.mode = parse_adversarial_mode(j.at("mode").get<std::string>());
    c.seed = j.value("seed", std::uint64_t{0});
    c.legacy = j.value("legacy", false);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("provider config: ") + e.what());
  }
  if (c.name.empty()) throw SchemaError("provider config: empty name");
  if (c.token_limit == 0) throw SchemaError("provider " + c.name + ": token_limit must be positive");
  if (c.kind == ProviderKind::Http && c.endpoint.empty())
    throw SchemaError("provider " + c.name + ": http provider needs an endpoint");
  if (c.retries < 0) throw SchemaError("provider " + c.name + ": negative retries");
  if (c.max_concurrency == 0) c.max_concurrency = 1;
  return c;
}

nlohmann::json to_json(const ProviderConfig& c) {
  nlohmann::json j{{"name", c.name},
                   {"kind", kind_name(c.kind)},
                   {"token_limit", c.token_limit},
                   {"cost_per_token", c.cost_per_token},
                   {"token_multiplier", c.token_multiplier},
                   {"legacy", c.legacy}};
  if (!c.endpoint.empty()) j["endpoint"] = c.endpoint;
  if (c.kind == ProviderKind::MockAdversarial) j["mode"] = to_string(c.mode);
  return j;
}

double cost_estimate(std::size_t tokens, const ProviderConfig& config) {
  return static_cast<double>(tokens) * config.cost_per_token;
}

CompletionResult complete(const CompletionRequest& request, const LlmProvider& provider) {
  const auto& cfg = provider.config();
  auto tokens = request.estimated_tokens;
  if (tokens == 0) tokens = estimate_tokens(request.prompt, cfg.token_multiplier);
  if (tokens > cfg.token_limit) throw TokenLimitExceeded(tokens, cfg.token_limit);

  const auto start = std::chrono::steady_clock::now();
  CompletionResult r;
  r.text = provider.generate(request);
  r.latency_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.provider = cfg.name;
  r.estimated_cost = cost_estimate(tokens, cfg);
  return r;
}

CompletionResult complete(const PromptBundle& bundle, const LlmProvider& provider, const KeywordDictionary* lexicon) {
  CompletionRequest req;
  req.prompt = bundle.text;
  // The bundle's estimate used the builder's multiplier; re-estimate with
  // the provider's own.
  req.estimated_tokens = estimate_tokens(bundle.text, provider.config().token_multiplier);
  req.bundle = &bundle;
  req.lexicon = lexicon;
  return complete(req, provider);
}

std::unique_ptr<LlmProvider> make_callback_provider(ProviderConfig config, CompletionFn fn) {
  return std::make_unique<CallbackProvider>(std::move(config), std::move(fn));
}

ProviderRegistry ProviderRegistry::from_json(const nlohmann::json& doc) {
  ProviderRegistry reg;
  if (!doc.is_object() || !doc.contains("providers") || !doc.at("providers").is_array())
    throw SchemaError("$.providers: expected an array");
  for (const auto& p : doc.at("providers")) {
    auto cfg = provider_config_from_json(p);
    if (reg.contains(cfg.name)) throw SchemaError("duplicate provider: " + cfg.name);
    if (cfg.kind == ProviderKind::Http)
      reg.add(make_http_provider(std::move(cfg)));
    else
      reg.add(make_mock_provider(std::move(cfg)));
  }
  if (doc.contains("default")) reg.set_default(doc.at("default").get<std::string>());
  return reg;
}

ProviderRegistry ProviderRegistry::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open provider registry " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return from_json(doc);
}

void ProviderRegistry::add(std::unique_ptr<LlmProvider> provider) {
  const auto name = provider->config().name;
  const auto cap = static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, provider->config().max_concurrency));
  Entry e{std::move(provider), std::make_unique<std::counting_semaphore<>>(cap)};
  providers_.insert_or_assign(name, std::move(e));
  if (default_.empty()) default_ = name;
}

bool ProviderRegistry::contains(const std::string& name) const { return providers_.count(name) > 0; }

const LlmProvider& ProviderRegistry::get(const std::string& name) const {
  auto it = providers_.find(name);
  if (it == providers_.end()) throw UnknownProvider(name);
  return *it->second.provider;
}

std::vector<std::string> ProviderRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : providers_) out.push_back(k);
  return out;
}

void ProviderRegistry::set_default(std::string name) {
  if (!contains(name)) throw UnknownProvider(name);
  default_ = std::move(name);
}

CompletionResult ProviderRegistry::complete(const std::string& name, const CompletionRequest& request) const {
  auto it = providers_.find(name);
  if (it == providers_.end()) throw UnknownProvider(name);
  auto& slots = *it->second.slots;
  slots.acquire();
  struct Release {
    std::counting_semaphore<>& s;
    ~Release() { s.release(); }
  } release{slots};
  return ledgerlens::complete(request, *it->second.provider);
}

}  // namespace ledgerlens
