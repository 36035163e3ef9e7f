#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>

namespace fixtures {

using namespace ledgerlens;

const KeywordDictionary& lexicon() {
  static const KeywordDictionary dict = load_lexicon(data_dir() / "lexicon.json");
  return dict;
}

const TemplateSet& templates() {
  static const TemplateSet set = load_templates(data_dir() / "templates");
  return set;
}

nlohmann::json small_lexicon_json() {
  return nlohmann::json::parse(R"({
    "metrics": [
      {"name": "GDP", "synonyms": ["gross domestic product"], "definition": "GDP is total output."},
      {"name": "GDP growth", "synonyms": ["growth"], "definition": "GDP growth is the change in GDP."},
      {"name": "CPI", "synonyms": ["inflation"], "definition": "CPI tracks consumer prices."},
      {"name": "Profit Per Period", "synonyms": ["PPP"], "definition": "PPP is profit earned in one period."}
    ],
    "geo_tree": [
      {"name": "Europe"},
      {"name": "Germany", "parent": "Europe"},
      {"name": "France", "parent": "Europe"},
      {"name": "UK", "parent": "Europe", "synonyms": ["United Kingdom"]}
    ],
    "period_tree": [
      {"name": "FY23", "sort_key": "FY23"},
      {"name": "FY23-Q1", "parent": "FY23", "sort_key": "FY23-Q1"},
      {"name": "FY23-Q2", "parent": "FY23", "sort_key": "FY23-Q2"},
      {"name": "FY23-Q3", "parent": "FY23", "sort_key": "FY23-Q3"},
      {"name": "FY23-Q4", "parent": "FY23", "sort_key": "FY23-Q4"}
    ],
    "vocabulary": ["where", "in", "is", "the", "highest", "what", "was"]
  })");
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  std::random_device rd;
  path_ = std::filesystem::temp_directory_path() /
          ("ledgerlens-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
}

ServiceConfig service_config(const std::filesystem::path& state_dir) {
  ServiceConfig cfg;
  cfg.templates_dir = data_dir() / "templates";
  cfg.providers_file = data_dir() / "providers.json";
  cfg.rules_file = data_dir() / "intent_rules.json";
  cfg.state_dir = state_dir;
  return cfg;
}

std::unique_ptr<ConversationService> make_service(const ServiceConfig& config) {
  return std::make_unique<ConversationService>(config, ProviderRegistry::load(config.providers_file),
                                               load_templates(config.templates_dir));
}

std::unique_ptr<ConversationService> loaded_service(const std::filesystem::path& state_dir) {
  auto svc = make_service(service_config(state_dir));
  svc->ingest(data_dir() / "table.csv", data_dir() / "lexicon.json");
  return svc;
}

}  // namespace fixtures
