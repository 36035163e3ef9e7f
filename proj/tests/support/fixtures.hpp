#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "ledgerlens/conversation.hpp"
#include "ledgerlens/lexicon.hpp"
#include "ledgerlens/llm_gateway.hpp"
#include "ledgerlens/prompt_builder.hpp"

namespace fixtures {

inline std::filesystem::path data_dir() { return LEDGERLENS_TEST_DATA_DIR; }

// The shipped finance lexicon and templates.
const ledgerlens::KeywordDictionary& lexicon();
const ledgerlens::TemplateSet& templates();

// Europe -> Germany, France, UK; FY23 -> quarters; GDP, CPI, PPP.
nlohmann::json small_lexicon_json();

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

void write_text(const std::filesystem::path& p, const std::string& text);

// Service over the shipped data with the given state dir (may be empty).
ledgerlens::ServiceConfig service_config(const std::filesystem::path& state_dir = {});
std::unique_ptr<ledgerlens::ConversationService> make_service(const ledgerlens::ServiceConfig& config);
// Same, with the shipped table already ingested.
std::unique_ptr<ledgerlens::ConversationService> loaded_service(const std::filesystem::path& state_dir = {});

}  // namespace fixtures
