#include <algorithm>
#include <cmath>
#include <set>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/llm_gateway.hpp"
#include "ledgerlens/numbers.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

constexpr std::size_t kPieceWords = 8;
constexpr std::size_t kCopyWords = 12;

struct Word {
  std::size_t begin;
  std::size_t end;
};

std::vector<Word> word_spans(std::string_view s) {
  std::vector<Word> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i >= s.size()) break;
    auto b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    out.push_back({b, i});
  }
  return out;
}

bool has_digit(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// A filler word that never occurs in the prompt, so any run of more than
// kPieceWords response words is broken by a word the prompt lacks.
std::string pick_marker(const PromptBundle& bundle, const KeywordDictionary& dict) {
  const auto words = normalized_words(bundle.text);
  const std::set<std::string> used(words.begin(), words.end());
  static const char* const kCandidates[] = {"noted",   "datapoint", "recorded", "observed", "logged",
                                            "tallied", "charted",   "registered", "listed", "entered"};
  for (const char* c : kCandidates) {
    if (!used.count(c) && !dict.lookup(c)) return c;
  }
  std::string m = "zq";
  while (used.count(m) || dict.lookup(m)) m += 'x';
  return m;
}

std::string strip_end_punct(std::string_view s) {
  s = trim(s);
  while (!s.empty() && (s.back() == '.' || s.back() == '!' || s.back() == '?')) s.remove_suffix(1);
  return std::string(trim(s));
}

// Moves the leading clause (up to the first comma, else the first half) to
// the end of the sentence.
std::string rotate(const std::string& s) {
  auto words = word_spans(s);
  if (words.size() < 2) return s;
  std::size_t head = 0;
  for (std::size_t i = 0; i + 1 < words.size(); ++i) {
    if (s[words[i].end - 1] == ',') {
      head = i + 1;
      break;
    }
  }
  if (head == 0) head = words.size() / 2;
  auto piece = [&](std::size_t from, std::size_t to) {
    std::string out;
    for (std::size_t i = from; i < to; ++i) {
      if (!out.empty()) out += ' ';
      out += s.substr(words[i].begin, words[i].end - words[i].begin);
    }
    return out;
  };
  std::string h = piece(0, head);
  if (!h.empty() && h.back() == ',') h.pop_back();
  return piece(head, words.size()) + " " + h;
}

std::string render_bullet(const std::string& sentence, const std::string& marker, const KeywordDictionary& dict) {
  const std::string text = rotate(strip_end_punct(sentence));
  const auto words = word_spans(text);
  // cut[i]: a marker may go between word i-1 and word i.
  std::vector<bool> cut(words.size() + 1, true);
  for (const auto& m : dict.find_entities(text)) {
    for (std::size_t i = 1; i < words.size(); ++i) {
      if (words[i].begin > m.begin && words[i].begin < m.end) cut[i] = false;
    }
  }
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (has_digit(text.substr(words[i].begin, words[i].end - words[i].begin))) {
      cut[i] = false;
      cut[i + 1] = false;
    }
  }
  std::string out = "- " + marker + ":";
  std::size_t start = 0;
  while (start < words.size()) {
    std::size_t stop = std::min(words.size(), start + kPieceWords);
    if (stop < words.size()) {
      auto s = stop;
      while (s > start + 1 && !cut[s]) --s;
      if (s > start + 1 || cut[s]) stop = s;
    }
    if (start > 0) out += " " + marker;
    for (std::size_t i = start; i < stop; ++i) {
      out += ' ';
      out += text.substr(words[i].begin, words[i].end - words[i].begin);
    }
    start = stop;
  }
  out += '.';
  return out;
}

bool matches_query(const NamedEntities& sentence, const NamedEntities& expanded_query) {
  if (expanded_query.empty()) return false;
  for (auto kind : {EntityKind::Metric, EntityKind::Geo, EntityKind::Period}) {
    const auto& q = expanded_query.of(kind);
    if (q.empty()) continue;
    const auto& s = sentence.of(kind);
    if (std::none_of(s.begin(), s.end(), [&](const auto& e) { return q.count(e); })) return false;
  }
  return true;
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    out.push_back(text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  return out;
}

std::string join_lines(const std::vector<std::string>& lines) { return join(lines, "\n"); }

double round2(double v) { return std::round(v * 100.0) / 100.0; }

NumberMultiset context_numbers(const PromptBundle& bundle) {
  NumberMultiset all;
  for (const auto& c : bundle.chunks) all.merge(c.numbers);
  return all;
}

std::vector<std::string> names_of(EntityKind kind, const KeywordDictionary& dict) {
  std::vector<std::string> out;
  if (kind == EntityKind::Metric) {
    for (const auto& m : dict.metrics()) out.push_back(m.name);
  } else {
    for (const auto& n : kind == EntityKind::Geo ? dict.geos() : dict.periods()) out.push_back(n.name);
  }
  return out;
}

// First candidate, starting at seed, that the predicate accepts.
template <typename Pred>
std::optional<std::string> pick(const std::vector<std::string>& pool, std::uint64_t seed, Pred ok) {
  for (std::size_t k = 0; k < pool.size(); ++k) {
    const auto& c = pool[(seed + k) % pool.size()];
    if (ok(c)) return c;
  }
  return std::nullopt;
}

struct NumberSite {
  std::size_t line;
  NumberSpan span;
};

std::vector<NumberSite> nonzero_numbers(const std::vector<std::string>& lines) {
  std::vector<NumberSite> out;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    for (const auto& s : extract_number_spans(lines[l])) {
      if (s.value != 0.0) out.push_back({l, s});
    }
  }
  return out;
}

std::string fabricate_number(std::vector<std::string> lines, const PromptBundle& bundle, std::uint64_t seed) {
  const auto context = context_numbers(bundle);
  const auto sites = nonzero_numbers(lines);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    const auto& site = sites[(seed + k) % sites.size()];
    double v = round2(site.span.value * 1.1);
    for (int guard = 0; guard < 64 && (context.contains(v) || v == site.span.value); ++guard) v = round2(v * 1.1);
    if (context.contains(v) || !std::isfinite(v)) continue;
    auto& line = lines[site.line];
    line.replace(site.span.begin, site.span.end - site.span.begin, format_fixed2(v));
    return join_lines(lines);
  }
  throw DefectImpossible("fabricate_number: no number to alter");
}

std::string entity_swap(std::vector<std::string> lines, const PromptBundle& bundle, const KeywordDictionary& dict,
                        std::uint64_t seed) {
  struct Sentence {
    NumberMultiset numbers;
    std::set<std::string> geos;
  };
  std::vector<Sentence> context;
  for (const auto& c : bundle.chunks) {
    for (const auto& s : split_sentences(c.text)) {
      context.push_back({extract_numbers(s), expand_hierarchy(extract_entities(s, dict), dict).geos});
    }
  }
  const auto pool = names_of(EntityKind::Geo, dict);
  struct Swap {
    std::size_t line;
    EntityMatch match;
    std::string replacement;
  };
  std::vector<Swap> options;
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto nums = extract_numbers(lines[l]);
    if (nums.empty()) continue;
    // Geos any context sentence holding the first number could vouch for.
    std::set<std::string> vouched;
    for (const auto& cs : context) {
      if (cs.numbers.contains(nums.values().front())) vouched.insert(cs.geos.begin(), cs.geos.end());
    }
    for (const auto& m : dict.find_entities(lines[l])) {
      if (m.kind != EntityKind::Geo) continue;
      auto r = pick(pool, seed, [&](const std::string& g) { return g != m.canonical && !vouched.count(g); });
      if (r) options.push_back({l, m, *r});
    }
  }
  if (options.empty()) throw DefectImpossible("entity_swap: no geography next to a number");
  const auto& o = options[seed % options.size()];
  lines[o.line].replace(o.match.begin, o.match.end - o.match.begin, o.replacement);
  return join_lines(lines);
}

std::string verbatim_copy(std::vector<std::string> lines, const PromptBundle& bundle) {
  for (const std::string* source : {&bundle.sections.introduction, &bundle.text}) {
    const auto words = whitespace_tokens(*source);
    for (std::size_t i = 0; i + kCopyWords <= words.size(); ++i) {
      bool clean = true;
      for (std::size_t k = 0; k < kCopyWords && clean; ++k) {
        clean = !has_digit(words[i + k]) && !normalized_words(words[i + k]).empty();
      }
      if (!clean) continue;
      std::string copy = "-";
      for (std::size_t k = 0; k < kCopyWords; ++k) {
        copy += ' ';
        copy += words[i + k];
      }
      lines.push_back(copy);
      return join_lines(lines);
    }
  }
  throw DefectImpossible("verbatim_copy: prompt has no 12-word run to copy");
}

std::string wrong_sign(std::vector<std::string> lines, std::uint64_t seed) {
  const auto sites = nonzero_numbers(lines);
  if (sites.empty()) throw DefectImpossible("wrong_sign: no number to negate");
  const auto& site = sites[seed % sites.size()];
  auto& line = lines[site.line];
  std::string digits = line.substr(site.span.begin, site.span.end - site.span.begin);
  while (!digits.empty() && (digits.front() == '-' || digits.front() == '+' || digits.front() == '$')) digits.erase(0, 1);
  line.replace(site.span.begin, site.span.end - site.span.begin, "increased by -" + digits);
  return join_lines(lines);
}

std::string off_topic(std::vector<std::string> lines, const PromptBundle& bundle, const KeywordDictionary& dict,
                      std::uint64_t seed) {
  if (bundle.query_entities.empty()) throw DefectImpossible("off_topic: question names no entity");
  const auto q = expand_hierarchy(bundle.query_entities, dict);
  bool replaced = false;
  for (auto& line : lines) {
    auto matches = dict.find_entities(line);
    // Right to left so earlier offsets stay valid.
    for (auto it = matches.rbegin(); it != matches.rend(); ++it) {
      const auto& used = q.of(it->kind);
      auto r = pick(names_of(it->kind, dict), seed, [&](const std::string& e) { return !used.count(e); });
      if (!r) throw DefectImpossible("off_topic: no " + std::string(to_string(it->kind)) + " outside the question");
      line.replace(it->begin, it->end - it->begin, *r);
      replaced = true;
    }
  }
  if (!replaced) throw DefectImpossible("off_topic: answer names no entity");
  return join_lines(lines);
}

class MockProvider final : public LlmProvider {
 public:
  explicit MockProvider(ProviderConfig config) : config_(std::move(config)) {}
  const ProviderConfig& config() const override { return config_; }
  std::string generate(const CompletionRequest& request) const override {
    if (!request.bundle || !request.lexicon) throw GatewayError(config_.name + ": mock provider needs a prompt bundle");
    if (config_.kind == ProviderKind::MockAdversarial)
      return mock_adversarial(*request.bundle, *request.lexicon, config_.mode, config_.seed);
    return mock_faithful(*request.bundle, *request.lexicon);
  }

 private:
  ProviderConfig config_;
};

}  // namespace

std::string mock_faithful(const PromptBundle& bundle, const KeywordDictionary& lexicon) {
  const auto q = expand_hierarchy(bundle.query_entities, lexicon);
  const auto marker = pick_marker(bundle, lexicon);
  std::set<std::string> seen;
  std::vector<std::string> bullets;
  for (const auto& c : bundle.chunks) {
    for (const auto& sentence : split_sentences(c.text)) {
      const std::string s(trim(sentence));
      if (s.empty() || !matches_query(extract_entities(s, lexicon), q)) continue;
      if (!seen.insert(s).second) continue;
      bullets.push_back(render_bullet(s, marker, lexicon));
    }
  }
  if (bullets.empty()) return kCannotAnswer;
  return join_lines(bullets);
}

std::string mock_adversarial(const PromptBundle& bundle, const KeywordDictionary& lexicon, AdversarialMode mode,
                             std::uint64_t seed) {
  const auto faithful = mock_faithful(bundle, lexicon);
  const bool nothing = faithful == kCannotAnswer;
  if (nothing && mode != AdversarialMode::VerbatimCopy)
    throw DefectImpossible(std::string(to_string(mode)) + ": faithful answer is empty");
  auto lines = split_lines(faithful);
  switch (mode) {
    case AdversarialMode::FabricateNumber: return fabricate_number(std::move(lines), bundle, seed);
    case AdversarialMode::EntitySwap: return entity_swap(std::move(lines), bundle, lexicon, seed);
    case AdversarialMode::VerbatimCopy: return verbatim_copy(std::move(lines), bundle);
    case AdversarialMode::WrongSign: return wrong_sign(std::move(lines), seed);
    case AdversarialMode::OffTopic: return off_topic(std::move(lines), bundle, lexicon, seed);
  }
  throw DefectImpossible("unknown mode");
}

std::unique_ptr<LlmProvider> make_mock_provider(ProviderConfig config) {
  return std::make_unique<MockProvider>(std::move(config));
}

}  // namespace ledgerlens
