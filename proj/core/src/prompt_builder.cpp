#include "ledgerlens/prompt_builder.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "ledgerlens/errors.hpp"
#include "ledgerlens/ranker.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

const std::string kCannotAnswer = "I cannot answer the question.";

const std::string kGuardrailText =
    "Use only the facts in the context section. If you are uncertain about any part of the answer, "
    "refrain from generating responses that are not supported by the context. If the context does not "
    "contain the answer, reply exactly: " +
    kCannotAnswer;

const std::string kBulletInstruction = "Write the answer as bullet points, one finding per bullet.";

namespace {

const std::string kEmptyPreamble = "No extra definitions or relationships apply to this question.";

std::string open_delim(std::string_view name) { return "---" + std::string(name) + "---"; }
std::string close_delim(std::string_view name) { return "---end " + std::string(name) + "---"; }

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

std::vector<std::string> instruction_lines(std::string_view body) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    auto line = trim(strip_cr(body.substr(pos, nl - pos)));
    // Accept "- item", "* item" and "1. item" as well as bare lines.
    if (!line.empty() && (line.front() == '-' || line.front() == '*')) line = trim(line.substr(1));
    std::size_t digits = 0;
    while (digits < line.size() && line[digits] >= '0' && line[digits] <= '9') ++digits;
    if (digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')'))
      line = trim(line.substr(digits + 1));
    if (!line.empty()) out.emplace_back(line);
    pos = nl + 1;
  }
  return out;
}

std::string wrap(std::string_view name, std::string_view body) {
  std::string out = open_delim(name);
  out += '\n';
  out += body;
  if (!body.empty() && body.back() != '\n') out += '\n';
  out += close_delim(name);
  out += '\n';
  return out;
}

std::string render_context(const std::vector<DataChunk>& chunks) {
  std::string out;
  for (const auto& c : chunks) {
    if (!out.empty()) out += '\n';
    out += c.text;
    out += '\n';
  }
  return out;
}

std::string render_instructions(const PromptTemplate& tpl) {
  std::string out;
  int n = 1;
  auto add = [&](const std::string& line) {
    out += std::to_string(n++);
    out += ". ";
    out += line;
    out += '\n';
  };
  for (const auto& line : tpl.instructions) add(line);
  add(kBulletInstruction);
  return out;
}

std::string render_history(const std::vector<PriorTurn>& history) {
  std::string out;
  for (const auto& t : history) {
    out += "Q: " + t.question + "\nA: " + t.answer + "\n";
  }
  return out;
}

std::string assemble(const PromptSections& s) {
  std::string out;
  out += wrap("introduction", s.introduction);
  out += wrap("preamble", s.preamble);
  out += wrap("context", s.context);
  out += wrap("instructions", s.instructions);
  out += wrap("example", s.example);
  if (!s.history.empty()) out += wrap("history", s.history);
  out += wrap("question", s.question);
  return out;
}

// Related entities present in the chunks, in declaration order.
std::vector<std::string> present_in(const std::vector<std::string>& candidates, const std::set<std::string>& present,
                                    EntityKind kind, const KeywordDictionary& dict) {
  std::vector<std::string> out;
  for (const auto& c : candidates)
    if (present.count(c)) out.push_back(c);
  std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    return dict.declaration_index(kind, a) < dict.declaration_index(kind, b);
  });
  return out;
}

std::vector<std::string> ordered(const std::set<std::string>& s, EntityKind kind, const KeywordDictionary& dict) {
  std::vector<std::string> out(s.begin(), s.end());
  std::stable_sort(out.begin(), out.end(), [&](const std::string& a, const std::string& b) {
    return dict.declaration_index(kind, a) < dict.declaration_index(kind, b);
  });
  return out;
}

void hierarchy_facts(EntityKind kind, const std::set<std::string>& query, const std::set<std::string>& present,
                     const KeywordDictionary& dict, std::string_view relation, std::string& out) {
  for (const auto& q : ordered(query, kind, dict)) {
    auto below = present_in(dict.descendants(q), present, kind, dict);
    if (!below.empty()) {
      out += join_natural(below);
      out += below.size() == 1 ? " is " : " are ";
      out += relation;
      out += ' ';
      out += q;
      out += ".\n";
    }
    // Nearest ancestor only: a chain of facts adds noise without adding reach.
    for (const auto& a : dict.ancestors(q)) {
      if (present.count(a)) {
        out += q + " is " + std::string(relation) + " " + a + ".\n";
        break;
      }
    }
  }
}

}  // namespace

std::size_t estimate_tokens(std::string_view text, double multiplier) {
  const auto words = static_cast<double>(whitespace_tokens(text).size());
  // The small slack keeps 10 * 1.3 at 13 instead of 14.
  return static_cast<std::size_t>(std::ceil(words * multiplier - 1e-9));
}

const std::string& PromptSections::get(std::string_view name) const {
  if (name == "introduction") return introduction;
  if (name == "preamble") return preamble;
  if (name == "context") return context;
  if (name == "instructions") return instructions;
  if (name == "example") return example;
  if (name == "history") return history;
  if (name == "question") return question;
  throw Error("unknown prompt section: " + std::string(name));
}

std::vector<std::string> PromptBundle::chunk_ids() const {
  std::vector<std::string> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back(c.id);
  return out;
}

PromptTemplate parse_template(std::string_view body, Intent intent) {
  static constexpr std::string_view kMarker = "---SECTION:";
  std::map<std::string, std::string> sections;
  std::string current;
  bool seen_marker = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    auto line = strip_cr(body.substr(pos, nl - pos));
    ++line_no;
    pos = nl + 1;
    auto t = trim(line);
    if (t.substr(0, kMarker.size()) == kMarker) {
      if (t.size() < kMarker.size() + 3 || t.substr(t.size() - 3) != "---")
        throw MalformedTemplate("line " + std::to_string(line_no) + ": unterminated section marker");
      current = std::string(trim(t.substr(kMarker.size(), t.size() - kMarker.size() - 3)));
      if (current != "introduction" && current != "instructions" && current != "example")
        throw MalformedTemplate("line " + std::to_string(line_no) + ": unknown section '" + current + "'");
      if (sections.count(current))
        throw MalformedTemplate("line " + std::to_string(line_no) + ": repeated section '" + current + "'");
      sections[current];
      seen_marker = true;
      continue;
    }
    if (!seen_marker) {
      if (!t.empty()) throw MalformedTemplate("line " + std::to_string(line_no) + ": text before first section");
      continue;
    }
    auto& dst = sections[current];
    dst += line;
    dst += '\n';
  }
  for (const char* name : {"introduction", "instructions", "example"}) {
    auto it = sections.find(name);
    if (it == sections.end()) throw MalformedTemplate(std::string("missing section '") + name + "'");
    if (trim(it->second).empty()) throw MalformedTemplate(std::string("empty section '") + name + "'");
  }
  PromptTemplate tpl;
  tpl.intent = intent;
  tpl.introduction = std::string(trim(sections["introduction"]));
  tpl.instructions = instruction_lines(sections["instructions"]);
  tpl.example = std::string(trim(sections["example"]));
  return tpl;
}

TemplateSet load_templates(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::array<std::optional<fs::path>, kIntentCount> files;
  if (!fs::is_directory(dir)) throw MissingTemplate(0);
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    const auto stem = entry.path().stem().string();
    int code = -1;
    auto [p, ec] = std::from_chars(stem.data(), stem.data() + stem.size(), code);
    if (ec != std::errc{} || (p != stem.data() + stem.size() && *p != '_')) continue;
    if (code < 0 || code >= static_cast<int>(kIntentCount)) continue;
    if (files[code]) throw MalformedTemplate("two templates for intent " + std::to_string(code));
    files[code] = entry.path();
  }
  TemplateSet out;
  for (std::size_t i = 0; i < kIntentCount; ++i) {
    if (!files[i]) throw MissingTemplate(static_cast<int>(i));
    std::ifstream in(*files[i], std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      out[i] = parse_template(ss.str(), static_cast<Intent>(i));
    } catch (const MalformedTemplate& e) {
      throw MalformedTemplate(files[i]->filename().string() + ": " + e.what());
    }
  }
  return out;
}

std::string build_preamble(const NamedEntities& query_entities, const KeywordDictionary& dict,
                           const std::vector<DataChunk>& chunks) {
  std::string out;
  for (const auto& d : filter_definitions(dict, query_entities)) {
    out += d;
    out += '\n';
  }
  std::set<std::string> geos, periods;
  for (const auto& c : chunks) {
    geos.insert(c.geos.begin(), c.geos.end());
    periods.insert(c.periods.begin(), c.periods.end());
  }
  hierarchy_facts(EntityKind::Geo, query_entities.geos, geos, dict, "in", out);
  hierarchy_facts(EntityKind::Period, query_entities.periods, periods, dict, "part of", out);
  return out;
}

PromptBundle build_prompt(const PromptRequest& request, const TemplateSet& templates, const KeywordDictionary& dict,
                          const PromptOptions& options) {
  const auto& tpl = templates.at(static_cast<std::size_t>(code(request.intent)));
  if (request.ranked_chunks.empty()) throw PromptOverflow("no chunks to place in the prompt");

  PromptBundle b;
  b.question = request.question;
  b.intent = request.intent;
  b.query_entities = request.query_entities;
  b.relaxation_stage = request.relaxation_stage;
  b.definitions = filter_definitions(dict, request.query_entities);
  b.sections.introduction = kGuardrailText + "\n" + tpl.introduction;
  b.sections.instructions = render_instructions(tpl);
  b.sections.example = tpl.example;
  b.sections.history = render_history(request.history);
  b.sections.question = request.question;

  std::size_t keep = request.ranked_chunks.size();
  while (true) {
    b.chunks.assign(request.ranked_chunks.begin(), request.ranked_chunks.begin() + static_cast<std::ptrdiff_t>(keep));
    b.sections.preamble = build_preamble(request.query_entities, dict, b.chunks);
    if (trim(b.sections.preamble).empty()) b.sections.preamble = kEmptyPreamble;
    b.sections.context = render_context(b.chunks);
    b.text = assemble(b.sections);
    b.estimated_tokens = estimate_tokens(b.text, options.token_multiplier);
    if (b.estimated_tokens <= options.token_limit) break;
    if (keep == 1)
      throw PromptOverflow("prompt needs " + std::to_string(b.estimated_tokens) + " tokens with one chunk, limit is " +
                           std::to_string(options.token_limit));
    --keep;
  }
  if (!request.scores.empty())
    b.chunk_scores.assign(request.scores.begin(), request.scores.begin() + static_cast<std::ptrdiff_t>(keep));
  return b;
}

PromptRequest make_prompt_request(std::string question, Intent intent, NamedEntities query_entities,
                                  const RankedSelection& selection, const ChunkStore& store) {
  PromptRequest r;
  r.question = std::move(question);
  r.intent = intent;
  r.query_entities = std::move(query_entities);
  r.relaxation_stage = selection.stage;
  for (const auto& sc : selection.chunks) {
    const auto* c = store.find(sc.id);
    if (!c) throw Error("selected chunk not in store: " + sc.id);
    r.ranked_chunks.push_back(*c);
    r.scores.push_back(sc.score);
  }
  return r;
}

}  // namespace ledgerlens
