#include "ledgerlens/conversation.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "ledgerlens/atomic_file.hpp"
#include "ledgerlens/errors.hpp"
#include "ledgerlens/text.hpp"

namespace ledgerlens {

namespace {

using Clock = std::chrono::steady_clock;

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

const char* dimension_name(EntityKind k) {
  switch (k) {
    case EntityKind::Metric: return "metrics";
    case EntityKind::Geo: return "geos";
    case EntityKind::Period: return "periods";
  }
  return "metrics";
}

std::string thread_file_name(const std::string& id) { return id + ".jsonl"; }

bool valid_thread_id(const std::string& id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
  });
}

}  // namespace

// --- config -------------------------------------------------------------------

ServiceConfig ServiceConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  ServiceConfig c;
  try {
    c.provider = j.value("provider", c.provider);
    c.classifier = j.value("classifier", c.classifier);
    c.classifier_provider = j.value("classifier_provider", c.classifier_provider);
    c.k = j.value("k", c.k);
    c.delta = j.value("delta", c.delta);
    c.token_limit = j.value("token_limit", c.token_limit);
    c.history_turns = j.value("history_turns", c.history_turns);
    c.embedding_dimension = j.value("embedding_dimension", c.embedding_dimension);
    c.trend.anomaly_threshold = j.value("anomaly_threshold", c.trend.anomaly_threshold);
    c.trend.correlation_threshold = j.value("correlation_threshold", c.trend.correlation_threshold);
    c.state_dir = resolve(base_dir, j.value("state_dir", std::string()));
    c.templates_dir = resolve(base_dir, j.value("templates_dir", std::string()));
    c.providers_file = resolve(base_dir, j.value("providers_file", std::string()));
    c.rules_file = resolve(base_dir, j.value("rules_file", std::string()));
    c.listen_host = j.value("listen_host", c.listen_host);
    c.listen_port = j.value("listen_port", c.listen_port);
    c.auth_token_env = j.value("auth_token_env", c.auth_token_env);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("service config: ") + e.what());
  }
  if (c.k == 0) throw SchemaError("service config: k must be at least 1");
  if (c.delta < 2) throw SchemaError("service config: delta must be at least 2");
  if (c.classifier != "rules" && c.classifier != "llm")
    throw SchemaError("service config: classifier must be \"rules\" or \"llm\"");
  return c;
}

ServiceConfig ServiceConfig::load(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
  return from_json(j, path.parent_path());
}

nlohmann::json to_json(const ServiceConfig& c) {
  return {{"provider", c.provider},
          {"classifier", c.classifier},
          {"classifier_provider", c.classifier_provider},
          {"k", c.k},
          {"delta", c.delta},
          {"token_limit", c.token_limit},
          {"history_turns", c.history_turns},
          {"embedding_dimension", c.embedding_dimension},
          {"anomaly_threshold", c.trend.anomaly_threshold},
          {"correlation_threshold", c.trend.correlation_threshold},
          {"state_dir", c.state_dir.string()},
          {"templates_dir", c.templates_dir.string()},
          {"providers_file", c.providers_file.string()},
          {"rules_file", c.rules_file.string()},
          {"listen_host", c.listen_host},
          {"listen_port", c.listen_port},
          {"auth_token_env", c.auth_token_env}};
}

// --- turns and threads -----------------------------------------------------------

void to_json(nlohmann::json& j, const Turn& t) {
  j = {{"question", t.question},
       {"corrected_question", t.corrected_question},
       {"intent", code(t.intent)},
       {"intent_fallback", t.intent_fallback},
       {"entities", t.entities},
       {"inherited", t.inherited},
       {"chunk_ids", t.chunk_ids},
       {"relaxation_stage", t.relaxation_stage},
       {"provider", t.provider},
       {"status", t.status},
       {"error", t.error},
       {"answer", t.answer},
       {"scores", t.scores ? nlohmann::json(*t.scores) : nlohmann::json(nullptr)},
       {"gateway_seconds", t.gateway_seconds},
       {"pipeline_seconds", t.pipeline_seconds},
       {"estimated_cost", t.estimated_cost},
       {"started_at", t.started_at},
       {"finished_at", t.finished_at}};
}

void from_json(const nlohmann::json& j, Turn& t) {
  t.question = j.at("question").get<std::string>();
  t.corrected_question = j.at("corrected_question").get<std::string>();
  auto intent = intent_from_code(j.at("intent").get<int>());
  if (!intent) throw SchemaError("turn: intent out of range");
  t.intent = *intent;
  t.intent_fallback = j.at("intent_fallback").get<bool>();
  t.entities = j.at("entities").get<NamedEntities>();
  t.inherited = j.at("inherited").get<std::vector<std::string>>();
  t.chunk_ids = j.at("chunk_ids").get<std::vector<std::string>>();
  t.relaxation_stage = j.at("relaxation_stage").get<int>();
  t.provider = j.at("provider").get<std::string>();
  t.status = j.at("status").get<std::string>();
  t.error = j.at("error").get<std::string>();
  t.answer = j.at("answer").get<std::string>();
  if (j.at("scores").is_null())
    t.scores.reset();
  else
    t.scores = j.at("scores").get<ResponseScores>();
  t.gateway_seconds = j.at("gateway_seconds").get<double>();
  t.pipeline_seconds = j.at("pipeline_seconds").get<double>();
  t.estimated_cost = j.at("estimated_cost").get<double>();
  t.started_at = j.at("started_at").get<std::string>();
  t.finished_at = j.at("finished_at").get<std::string>();
}

std::vector<std::string> ConversationThread::cached_selection() const {
  return turns.empty() ? std::vector<std::string>{} : turns.back().chunk_ids;
}

nlohmann::json to_json(const ConversationThread& t) {
  nlohmann::json turns = nlohmann::json::array();
  for (const auto& turn : t.turns) turns.push_back(turn);
  return {{"id", t.id}, {"turns", turns}, {"cached_selection", t.cached_selection()}};
}

nlohmann::json ask_payload(const AskResult& r) {
  const auto& t = r.turn;
  nlohmann::json j{{"thread_id", r.thread_id},
                   {"turn", r.turn_index},
                   {"question", t.question},
                   {"corrected_question", t.corrected_question},
                   {"answer", t.answer},
                   {"sources", t.chunk_ids},
                   {"intent", {{"code", code(t.intent)}, {"name", to_string(t.intent)}, {"fallback", t.intent_fallback}}},
                   {"relaxation_stage", t.relaxation_stage},
                   {"entities", t.entities},
                   {"inherited", t.inherited},
                   {"provider", t.provider},
                   {"status", t.status},
                   {"latency_seconds", t.gateway_seconds + t.pipeline_seconds},
                   {"estimated_cost", t.estimated_cost}};
  if (t.scores) {
    const auto s = nlohmann::json(*t.scores);
    for (const auto& [k, v] : s.items()) j[k] = v;
  }
  if (!t.ok()) j["error"] = t.error;
  return j;
}

nlohmann::json to_json(const IngestSummary& s) {
  return {{"records", s.records}, {"primary", s.primary}, {"feature", s.feature}, {"trend", s.trend},
          {"chunks", s.total()}};
}

nlohmann::json to_json(const MetricsSummary& m) {
  nlohmann::json averages = nlohmann::json::object();
  for (std::size_t i = 0; i < kMetricCount; ++i) {
    averages["s" + std::to_string(i + 1)] = m.averages[i] ? nlohmann::json(*m.averages[i]) : nlohmann::json(nullptr);
  }
  nlohmann::json counts{{"Low", m.confidence_counts[0]}, {"Medium", m.confidence_counts[1]},
                        {"High", m.confidence_counts[2]}};
  nlohmann::json fractions = nlohmann::json::object();
  for (auto c : {Confidence::Low, Confidence::Medium, Confidence::High}) {
    const auto n = m.confidence_counts[static_cast<std::size_t>(c)];
    fractions[std::string(to_string(c))] =
        m.answered ? nlohmann::json(static_cast<double>(n) / static_cast<double>(m.answered)) : nlohmann::json(nullptr);
  }
  return {{"answered", m.answered},
          {"errors", m.errors},
          {"averages", averages},
          {"confidence_counts", counts},
          {"confidence_fractions", fractions}};
}

ChunkSet forge_chunks(const std::vector<TableRecord>& records, const KeywordDictionary& lexicon,
                      const TrendOptions& trend) {
  ForgeOptions opts;
  opts.trend = trend;
  opts.period_key = [&lexicon](const std::string& p) { return lexicon.period_sort_key(p); };
  return generate_chunks(records, opts);
}

// --- service ----------------------------------------------------------------------

ConversationService::ConversationService(ServiceConfig config, ProviderRegistry providers, TemplateSet templates,
                                         std::shared_ptr<const Embedder> embedder)
    : config_(std::move(config)),
      providers_(std::move(providers)),
      templates_(std::move(templates)),
      embedder_(std::move(embedder)) {
  if (!embedder_) embedder_ = std::make_shared<HashingEmbedder>(config_.embedding_dimension);
  if (!providers_.contains(config_.provider)) throw UnknownProvider(config_.provider);
  if (!config_.rules_file.empty()) rules_ = RuleClassifier::load(config_.rules_file);
  classifier_ = make_classifier();
}

ConversationService::~ConversationService() = default;

std::unique_ptr<IntentClassifier> ConversationService::make_classifier() const {
  if (config_.classifier == "llm") {
    const auto& name = config_.classifier_provider.empty() ? config_.provider : config_.classifier_provider;
    return std::make_unique<LlmClassifier>(providers_.get(name), rules_);
  }
  return std::make_unique<RuleClassifier>(rules_);
}

std::unique_ptr<ConversationService> ConversationService::create(const ServiceConfig& config) {
  auto registry = ProviderRegistry::load(config.providers_file);
  auto templates = load_templates(config.templates_dir);
  auto svc = std::make_unique<ConversationService>(config, std::move(registry), std::move(templates));
  svc->restore();
  return svc;
}

std::shared_ptr<const KnowledgeBase> ConversationService::knowledge_base() const {
  std::lock_guard lock(kb_mutex_);
  return kb_;
}

std::size_t ConversationService::store_size() const {
  auto kb = knowledge_base();
  return kb ? kb->store.size() : 0;
}

IngestSummary ConversationService::ingest(const std::filesystem::path& table_path,
                                          const std::filesystem::path& lexicon_path) {
  auto lexicon = load_lexicon(lexicon_path);
  auto records = ingest_table(table_path);
  auto set = forge_chunks(records, lexicon, config_.trend);
  return install(std::move(set.chunks), std::move(lexicon), records.size());
}

IngestSummary ConversationService::install(std::vector<DataChunk> chunks, KeywordDictionary lexicon,
                                           std::size_t records) {
  std::lock_guard ingest_lock(ingest_mutex_);
  auto kb = std::make_shared<KnowledgeBase>(KnowledgeBase{
      std::make_shared<const KeywordDictionary>(std::move(lexicon)), ChunkStore::build(std::move(chunks), *embedder_),
      {}});
  kb->summary.records = records;
  for (const auto& c : kb->store.chunks()) {
    switch (c.kind) {
      case ChunkKind::Primary: ++kb->summary.primary; break;
      case ChunkKind::Feature: ++kb->summary.feature; break;
      case ChunkKind::Trend: ++kb->summary.trend; break;
    }
  }
  persist_store(*kb);
  {
    std::lock_guard lock(kb_mutex_);
    kb_ = kb;
  }
  spdlog::info("store swapped: {} chunks ({} primary, {} feature, {} trend)", kb->store.size(), kb->summary.primary,
               kb->summary.feature, kb->summary.trend);
  return kb->summary;
}

void ConversationService::persist_store(const KnowledgeBase& kb) const {
  if (config_.state_dir.empty()) return;
  const auto dir = config_.state_dir / "store";
  write_file_atomic(dir / "lexicon.json", kb.lexicon->source().dump(2) + "\n");
  save_chunks(dir / "chunks.jsonl", kb.store.chunks());
}

void ConversationService::persist_thread(const ConversationThread& t) const {
  if (config_.state_dir.empty()) return;
  std::string body;
  for (const auto& turn : t.turns) {
    body += nlohmann::json(turn).dump();
    body += '\n';
  }
  write_file_atomic(config_.state_dir / "threads" / thread_file_name(t.id), body);
}

void ConversationService::restore() {
  if (config_.state_dir.empty()) return;
  namespace fs = std::filesystem;
  const auto store_dir = config_.state_dir / "store";
  if (fs::exists(store_dir / "chunks.jsonl") && fs::exists(store_dir / "lexicon.json")) {
    auto lexicon = KeywordDictionary::from_json(nlohmann::json::parse(read_file(store_dir / "lexicon.json")));
    auto chunks = load_chunks(store_dir / "chunks.jsonl");
    install(std::move(chunks), std::move(lexicon));
  }
  const auto thread_dir = config_.state_dir / "threads";
  if (!fs::is_directory(thread_dir)) return;
  std::uint64_t max_seq = 0;
  std::unique_lock lock(threads_mutex_);
  for (const auto& entry : fs::directory_iterator(thread_dir)) {
    if (entry.path().extension() != ".jsonl") continue;
    auto state = std::make_shared<ThreadState>();
    state->data.id = entry.path().stem().string();
    std::istringstream in(read_file(entry.path()));
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        state->data.turns.push_back(nlohmann::json::parse(line).get<Turn>());
      } catch (const nlohmann::json::exception& e) {
        throw SchemaError(entry.path().string() + " line " + std::to_string(n) + ": " + e.what());
      }
    }
    const auto& id = state->data.id;
    if (id.rfind("thread-", 0) == 0) {
      try {
        max_seq = std::max<std::uint64_t>(max_seq, std::stoull(id.substr(7)));
      } catch (const std::exception&) {
      }
    }
    threads_[id] = std::move(state);
  }
  next_thread_ = std::max<std::uint64_t>(next_thread_, max_seq + 1);
}

std::shared_ptr<ConversationService::ThreadState> ConversationService::find_thread(const std::string& id) const {
  std::shared_lock lock(threads_mutex_);
  auto it = threads_.find(id);
  if (it == threads_.end()) throw UnknownThread(id);
  return it->second;
}

std::shared_ptr<ConversationService::ThreadState> ConversationService::new_thread() {
  auto state = std::make_shared<ThreadState>();
  std::unique_lock lock(threads_mutex_);
  do {
    state->data.id = "thread-" + std::to_string(next_thread_++);
  } while (threads_.count(state->data.id));
  threads_[state->data.id] = state;
  return state;
}

AskResult ConversationService::ask(const std::optional<std::string>& thread_id, const std::string& question) {
  const auto kb = knowledge_base();  // one store version for the whole ask
  if (!kb) throw EmptyStore();
  if (thread_id && !valid_thread_id(*thread_id)) throw UnknownThread(*thread_id);
  auto state = thread_id ? find_thread(*thread_id) : new_thread();
  std::lock_guard thread_lock(state->mutex);
  auto& thread = state->data;

  const auto start = Clock::now();
  const auto& lexicon = *kb->lexicon;
  Turn turn;
  turn.question = question;
  turn.started_at = utc_now();
  turn.provider = config_.provider;
  turn.corrected_question = spell_correct(question, lexicon);
  turn.entities = extract_entities(turn.corrected_question, lexicon);

  const bool follow_up = thread_id && !thread.turns.empty();
  std::string ranking_text = turn.corrected_question;
  if (follow_up) {
    const auto& prev = thread.turns.back().entities;
    for (auto kind : {EntityKind::Metric, EntityKind::Geo, EntityKind::Period}) {
      if (!turn.entities.of(kind).empty() || prev.of(kind).empty()) continue;
      turn.entities.of(kind) = prev.of(kind);
      turn.inherited.emplace_back(dimension_name(kind));
      for (const auto& e : prev.of(kind)) ranking_text += " " + e;
    }
  }

  const auto intent = classifier_->classify(turn.corrected_question);
  turn.intent = intent.intent;
  turn.intent_fallback = intent.fallback;

  auto candidates = filter_chunks(kb->store, expand_hierarchy(turn.entities, lexicon));
  if (follow_up && !turn.inherited.empty()) {
    for (const auto& id : thread.cached_selection()) {
      if (auto pos = kb->store.index_of(id)) candidates.chunks.push_back(static_cast<std::uint32_t>(*pos));
    }
    std::sort(candidates.chunks.begin(), candidates.chunks.end());
    candidates.chunks.erase(std::unique(candidates.chunks.begin(), candidates.chunks.end()), candidates.chunks.end());
  }
  const auto selection = rank_chunks(ranking_text, candidates, kb->store, *embedder_, config_.k);
  turn.relaxation_stage = selection.stage;

  std::vector<PriorTurn> history;
  for (auto it = thread.turns.rbegin(); it != thread.turns.rend() && history.size() < config_.history_turns; ++it) {
    if (it->ok()) history.push_back({it->question, it->answer});
  }
  std::reverse(history.begin(), history.end());

  const auto& provider = providers_.get(config_.provider);
  auto request = make_prompt_request(turn.corrected_question, turn.intent, turn.entities, selection, kb->store);
  request.history = std::move(history);
  PromptOptions popts;
  popts.token_limit = std::min(config_.token_limit, provider.config().token_limit);
  popts.token_multiplier = provider.config().token_multiplier;
  const auto bundle = build_prompt(request, templates_, lexicon, popts);
  turn.chunk_ids = bundle.chunk_ids();

  auto record = [&](Turn&& t) {
    t.finished_at = utc_now();
    thread.turns.push_back(std::move(t));
    persist_thread(thread);
    return AskResult{thread.id, thread.turns.size() - 1, thread.turns.back()};
  };

  CompletionRequest creq;
  creq.prompt = bundle.text;
  creq.estimated_tokens = bundle.estimated_tokens;
  creq.bundle = &bundle;
  creq.lexicon = &lexicon;
  const auto before_gateway = Clock::now();
  try {
    auto completion = providers_.complete(config_.provider, creq);
    turn.gateway_seconds = completion.latency_seconds;
    turn.estimated_cost = completion.estimated_cost;
    turn.answer = std::move(completion.text);
  } catch (const Error& e) {
    turn.gateway_seconds = seconds_since(before_gateway);
    turn.pipeline_seconds = std::max(0.0, seconds_since(start) - turn.gateway_seconds);
    turn.status = "error";
    turn.error = e.what();
    spdlog::warn("{}: gateway failure: {}", thread.id, e.what());
    record(std::move(turn));
    throw;
  }
  turn.scores = score_response(bundle, turn.answer, lexicon, ScoreOptions{config_.delta});
  turn.pipeline_seconds = std::max(0.0, seconds_since(start) - turn.gateway_seconds);
  return record(std::move(turn));
}

ConversationThread ConversationService::thread(const std::string& id) const {
  auto state = find_thread(id);
  std::lock_guard lock(state->mutex);
  return state->data;
}

std::vector<std::string> ConversationService::thread_ids() const {
  std::shared_lock lock(threads_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, _] : threads_) out.push_back(id);
  return out;
}

MetricsSummary ConversationService::metrics() const {
  std::vector<std::shared_ptr<ThreadState>> states;
  {
    std::shared_lock lock(threads_mutex_);
    for (const auto& [_, s] : threads_) states.push_back(s);
  }
  MetricsSummary m;
  std::array<std::size_t, kMetricCount> ones{};
  for (const auto& s : states) {
    std::lock_guard lock(s->mutex);
    for (const auto& t : s->data.turns) {
      if (!t.ok() || !t.scores) {
        ++m.errors;
        continue;
      }
      ++m.answered;
      for (std::size_t i = 0; i < kMetricCount; ++i) ones[i] += t.scores->flags[i] ? 1 : 0;
      ++m.confidence_counts[static_cast<std::size_t>(t.scores->confidence)];
    }
  }
  if (m.answered) {
    for (std::size_t i = 0; i < kMetricCount; ++i)
      m.averages[i] = static_cast<double>(ones[i]) / static_cast<double>(m.answered);
  }
  return m;
}

}  // namespace ledgerlens
