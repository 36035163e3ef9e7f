#include <benchmark/benchmark.h>

#include <map>
#include <memory>

#include "ledgerlens/conversation.hpp"
#include "ledgerlens/numbers.hpp"
#include "ledgerlens/prompt_builder.hpp"
#include "ledgerlens/ranker.hpp"
#include "ledgerlens/score_engine.hpp"
#include "ledgerlens/synthetic.hpp"

using namespace ledgerlens;

namespace {

std::string sample_paragraph(std::size_t sentences) {
  std::string s;
  for (std::size_t i = 0; i < sentences; ++i) {
    s += "In Market" + std::to_string(i) + " for FY23-Q" + std::to_string(i % 4 + 1) + ", Revenue was " +
         std::to_string(1000 + i) + ".25 $M, up -" + std::to_string(i % 7) + ".5% on 1,250 units. ";
  }
  return s;
}

// Shared synthetic store, built once per size.
struct Fixture {
  KeywordDictionary dict;
  HashingEmbedder embedder;
  ChunkStore store;
  std::vector<GeneratedQuestion> questions;
};

const Fixture& fixture(std::size_t chunks) {
  static std::map<std::size_t, std::unique_ptr<Fixture>> cache;
  auto& slot = cache[chunks];
  if (!slot) {
    auto data = make_synthetic(spec_for_chunk_count(chunks));
    auto dict = KeywordDictionary::from_json(data.lexicon);
    auto set = forge_chunks(data.records, dict);
    set.chunks.resize(std::min(set.chunks.size(), chunks));
    HashingEmbedder embedder;
    auto store = ChunkStore::build(std::move(set.chunks), embedder);
    auto questions = generate_questions(dict, 64, 3);
    slot = std::unique_ptr<Fixture>(new Fixture{std::move(dict), embedder, std::move(store), std::move(questions)});
  }
  return *slot;
}

}  // namespace

static void BM_ExtractNumbers(benchmark::State& state) {
  const auto text = sample_paragraph(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(extract_numbers(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ExtractNumbers)->Arg(10)->Arg(100);

static void BM_ScoreS3(benchmark::State& state) {
  const auto prompt = sample_paragraph(static_cast<std::size_t>(state.range(0)));
  const auto response = sample_paragraph(8);
  for (auto _ : state) benchmark::DoNotOptimize(score_s3(prompt, response + " extra", 10));
}
BENCHMARK(BM_ScoreS3)->Arg(50)->Arg(400);

static void BM_RankChunks(benchmark::State& state) {
  const auto& f = fixture(static_cast<std::size_t>(state.range(0)));
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& q = f.questions[i++ % f.questions.size()].question;
    const auto entities = expand_hierarchy(extract_entities(q, f.dict), f.dict);
    benchmark::DoNotOptimize(rank_chunks(q, filter_chunks(f.store, entities), f.store, f.embedder));
  }
}
BENCHMARK(BM_RankChunks)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);

static void BM_BuildPrompt(benchmark::State& state) {
  const auto& f = fixture(5000);
  static const auto templates = load_templates(std::string(LEDGERLENS_DATA_DIR) + "/templates");
  std::vector<PromptRequest> requests;
  for (const auto& q : f.questions) {
    const auto entities = extract_entities(q.question, f.dict);
    const auto sel = rank_chunks(q.question, filter_chunks(f.store, expand_hierarchy(entities, f.dict)), f.store,
                                 f.embedder);
    requests.push_back(make_prompt_request(q.question, q.label, entities, sel, f.store));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_prompt(requests[i++ % requests.size()], templates, f.dict));
}
BENCHMARK(BM_BuildPrompt)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
