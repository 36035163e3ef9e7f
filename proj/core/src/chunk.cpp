#include "ledgerlens/chunk.hpp"

#include <fstream>
#include <sstream>

#include "ledgerlens/atomic_file.hpp"
#include "ledgerlens/errors.hpp"

namespace ledgerlens {

std::string_view to_string(ChunkKind kind) {
  switch (kind) {
    case ChunkKind::Primary: return "primary";
    case ChunkKind::Feature: return "feature";
    case ChunkKind::Trend: return "trend";
  }
  return "primary";
}

std::optional<ChunkKind> parse_chunk_kind(std::string_view s) {
  if (s == "primary") return ChunkKind::Primary;
  if (s == "feature") return ChunkKind::Feature;
  if (s == "trend") return ChunkKind::Trend;
  return std::nullopt;
}

DataChunk make_chunk(std::string id, ChunkKind kind, std::string text, std::set<std::string> metrics,
                     std::set<std::string> geos, std::set<std::string> periods,
                     std::vector<std::string> source) {
  DataChunk c;
  c.id = std::move(id);
  c.kind = kind;
  c.numbers = extract_numbers(text);
  c.text = std::move(text);
  c.metrics = std::move(metrics);
  c.geos = std::move(geos);
  c.periods = std::move(periods);
  c.source = std::move(source);
  return c;
}

void to_json(nlohmann::json& j, const DataChunk& c) {
  j = nlohmann::json{{"id", c.id},
                     {"kind", to_string(c.kind)},
                     {"text", c.text},
                     {"metrics", c.metrics},
                     {"geos", c.geos},
                     {"periods", c.periods},
                     {"numbers", c.numbers.values()},
                     {"source", c.source}};
}

void from_json(const nlohmann::json& j, DataChunk& c) {
  c.id = j.at("id").get<std::string>();
  auto kind = parse_chunk_kind(j.at("kind").get<std::string>());
  if (!kind) throw SchemaError("chunk " + c.id + ": unknown kind");
  c.kind = *kind;
  c.text = j.at("text").get<std::string>();
  c.metrics = j.at("metrics").get<std::set<std::string>>();
  c.geos = j.at("geos").get<std::set<std::string>>();
  c.periods = j.at("periods").get<std::set<std::string>>();
  c.numbers = NumberMultiset(j.at("numbers").get<std::vector<double>>());
  c.source = j.value("source", std::vector<std::string>{});
}

void write_chunks_jsonl(std::ostream& out, const std::vector<DataChunk>& chunks) {
  for (const auto& c : chunks) out << nlohmann::json(c).dump() << '\n';
}

std::vector<DataChunk> read_chunks_jsonl(std::istream& in) {
  std::vector<DataChunk> chunks;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    DataChunk c;
    try {
      c = nlohmann::json::parse(line).get<DataChunk>();
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("chunks line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!c.numbers.equivalent(extract_numbers(c.text))) {
      throw SchemaError("chunks line " + std::to_string(line_no) + ": numbers do not match text");
    }
    chunks.push_back(std::move(c));
  }
  return chunks;
}

void save_chunks(const std::filesystem::path& path, const std::vector<DataChunk>& chunks) {
  std::ostringstream out;
  write_chunks_jsonl(out, chunks);
  write_file_atomic(path, out.str());
}

std::vector<DataChunk> load_chunks(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open chunk file " + path.string());
  return read_chunks_jsonl(in);
}

}  // namespace ledgerlens
