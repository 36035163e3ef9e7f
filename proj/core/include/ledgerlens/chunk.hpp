#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ledgerlens/numbers.hpp"

namespace ledgerlens {

enum class ChunkKind { Primary, Feature, Trend };

std::string_view to_string(ChunkKind kind);
std::optional<ChunkKind> parse_chunk_kind(std::string_view s);

// One retrievable unit of context, 2 to 10 sentences rendered from table rows.
struct DataChunk {
  std::string id;
  ChunkKind kind = ChunkKind::Primary;
  std::string text;
  std::set<std::string> metrics;
  std::set<std::string> geos;
  std::set<std::string> periods;
  NumberMultiset numbers;            // always extract_numbers(text)
  std::vector<std::string> source;   // TableRecord::key() of contributing rows

  friend bool operator==(const DataChunk& a, const DataChunk& b) {
    return a.id == b.id && a.kind == b.kind && a.text == b.text && a.metrics == b.metrics &&
           a.geos == b.geos && a.periods == b.periods && a.source == b.source &&
           a.numbers.values() == b.numbers.values();
  }
};

// Builds a chunk and fills numbers from the text.
DataChunk make_chunk(std::string id, ChunkKind kind, std::string text, std::set<std::string> metrics,
                     std::set<std::string> geos, std::set<std::string> periods,
                     std::vector<std::string> source);

void to_json(nlohmann::json& j, const DataChunk& c);
void from_json(const nlohmann::json& j, DataChunk& c);

// JSON-Lines, one chunk object per line. Reading checks that the stored
// numbers agree with the text.
void write_chunks_jsonl(std::ostream& out, const std::vector<DataChunk>& chunks);
std::vector<DataChunk> read_chunks_jsonl(std::istream& in);
void save_chunks(const std::filesystem::path& path, const std::vector<DataChunk>& chunks);
std::vector<DataChunk> load_chunks(const std::filesystem::path& path);

}  // namespace ledgerlens
