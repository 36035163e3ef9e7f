#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ledgerlens/chunk.hpp"
#include "ledgerlens/table.hpp"
#include "ledgerlens/trend.hpp"

namespace ledgerlens {

inline constexpr std::size_t kMinChunkSentences = 2;
inline constexpr std::size_t kMaxChunkSentences = 10;

// Placeholders: {metric} {geo} {period} {value}. Each template must render
// exactly one sentence and must not introduce numbers of its own.
struct ChunkTemplates {
  std::string primary_sentence = "In {geo} for {period}, {metric} was {value}.";
  std::string header_sentence = "The figures below cover {geo} in {period}.";
};

// Maps a period label to a sortable key; identity when empty.
using PeriodKey = std::function<std::string(const std::string&)>;

struct ForgeOptions {
  ChunkTemplates templates;
  TrendOptions trend;
  PeriodKey period_key;
};

std::vector<DataChunk> generate_primary_chunks(std::span<const TableRecord> records,
                                               const ChunkTemplates& templates = {});
std::vector<DataChunk> generate_feature_chunks(std::span<const TableRecord> records);
std::vector<DataChunk> generate_trend_chunks(std::span<const TableRecord> records,
                                             const TrendOptions& options = {},
                                             const PeriodKey& period_key = {});

struct ChunkSet {
  std::vector<DataChunk> chunks;  // primary, then feature, then trend
  std::size_t primary = 0;
  std::size_t feature = 0;
  std::size_t trend = 0;
};

ChunkSet generate_chunks(std::span<const TableRecord> records, const ForgeOptions& options = {});

// Sizes of an even split of n items into ceil(n / max_size) parts.
std::vector<std::size_t> balanced_split(std::size_t n, std::size_t max_size = kMaxChunkSentences);

}  // namespace ledgerlens
