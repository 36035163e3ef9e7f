#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ledgerlens/chunk.hpp"
#include "ledgerlens/embedder.hpp"
#include "ledgerlens/lexicon.hpp"

namespace ledgerlens {

inline constexpr std::size_t kDefaultTopK = 20;

// Non-zero coordinates of a chunk embedding.
struct SparseEmbedding {
  std::vector<std::uint32_t> index;
  std::vector<double> value;
};

// The full chunk set with entity inverted indexes and one embedding per
// chunk. Immutable once built; share it through shared_ptr<const>.
class ChunkStore {
 public:
  // Throws EmptyStore for no chunks and DuplicateKey for repeated ids.
  static ChunkStore build(std::vector<DataChunk> chunks, const Embedder& embedder);

  std::size_t size() const noexcept { return chunks_.size(); }
  const std::vector<DataChunk>& chunks() const noexcept { return chunks_; }
  const DataChunk& at(std::size_t index) const { return chunks_.at(index); }
  const DataChunk* find(const std::string& id) const;
  std::optional<std::size_t> index_of(const std::string& id) const;
  std::size_t dimension() const noexcept { return dimension_; }

  // Sorted chunk positions indexed under an entity; empty when absent.
  const std::vector<std::uint32_t>& postings(EntityKind kind, const std::string& entity) const;

  // Cosine similarity of a (unit or zero) query vector with chunk i.
  double similarity(const EmbeddingVector& query, std::size_t i) const;
  std::vector<double> similarities(const EmbeddingVector& query, std::span<const std::uint32_t> indexes) const;

 private:
  double similarity(const EmbeddingVector& query, double query_norm_sq, std::size_t i) const;

  std::vector<DataChunk> chunks_;
  std::unordered_map<std::string, std::uint32_t> by_id_;
  std::unordered_map<std::string, std::vector<std::uint32_t>> postings_[3];
  std::vector<SparseEmbedding> embeddings_;
  std::size_t dimension_ = 0;
};

struct Candidates {
  std::vector<std::uint32_t> chunks;  // ascending store positions
  int stage = 0;  // 0 strict, 1 period dropped, 2 metric dropped, 3 geo fallback
};

// Keyword filter with staged relaxation. Returns at least one candidate.
Candidates filter_chunks(const ChunkStore& store, const NamedEntities& expanded_query);

struct ScoredChunk {
  std::string id;
  double score = 0.0;
};

struct RankedSelection {
  std::vector<ScoredChunk> chunks;  // descending score, ties by ascending id
  int stage = 0;
};

RankedSelection rank_chunks(const EmbeddingVector& query, std::span<const std::uint32_t> candidates,
                            const ChunkStore& store, std::size_t k = kDefaultTopK);
RankedSelection rank_chunks(std::string_view query, const Candidates& candidates, const ChunkStore& store,
                            const Embedder& embedder, std::size_t k = kDefaultTopK);

}  // namespace ledgerlens
