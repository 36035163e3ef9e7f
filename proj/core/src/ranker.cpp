#include "ledgerlens/ranker.hpp"

#include <algorithm>
#include <cmath>

#include "ledgerlens/errors.hpp"

namespace ledgerlens {

namespace {

constexpr std::size_t kEmbedBatch = 256;

std::size_t kind_slot(EntityKind k) { return static_cast<std::size_t>(k); }

const std::vector<std::uint32_t>& no_postings() {
  static const std::vector<std::uint32_t> empty;
  return empty;
}

std::vector<std::uint32_t> union_of(const ChunkStore& store, EntityKind kind, const std::set<std::string>& ents) {
  std::vector<std::uint32_t> out;
  for (const auto& e : ents) {
    const auto& p = store.postings(kind, e);
    std::vector<std::uint32_t> merged;
    merged.reserve(out.size() + p.size());
    std::set_union(out.begin(), out.end(), p.begin(), p.end(), std::back_inserter(merged));
    out.swap(merged);
  }
  return out;
}

std::vector<std::uint32_t> intersect_all(std::vector<std::vector<std::uint32_t>> lists) {
  if (lists.empty()) return {};
  std::sort(lists.begin(), lists.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
  std::vector<std::uint32_t> acc = std::move(lists.front());
  for (std::size_t i = 1; i < lists.size() && !acc.empty(); ++i) {
    std::vector<std::uint32_t> next;
    std::set_intersection(acc.begin(), acc.end(), lists[i].begin(), lists[i].end(), std::back_inserter(next));
    acc.swap(next);
  }
  return acc;
}

}  // namespace

ChunkStore ChunkStore::build(std::vector<DataChunk> chunks, const Embedder& embedder) {
  if (chunks.empty()) throw EmptyStore();
  ChunkStore s;
  s.dimension_ = embedder.dimension();
  s.chunks_ = std::move(chunks);
  s.by_id_.reserve(s.chunks_.size());
  for (std::uint32_t i = 0; i < s.chunks_.size(); ++i) {
    const auto& c = s.chunks_[i];
    if (!s.by_id_.emplace(c.id, i).second) throw DuplicateKey("duplicate chunk id " + c.id);
    for (const auto& m : c.metrics) s.postings_[kind_slot(EntityKind::Metric)][m].push_back(i);
    for (const auto& g : c.geos) s.postings_[kind_slot(EntityKind::Geo)][g].push_back(i);
    for (const auto& p : c.periods) s.postings_[kind_slot(EntityKind::Period)][p].push_back(i);
  }

  s.embeddings_.resize(s.chunks_.size());
  std::vector<std::string> batch;
  for (std::size_t start = 0; start < s.chunks_.size(); start += kEmbedBatch) {
    const std::size_t end = std::min(s.chunks_.size(), start + kEmbedBatch);
    batch.clear();
    for (std::size_t i = start; i < end; ++i) batch.push_back(s.chunks_[i].text);
    auto vectors = embedder.embed_batch(batch);
    for (std::size_t i = start; i < end; ++i) {
      const auto& dense = vectors[i - start];
      if (dense.dimension() != s.dimension_) throw DimensionMismatch("embedder returned wrong dimension");
      auto& sparse = s.embeddings_[i];
      for (std::uint32_t d = 0; d < dense.dimension(); ++d) {
        if (dense[d] != 0.0) {
          sparse.index.push_back(d);
          sparse.value.push_back(dense[d]);
        }
      }
    }
  }
  return s;
}

const DataChunk* ChunkStore::find(const std::string& id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &chunks_[it->second];
}

std::optional<std::size_t> ChunkStore::index_of(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

const std::vector<std::uint32_t>& ChunkStore::postings(EntityKind kind, const std::string& entity) const {
  const auto& map = postings_[kind_slot(kind)];
  auto it = map.find(entity);
  return it == map.end() ? no_postings() : it->second;
}

double ChunkStore::similarity(const EmbeddingVector& query, std::size_t i) const {
  double nq = 0.0;
  for (double v : query.values()) nq += v * v;
  return similarity(query, nq, i);
}

std::vector<double> ChunkStore::similarities(const EmbeddingVector& query,
                                             std::span<const std::uint32_t> indexes) const {
  double nq = 0.0;
  for (double v : query.values()) nq += v * v;
  std::vector<double> out;
  out.reserve(indexes.size());
  for (auto i : indexes) out.push_back(similarity(query, nq, i));
  return out;
}

// Same operation order as cosine_similarity on the dense vectors, so the two
// agree bit for bit.
double ChunkStore::similarity(const EmbeddingVector& query, double query_norm_sq, std::size_t i) const {
  if (query.dimension() != dimension_) throw DimensionMismatch("query embedding has wrong dimension");
  const auto& e = embeddings_[i];
  double dot = 0.0, nc = 0.0;
  const double nq = query_norm_sq;
  for (std::size_t k = 0; k < e.index.size(); ++k) {
    dot += query[e.index[k]] * e.value[k];
    nc += e.value[k] * e.value[k];
  }
  if (nq == 0.0 || nc == 0.0) return 0.0;
  const double c = dot / (std::sqrt(nq) * std::sqrt(nc));
  return std::max(-1.0, std::min(1.0, c));
}

Candidates filter_chunks(const ChunkStore& store, const NamedEntities& q) {
  if (store.size() == 0) throw EmptyStore();
  const bool has_m = !q.metrics.empty(), has_g = !q.geos.empty(), has_p = !q.periods.empty();

  if (has_m || has_g || has_p) {
    std::vector<std::vector<std::uint32_t>> dims;
    if (has_m) dims.push_back(union_of(store, EntityKind::Metric, q.metrics));
    if (has_g) dims.push_back(union_of(store, EntityKind::Geo, q.geos));
    if (has_p) dims.push_back(union_of(store, EntityKind::Period, q.periods));
    auto strict = intersect_all(dims);
    if (!strict.empty()) return {std::move(strict), 0};

    if (has_m || has_g) {
      dims.clear();
      if (has_m) dims.push_back(union_of(store, EntityKind::Metric, q.metrics));
      if (has_g) dims.push_back(union_of(store, EntityKind::Geo, q.geos));
      auto no_period = intersect_all(dims);
      if (!no_period.empty()) return {std::move(no_period), 1};
    }
    if (has_g) {
      auto geo_only = union_of(store, EntityKind::Geo, q.geos);
      if (!geo_only.empty()) return {std::move(geo_only), 2};
    }
  }

  // Fallback: feature and trend chunks for the geo, then all of them, then
  // the whole store.
  auto derived = [&](const std::vector<std::uint32_t>& pool) {
    std::vector<std::uint32_t> out;
    for (auto i : pool) {
      if (store.at(i).kind != ChunkKind::Primary) out.push_back(i);
    }
    return out;
  };
  std::vector<std::uint32_t> all(store.size());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  std::vector<std::uint32_t> out;
  if (has_g) out = derived(union_of(store, EntityKind::Geo, q.geos));
  if (out.empty()) out = derived(all);
  if (out.empty()) out = std::move(all);
  return {std::move(out), 3};
}

constexpr double kScoreResolution = 1e12;

RankedSelection rank_chunks(const EmbeddingVector& query, std::span<const std::uint32_t> candidates,
                            const ChunkStore& store, std::size_t k) {
  // Scores are compared at 1e-12 resolution: equal cosines reached by
  // different summation orders must still tie and fall back to the id.
  struct Entry {
    long long key;
    std::uint32_t index;
  };
  const auto scores = store.similarities(query, candidates);
  std::vector<Entry> scored;
  scored.reserve(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    scored.push_back({std::llround(scores[j] * kScoreResolution), candidates[j]});
  }

  auto better = [&](const Entry& a, const Entry& b) {
    if (a.key != b.key) return a.key > b.key;
    return store.at(a.index).id < store.at(b.index).id;
  };
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(), better);

  RankedSelection sel;
  sel.chunks.reserve(take);
  for (std::size_t i = 0; i < take; ++i) sel.chunks.push_back({store.at(scored[i].index).id, static_cast<double>(scored[i].key) / kScoreResolution});
  return sel;
}

RankedSelection rank_chunks(std::string_view query, const Candidates& candidates, const ChunkStore& store,
                            const Embedder& embedder, std::size_t k) {
  auto sel = rank_chunks(embedder.embed(query), candidates.chunks, store, k);
  sel.stage = candidates.stage;
  return sel;
}

}  // namespace ledgerlens
