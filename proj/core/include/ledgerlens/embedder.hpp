#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ledgerlens {

// Dense embedding; unit L2 norm unless it is the zero vector.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}

  std::size_t dimension() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  double norm() const;
  bool is_zero() const;

  // Scales to unit length in place; the zero vector stays zero.
  void normalize();

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<double> values_;
};

// Throws DimensionMismatch on differing lengths. A zero vector on either
// side gives 0.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual EmbeddingVector embed(std::string_view text) const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const;
};

inline constexpr std::size_t kDefaultEmbeddingDimension = 512;

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Lowercase alphanumeric tokens, FNV-1a bucket per token, term-frequency
// counts, L2 normalised. Pure and deterministic.
class HashingEmbedder final : public Embedder {
 public:
  explicit HashingEmbedder(std::size_t dimension = kDefaultEmbeddingDimension);
  std::size_t dimension() const override { return dimension_; }
  EmbeddingVector embed(std::string_view text) const override;

 private:
  std::size_t dimension_;
};

struct HttpEmbedderConfig {
  std::string url;  // e.g. "http://127.0.0.1:9000/embed"
  std::chrono::milliseconds timeout{10'000};
  std::size_t dimension = kDefaultEmbeddingDimension;
  std::string bearer_token;  // optional
};

// POST {"texts": [...]} -> {"vectors": [[...], ...]}. Returned vectors are
// normalised. Throws Timeout or BadResponse.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEmbedderConfig config);
  std::size_t dimension() const override { return config_.dimension; }
  EmbeddingVector embed(std::string_view text) const override;
  std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts) const override;

 private:
  HttpEmbedderConfig config_;
};

}  // namespace ledgerlens
