#include "ledgerlens/embedder.hpp"

#include <cctype>
#include <cmath>

#include "ledgerlens/errors.hpp"

namespace ledgerlens {

double EmbeddingVector::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const {
  for (double v : values_) {
    if (v != 0.0) return false;
  }
  return true;
}

void EmbeddingVector::normalize() {
  const double n = norm();
  if (n == 0.0) return;
  for (double& v : values_) v /= n;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dimension() != b.dimension()) {
    throw DimensionMismatch("cosine_similarity: dimensions " + std::to_string(a.dimension()) + " and " +
                            std::to_string(b.dimension()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::max(-1.0, std::min(1.0, c));
}

std::vector<EmbeddingVector> Embedder::embed_batch(std::span<const std::string> texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

HashingEmbedder::HashingEmbedder(std::size_t dimension) : dimension_(dimension) {
  if (dimension_ == 0) throw DimensionMismatch("embedding dimension must be positive");
}

EmbeddingVector HashingEmbedder::embed(std::string_view text) const {
  std::vector<double> v(dimension_, 0.0);
  std::string token;
  auto flush = [&] {
    if (token.empty()) return;
    v[fnv1a64(token) % dimension_] += 1.0;
    token.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  EmbeddingVector out(std::move(v));
  out.normalize();
  return out;
}

}  // namespace ledgerlens
