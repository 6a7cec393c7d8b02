#include "vasr/similarity/provider.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "vasr/text/vocab.hpp"

namespace vasr::similarity {

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: dimension mismatch " + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  const double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> hashed_bag_of_words(std::string_view text, std::size_t buckets) {
  if (buckets == 0) throw std::invalid_argument("hashed_bag_of_words: zero buckets");
  std::vector<double> counts(buckets, 0.0);
  for (const auto& w : text::split_words(text)) counts[token_hash(w) % buckets] += 1.0;
  return counts;
}

CosineEmbeddingProvider::CosineEmbeddingProvider(fusion::FeatureTable table)
    : table_(std::move(table)) {
  if (table_->dim() == 0) throw std::invalid_argument("embedding table has zero dimension");
}

std::size_t CosineEmbeddingProvider::dim() const {
  return table_ ? table_->dim() : kDefaultHashBuckets;
}

std::vector<double> CosineEmbeddingProvider::embed(std::string_view text) const {
  if (table_) {
    if (const auto* hit = table_->find(text::normalize(text))) return hit->vector;
  }
  return hashed_bag_of_words(text, dim());
}

double CosineEmbeddingProvider::score_image_text(const fusion::ImageFeature& feat,
                                                 std::string_view text) const {
  return cosine(feat.vector, embed(text));
}

double CosineEmbeddingProvider::score_text_text(std::string_view a,
                                                std::string_view b) const {
  if (text::normalize(a) == text::normalize(b)) {
    // Self-similarity is exactly 1 unless the text embeds to zero.
    const auto v = embed(a);
    for (double x : v)
      if (x != 0.0) return 1.0;
    return 0.0;
  }
  return cosine(embed(a), embed(b));
}

}  // namespace vasr::similarity
