#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vasr/fusion/image_feature.hpp"

namespace vasr::similarity {

/// a.b / (|a||b|); 0 when either vector is all zero. Throws on unequal
/// dimensions.
double cosine(std::span<const double> a, std::span<const double> b);

/// Scores image/text and text/text pairs in [-1, 1]. Implementations are
/// immutable after construction and safe to call concurrently.
class SimilarityProvider {
 public:
  virtual ~SimilarityProvider() = default;
  virtual double score_image_text(const fusion::ImageFeature& feat,
                                  std::string_view text) const = 0;
  virtual double score_text_text(std::string_view a, std::string_view b) const = 0;
};

inline constexpr std::size_t kDefaultHashBuckets = 256;

/// FNV-1a 64-bit hash of a token.
std::uint64_t token_hash(std::string_view token);

/// Token counts hashed into `buckets` slots after normalization.
std::vector<double> hashed_bag_of_words(std::string_view text,
                                        std::size_t buckets = kDefaultHashBuckets);

/// Cosine similarity over text embeddings. Texts are looked up by their
/// normalized form in an optional embedding table (VECF layout); anything
/// else falls back to the hashed bag of words with as many buckets as the
/// table has dimensions (256 without a table).
class CosineEmbeddingProvider final : public SimilarityProvider {
 public:
  CosineEmbeddingProvider() = default;
  explicit CosineEmbeddingProvider(fusion::FeatureTable table);

  std::vector<double> embed(std::string_view text) const;
  std::size_t dim() const;

  double score_image_text(const fusion::ImageFeature& feat,
                          std::string_view text) const override;
  double score_text_text(std::string_view a, std::string_view b) const override;

 private:
  std::optional<fusion::FeatureTable> table_;
};

}  // namespace vasr::similarity
