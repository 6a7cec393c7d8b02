#pragma once

#include <map>
#include <string>

#include "vasr/similarity/provider.hpp"

namespace vasr::pipeline {

/// Test oracle that knows the reference behind every image feature:
/// score(feat, t) = -WER(t, reference[feat.source_id]) as a fraction,
/// clamped to [-1, 0]. Texts are compared the same way.
class ReferenceOracleProvider final : public similarity::SimilarityProvider {
 public:
  explicit ReferenceOracleProvider(std::map<std::string, std::string> references)
      : references_(std::move(references)) {}

  double score_image_text(const fusion::ImageFeature& feat,
                          std::string_view text) const override;
  double score_text_text(std::string_view a, std::string_view b) const override;

 private:
  std::map<std::string, std::string> references_;
};

}  // namespace vasr::pipeline
