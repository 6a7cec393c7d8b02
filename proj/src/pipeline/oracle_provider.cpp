#include "vasr/pipeline/oracle_provider.hpp"

#include <algorithm>
#include <stdexcept>

#include "vasr/metrics/wer.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::pipeline {
namespace {
double negative_wer(std::string_view hyp, std::string_view ref) {
  const auto words = text::split_words(ref).size();
  const auto edits = metrics::word_edit_distance(hyp, ref).total();
  if (words == 0) return edits == 0 ? 0.0 : -1.0;
  return -std::min(1.0, static_cast<double>(edits) / static_cast<double>(words));
}
}  // namespace

double ReferenceOracleProvider::score_image_text(const fusion::ImageFeature& feat,
                                                 std::string_view text) const {
  const auto it = references_.find(feat.source_id);
  if (it == references_.end()) {
    throw std::invalid_argument("oracle provider has no reference for '" + feat.source_id +
                                "'");
  }
  return negative_wer(text, it->second);
}

double ReferenceOracleProvider::score_text_text(std::string_view a,
                                                std::string_view b) const {
  return negative_wer(a, b);
}

}  // namespace vasr::pipeline
