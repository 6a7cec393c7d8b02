#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "vasr/dataset/sample.hpp"
#include "vasr/fusion/image_feature.hpp"
#include "vasr/model/generate.hpp"
#include "vasr/similarity/provider.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::pipeline {

enum class Variant {
  kOriginal,
  kTransformer,
  kPrompt,
  kFusion,
  kTransformerThenFusion,
  kPromptThenFusion,
};

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
/// Stage names run by a variant, in order ("transformer", "prompt", "fusion").
std::vector<std::string> stage_names(Variant v);

struct CorrectionModels {
  const model::EncoderDecoderModel* baseline = nullptr;
  const model::EncoderDecoderModel* prompt = nullptr;
  const model::EncoderDecoderModel* fusion = nullptr;
  const text::Tokenizer* tokenizer = nullptr;
};

struct PipelineConfig {
  Variant variant = Variant::kOriginal;
  bool filter = false;
  model::DecodeConfig decode;
  const similarity::SimilarityProvider* provider = nullptr;
};

struct FilterDecision {
  bool replaced = false;
  /// Unset when the change was a no-op and the provider was not consulted.
  std::optional<double> score_original;
  std::optional<double> score_changed;
};

struct CorrectionResult {
  std::string sample_id;
  std::string original;
  std::vector<std::pair<std::string, std::string>> stage_outputs;
  std::string final_text;
  std::vector<FilterDecision> filter_decisions;

  bool operator==(const CorrectionResult&) const = default;
};

inline bool operator==(const FilterDecision& a, const FilterDecision& b) {
  return a.replaced == b.replaced && a.score_original == b.score_original &&
         a.score_changed == b.score_changed;
}

/// Returns `changed` only when the image scores strictly higher against it
/// than against `original`; identical texts return `original` without
/// consulting the provider.
std::string filter_change(const similarity::SimilarityProvider& provider,
                          const fusion::ImageFeature& feat, const std::string& original,
                          const std::string& changed, FilterDecision* decision = nullptr);

/// Decodes one text with a model and returns the corrected text.
std::string correct_text(const model::EncoderDecoderModel& model,
                         const text::Tokenizer& tokenizer, std::string_view source,
                         const model::DecodeConfig& decode,
                         const fusion::ImageFeature* image = nullptr);

/// Runs the configured variant over every sample, in input order. Stage two
/// of a sequential variant re-tokenizes stage one's text. Throws when a stage
/// lacks its model, or when a referenced image feature is missing.
std::vector<CorrectionResult> run_variant(const PipelineConfig& cfg,
                                          const CorrectionModels& models,
                                          std::span<const dataset::SampleRecord> samples,
                                          const fusion::FeatureTable* features);

nlohmann::json to_json(const CorrectionResult& result);
void write_results(const std::filesystem::path& path,
                   std::span<const CorrectionResult> results);

enum class SourceMode { kPlain, kPrompted };

/// Tokenized training pairs. With a feature table, records that name an
/// image get a pointer into it (the table must outlive the examples).
std::vector<model::TrainingExample> make_examples(
    std::span<const dataset::SampleRecord> samples, const text::Tokenizer& tokenizer,
    SourceMode mode, const fusion::FeatureTable* features = nullptr);

/// Looks up a record's image feature; nullptr when it names none. Throws
/// when the id is set but absent from the table.
const fusion::ImageFeature* feature_for(const dataset::SampleRecord& rec,
                                        const fusion::FeatureTable* features);

}  // namespace vasr::pipeline
