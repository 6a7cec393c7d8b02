#include "vasr/pipeline/correction.hpp"

#include <fstream>
#include <stdexcept>

#include "vasr/prompting/prompt.hpp"

namespace vasr::pipeline {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kOriginal: return "original";
    case Variant::kTransformer: return "transformer";
    case Variant::kPrompt: return "prompt";
    case Variant::kFusion: return "fusion";
    case Variant::kTransformerThenFusion: return "transformer_then_fusion";
    case Variant::kPromptThenFusion: return "prompt_then_fusion";
  }
  return "original";
}

Variant parse_variant(std::string_view name) {
  for (auto v : {Variant::kOriginal, Variant::kTransformer, Variant::kPrompt,
                 Variant::kFusion, Variant::kTransformerThenFusion,
                 Variant::kPromptThenFusion}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown pipeline variant '" + std::string(name) + "'");
}

std::vector<std::string> stage_names(Variant v) {
  switch (v) {
    case Variant::kOriginal: return {};
    case Variant::kTransformer: return {"transformer"};
    case Variant::kPrompt: return {"prompt"};
    case Variant::kFusion: return {"fusion"};
    case Variant::kTransformerThenFusion: return {"transformer", "fusion"};
    case Variant::kPromptThenFusion: return {"prompt", "fusion"};
  }
  return {};
}

std::string filter_change(const similarity::SimilarityProvider& provider,
                          const fusion::ImageFeature& feat, const std::string& original,
                          const std::string& changed, FilterDecision* decision) {
  if (changed == original) {
    if (decision) *decision = FilterDecision{};
    return original;
  }
  const double s_orig = provider.score_image_text(feat, original);
  const double s_changed = provider.score_image_text(feat, changed);
  const bool replace = s_changed > s_orig;
  if (decision) *decision = FilterDecision{replace, s_orig, s_changed};
  return replace ? changed : original;
}

std::string correct_text(const model::EncoderDecoderModel& model,
                         const text::Tokenizer& tokenizer, std::string_view source,
                         const model::DecodeConfig& decode,
                         const fusion::ImageFeature* image) {
  const auto src = tokenizer.encode(source, /*add_bos_eos=*/true);
  const auto hyp = model::generate(model, src, decode, image);
  return tokenizer.decode(hyp.tokens);
}

const fusion::ImageFeature* feature_for(const dataset::SampleRecord& rec,
                                        const fusion::FeatureTable* features) {
  if (rec.image_feature_id.empty()) return nullptr;
  if (!features) {
    throw std::invalid_argument("sample '" + rec.id + "' names image feature '" +
                                rec.image_feature_id + "' but no feature table was given");
  }
  const auto* f = features->find(rec.image_feature_id);
  if (!f) {
    throw std::invalid_argument("sample '" + rec.id + "': image feature '" +
                                rec.image_feature_id + "' not found");
  }
  return f;
}

std::vector<CorrectionResult> run_variant(const PipelineConfig& cfg,
                                          const CorrectionModels& models,
                                          std::span<const dataset::SampleRecord> samples,
                                          const fusion::FeatureTable* features) {
  const auto stages = stage_names(cfg.variant);
  auto need = [&](const model::EncoderDecoderModel* m, const char* stage) {
    if (!m) throw std::invalid_argument(std::string("variant needs a ") + stage + " model");
  };
  for (const auto& s : stages) {
    if (s == "transformer") need(models.baseline, "transformer");
    if (s == "prompt") need(models.prompt, "prompt");
    if (s == "fusion") need(models.fusion, "fusion");
  }
  if (!stages.empty() && !models.tokenizer) {
    throw std::invalid_argument("variant needs a tokenizer");
  }
  const bool filtering = cfg.filter && !stages.empty() && stages.back() == "fusion";
  if (cfg.filter && (!cfg.provider || !features)) {
    throw std::invalid_argument("filtering needs a similarity provider and image features");
  }

  std::vector<CorrectionResult> results;
  results.reserve(samples.size());
  for (const auto& rec : samples) {
    CorrectionResult r;
    r.sample_id = rec.id;
    r.original = rec.source;
    std::string current = rec.source;
    for (const auto& stage : stages) {
      if (stage == "transformer") {
        current = correct_text(*models.baseline, *models.tokenizer, current, cfg.decode);
      } else if (stage == "prompt") {
        current = correct_text(*models.prompt, *models.tokenizer,
                               prompting::build_prompted_source(rec.caption, current),
                               cfg.decode);
      } else {
        const auto* image = feature_for(rec, features);
        const std::string before = current;
        std::string changed =
            correct_text(*models.fusion, *models.tokenizer, current, cfg.decode, image);
        if (filtering) {
          if (!image) {
            throw std::invalid_argument("sample '" + rec.id +
                                        "' has no image feature to filter with");
          }
          FilterDecision d;
          changed = filter_change(*cfg.provider, *image, before, changed, &d);
          r.filter_decisions.push_back(d);
        }
        current = std::move(changed);
      }
      r.stage_outputs.emplace_back(stage, current);
    }
    r.final_text = current;
    results.push_back(std::move(r));
  }
  return results;
}

nlohmann::json to_json(const CorrectionResult& result) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& [name, text] : result.stage_outputs) {
    stages.push_back({{"stage", name}, {"text", text}});
  }
  nlohmann::json decisions = nlohmann::json::array();
  for (const auto& d : result.filter_decisions) {
    nlohmann::json entry = {{"decision", d.replaced ? "replaced" : "kept"}};
    entry["score_original"] =
        d.score_original ? nlohmann::json(*d.score_original) : nlohmann::json(nullptr);
    entry["score_changed"] =
        d.score_changed ? nlohmann::json(*d.score_changed) : nlohmann::json(nullptr);
    decisions.push_back(std::move(entry));
  }
  return {{"sample_id", result.sample_id},
          {"original", result.original},
          {"stage_outputs", std::move(stages)},
          {"final", result.final_text},
          {"filter_decisions", std::move(decisions)}};
}

void write_results(const std::filesystem::path& path,
                   std::span<const CorrectionResult> results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write results: " + path.string());
  for (const auto& r : results) out << to_json(r).dump() << '\n';
}

std::vector<model::TrainingExample> make_examples(
    std::span<const dataset::SampleRecord> samples, const text::Tokenizer& tokenizer,
    SourceMode mode, const fusion::FeatureTable* features) {
  std::vector<model::TrainingExample> out;
  out.reserve(samples.size());
  for (const auto& rec : samples) {
    const std::string src =
        mode == SourceMode::kPrompted ? prompting::prompted_source(rec) : rec.source;
    model::TrainingExample ex;
    ex.source = tokenizer.encode(src, true);
    ex.target = tokenizer.encode(rec.reference, true);
    ex.image = features ? feature_for(rec, features) : nullptr;
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace vasr::pipeline
