#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "vasr/dataset/corpus.hpp"
#include "vasr/metrics/wer.hpp"
#include "vasr/model/training.hpp"
#include "vasr/pipeline/correction.hpp"
#include "vasr/pipeline/oracle_provider.hpp"

namespace vasr::pipeline {
namespace {

using dataset::SampleRecord;

// Counts provider calls and scores by a fixed table.
class ScriptedProvider final : public similarity::SimilarityProvider {
 public:
  explicit ScriptedProvider(std::map<std::string, double> scores) : scores_(std::move(scores)) {}
  double score_image_text(const fusion::ImageFeature&, std::string_view text) const override {
    ++calls;
    return scores_.at(std::string(text));
  }
  double score_text_text(std::string_view, std::string_view) const override { return 0.0; }
  mutable int calls = 0;

 private:
  std::map<std::string, double> scores_;
};

TEST(VariantTest, NamesAndStages) {
  for (auto v : {Variant::kOriginal, Variant::kTransformer, Variant::kPrompt, Variant::kFusion,
                 Variant::kTransformerThenFusion, Variant::kPromptThenFusion})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("bart"), std::invalid_argument);
  EXPECT_EQ(stage_names(Variant::kPromptThenFusion), (std::vector<std::string>{"prompt", "fusion"}));
  EXPECT_EQ(stage_names(Variant::kTransformerThenFusion),
            (std::vector<std::string>{"transformer", "fusion"}));
  EXPECT_TRUE(stage_names(Variant::kOriginal).empty());
}

TEST(FilterChangeTest, UnchangedTextSkipsProvider) {
  ScriptedProvider p({});
  FilterDecision d;
  EXPECT_EQ(filter_change(p, {{1.0}, "img"}, "same text", "same text", &d), "same text");
  EXPECT_EQ(p.calls, 0);
  EXPECT_FALSE(d.replaced);
  EXPECT_FALSE(d.score_original.has_value());
}

TEST(FilterChangeTest, HigherScoreReplaces) {
  ScriptedProvider p({{"orig", 0.4}, {"changed", 0.9}});
  FilterDecision d;
  EXPECT_EQ(filter_change(p, {{1.0}, "img"}, "orig", "changed", &d), "changed");
  EXPECT_TRUE(d.replaced);
  EXPECT_EQ(d.score_original, 0.4);
  EXPECT_EQ(d.score_changed, 0.9);
}

TEST(FilterChangeTest, TiesKeepOriginal) {
  ScriptedProvider p({{"orig", 0.5}, {"changed", 0.5}});
  EXPECT_EQ(filter_change(p, {{1.0}, "img"}, "orig", "changed"), "orig");
  ScriptedProvider lower({{"orig", 0.5}, {"changed", 0.1}});
  EXPECT_EQ(filter_change(lower, {{1.0}, "img"}, "orig", "changed"), "orig");
}

TEST(OracleProviderTest, ScoresAreNegativeClampedWer) {
  ReferenceOracleProvider p(std::map<std::string, std::string>{{"img", "a b c d"}});
  const fusion::ImageFeature feat{{0.0}, "img"};
  EXPECT_EQ(p.score_image_text(feat, "a b c d"), 0.0);
  EXPECT_EQ(p.score_image_text(feat, "a x c d"), -0.25);
  EXPECT_EQ(p.score_image_text(feat, "q r s t u v w"), -1.0);
  EXPECT_THROW(p.score_image_text({{0.0}, "other"}, "a"), std::invalid_argument);
  EXPECT_EQ(p.score_text_text("a b", "a b"), 0.0);
}

// Tiny models overfit on four pairs, shared across the tests below.
class PipelineModelsTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    state_ = new State;
    auto& s = *state_;
    const std::vector<std::array<std::string, 3>> rows{
        {"if you plan a little bit", "if you plant a little bit", "a green plant"},
        {"the flour is on the floor", "the flower is on the floor", "a red flower"},
        {"we can sea it now", "we can see it now", "the blue sea"},
        {"our tortoise went home", "our tourist went home", "a happy tourist"},
    };
    s.features = fusion::FeatureTable(4);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      SampleRecord r;
      r.id = "p" + std::to_string(i);
      r.source = rows[i][0];
      r.reference = rows[i][1];
      r.caption = rows[i][2];
      r.image_feature_id = "img" + std::to_string(i);
      s.samples.push_back(r);
      std::vector<double> v(4, 0.0);
      v[i] = 1.0;
      s.features.add({v, r.image_feature_id});
    }
    s.tokenizer = std::make_unique<text::WordTokenizer>(
        text::build_vocab(dataset::corpus_lines(s.samples), 1, 1000));
    auto train = [&](SourceMode mode, std::size_t image_dim) {
      model::ModelConfig c;
      c.d_model = 32;
      c.n_heads = 2;
      c.n_enc_layers = 1;
      c.n_dec_layers = 1;
      c.ffn_dim = 64;
      c.max_len = 32;
      c.vocab_size = s.tokenizer->vocab_size();
      c.fusion_image_dim = image_dim;
      auto m = std::make_unique<model::EncoderDecoderModel>(c);
      const auto ex = make_examples(s.samples, *s.tokenizer, mode, image_dim ? &s.features : nullptr);
      model::TrainConfig tc;
      tc.steps = 200;
      tc.batch_size = 4;
      tc.lr = 3e-3;
      model::Trainer(*m, tc).run(ex);
      return m;
    };
    s.baseline = train(SourceMode::kPlain, 0);
    s.prompt = train(SourceMode::kPrompted, 0);
    s.fusion = train(SourceMode::kPlain, 4);
  }
  static void TearDownTestSuite() { delete state_; }

  struct State {
    std::vector<SampleRecord> samples;
    fusion::FeatureTable features;
    std::unique_ptr<text::WordTokenizer> tokenizer;
    std::unique_ptr<model::EncoderDecoderModel> baseline, prompt, fusion;
  };
  static State* state_;

  CorrectionModels models() const {
    return {state_->baseline.get(), state_->prompt.get(), state_->fusion.get(),
            state_->tokenizer.get()};
  }
  PipelineConfig config(Variant v) const {
    PipelineConfig c;
    c.variant = v;
    c.decode.beam_size = 2;
    return c;
  }
};
PipelineModelsTest::State* PipelineModelsTest::state_ = nullptr;

TEST_F(PipelineModelsTest, OriginalIsIdentity) {
  const auto out = run_variant(config(Variant::kOriginal), {}, state_->samples, nullptr);
  ASSERT_EQ(out.size(), state_->samples.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].final_text, state_->samples[i].source);
    EXPECT_TRUE(out[i].stage_outputs.empty());
    EXPECT_EQ(out[i].sample_id, state_->samples[i].id);
  }
}

TEST_F(PipelineModelsTest, OverfitModelsRecoverReferences) {
  for (auto v : {Variant::kTransformer, Variant::kPrompt, Variant::kFusion}) {
    const auto out = run_variant(config(v), models(), state_->samples, &state_->features);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_EQ(out[i].final_text, state_->samples[i].reference) << to_string(v);
      ASSERT_EQ(out[i].stage_outputs.size(), 1u);
      EXPECT_EQ(out[i].stage_outputs[0].first, stage_names(v)[0]);
    }
  }
}

TEST_F(PipelineModelsTest, SequentialStagesFeedForward) {
  const auto out =
      run_variant(config(Variant::kPromptThenFusion), models(), state_->samples, &state_->features);
  for (const auto& r : out) {
    ASSERT_EQ(r.stage_outputs.size(), 2u);
    EXPECT_EQ(r.stage_outputs[0].first, "prompt");
    EXPECT_EQ(r.stage_outputs[1].first, "fusion");
    EXPECT_EQ(r.final_text, r.stage_outputs[1].second);
    EXPECT_TRUE(r.filter_decisions.empty());
  }
}

TEST_F(PipelineModelsTest, FilteredPipelineNeverRaisesWerUnderOracle) {
  std::map<std::string, std::string> refs;
  for (const auto& s : state_->samples) refs[s.image_feature_id] = s.reference;
  ReferenceOracleProvider oracle(refs);
  // Corrupt the inputs so the fusion stage has work to do.
  auto noisy = state_->samples;
  noisy[0].source = "if you plan a bit";
  noisy[2].source = "we sea it";
  for (auto v : {Variant::kTransformerThenFusion, Variant::kPromptThenFusion}) {
    auto cfg = config(v);
    const auto plain = run_variant(cfg, models(), noisy, &state_->features);
    cfg.filter = true;
    cfg.provider = &oracle;
    const auto filtered = run_variant(cfg, models(), noisy, &state_->features);
    std::vector<metrics::EvalPair> a, b;
    for (std::size_t i = 0; i < noisy.size(); ++i) {
      a.push_back({noisy[i].id, plain[i].final_text, noisy[i].reference});
      b.push_back({noisy[i].id, filtered[i].final_text, noisy[i].reference});
      ASSERT_EQ(filtered[i].filter_decisions.size(), 1u);
      EXPECT_EQ(filtered[i].final_text, filtered[i].stage_outputs.back().second);
    }
    EXPECT_LE(metrics::corpus_eval(b).wer_percent, metrics::corpus_eval(a).wer_percent);
  }
}

TEST_F(PipelineModelsTest, ErrorsForMissingPieces) {
  EXPECT_THROW(run_variant(config(Variant::kTransformer), {}, state_->samples, nullptr),
               std::invalid_argument);
  auto no_fusion = models();
  no_fusion.fusion = nullptr;
  EXPECT_THROW(run_variant(config(Variant::kPromptThenFusion), no_fusion, state_->samples,
                           &state_->features),
               std::invalid_argument);
  auto cfg = config(Variant::kFusion);
  cfg.filter = true;
  EXPECT_THROW(run_variant(cfg, models(), state_->samples, &state_->features),
               std::invalid_argument);
  auto missing = state_->samples;
  missing[1].image_feature_id = "img-unknown";
  EXPECT_THROW(run_variant(config(Variant::kFusion), models(), missing, &state_->features),
               std::invalid_argument);
}

TEST_F(PipelineModelsTest, FusionWithoutImageTakesAbsentPath) {
  auto no_image = state_->samples;
  for (auto& s : no_image) s.image_feature_id.clear();
  const auto out = run_variant(config(Variant::kFusion), models(), no_image, nullptr);
  EXPECT_EQ(out.size(), no_image.size());
}

TEST_F(PipelineModelsTest, ReproducibleAndSerializable) {
  std::map<std::string, std::string> refs;
  for (const auto& s : state_->samples) refs[s.image_feature_id] = s.reference;
  ReferenceOracleProvider oracle(refs);
  auto cfg = config(Variant::kTransformerThenFusion);
  cfg.filter = true;
  cfg.provider = &oracle;
  const auto a = run_variant(cfg, models(), state_->samples, &state_->features);
  EXPECT_EQ(run_variant(cfg, models(), state_->samples, &state_->features), a);

  const auto path = std::filesystem::temp_directory_path() / "vasr_results.jsonl";
  write_results(path, a);
  std::ifstream in(path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j.at("sample_id"), a[lines].sample_id);
    EXPECT_EQ(j.at("final"), a[lines].final_text);
    EXPECT_EQ(j.at("stage_outputs").size(), 2u);
    EXPECT_EQ(j.at("filter_decisions").size(), 1u);
    ++lines;
  }
  EXPECT_EQ(lines, a.size());
}

TEST_F(PipelineModelsTest, ExamplesUsePromptsOnlyWhenAsked) {
  const auto plain = make_examples(state_->samples, *state_->tokenizer, SourceMode::kPlain);
  const auto prompted = make_examples(state_->samples, *state_->tokenizer, SourceMode::kPrompted);
  EXPECT_EQ(state_->tokenizer->decode(plain[0].source), state_->samples[0].source);
  EXPECT_EQ(state_->tokenizer->decode(prompted[0].source),
            state_->samples[0].caption + " [SEP] " + state_->samples[0].source);
  EXPECT_EQ(plain[0].image, nullptr);
  const auto with_images =
      make_examples(state_->samples, *state_->tokenizer, SourceMode::kPlain, &state_->features);
  EXPECT_EQ(with_images[2].image, state_->features.find("img2"));
}

}  // namespace
}  // namespace vasr::pipeline
