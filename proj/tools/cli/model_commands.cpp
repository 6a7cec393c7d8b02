#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>

#include "common.hpp"
#include "vasr/autograd/checkpoint.hpp"
#include "vasr/autograd/random.hpp"
#include "vasr/metrics/wer.hpp"
#include "vasr/model/generate.hpp"
#include "vasr/model/training.hpp"
#include "vasr/model/transformer.hpp"
#include "vasr/pipeline/correction.hpp"
#include "vasr/similarity/provider.hpp"

namespace vasr::cli {
namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct TrainOpts {
  std::vector<std::string> manifests;
  std::string vocab, variant = "baseline", phase = "finetune", init, features, out_dir, log_path;
  bool prompt = false;
  std::size_t image_dim = 0;
  model::TrainConfig train;
  model::ModelConfig model;
};

std::vector<dataset::SampleRecord> training_records(const TrainOpts& o) {
  const auto all = read_manifests(o.manifests);
  std::vector<dataset::SampleRecord> out;
  for (const auto& r : all) {
    if (o.phase == "pretrain") {
      if (r.origin == dataset::Origin::kSynthetic) out.push_back(r);
    } else if (r.origin == dataset::Origin::kAnnotated && r.split == dataset::Split::kTrain) {
      out.push_back(r);
    }
  }
  if (out.empty()) throw std::runtime_error("train: no " + o.phase + " records in the manifests");
  return out;
}

void run_train(const TrainOpts& o) {
  if (o.variant != "baseline" && o.variant != "fusion")
    throw std::invalid_argument("train: --variant must be baseline or fusion");
  if (o.phase != "pretrain" && o.phase != "finetune")
    throw std::invalid_argument("train: --phase must be pretrain or finetune");
  const bool fused = o.variant == "fusion";
  if (fused && o.features.empty()) throw std::invalid_argument("train: fusion needs --features");

  text::WordTokenizer tokenizer(text::Vocabulary::load(o.vocab));
  std::optional<fusion::FeatureTable> features;
  if (!o.features.empty()) features = fusion::FeatureTable::load(o.features);

  std::optional<autograd::Checkpoint> init;
  model::ModelConfig mc = o.model;
  if (!o.init.empty()) {
    init = autograd::load_checkpoint(o.init);
    mc = model::ModelConfig::from_metadata(init->metadata);
  }
  mc.vocab_size = tokenizer.vocab_size();
  if (fused) {
    mc.fusion_image_dim = o.image_dim ? o.image_dim : features->dim();
  } else if (!init) {
    mc.fusion_image_dim = 0;
  }
  if (init && std::stoul(init->metadata.at("model.vocab_size")) != mc.vocab_size)
    throw std::runtime_error("train: --init checkpoint was trained with another vocabulary");

  model::EncoderDecoderModel m(mc);
  if (init) m.load_parameters(*init, /*allow_missing_fusion=*/true);

  const auto records = training_records(o);
  const auto mode = o.prompt ? pipeline::SourceMode::kPrompted : pipeline::SourceMode::kPlain;
  const auto examples =
      pipeline::make_examples(records, tokenizer, mode, fused ? &*features : nullptr);

  auto meta_for = [&](std::size_t step) {
    auto ckpt = m.to_checkpoint();
    ckpt.metadata["train.phase"] = o.phase;
    ckpt.metadata["train.variant"] = o.variant;
    ckpt.metadata["train.prompt"] = o.prompt ? "true" : "false";
    ckpt.metadata["train.step"] = std::to_string(step);
    ckpt.metadata["train.seed"] = std::to_string(o.train.seed);
    ckpt.metadata["train.examples"] = std::to_string(examples.size());
    return ckpt;
  };

  fs::create_directories(o.out_dir);
  const fs::path log_path = o.log_path.empty() ? fs::path(o.out_dir) / "train.log" : fs::path(o.log_path);
  ensure_parent(log_path);
  std::ofstream log_out(log_path);
  if (!log_out) throw std::runtime_error("cannot write " + log_path.string());
  log_out << "step loss lr\n";

  log("train: " + std::to_string(examples.size()) + " examples, " +
      std::to_string(o.train.steps) + " steps, " + std::to_string(m.parameters().size()) +
      " parameter tensors");
  const std::size_t every = std::max<std::size_t>(1, o.train.steps / 10);
  model::Trainer trainer(m, o.train);
  trainer.run(
      examples,
      [&](const model::TrainLogEntry& e) {
        log_out << e.step << ' ' << fmt("%.9g", e.loss) << ' ' << fmt("%.9g", e.lr) << '\n';
        if (e.step % every == 0 || e.step == o.train.steps)
          log("  step " + std::to_string(e.step) + " loss " + fmt("%.4f", e.loss));
      },
      [&](std::size_t step) {
        char name[32];
        std::snprintf(name, sizeof name, "checkpoint_%06zu.ckpt", step);
        autograd::save_checkpoint(meta_for(step), fs::path(o.out_dir) / name);
      });
  autograd::save_checkpoint(meta_for(o.train.steps), fs::path(o.out_dir) / "checkpoint_last.ckpt");
  log("train: wrote " + (fs::path(o.out_dir) / "checkpoint_last.ckpt").string());
}

void add_train(CLI::App& app) {
  auto o = std::make_shared<TrainOpts>();
  auto* sub = app.add_subcommand("train", "Train a correction model");
  sub->add_option("--manifest", o->manifests, "Manifest file(s)")->required()->check(CLI::ExistingFile);
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  sub->add_option("--variant", o->variant, "baseline or fusion")->capture_default_str();
  sub->add_option("--phase", o->phase,
                  "pretrain (synthetic records) or finetune (annotated train split)")
      ->capture_default_str();
  sub->add_flag("--prompt", o->prompt, "Prefix sources with their caption and [SEP]");
  sub->add_option("--init", o->init, "Start from this checkpoint (architecture comes from it)")
      ->check(CLI::ExistingFile);
  sub->add_option("--features", o->features, "Image feature file (VECF)")->check(CLI::ExistingFile);
  sub->add_option("--image-dim", o->image_dim, "Image feature width (default: from --features)");
  sub->add_option("--out-dir", o->out_dir, "Checkpoint directory")->required();
  sub->add_option("--log", o->log_path, "Loss log (default: OUT_DIR/train.log)");
  sub->add_option("--steps", o->train.steps, "Optimizer steps")->capture_default_str();
  sub->add_option("--batch-size", o->train.batch_size, "Examples per step")->capture_default_str();
  sub->add_option("--lr", o->train.lr, "Adam learning rate")->capture_default_str();
  sub->add_option("--seed", o->train.seed, "Data order and dropout seed")->capture_default_str();
  sub->add_option("--save-every", o->train.save_every, "Checkpoint period in steps (0: last only)")
      ->capture_default_str();
  sub->add_option("--model-seed", o->model.seed, "Parameter init seed")->capture_default_str();
  sub->add_option("--d-model", o->model.d_model, "Model width")->capture_default_str();
  sub->add_option("--heads", o->model.n_heads, "Attention heads")->capture_default_str();
  sub->add_option("--enc-layers", o->model.n_enc_layers, "Encoder layers")->capture_default_str();
  sub->add_option("--dec-layers", o->model.n_dec_layers, "Decoder layers")->capture_default_str();
  sub->add_option("--ffn-dim", o->model.ffn_dim, "Feed-forward width")->capture_default_str();
  sub->add_option("--max-len", o->model.max_len, "Maximum sequence length")->capture_default_str();
  sub->add_option("--dropout", o->model.dropout, "Dropout rate")->capture_default_str();
  add_config_option(*sub);
  sub->callback([o] { run_train(*o); });
}

std::vector<fs::path> last_checkpoints(const fs::path& dir, std::size_t last) {
  std::vector<fs::path> found;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name.starts_with("checkpoint_") && name.ends_with(".ckpt") &&
        name != "checkpoint_last.ckpt")
      found.push_back(e.path());
  }
  std::sort(found.begin(), found.end());
  if (found.size() > last) found.erase(found.begin(), found.end() - static_cast<long>(last));
  return found;
}

void add_avg(CLI::App& app) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string dir, out;
    std::size_t last = 10;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("avg-ckpt", "Average checkpoint parameters elementwise");
  auto* in = sub->add_option("--inputs", o->inputs, "Checkpoint files")->check(CLI::ExistingFile);
  auto* dir = sub->add_option("--dir", o->dir, "Take periodic checkpoints from this directory")
                  ->check(CLI::ExistingDirectory);
  in->excludes(dir);
  sub->add_option("--last", o->last, "With --dir: how many of the newest to average")
      ->capture_default_str()->check(CLI::PositiveNumber);
  sub->add_option("--out", o->out, "Averaged checkpoint")->required();
  add_config_option(*sub);
  sub->callback([o] {
    std::vector<fs::path> paths(o->inputs.begin(), o->inputs.end());
    if (!o->dir.empty()) paths = last_checkpoints(o->dir, o->last);
    if (paths.empty()) throw std::invalid_argument("avg-ckpt: no checkpoints given");
    auto avg = model::average_checkpoint_files(paths);
    avg.metadata["avg.count"] = std::to_string(paths.size());
    ensure_parent(o->out);
    autograd::save_checkpoint(avg, o->out);
    log("avg-ckpt: averaged " + std::to_string(paths.size()) + " checkpoints -> " + o->out);
  });
}

std::optional<model::EncoderDecoderModel> load_model(const std::string& path,
                                                    const text::Tokenizer& tok) {
  if (path.empty()) return std::nullopt;
  auto m = model::EncoderDecoderModel::from_checkpoint(autograd::load_checkpoint(path));
  if (m.config().vocab_size != tok.vocab_size())
    throw std::runtime_error(path + ": vocabulary size does not match --vocab");
  return m;
}

void add_correct(CLI::App& app) {
  struct Opts {
    std::string manifest, vocab, variant = "transformer", baseline, prompt, fusion, features,
        embeddings, split = "test", out, report;
    bool filter = false;
    model::DecodeConfig decode;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("correct", "Run a correction pipeline variant over a manifest");
  sub->add_option("--manifest", o->manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  sub->add_option("--vocab", o->vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  sub->add_option("--variant", o->variant,
                  "original, transformer, prompt, fusion, transformer_then_fusion, prompt_then_fusion")
      ->capture_default_str();
  sub->add_option("--baseline-ckpt", o->baseline, "Text-only model")->check(CLI::ExistingFile);
  sub->add_option("--prompt-ckpt", o->prompt, "Prompt-trained model")->check(CLI::ExistingFile);
  sub->add_option("--fusion-ckpt", o->fusion, "Fusion model")->check(CLI::ExistingFile);
  sub->add_option("--features", o->features, "Image feature file (VECF)")->check(CLI::ExistingFile);
  sub->add_flag("--filter", o->filter, "Keep a fusion change only if it scores higher against the image");
  sub->add_option("--embeddings", o->embeddings, "Text embedding table for the filter")
      ->check(CLI::ExistingFile);
  sub->add_option("--split", o->split, "train, valid, test or all")->capture_default_str();
  sub->add_option("--beam", o->decode.beam_size, "Beam width (1: greedy)")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_option("--max-decode-len", o->decode.max_decode_len, "Decode length cap")
      ->capture_default_str();
  sub->add_option("--length-penalty", o->decode.length_penalty, "Ranking length exponent")
      ->capture_default_str();
  sub->add_option("--out", o->out, "Results (JSONL)")->required();
  sub->add_option("--report", o->report, "Also write the WER report (JSON)");
  add_config_option(*sub);
  sub->callback([o] {
    pipeline::PipelineConfig cfg;
    cfg.variant = pipeline::parse_variant(o->variant);
    cfg.filter = o->filter;
    cfg.decode = o->decode;
    cfg.decode.strategy = o->decode.beam_size == 1 ? model::DecodeConfig::Strategy::kGreedy
                                                   : model::DecodeConfig::Strategy::kBeam;
    cfg.decode.validate();

    text::WordTokenizer tokenizer(text::Vocabulary::load(o->vocab));
    const auto baseline = load_model(o->baseline, tokenizer);
    const auto prompt = load_model(o->prompt, tokenizer);
    const auto fused = load_model(o->fusion, tokenizer);
    pipeline::CorrectionModels models{baseline ? &*baseline : nullptr,
                                      prompt ? &*prompt : nullptr, fused ? &*fused : nullptr,
                                      &tokenizer};
    std::optional<fusion::FeatureTable> features;
    if (!o->features.empty()) features = fusion::FeatureTable::load(o->features);
    std::unique_ptr<similarity::CosineEmbeddingProvider> provider;
    if (o->filter) {
      provider = o->embeddings.empty()
                     ? std::make_unique<similarity::CosineEmbeddingProvider>()
                     : std::make_unique<similarity::CosineEmbeddingProvider>(
                           fusion::FeatureTable::load(o->embeddings));
      cfg.provider = provider.get();
    }

    std::vector<dataset::SampleRecord> samples;
    for (auto& r : dataset::read_manifest(o->manifest)) {
      if (r.origin != dataset::Origin::kAnnotated) continue;
      if (o->split == "all" || dataset::to_string(r.split) == o->split) samples.push_back(r);
    }
    if (samples.empty()) throw std::runtime_error("correct: no annotated records in split " + o->split);

    const auto results = pipeline::run_variant(cfg, models, samples, features ? &*features : nullptr);
    pipeline::write_results(o->out, results);

    std::vector<metrics::EvalPair> pairs;
    for (std::size_t i = 0; i < samples.size(); ++i)
      pairs.push_back({samples[i].id, results[i].final_text, samples[i].reference});
    const auto report = metrics::corpus_eval(pairs);
    if (!o->report.empty()) write_text(o->report, metrics::to_json(report).dump(2) + "\n");
    std::cout << pipeline::to_string(cfg.variant) << (cfg.filter ? " (filtered)" : "") << ": "
              << metrics::format_summary(report) << '\n';
  });
}

void add_gradcheck(CLI::App& app) {
  struct Opts {
    std::uint64_t seed = 21;
    double step = 1e-5;
    double tolerance = 1e-4;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "gradcheck", "Compare analytic and finite-difference gradients on a tiny fused model");
  sub->add_option("--seed", o->seed, "Model and data seed")->capture_default_str();
  sub->add_option("--step", o->step, "Central difference step")->capture_default_str();
  sub->add_option("--tolerance", o->tolerance, "Fail at or above this relative error")
      ->capture_default_str();
  sub->callback([o] {
    model::ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_enc_layers = 1;
    c.n_dec_layers = 1;
    c.ffn_dim = 16;
    c.max_len = 8;
    c.vocab_size = 12;
    c.fusion_image_dim = 6;
    c.seed = o->seed;
    model::EncoderDecoderModel m(c);
    Rng rng(o->seed + 1);
    fusion::ImageFeature feat{{}, "img"};
    for (int i = 0; i < 6; ++i) feat.vector.push_back(rng.normal());
    auto seq = [&](std::size_t words) {
      text::TokenSequence s{{text::kBos}};
      for (std::size_t i = 0; i < words; ++i)
        s.ids.push_back(static_cast<text::TokenId>(text::kNumReserved +
                                                    rng.below(c.vocab_size - text::kNumReserved)));
      s.ids.push_back(text::kEos);
      return s;
    };
    std::vector<model::TrainingExample> batch{{seq(3), seq(3), &feat}, {seq(2), seq(4), nullptr}};
    const auto r = model::gradient_check(m, batch, o->step);
    std::cout << "checked " << r.checked << " parameters, max relative error "
              << fmt("%.3e", r.max_rel_error) << " at " << r.worst_parameter << "["
              << r.worst_index << "]\n";
    if (!(r.max_rel_error < o->tolerance)) throw std::runtime_error("gradient check failed");
  });
}

}  // namespace

void add_model_commands(CLI::App& app) {
  add_train(app);
  add_avg(app);
  add_correct(app);
  add_gradcheck(app);
}

}  // namespace vasr::cli
