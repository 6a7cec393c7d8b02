#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "common.hpp"
#include "vasr/dataset/corpus.hpp"
#include "vasr/prompting/prompt.hpp"
#include "vasr/similarity/provider.hpp"

namespace vasr::cli {
namespace {

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

void add_vocab(CLI::App& app) {
  struct Opts {
    std::vector<std::string> manifests;
    std::string out;
    std::size_t min_count = 1;
    std::size_t max_size = 100000;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("vocab", "Build a shared word vocabulary from manifests");
  sub->add_option("--manifest", o->manifests, "Manifest file(s)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Vocabulary file to write")->required();
  sub->add_option("--min-count", o->min_count, "Minimum token count")->capture_default_str();
  sub->add_option("--max-size", o->max_size, "Maximum learned tokens")->capture_default_str();
  add_config_option(*sub);
  sub->callback([o] {
    const auto records = read_manifests(o->manifests);
    const auto vocab = text::build_vocab(dataset::corpus_lines(records), o->min_count, o->max_size);
    ensure_parent(o->out);
    vocab.save(o->out);
    log("vocab: " + std::to_string(vocab.size()) + " ids (" +
        std::to_string(vocab.learned().size()) + " learned) -> " + o->out);
  });
}

void add_synth(CLI::App& app) {
  struct Opts {
    std::string references, manifest, noise, out;
    std::size_t n = 1000;
    std::optional<std::uint64_t> seed;
    std::optional<double> sub_rate, del_rate, ins_rate;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("synth", "Generate synthetic (corrupted, reference) pairs");
  auto* refs = sub->add_option("--references", o->references, "Reference text, one per line")
                   ->check(CLI::ExistingFile);
  auto* man = sub->add_option("--manifest", o->manifest, "Take references from a manifest's train split")
                  ->check(CLI::ExistingFile);
  refs->excludes(man);
  sub->add_option("--noise", o->noise, "Noise config JSON (rates, homophones, seed)")
      ->check(CLI::ExistingFile);
  sub->add_option("--substitution-rate", o->sub_rate, "Override the substitution rate");
  sub->add_option("--deletion-rate", o->del_rate, "Override the deletion rate");
  sub->add_option("--insertion-rate", o->ins_rate, "Override the insertion rate");
  sub->add_option("--n", o->n, "Pairs to generate")->capture_default_str();
  sub->add_option("--seed", o->seed, "Random seed (overrides the noise file)");
  sub->add_option("--out", o->out, "Manifest to write")->required();
  add_config_option(*sub);
  sub->callback([o] {
    std::vector<std::string> references;
    if (!o->references.empty()) {
      for (auto& line : read_lines(o->references))
        if (!text::normalize(line).empty()) references.push_back(line);
    } else if (!o->manifest.empty()) {
      for (const auto& r : dataset::read_manifest(o->manifest))
        if (r.split == dataset::Split::kTrain) references.push_back(r.reference);
    } else {
      throw std::invalid_argument("synth needs --references or --manifest");
    }
    dataset::NoiseConfig noise;
    if (!o->noise.empty()) {
      std::ifstream in(o->noise);
      noise = dataset::NoiseConfig::from_json(nlohmann::json::parse(in));
    }
    if (o->sub_rate) noise.substitution_rate = *o->sub_rate;
    if (o->del_rate) noise.deletion_rate = *o->del_rate;
    if (o->ins_rate) noise.insertion_rate = *o->ins_rate;
    if (o->seed) noise.seed = *o->seed;
    dataset::SyntheticStats stats;
    const auto records = dataset::generate_synthetic(references, noise, o->n, &stats);
    ensure_parent(o->out);
    dataset::write_manifest(o->out, records);
    log("synth: " + std::to_string(records.size()) + " pairs, " + std::to_string(stats.tokens) +
        " tokens (sub " + std::to_string(stats.substitutions) + ", del " +
        std::to_string(stats.deletions) + ", ins " + std::to_string(stats.insertions) + ") -> " +
        o->out);
  });
}

void add_filter(CLI::App& app) {
  struct Opts {
    std::string manifest, out, dropped, embeddings;
    double threshold = 0.2;
    std::size_t threads = 1;
    bool all_splits = false;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "filter", "Keep annotated samples whose caption/reference similarity exceeds a threshold");
  sub->add_option("--manifest", o->manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Kept records")->required();
  sub->add_option("--dropped", o->dropped, "Also write dropped records here");
  sub->add_option("--threshold", o->threshold, "Strict lower bound on the score")->capture_default_str();
  sub->add_option("--embeddings", o->embeddings, "Text embedding table (VECF)")
      ->check(CLI::ExistingFile);
  sub->add_option("--threads", o->threads, "Scoring threads")->capture_default_str()
      ->check(CLI::PositiveNumber);
  sub->add_flag("--all-splits", o->all_splits, "Filter the test split too (default: left as is)");
  add_config_option(*sub);
  sub->callback([o] {
    const auto records = dataset::read_manifest(o->manifest);
    std::unique_ptr<similarity::CosineEmbeddingProvider> provider =
        o->embeddings.empty()
            ? std::make_unique<similarity::CosineEmbeddingProvider>()
            : std::make_unique<similarity::CosineEmbeddingProvider>(
                  fusion::FeatureTable::load(o->embeddings));
    std::vector<dataset::SampleRecord> candidates, passthrough;
    for (const auto& r : records) {
      (o->all_splits || r.split != dataset::Split::kTest ? candidates : passthrough).push_back(r);
    }
    const auto result = dataset::filter_by_similarity(candidates, *provider, o->threshold, o->threads);
    // Restore input order across the kept records and the untouched test split.
    std::map<std::string, bool> keep;
    for (const auto& r : result.kept) keep[r.id] = true;
    for (const auto& r : passthrough) keep[r.id] = true;
    std::vector<dataset::SampleRecord> kept, dropped;
    for (const auto& r : records) (keep.contains(r.id) ? kept : dropped).push_back(r);
    ensure_parent(o->out);
    dataset::write_manifest(o->out, kept);
    if (!o->dropped.empty()) {
      ensure_parent(o->dropped);
      dataset::write_manifest(o->dropped, dropped);
    }
    log("filter: kept " + std::to_string(kept.size()) + " of " + std::to_string(records.size()) +
        " at threshold " + fmt_double(o->threshold));
  });
}

void add_split(CLI::App& app) {
  struct Opts {
    std::string manifest, out;
    std::vector<double> ratios{0.8, 0.1, 0.1};
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand("split", "Assign train/valid/test splits");
  sub->add_option("--manifest", o->manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Manifest to write")->required();
  sub->add_option("--ratios", o->ratios, "train valid test ratios")->expected(3)->capture_default_str();
  sub->add_option("--seed", o->seed, "Shuffle seed")->capture_default_str();
  add_config_option(*sub);
  sub->callback([o] {
    auto records = dataset::read_manifest(o->manifest);
    const auto out = dataset::split_dataset(std::move(records),
                                            {o->ratios[0], o->ratios[1], o->ratios[2]}, o->seed);
    ensure_parent(o->out);
    dataset::write_manifest(o->out, out);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& r : out) ++counts[static_cast<int>(r.split)];
    log("split: train " + std::to_string(counts[0]) + ", valid " + std::to_string(counts[1]) +
        ", test " + std::to_string(counts[2]));
  });
}

void add_ablate(CLI::App& app) {
  struct Opts {
    std::string manifest, out;
    std::uint64_t seed = 1;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "ablate-random-captions",
      "Derange captions within each split so every captioned sample gets another's caption");
  sub->add_option("--manifest", o->manifest, "Input manifest")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o->out, "Manifest to write")->required();
  sub->add_option("--seed", o->seed, "Derangement seed")->capture_default_str();
  add_config_option(*sub);
  sub->callback([o] {
    auto records = dataset::read_manifest(o->manifest);
    for (auto split : {dataset::Split::kTrain, dataset::Split::kValid, dataset::Split::kTest}) {
      std::vector<std::size_t> idx;
      std::vector<dataset::SampleRecord> group;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == split && !records[i].caption.empty()) {
          idx.push_back(i);
          group.push_back(records[i]);
        }
      }
      if (group.size() < 2) continue;
      const auto shuffled =
          prompting::assign_random_captions(group, o->seed + static_cast<std::uint64_t>(split));
      for (std::size_t k = 0; k < idx.size(); ++k) records[idx[k]].caption = shuffled[k].caption;
    }
    ensure_parent(o->out);
    dataset::write_manifest(o->out, records);
    log("ablate-random-captions: wrote " + std::to_string(records.size()) + " records -> " + o->out);
  });
}

void add_demo_corpus(CLI::App& app) {
  struct Opts {
    std::string out, features_out, noise_out;
    dataset::HomophoneCorpusConfig cfg;
  };
  auto o = std::make_shared<Opts>();
  auto* sub = app.add_subcommand(
      "demo-corpus", "Build a caption-resolvable homophone correction corpus with image features");
  sub->add_option("--size", o->cfg.size, "Samples")->capture_default_str();
  sub->add_option("--seed", o->cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--feature-dim", o->cfg.feature_dim, "Image feature width")->capture_default_str();
  sub->add_option("--out", o->out, "Manifest to write")->required();
  sub->add_option("--features-out", o->features_out, "Image feature file (VECF)")->required();
  sub->add_option("--noise-out", o->noise_out, "Also write the homophone noise config (JSON)");
  add_config_option(*sub);
  sub->callback([o] {
    const auto corpus = dataset::build_homophone_caption_corpus(o->cfg);
    ensure_parent(o->out);
    dataset::write_manifest(o->out, corpus.samples);
    ensure_parent(o->features_out);
    corpus.features.save(o->features_out);
    if (!o->noise_out.empty()) write_text(o->noise_out, corpus.noise.to_json().dump(2) + "\n");
    log("demo-corpus: " + std::to_string(corpus.samples.size()) + " samples -> " + o->out);
  });
}

}  // namespace

void add_data_commands(CLI::App& app) {
  add_vocab(app);
  add_synth(app);
  add_filter(app);
  add_split(app);
  add_ablate(app);
  add_demo_corpus(app);
}

}  // namespace vasr::cli
