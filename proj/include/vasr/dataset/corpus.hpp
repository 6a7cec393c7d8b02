#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vasr/dataset/sample.hpp"
#include "vasr/fusion/image_feature.hpp"
#include "vasr/similarity/provider.hpp"

namespace vasr::dataset {

/// Timestamp of the frame sampled for a clip: the middle of [start, end].
double frame_midpoint(double start, double end);

struct FilterResult {
  std::vector<SampleRecord> kept;
  std::vector<SampleRecord> dropped;
};

/// Keeps annotated records whose caption/reference similarity is strictly
/// above `threshold`; synthetic records always pass. Both outputs keep input
/// order. Scoring fans out over `threads` workers.
FilterResult filter_by_similarity(std::span<const SampleRecord> samples,
                                  const similarity::SimilarityProvider& provider,
                                  double threshold, std::size_t threads = 1);

struct NoiseConfig {
  double substitution_rate = 0.0;
  double deletion_rate = 0.0;
  double insertion_rate = 0.0;
  /// word -> acoustically confusable alternatives, preferred for substitutions.
  std::map<std::string, std::vector<std::string>> homophones;
  std::uint64_t seed = 1;

  void validate() const;
  static NoiseConfig from_json(const nlohmann::json& obj);
  nlohmann::json to_json() const;
};

/// Per-token decision counts realised by generate_synthetic.
struct SyntheticStats {
  std::size_t tokens = 0;
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
};

/// Produces n (corrupted, reference) pairs cycling through `references`.
/// Each reference token independently gets substituted, deleted, followed
/// by an inserted word, or kept. Replacement words come from the homophone
/// table when it has an entry, otherwise from the references' vocabulary.
std::vector<SampleRecord> generate_synthetic(std::span<const std::string> references,
                                             const NoiseConfig& noise, std::size_t n,
                                             SyntheticStats* stats = nullptr);

/// Shuffles with `seed`, then assigns contiguous train/valid/test blocks of
/// round(n * ratio) records (test takes the remainder).
std::vector<SampleRecord> split_dataset(std::vector<SampleRecord> samples,
                                        std::array<double, 3> ratios, std::uint64_t seed);

struct HomophoneCorpusConfig {
  std::size_t size = 2000;
  std::uint64_t seed = 7;
  std::size_t min_words = 4;
  std::size_t max_words = 6;
  std::size_t feature_dim = similarity::kDefaultHashBuckets;
};

struct HomophoneCorpus {
  std::vector<SampleRecord> samples;
  fusion::FeatureTable features;
  NoiseConfig noise;
};

/// Caption-resolvable correction corpus. Every reference holds one word from
/// a three-way confusion set; the source swaps it for one of the other two
/// members, so text alone leaves a coin flip. The caption names the correct
/// word and the image feature is the caption's normalized hashed
/// bag-of-words.
HomophoneCorpus build_homophone_caption_corpus(const HomophoneCorpusConfig& cfg);

/// Vocabulary lines (sources, references, captions) of a record set.
std::vector<std::string> corpus_lines(std::span<const SampleRecord> samples);

}  // namespace vasr::dataset
