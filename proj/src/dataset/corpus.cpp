#include "vasr/dataset/corpus.hpp"

#include <cmath>
#include <set>
#include <stdexcept>
#include <thread>

#include "vasr/autograd/random.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::dataset {
namespace {

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

std::string numbered(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%06zu", prefix, i);
  return buf;
}

}  // namespace

double frame_midpoint(double start, double end) {
  if (end < start) {
    throw std::invalid_argument("frame_midpoint: end " + std::to_string(end) +
                                " precedes start " + std::to_string(start));
  }
  return (start + end) / 2.0;
}

FilterResult filter_by_similarity(std::span<const SampleRecord> samples,
                                  const similarity::SimilarityProvider& provider,
                                  double threshold, std::size_t threads) {
  std::vector<std::uint8_t> keep(samples.size(), 1);
  auto score_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& s = samples[i];
      if (s.origin == Origin::kSynthetic) continue;
      keep[i] = provider.score_text_text(s.caption, s.reference) > threshold;
    }
  };
  threads = std::max<std::size_t>(1, std::min(threads, samples.size()));
  if (threads == 1) {
    score_range(0, samples.size());
  } else {
    std::vector<std::jthread> workers;
    const std::size_t chunk = (samples.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t begin = t * chunk;
      const std::size_t end = std::min(samples.size(), begin + chunk);
      if (begin < end) workers.emplace_back(score_range, begin, end);
    }
  }
  FilterResult out;
  for (std::size_t i = 0; i < samples.size(); ++i)
    (keep[i] ? out.kept : out.dropped).push_back(samples[i]);
  return out;
}

void NoiseConfig::validate() const {
  for (double r : {substitution_rate, deletion_rate, insertion_rate}) {
    if (!(r >= 0.0 && r <= 1.0)) {
      throw std::invalid_argument("noise rates must lie in [0, 1]");
    }
  }
  if (substitution_rate + deletion_rate + insertion_rate > 1.0 + 1e-12) {
    throw std::invalid_argument("noise rates must sum to at most 1");
  }
}

NoiseConfig NoiseConfig::from_json(const nlohmann::json& obj) {
  NoiseConfig c;
  c.substitution_rate = obj.value("substitution_rate", 0.0);
  c.deletion_rate = obj.value("deletion_rate", 0.0);
  c.insertion_rate = obj.value("insertion_rate", 0.0);
  c.seed = obj.value("seed", std::uint64_t{1});
  if (obj.contains("homophones")) {
    c.homophones = obj.at("homophones").get<std::map<std::string, std::vector<std::string>>>();
  }
  c.validate();
  return c;
}

nlohmann::json NoiseConfig::to_json() const {
  return {{"substitution_rate", substitution_rate},
          {"deletion_rate", deletion_rate},
          {"insertion_rate", insertion_rate},
          {"homophones", homophones},
          {"seed", seed}};
}

std::vector<SampleRecord> generate_synthetic(std::span<const std::string> references,
                                             const NoiseConfig& noise, std::size_t n,
                                             SyntheticStats* stats) {
  if (references.empty()) throw std::invalid_argument("generate_synthetic: no references");
  noise.validate();
  std::set<std::string> vocab_set;
  for (const auto& r : references)
    for (auto& w : text::split_words(r)) vocab_set.insert(w);
  const std::vector<std::string> vocab(vocab_set.begin(), vocab_set.end());

  Rng rng(noise.seed);
  SyntheticStats local;
  auto random_word = [&](const std::string& avoid) {
    if (vocab.size() < 2) return vocab.empty() ? avoid : vocab.front();
    std::string w;
    do {
      w = vocab[rng.below(vocab.size())];
    } while (w == avoid);
    return w;
  };

  std::vector<SampleRecord> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::string& reference = references[i % references.size()];
    std::vector<std::string> corrupted;
    for (const auto& tok : text::split_words(reference)) {
      ++local.tokens;
      const double u = rng.uniform();
      if (u < noise.substitution_rate) {
        ++local.substitutions;
        const auto it = noise.homophones.find(tok);
        if (it != noise.homophones.end() && !it->second.empty()) {
          corrupted.push_back(it->second[rng.below(it->second.size())]);
        } else {
          corrupted.push_back(random_word(tok));
        }
      } else if (u < noise.substitution_rate + noise.deletion_rate) {
        ++local.deletions;
      } else if (u < noise.substitution_rate + noise.deletion_rate + noise.insertion_rate) {
        ++local.insertions;
        corrupted.push_back(tok);
        corrupted.push_back(random_word(""));
      } else {
        corrupted.push_back(tok);
      }
    }
    SampleRecord rec;
    rec.id = numbered("syn", i);
    rec.source = join(corrupted);
    rec.reference = text::normalize(reference);
    rec.origin = Origin::kSynthetic;
    rec.split = Split::kTrain;
    out.push_back(std::move(rec));
  }
  if (stats) *stats = local;
  return out;
}

std::vector<SampleRecord> split_dataset(std::vector<SampleRecord> samples,
                                        std::array<double, 3> ratios, std::uint64_t seed) {
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw std::invalid_argument("split ratios must be non-negative");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("split ratios must sum to 1");
  }
  Rng rng(seed);
  rng.shuffle(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const auto n_train = std::min(n, static_cast<std::size_t>(std::llround(n * ratios[0])));
  const auto n_valid =
      std::min(n - n_train, static_cast<std::size_t>(std::llround(n * ratios[1])));
  for (std::size_t i = 0; i < n; ++i) {
    samples[i].split = i < n_train             ? Split::kTrain
                       : i < n_train + n_valid ? Split::kValid
                                               : Split::kTest;
  }
  return samples;
}

HomophoneCorpus build_homophone_caption_corpus(const HomophoneCorpusConfig& cfg) {
  static const std::vector<std::array<const char*, 3>> kConfusions = {
      {"plan", "plant", "planned"}, {"flour", "flower", "floor"},
      {"sea", "see", "seed"},       {"right", "write", "rite"},
      {"bear", "bare", "beer"},     {"pair", "pear", "pare"},
      {"sail", "sale", "scale"},    {"night", "knight", "kite"},
      {"mail", "male", "meal"},     {"tourist", "tortoise", "torch"},
  };
  static const std::vector<const char*> kFiller = {
      "if",    "you",  "a",     "little", "bit",  "we",    "just", "then",
      "this",  "that", "really", "how",   "our",  "today", "going", "to",
      "now",   "so",   "they",  "here",   "look", "take",  "make", "good",
  };
  static const std::vector<const char*> kCaptionWords = {
      "person", "holding", "showing", "with",   "near",    "the",
      "woman",  "man",     "table",   "outdoor", "closeup", "green",
  };
  if (cfg.min_words < 1 || cfg.max_words < cfg.min_words) {
    throw std::invalid_argument("homophone corpus: bad sentence length range");
  }

  HomophoneCorpus corpus{{}, fusion::FeatureTable(static_cast<std::uint32_t>(cfg.feature_dim)),
                         {}};
  corpus.noise.substitution_rate = 1.0;
  corpus.noise.seed = cfg.seed;
  for (const auto& group : kConfusions) {
    for (std::size_t a = 0; a < 3; ++a) {
      auto& alts = corpus.noise.homophones[group[a]];
      for (std::size_t b = 0; b < 3; ++b)
        if (a != b) alts.emplace_back(group[b]);
    }
  }

  Rng rng(cfg.seed);
  for (std::size_t i = 0; i < cfg.size; ++i) {
    const auto& group = kConfusions[rng.below(kConfusions.size())];
    const std::string correct = group[rng.below(3)];
    const auto& alts = corpus.noise.homophones.at(correct);
    const std::string heard = alts[rng.below(alts.size())];

    const std::size_t words = cfg.min_words + rng.below(cfg.max_words - cfg.min_words + 1);
    const std::size_t slot = rng.below(words);
    std::vector<std::string> reference, source;
    for (std::size_t w = 0; w < words; ++w) {
      if (w == slot) {
        reference.push_back(correct);
        source.push_back(heard);
      } else {
        const std::string filler = kFiller[rng.below(kFiller.size())];
        reference.push_back(filler);
        source.push_back(filler);
      }
    }
    std::vector<std::string> caption;
    const std::size_t cap_words = 2 + rng.below(2);
    const std::size_t cap_slot = rng.below(cap_words + 1);
    for (std::size_t w = 0; w <= cap_words; ++w) {
      caption.push_back(w == cap_slot ? correct : kCaptionWords[rng.below(kCaptionWords.size())]);
    }

    SampleRecord rec;
    rec.id = numbered("hc", i);
    rec.source = join(source);
    rec.reference = join(reference);
    rec.caption = join(caption);
    rec.image_feature_id = numbered("img", i);
    rec.start_time = 5.0 * static_cast<double>(i);
    rec.end_time = rec.start_time + 1.0 + static_cast<double>(rng.below(40)) / 10.0;
    rec.origin = Origin::kAnnotated;

    auto feature = similarity::hashed_bag_of_words(rec.caption, cfg.feature_dim);
    double norm = 0.0;
    for (double v : feature) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : feature) v /= norm;
    corpus.features.add({std::move(feature), rec.image_feature_id});
    corpus.samples.push_back(std::move(rec));
  }
  return corpus;
}

std::vector<std::string> corpus_lines(std::span<const SampleRecord> samples) {
  std::vector<std::string> lines;
  lines.reserve(samples.size() * 3);
  for (const auto& s : samples) {
    lines.push_back(s.source);
    lines.push_back(s.reference);
    if (!s.caption.empty()) lines.push_back(s.caption);
  }
  return lines;
}

}  // namespace vasr::dataset
