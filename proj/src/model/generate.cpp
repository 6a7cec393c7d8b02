#include "vasr/model/generate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace vasr::model {
namespace {

std::vector<double> next_log_probs(const EncoderDecoderModel& model, Tape& tape,
                                   const Tensor& memory,
                                   std::span<const text::TokenId> src_ids,
                                   std::span<const text::TokenId> prefix) {
  const Tensor logits = model.decode_logits({tape}, memory, src_ids, prefix);
  const std::size_t v = logits.cols();
  const auto row = logits.values().subspan((logits.rows() - 1) * v, v);
  const double max = *std::max_element(row.begin(), row.end());
  double z = 0.0;
  for (double x : row) z += std::exp(x - max);
  const double log_z = max + std::log(z);
  std::vector<double> out(v);
  for (std::size_t i = 0; i < v; ++i) out[i] = row[i] - log_z;
  return out;
}

double normalized(double log_prob, std::size_t length, double penalty) {
  const double len = static_cast<double>(std::max<std::size_t>(length, 1));
  return log_prob / std::pow(len, penalty);
}

struct Beam {
  std::vector<text::TokenId> tokens;
  double log_prob = 0.0;
};

// Higher score first; equal scores prefer the lexicographically smaller ids.
bool ranks_before(double score_a, const std::vector<text::TokenId>& a, double score_b,
                  const std::vector<text::TokenId>& b) {
  if (score_a != score_b) return score_a > score_b;
  return a < b;
}

Hypothesis make_hypothesis(std::vector<text::TokenId> tokens, double log_prob,
                           bool finished, double penalty) {
  Hypothesis h;
  h.score = normalized(log_prob, tokens.size() + (finished ? 1 : 0), penalty);
  h.tokens.ids = std::move(tokens);
  h.log_prob = log_prob;
  h.finished = finished;
  return h;
}

Hypothesis greedy(const EncoderDecoderModel& model, Tape& tape, const Tensor& memory,
                  std::span<const text::TokenId> src_ids, const DecodeConfig& cfg) {
  std::vector<text::TokenId> prefix{text::kBos};
  double log_prob = 0.0;
  while (prefix.size() - 1 < cfg.max_decode_len) {
    const auto lp = next_log_probs(model, tape, memory, src_ids, prefix);
    const auto best = static_cast<text::TokenId>(
        std::max_element(lp.begin(), lp.end()) - lp.begin());
    log_prob += lp[best];
    if (best == text::kEos) {
      return make_hypothesis({prefix.begin() + 1, prefix.end()}, log_prob, true,
                             cfg.length_penalty);
    }
    prefix.push_back(best);
  }
  return make_hypothesis({prefix.begin() + 1, prefix.end()}, log_prob, false,
                         cfg.length_penalty);
}

Hypothesis beam_search(const EncoderDecoderModel& model, Tape& tape,
                       const Tensor& memory, std::span<const text::TokenId> src_ids,
                       const DecodeConfig& cfg) {
  std::vector<Beam> alive{Beam{}};
  std::vector<Hypothesis> done;
  for (std::size_t step = 0; step < cfg.max_decode_len && !alive.empty(); ++step) {
    struct Candidate {
      std::vector<text::TokenId> tokens;
      double log_prob;
    };
    std::vector<Candidate> candidates;
    for (const auto& beam : alive) {
      std::vector<text::TokenId> prefix{text::kBos};
      prefix.insert(prefix.end(), beam.tokens.begin(), beam.tokens.end());
      const auto lp = next_log_probs(model, tape, memory, src_ids, prefix);
      for (std::size_t tok = 0; tok < lp.size(); ++tok) {
        Candidate c{beam.tokens, beam.log_prob + lp[tok]};
        c.tokens.push_back(static_cast<text::TokenId>(tok));
        candidates.push_back(std::move(c));
      }
    }
    const std::size_t keep = std::min(cfg.beam_size, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + keep, candidates.end(),
                      [](const Candidate& a, const Candidate& b) {
                        return ranks_before(a.log_prob, a.tokens, b.log_prob, b.tokens);
                      });
    alive.clear();
    for (std::size_t i = 0; i < keep; ++i) {
      auto& c = candidates[i];
      if (c.tokens.back() == text::kEos) {
        c.tokens.pop_back();
        done.push_back(make_hypothesis(std::move(c.tokens), c.log_prob, true,
                                       cfg.length_penalty));
      } else {
        alive.push_back({std::move(c.tokens), c.log_prob});
      }
    }
  }
  for (auto& beam : alive) {
    done.push_back(make_hypothesis(std::move(beam.tokens), beam.log_prob, false,
                                   cfg.length_penalty));
  }
  return *std::min_element(done.begin(), done.end(),
                           [](const Hypothesis& a, const Hypothesis& b) {
                             return ranks_before(a.score, a.tokens.ids, b.score,
                                                 b.tokens.ids);
                           });
}

}  // namespace

void DecodeConfig::validate() const {
  if (beam_size < 1) throw std::invalid_argument("decode config: beam_size must be >= 1");
  if (max_decode_len < 1) {
    throw std::invalid_argument("decode config: max_decode_len must be >= 1");
  }
}

Hypothesis generate(const EncoderDecoderModel& model, const text::TokenSequence& src,
                    const DecodeConfig& cfg, const fusion::ImageFeature* image) {
  cfg.validate();
  // The decoder input (BOS + tokens) must fit the position table.
  DecodeConfig capped = cfg;
  capped.max_decode_len = std::min(cfg.max_decode_len, model.config().max_len - 1);
  Tape tape(/*recording=*/false);
  const Tensor memory = model.memory({tape}, src, image);
  if (capped.strategy == DecodeConfig::Strategy::kGreedy) {
    return greedy(model, tape, memory, src.ids, capped);
  }
  // Pruning on raw log-prob can drop the greedy path even when its
  // length-normalized score would win, so it competes in the final ranking.
  auto best = beam_search(model, tape, memory, src.ids, capped);
  if (capped.beam_size == 1) return best;
  auto g = greedy(model, tape, memory, src.ids, capped);
  return ranks_before(g.score, g.tokens.ids, best.score, best.tokens.ids) ? g : best;
}

double score_sequence(const EncoderDecoderModel& model, const text::TokenSequence& src,
                      const text::TokenSequence& tokens, bool finished,
                      const DecodeConfig& cfg, const fusion::ImageFeature* image) {
  Tape tape(/*recording=*/false);
  const Tensor memory = model.memory({tape}, src, image);
  std::vector<text::TokenId> prefix{text::kBos};
  prefix.insert(prefix.end(), tokens.ids.begin(), tokens.ids.end());
  std::vector<text::TokenId> targets(tokens.ids.begin(), tokens.ids.end());
  if (finished) {
    targets.push_back(text::kEos);
  } else {
    prefix.pop_back();
  }
  if (targets.empty()) return 0.0;
  const Tensor logits = model.decode_logits({tape}, memory, src.ids, prefix);
  const std::size_t v = logits.cols();
  double log_prob = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const auto row = logits.values().subspan(i * v, v);
    const double max = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double x : row) z += std::exp(x - max);
    log_prob += row[targets[i]] - (max + std::log(z));
  }
  return normalized(log_prob, targets.size(), cfg.length_penalty);
}

}  // namespace vasr::model
