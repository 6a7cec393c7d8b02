#pragma once

#include <vector>

#include "vasr/model/transformer.hpp"

namespace vasr::model {

struct DecodeConfig {
  enum class Strategy { kGreedy, kBeam };

  Strategy strategy = Strategy::kBeam;
  std::size_t beam_size = 4;
  std::size_t max_decode_len = 64;
  /// Final ranking uses log_prob / length^length_penalty.
  double length_penalty = 1.0;

  void validate() const;
};

struct Hypothesis {
  /// Generated tokens, without BOS and without the closing EOS.
  text::TokenSequence tokens;
  double log_prob = 0.0;
  /// Length-normalized log_prob used for ranking.
  double score = 0.0;
  /// False when decoding stopped at max_decode_len without EOS.
  bool finished = false;
};

/// Decodes src (carrying BOS/EOS) with the configured strategy. Beam search
/// keeps the best beam_size expansions per step, retires hypotheses that emit
/// EOS, and returns the best-scoring one; equal scores go to the
/// lexicographically smaller token sequence. beam_size 1 equals greedy; for
/// wider beams the greedy hypothesis also competes in the final ranking, so
/// widening the beam never lowers the returned score. Decoding stops at
/// max_decode_len or the model's max_len - 1, whichever is smaller.
Hypothesis generate(const EncoderDecoderModel& model, const text::TokenSequence& src,
                    const DecodeConfig& cfg, const fusion::ImageFeature* image = nullptr);

/// Length-normalized log-probability the model assigns to `tokens` (followed
/// by EOS when `finished`), matching Hypothesis::score.
double score_sequence(const EncoderDecoderModel& model, const text::TokenSequence& src,
                      const text::TokenSequence& tokens, bool finished,
                      const DecodeConfig& cfg, const fusion::ImageFeature* image = nullptr);

}  // namespace vasr::model
