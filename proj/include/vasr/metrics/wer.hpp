#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vasr::metrics {

struct EditCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;

  std::size_t total() const { return substitutions + deletions + insertions; }
  bool operator==(const EditCounts&) const = default;
};

enum class EditOp { kMatch, kSubstitute, kDelete, kInsert };

struct Alignment {
  std::vector<EditOp> ops;
  EditCounts counts;
};

/// Minimal word-level Levenshtein alignment of hyp against ref. Among
/// minimal alignments the one with fewer insertions + deletions wins; the
/// backtrace then places substitutions as far left as possible.
Alignment align_words(std::span<const std::string> hyp, std::span<const std::string> ref);

/// Normalizes both strings (lowercase, whitespace collapse) and aligns them.
EditCounts word_edit_distance(std::string_view hyp, std::string_view ref);

struct SentenceScore {
  std::string id;
  EditCounts edits;
  std::size_t ref_word_count = 0;
  bool exact_match = false;
};

struct EvalReport {
  std::vector<SentenceScore> sentences;
  EditCounts totals;
  std::size_t ref_word_count = 0;
  std::size_t error_sentences = 0;
  /// 100 * total edits / total reference words.
  double wer_percent = 0.0;
  /// 100 * sentences that are not an exact match / sentences.
  double ser_percent = 0.0;
};

struct EvalPair {
  std::string id;
  std::string hyp;
  std::string ref;
};

/// Corpus aggregates over per-sentence alignments. Throws on empty input or
/// when the references contain no words at all.
EvalReport corpus_eval(std::span<const EvalPair> pairs);

nlohmann::json to_json(const EvalReport& report);
/// Short plain-text summary for terminals and logs.
std::string format_summary(const EvalReport& report);

}  // namespace vasr::metrics
