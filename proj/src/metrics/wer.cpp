#include "vasr/metrics/wer.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "vasr/text/vocab.hpp"

namespace vasr::metrics {
namespace {

// (total edits, insertions + deletions), compared lexicographically.
using Cost = std::pair<std::size_t, std::size_t>;

Cost plus(Cost c, std::size_t total, std::size_t indel) {
  return {c.first + total, c.second + indel};
}

}  // namespace

Alignment align_words(std::span<const std::string> hyp, std::span<const std::string> ref) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cost> dp((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> Cost& { return dp[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = {i, i};
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = {j, j};
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      Cost best = plus(at(i - 1, j - 1), same ? 0 : 1, 0);
      best = std::min(best, plus(at(i - 1, j), 1, 1));
      best = std::min(best, plus(at(i, j - 1), 1, 1));
      at(i, j) = best;
    }
  }

  // Walk back from the end; taking substitutions last pushes them leftwards.
  Alignment out;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    const Cost here = at(i, j);
    if (i > 0 && j > 0 && ref[i - 1] == hyp[j - 1] && at(i - 1, j - 1) == here) {
      out.ops.push_back(EditOp::kMatch);
      --i, --j;
    } else if (i > 0 && plus(at(i - 1, j), 1, 1) == here) {
      out.ops.push_back(EditOp::kDelete);
      ++out.counts.deletions;
      --i;
    } else if (j > 0 && plus(at(i, j - 1), 1, 1) == here) {
      out.ops.push_back(EditOp::kInsert);
      ++out.counts.insertions;
      --j;
    } else {
      out.ops.push_back(EditOp::kSubstitute);
      ++out.counts.substitutions;
      --i, --j;
    }
  }
  std::reverse(out.ops.begin(), out.ops.end());
  return out;
}

EditCounts word_edit_distance(std::string_view hyp, std::string_view ref) {
  const auto h = text::split_words(hyp);
  const auto r = text::split_words(ref);
  return align_words(h, r).counts;
}

EvalReport corpus_eval(std::span<const EvalPair> pairs) {
  if (pairs.empty()) throw std::invalid_argument("corpus_eval: no sentence pairs");
  EvalReport report;
  report.sentences.reserve(pairs.size());
  for (const auto& p : pairs) {
    const auto h = text::split_words(p.hyp);
    const auto r = text::split_words(p.ref);
    SentenceScore s;
    s.id = p.id;
    s.edits = align_words(h, r).counts;
    s.ref_word_count = r.size();
    s.exact_match = h == r;
    report.totals.substitutions += s.edits.substitutions;
    report.totals.deletions += s.edits.deletions;
    report.totals.insertions += s.edits.insertions;
    report.ref_word_count += s.ref_word_count;
    report.error_sentences += s.exact_match ? 0 : 1;
    report.sentences.push_back(std::move(s));
  }
  if (report.ref_word_count == 0) {
    throw std::invalid_argument("corpus_eval: references contain no words");
  }
  report.wer_percent = 100.0 * static_cast<double>(report.totals.total()) /
                       static_cast<double>(report.ref_word_count);
  report.ser_percent = 100.0 * static_cast<double>(report.error_sentences) /
                       static_cast<double>(report.sentences.size());
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : report.sentences) {
    sentences.push_back({{"id", s.id},
                         {"substitutions", s.edits.substitutions},
                         {"deletions", s.edits.deletions},
                         {"insertions", s.edits.insertions},
                         {"ref_word_count", s.ref_word_count},
                         {"exact_match", s.exact_match}});
  }
  return {{"normalization", "lowercase+whitespace-collapse"},
          {"wer_percent", report.wer_percent},
          {"ser_percent", report.ser_percent},
          {"sentences_total", report.sentences.size()},
          {"sentences_in_error", report.error_sentences},
          {"ref_word_count", report.ref_word_count},
          {"substitutions", report.totals.substitutions},
          {"deletions", report.totals.deletions},
          {"insertions", report.totals.insertions},
          {"sentences", std::move(sentences)}};
}

std::string format_summary(const EvalReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "WER %.2f%%  SER %.2f%%  (S=%zu D=%zu I=%zu over %zu words, %zu/%zu "
                "sentences in error)",
                report.wer_percent, report.ser_percent, report.totals.substitutions,
                report.totals.deletions, report.totals.insertions, report.ref_word_count,
                report.error_sentences, report.sentences.size());
  return buf;
}

}  // namespace vasr::metrics
