#include <gtest/gtest.h>

#include <map>

#include "vasr/autograd/random.hpp"
#include "vasr/metrics/wer.hpp"

namespace vasr::metrics {
namespace {

using Words = std::vector<std::string>;

// Memoized recursion over suffixes: (total edits, insertions + deletions),
// compared lexicographically.
struct BruteForce {
  const Words& hyp;
  const Words& ref;
  std::map<std::pair<std::size_t, std::size_t>, std::pair<std::size_t, std::size_t>> memo;

  std::pair<std::size_t, std::size_t> cost(std::size_t i, std::size_t j) {
    if (i == hyp.size()) return {ref.size() - j, ref.size() - j};
    if (j == ref.size()) return {hyp.size() - i, hyp.size() - i};
    if (auto it = memo.find({i, j}); it != memo.end()) return it->second;
    auto best = cost(i + 1, j);  // insertion
    best = {best.first + 1, best.second + 1};
    auto del = cost(i, j + 1);
    best = std::min(best, {del.first + 1, del.second + 1});
    auto diag = cost(i + 1, j + 1);
    if (hyp[i] != ref[j]) diag.first += 1;
    best = std::min(best, diag);
    memo[{i, j}] = best;
    return best;
  }
};

Words random_words(Rng& rng, std::size_t max_len, std::size_t alphabet) {
  Words w(rng.below(max_len + 1));
  for (auto& x : w) x = std::string(1, static_cast<char>('a' + rng.below(alphabet)));
  return w;
}

TEST(WordEditDistanceTest, Examples) {
  EXPECT_EQ(word_edit_distance("a b c", "a b c"), (EditCounts{0, 0, 0}));
  EXPECT_EQ(word_edit_distance("a b", "a c"), (EditCounts{1, 0, 0}));
  EXPECT_EQ(word_edit_distance("", "a b"), (EditCounts{0, 2, 0}));
  EXPECT_EQ(word_edit_distance("a b", ""), (EditCounts{0, 0, 2}));
  EXPECT_EQ(word_edit_distance("A  B", "a b"), (EditCounts{0, 0, 0}));
}

TEST(WordEditDistanceTest, MatchesBruteForceOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto hyp = random_words(rng, 8, 5);
    const auto ref = random_words(rng, 8, 5);
    BruteForce oracle{hyp, ref, {}};
    const auto [total, indel] = oracle.cost(0, 0);
    const auto counts = align_words(hyp, ref).counts;
    ASSERT_EQ(counts.total(), total);
    ASSERT_EQ(counts.deletions + counts.insertions, indel);
    ASSERT_EQ(ref.size() - counts.deletions + counts.insertions, hyp.size());
  }
}

TEST(WordEditDistanceTest, SwappingRolesExchangesDeletionsAndInsertions) {
  Rng rng(2);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_words(rng, 8, 4);
    const auto b = random_words(rng, 8, 4);
    const auto ab = align_words(a, b).counts;
    const auto ba = align_words(b, a).counts;
    EXPECT_EQ(ab.substitutions, ba.substitutions);
    EXPECT_EQ(ab.deletions, ba.insertions);
    EXPECT_EQ(ab.insertions, ba.deletions);
  }
}

TEST(WordEditDistanceTest, TriangleInequality) {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const auto a = random_words(rng, 7, 4);
    const auto b = random_words(rng, 7, 4);
    const auto c = random_words(rng, 7, 4);
    EXPECT_LE(align_words(a, c).counts.total(),
              align_words(a, b).counts.total() + align_words(b, c).counts.total());
  }
}

TEST(AlignWordsTest, OpsAreConsistentWithCounts) {
  const Words hyp{"a", "quick", "brown", "fox", "jumps"};
  const Words ref{"the", "quick", "brown", "fox"};
  const auto al = align_words(hyp, ref);
  EXPECT_EQ(al.ops, (std::vector<EditOp>{EditOp::kSubstitute, EditOp::kMatch, EditOp::kMatch,
                                         EditOp::kMatch, EditOp::kInsert}));
  EXPECT_EQ(al.counts, (EditCounts{1, 0, 1}));
}

TEST(CorpusEvalTest, AllExactIsZero) {
  const std::vector<EvalPair> pairs{{"1", "a b", "a b"}, {"2", "c", "C"}};
  const auto r = corpus_eval(pairs);
  EXPECT_EQ(r.wer_percent, 0.0);
  EXPECT_EQ(r.ser_percent, 0.0);
}

TEST(CorpusEvalTest, SinglePairExample) {
  const std::vector<EvalPair> pairs{{"1", "a b", "a c"}};
  const auto r = corpus_eval(pairs);
  EXPECT_DOUBLE_EQ(r.wer_percent, 50.0);
  EXPECT_DOUBLE_EQ(r.ser_percent, 100.0);
}

TEST(CorpusEvalTest, HandWorkedFixture) {
  // 1: one deletion ("the"); 2: a->the substitution plus inserted "jumps";
  // 3: exact. Edits 3 over 12 reference words; 2 of 3 sentences wrong.
  const std::vector<EvalPair> pairs{
      {"s1", "the cat sat on mat", "the cat sat on the mat"},
      {"s2", "a quick brown fox jumps", "the quick brown fox"},
      {"s3", "hello world", "hello world"},
  };
  const auto r = corpus_eval(pairs);
  EXPECT_EQ(r.totals, (EditCounts{1, 1, 1}));
  EXPECT_EQ(r.ref_word_count, 12u);
  EXPECT_EQ(r.error_sentences, 2u);
  EXPECT_DOUBLE_EQ(r.wer_percent, 25.0);
  EXPECT_DOUBLE_EQ(r.ser_percent, 200.0 / 3.0);
  ASSERT_EQ(r.sentences.size(), 3u);
  EXPECT_EQ(r.sentences[0].edits, (EditCounts{0, 1, 0}));
  EXPECT_EQ(r.sentences[1].edits, (EditCounts{1, 0, 1}));
  EXPECT_TRUE(r.sentences[2].exact_match);
  EXPECT_EQ(r.sentences[1].id, "s2");
}

TEST(CorpusEvalTest, WerIsEditTotalNotMeanOfSentenceRates) {
  const std::vector<EvalPair> pairs{{"1", "x", "a"}, {"2", "a b c d", "a b c d"}};
  const auto r = corpus_eval(pairs);
  EXPECT_DOUBLE_EQ(r.wer_percent, 100.0 * 1 / 5);  // the sentence mean would be 50
}

TEST(CorpusEvalTest, EveryHypothesisWrongGivesFullSer) {
  const std::vector<EvalPair> pairs{{"1", "a", "b"}, {"2", "a b", "a"}, {"3", "", "c"}};
  EXPECT_DOUBLE_EQ(corpus_eval(pairs).ser_percent, 100.0);
}

TEST(CorpusEvalTest, RejectsDegenerateInput) {
  EXPECT_THROW(corpus_eval(std::span<const EvalPair>{}), std::invalid_argument);
  const std::vector<EvalPair> empty_refs{{"1", "a", ""}};
  EXPECT_THROW(corpus_eval(empty_refs), std::invalid_argument);
}

TEST(CorpusEvalTest, JsonReportCarriesFields) {
  const std::vector<EvalPair> pairs{{"1", "a b", "a c"}};
  const auto j = to_json(corpus_eval(pairs));
  EXPECT_DOUBLE_EQ(j.at("wer_percent").get<double>(), 50.0);
  EXPECT_DOUBLE_EQ(j.at("ser_percent").get<double>(), 100.0);
  EXPECT_TRUE(j.contains("normalization"));
  EXPECT_EQ(j.at("sentences").size(), 1u);
  EXPECT_EQ(j.at("sentences")[0].at("substitutions").get<int>(), 1);
  EXPECT_NE(format_summary(corpus_eval(pairs)).find("50.00"), std::string::npos);
}

}  // namespace
}  // namespace vasr::metrics
