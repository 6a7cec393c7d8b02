#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

#include "vasr/prompting/prompt.hpp"

namespace vasr::prompting {
namespace {

using dataset::SampleRecord;

std::vector<SampleRecord> make_samples(std::size_t n) {
  std::vector<SampleRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    SampleRecord r;
    r.id = "s" + std::to_string(i);
    r.source = "source " + std::to_string(i);
    r.reference = "reference " + std::to_string(i);
    r.caption = "caption " + std::to_string(i);
    r.image_feature_id = "img" + std::to_string(i);
    r.start_time = static_cast<double>(i);
    r.end_time = static_cast<double>(i) + 1.5;
    out.push_back(r);
  }
  return out;
}

TEST(BuildPromptedSourceTest, WorkedExample) {
  EXPECT_EQ(build_prompted_source("the tortoise is being cared for",
                                  "thats really how we choose our tourist it for today"),
            "the tortoise is being cared for [SEP] thats really how we choose our tourist it for "
            "today");
}

TEST(BuildPromptedSourceTest, BlankCaptionPassesThrough) {
  EXPECT_EQ(build_prompted_source("", "hello"), "hello");
  EXPECT_EQ(build_prompted_source("   ", "hello"), "hello");
  EXPECT_THROW(build_prompted_source("caption", ""), std::invalid_argument);
}

TEST(BuildPromptedSourceTest, SplitInvertsConstruction) {
  const auto p = build_prompted_source("a green plant", "if you plan a little bit");
  const auto parts = split_prompted_source(p);
  ASSERT_TRUE(parts.has_value());
  EXPECT_EQ(parts->first, "a green plant");
  EXPECT_EQ(parts->second, "if you plan a little bit");
  EXPECT_FALSE(split_prompted_source("no delimiter here").has_value());
  // Distinct (caption, source) pairs give distinct prompts.
  EXPECT_NE(build_prompted_source("a b", "c"), build_prompted_source("a", "b c"));
}

TEST(PromptedSourceTest, UsesRecordCaption) {
  auto s = make_samples(1)[0];
  EXPECT_EQ(prompted_source(s), "caption 0 [SEP] source 0");
  s.caption.clear();
  EXPECT_EQ(prompted_source(s), "source 0");
}

TEST(RandomCaptionsTest, TwoSamplesSwap) {
  const auto in = make_samples(2);
  const auto out = assign_random_captions(in, 5);
  EXPECT_EQ(out[0].caption, in[1].caption);
  EXPECT_EQ(out[1].caption, in[0].caption);
}

TEST(RandomCaptionsTest, OtherFieldsUntouchedAndMultisetPreserved) {
  const auto in = make_samples(50);
  const auto out = assign_random_captions(in, 9);
  std::multiset<std::string> before, after;
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto restored = out[i];
    restored.caption = in[i].caption;
    EXPECT_EQ(restored, in[i]);
    EXPECT_NE(out[i].caption, in[i].caption);
    before.insert(in[i].caption);
    after.insert(out[i].caption);
  }
  EXPECT_EQ(before, after);
}

TEST(RandomCaptionsTest, SeedDetermined) {
  const auto in = make_samples(30);
  EXPECT_EQ(assign_random_captions(in, 4), assign_random_captions(in, 4));
  EXPECT_NE(assign_random_captions(in, 4), assign_random_captions(in, 5));
  EXPECT_THROW(assign_random_captions(make_samples(1), 1), std::invalid_argument);
  EXPECT_THROW(random_derangement(1, 1), std::invalid_argument);
}

std::set<std::vector<std::size_t>> all_derangements(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  std::set<std::vector<std::size_t>> out;
  do {
    bool fixed = false;
    for (std::size_t i = 0; i < n; ++i) fixed |= p[i] == i;
    if (!fixed) out.insert(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

TEST(RandomDerangementTest, ExhaustiveAgainstEnumeration) {
  const std::map<std::size_t, std::size_t> subfactorial{{2, 1}, {3, 2}, {4, 9}, {5, 44}, {6, 265}, {7, 1854}};
  for (std::size_t n = 2; n <= 7; ++n) {
    const auto valid = all_derangements(n);
    ASSERT_EQ(valid.size(), subfactorial.at(n));
    std::set<std::vector<std::size_t>> seen;
    for (std::uint64_t seed = 0; seed < 20 * valid.size(); ++seed) {
      const auto d = random_derangement(n, seed);
      ASSERT_TRUE(valid.contains(d)) << "n=" << n << " seed=" << seed;
      seen.insert(d);
    }
    // Small n: every derangement is reachable.
    if (n <= 5) EXPECT_EQ(seen.size(), valid.size()) << "n=" << n;
  }
}

TEST(RandomDerangementTest, RoughlyUniformForFour) {
  std::map<std::vector<std::size_t>, int> counts;
  const int draws = 9000;
  for (int seed = 0; seed < draws; ++seed) ++counts[random_derangement(4, seed)];
  ASSERT_EQ(counts.size(), 9u);
  double chi2 = 0;
  for (const auto& [perm, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  EXPECT_LT(chi2, 26.1);  // 8 degrees of freedom, p = 0.001
}

}  // namespace
}  // namespace vasr::prompting
