#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "vasr/autograd/random.hpp"
#include "vasr/similarity/provider.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::similarity {
namespace {

std::size_t bucket(std::string_view token) { return token_hash(token) % kDefaultHashBuckets; }

TEST(CosineTest, Examples) {
  const std::vector<double> v{0.3, -2.0, 5.0};
  EXPECT_NEAR(cosine(v, v), 1.0, 1e-15);
  EXPECT_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  EXPECT_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}), 0.0);
  EXPECT_THROW(cosine(std::vector<double>{1}, std::vector<double>{1, 2}), std::invalid_argument);
}

TEST(CosineTest, MatchesDirectFormula) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(16), b(16);
    for (auto& x : a) x = rng.normal();
    for (auto& x : b) x = rng.normal();
    double dot = 0, na = 0, nb = 0;
    for (int i = 0; i < 16; ++i) {
      dot += a[i] * b[i];
      na += a[i] * a[i];
      nb += b[i] * b[i];
    }
    EXPECT_NEAR(cosine(a, b), dot / (std::sqrt(na) * std::sqrt(nb)), 1e-12);
  }
}

TEST(TokenHashTest, KnownFnv1aValues) {
  EXPECT_EQ(token_hash(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(token_hash("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(token_hash("foobar"), 0x85944171f73967e8ULL);
}

TEST(HashedBagOfWordsTest, CountsTokensAfterNormalization) {
  const auto v = hashed_bag_of_words("The the  cat");
  EXPECT_EQ(v.size(), kDefaultHashBuckets);
  EXPECT_EQ(v[bucket("the")], 2.0);
  EXPECT_EQ(v[bucket("cat")], 1.0);
  double total = 0;
  for (double x : v) total += x;
  EXPECT_EQ(total, 3.0);
}

TEST(CosineEmbeddingProviderTest, FixtureScores) {
  // The fixture words must land in distinct buckets for exact values.
  const std::set<std::size_t> buckets{bucket("a"), bucket("b"), bucket("c"), bucket("d")};
  ASSERT_EQ(buckets.size(), 4u);
  const CosineEmbeddingProvider p;
  EXPECT_NEAR(p.score_text_text("a b c", "a b d"), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(p.score_text_text("a b", "c d"), 0.0);
  EXPECT_EQ(p.score_text_text("a b c", "a b c"), 1.0);
  EXPECT_EQ(p.score_text_text("A  b c ", "a B c"), 1.0);
}

TEST(CosineEmbeddingProviderTest, SymmetricBoundedAndSelfMaximal) {
  const CosineEmbeddingProvider p;
  Rng rng(2);
  const std::vector<std::string> words{"plan", "plant", "flower", "floor", "sea", "see", "a", "the"};
  auto sentence = [&] {
    std::string s;
    for (std::uint64_t i = 0, n = 1 + rng.below(5); i < n; ++i) s += words[rng.below(words.size())] + " ";
    return s;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = sentence(), b = sentence();
    const double ab = p.score_text_text(a, b);
    EXPECT_EQ(ab, p.score_text_text(b, a));
    EXPECT_GE(ab, -1.0);
    EXPECT_LE(ab, p.score_text_text(a, a));
    EXPECT_EQ(p.score_text_text(a, a), 1.0);
  }
}

TEST(CosineEmbeddingProviderTest, TableLookupWithHashedFallback) {
  fusion::FeatureTable table(4);
  table.add({{1, 0, 0, 0}, "a cat"});
  table.add({{0, 1, 0, 0}, "a dog"});
  table.add({{1, 1, 0, 0}, "pets"});
  const CosineEmbeddingProvider p(table);
  EXPECT_EQ(p.dim(), 4u);
  EXPECT_EQ(p.embed("A  Cat"), (std::vector<double>{1, 0, 0, 0}));
  EXPECT_EQ(p.score_text_text("a cat", "a dog"), 0.0);
  EXPECT_NEAR(p.score_text_text("a cat", "pets"), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(p.embed("unseen words").size(), 4u);

  const fusion::ImageFeature img{{0, 2, 0, 0}, "img"};
  EXPECT_NEAR(p.score_image_text(img, "a dog"), 1.0, 1e-15);
  EXPECT_EQ(p.score_image_text(img, "a cat"), 0.0);
  EXPECT_THROW(p.score_image_text({{1, 2}, "bad"}, "a cat"), std::invalid_argument);
}

TEST(CosineEmbeddingProviderTest, ImageTextFallsBackToHashedEmbedding) {
  const CosineEmbeddingProvider p;
  auto feat = hashed_bag_of_words("green plant");
  EXPECT_NEAR(p.score_image_text({feat, "img"}, "plant green"), 1.0, 1e-15);
}

}  // namespace
}  // namespace vasr::similarity
