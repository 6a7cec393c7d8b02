#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vasr::text {

using TokenId = std::int32_t;

inline constexpr TokenId kPad = 0;
inline constexpr TokenId kBos = 1;
inline constexpr TokenId kEos = 2;
inline constexpr TokenId kUnk = 3;
inline constexpr TokenId kSep = 4;
inline constexpr TokenId kNumReserved = 5;

inline constexpr std::string_view kPadToken = "<pad>";
inline constexpr std::string_view kBosToken = "<s>";
inline constexpr std::string_view kEosToken = "</s>";
inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kSepToken = "[SEP]";

/// Lowercases ASCII letters and collapses whitespace runs to single spaces,
/// trimming both ends.
std::string normalize(std::string_view text);

/// Whitespace split of normalize(text).
std::vector<std::string> split_words(std::string_view text);

/// Token <-> id map. Ids 0..4 are PAD, BOS, EOS, UNK, SEP; learned tokens
/// follow from id 5. Immutable once built.
class Vocabulary {
 public:
  Vocabulary();
  /// Learned tokens in id order (ids 5, 6, ...). Duplicates and reserved
  /// surface forms are rejected.
  explicit Vocabulary(std::vector<std::string> learned);

  /// UNK for tokens outside the vocabulary; "[SEP]" always maps to SEP.
  TokenId id(std::string_view token) const;
  bool contains(std::string_view token) const;
  /// Surface form; throws std::out_of_range for ids >= size().
  const std::string& token(TokenId id) const;
  std::size_t size() const { return tokens_.size(); }
  /// Tokens with ids >= 5.
  std::span<const std::string> learned() const;

  /// One token per line; line index = id - 5.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Whitespace-token vocabulary: tokens with count >= min_count, most frequent
/// first with lexicographic tie-break, at most max_size learned entries.
Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count,
                       std::size_t max_size);

struct TokenSequence {
  std::vector<TokenId> ids;

  /// Count of ids before the PAD suffix.
  std::size_t length() const;
  /// True when PAD only appears as a suffix and every id is below vocab_size.
  bool valid(std::size_t vocab_size) const;

  bool operator==(const TokenSequence&) const = default;
};

TokenSequence encode(std::string_view text, const Vocabulary& vocab,
                     bool add_bos_eos);
/// Drops PAD/BOS/EOS and joins the rest with single spaces.
std::string decode(const TokenSequence& seq, const Vocabulary& vocab);

/// Tokenizer seam so the word-level scheme can be swapped for subwords.
class Tokenizer {
 public:
  virtual ~Tokenizer() = default;
  virtual TokenSequence encode(std::string_view text, bool add_bos_eos) const = 0;
  virtual std::string decode(const TokenSequence& seq) const = 0;
  virtual std::size_t vocab_size() const = 0;
};

class WordTokenizer final : public Tokenizer {
 public:
  explicit WordTokenizer(Vocabulary vocab) : vocab_(std::move(vocab)) {}

  TokenSequence encode(std::string_view text, bool add_bos_eos) const override {
    return text::encode(text, vocab_, add_bos_eos);
  }
  std::string decode(const TokenSequence& seq) const override {
    return text::decode(seq, vocab_);
  }
  std::size_t vocab_size() const override { return vocab_.size(); }
  const Vocabulary& vocab() const { return vocab_; }

 private:
  Vocabulary vocab_;
};

}  // namespace vasr::text
