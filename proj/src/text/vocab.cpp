#include "vasr/text/vocab.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <stdexcept>

namespace vasr::text {
namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_reserved_surface(std::string_view token) {
  return token == kPadToken || token == kBosToken || token == kEosToken ||
         token == kUnkToken || token == kSepToken;
}

// Like split_words, but the exact token "[SEP]" survives lowercasing.
std::vector<std::string> encoding_words(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(text[j])) ++j;
    if (j > i) {
      const auto raw = text.substr(i, j - i);
      words.push_back(raw == kSepToken ? std::string(raw) : normalize(raw));
    }
    i = j;
  }
  return words;
}

}  // namespace

std::string normalize(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> words;
  const std::string norm = normalize(text);
  std::size_t start = 0;
  while (start < norm.size()) {
    auto end = norm.find(' ', start);
    if (end == std::string::npos) end = norm.size();
    words.emplace_back(norm.substr(start, end - start));
    start = end + 1;
  }
  return words;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> learned) {
  tokens_ = {std::string(kPadToken), std::string(kBosToken), std::string(kEosToken),
             std::string(kUnkToken), std::string(kSepToken)};
  for (TokenId i = 0; i < kNumReserved; ++i) index_.emplace(tokens_[i], i);
  for (auto& tok : learned) {
    if (tok.empty() || is_reserved_surface(tok)) {
      throw std::invalid_argument("vocabulary token '" + tok + "' is reserved or empty");
    }
    const auto id = static_cast<TokenId>(tokens_.size());
    if (!index_.emplace(tok, id).second) {
      throw std::invalid_argument("duplicate vocabulary token '" + tok + "'");
    }
    tokens_.push_back(std::move(tok));
  }
}

TokenId Vocabulary::id(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    throw std::out_of_range("token id " + std::to_string(id) +
                            " outside vocabulary of size " +
                            std::to_string(tokens_.size()));
  }
  return tokens_[id];
}

std::span<const std::string> Vocabulary::learned() const {
  return std::span<const std::string>(tokens_).subspan(kNumReserved);
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path.string());
  for (const auto& tok : learned()) out << tok << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read vocabulary: " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens));
}

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t min_count,
                       std::size_t max_size) {
  if (corpus.empty()) throw std::invalid_argument("build_vocab: empty corpus");
  std::map<std::string, std::size_t> counts;
  for (const auto& line : corpus)
    for (auto& w : encoding_words(line))
      if (!is_reserved_surface(w)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [w, c] : counts)
    if (c >= min_count) ranked.emplace_back(w, c);
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [w, c] : ranked) tokens.push_back(w);
  return Vocabulary(std::move(tokens));
}

std::size_t TokenSequence::length() const {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == kPad) --n;
  return n;
}

bool TokenSequence::valid(std::size_t vocab_size) const {
  const auto n = length();
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= vocab_size) return false;
    if (i < n && ids[i] == kPad) return false;
  }
  return true;
}

TokenSequence encode(std::string_view text, const Vocabulary& vocab,
                     bool add_bos_eos) {
  TokenSequence seq;
  if (add_bos_eos) seq.ids.push_back(kBos);
  for (const auto& w : encoding_words(text)) {
    // Reserved surface forms other than [SEP] are read as unknowns.
    if (w == kSepToken) {
      seq.ids.push_back(kSep);
    } else if (is_reserved_surface(w)) {
      seq.ids.push_back(kUnk);
    } else {
      seq.ids.push_back(vocab.id(w));
    }
  }
  if (add_bos_eos) seq.ids.push_back(kEos);
  return seq;
}

std::string decode(const TokenSequence& seq, const Vocabulary& vocab) {
  std::string out;
  for (auto id : seq.ids) {
    const auto& tok = vocab.token(id);
    if (id == kPad || id == kBos || id == kEos) continue;
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace vasr::text
