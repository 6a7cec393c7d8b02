#include "vasr/prompting/prompt.hpp"

#include <numeric>
#include <stdexcept>

#include "vasr/autograd/random.hpp"

namespace vasr::prompting {

std::string build_prompted_source(std::string_view caption, std::string_view source) {
  if (source.empty()) throw std::invalid_argument("build_prompted_source: empty source");
  if (caption.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return std::string(source);
  }
  std::string out;
  out.reserve(caption.size() + kPromptDelimiter.size() + source.size());
  out.append(caption).append(kPromptDelimiter).append(source);
  return out;
}

std::optional<std::pair<std::string, std::string>> split_prompted_source(
    std::string_view prompted) {
  const auto pos = prompted.find(kPromptDelimiter);
  if (pos == std::string_view::npos) return std::nullopt;
  return std::make_pair(std::string(prompted.substr(0, pos)),
                        std::string(prompted.substr(pos + kPromptDelimiter.size())));
}

std::string prompted_source(const dataset::SampleRecord& rec) {
  return build_prompted_source(rec.caption, rec.source);
}

std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("a derangement needs at least 2 elements");
  Rng rng(seed);
  std::vector<std::size_t> perm(n);
  for (;;) {
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm.begin(), perm.end());
    bool fixed_point = false;
    for (std::size_t i = 0; i < n && !fixed_point; ++i) fixed_point = perm[i] == i;
    if (!fixed_point) return perm;
  }
}

std::vector<dataset::SampleRecord> assign_random_captions(
    std::span<const dataset::SampleRecord> samples, std::uint64_t seed) {
  if (samples.size() < 2) {
    throw std::invalid_argument("assign_random_captions: need at least 2 samples, got " +
                                std::to_string(samples.size()));
  }
  const auto perm = random_derangement(samples.size(), seed);
  std::vector<dataset::SampleRecord> out(samples.begin(), samples.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].caption = samples[perm[i]].caption;
  return out;
}

}  // namespace vasr::prompting
