#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vasr/dataset/sample.hpp"

namespace vasr::prompting {

inline constexpr std::string_view kPromptDelimiter = " [SEP] ";

/// caption + " [SEP] " + source; a blank caption leaves the source as is.
/// Throws std::invalid_argument for an empty source.
std::string build_prompted_source(std::string_view caption, std::string_view source);

/// Splits at the first " [SEP] ". Returns nullopt when there is none.
std::optional<std::pair<std::string, std::string>> split_prompted_source(
    std::string_view prompted);

/// Source text a prompt-based model sees for this record.
std::string prompted_source(const dataset::SampleRecord& rec);

/// Returns a copy whose caption column is a seed-determined derangement:
/// record i receives the caption of some record j != i, every caption is used
/// exactly once, and all other fields are untouched. Needs >= 2 records.
std::vector<dataset::SampleRecord> assign_random_captions(
    std::span<const dataset::SampleRecord> samples, std::uint64_t seed);

/// Uniform random derangement of 0..n-1 (n >= 2) by rejection sampling.
std::vector<std::size_t> random_derangement(std::size_t n, std::uint64_t seed);

}  // namespace vasr::prompting
