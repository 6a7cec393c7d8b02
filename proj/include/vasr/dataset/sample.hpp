#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace vasr::dataset {

enum class Split { kTrain, kValid, kTest };
enum class Origin { kAnnotated, kSynthetic };

std::string_view to_string(Split split);
std::string_view to_string(Origin origin);
Split parse_split(std::string_view name);
Origin parse_origin(std::string_view name);

/// One corpus item: ASR hypothesis (`source`), human reference, optional
/// caption and image feature id, and the time span it was cut from.
struct SampleRecord {
  std::string id;
  std::string source;
  std::string reference;
  std::string caption;
  std::string image_feature_id;
  double start_time = 0.0;
  double end_time = 0.0;
  Split split = Split::kTrain;
  Origin origin = Origin::kAnnotated;
  /// Fields this version does not know; written back unchanged.
  nlohmann::json extra = nlohmann::json::object();

  /// Throws std::invalid_argument on a broken invariant (empty reference,
  /// end before start, negative times, synthetic record with image data).
  void validate() const;

  bool operator==(const SampleRecord&) const = default;
};

nlohmann::json to_json(const SampleRecord& rec);
SampleRecord sample_from_json(const nlohmann::json& obj);

/// Line-delimited JSON, one record per line; blank lines are skipped.
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    std::span<const SampleRecord> records);

}  // namespace vasr::dataset
