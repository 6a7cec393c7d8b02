#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace vasr::fusion {

/// Precomputed image embedding (e.g. a CLIP image vector) keyed by id.
struct ImageFeature {
  std::vector<double> vector;
  std::string source_id;
};

/// Feature vectors of one fixed dimension, in file order.
///
/// File layout ("VECF", little-endian): magic, u32 version (1), u32 dim,
/// then until EOF per record: u32 id length, id bytes, dim x f32.
class FeatureTable {
 public:
  explicit FeatureTable(std::uint32_t dim = 0) : dim_(dim) {}

  std::uint32_t dim() const { return dim_; }
  std::size_t size() const { return records_.size(); }
  std::span<const ImageFeature> records() const { return records_; }

  /// Throws on dimension mismatch, non-finite values, or duplicate id.
  void add(ImageFeature feature);
  const ImageFeature* find(const std::string& id) const;

  void save(const std::filesystem::path& path) const;
  static FeatureTable load(const std::filesystem::path& path);

 private:
  std::uint32_t dim_;
  std::vector<ImageFeature> records_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline constexpr std::uint32_t kFeatureFileVersion = 1;

}  // namespace vasr::fusion
