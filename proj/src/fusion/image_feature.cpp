#include "vasr/fusion/image_feature.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "../common/binary_io.hpp"

namespace vasr::fusion {
namespace {
constexpr char kMagic[4] = {'V', 'E', 'C', 'F'};
}

void FeatureTable::add(ImageFeature feature) {
  if (feature.vector.size() != dim_) {
    throw std::invalid_argument("feature '" + feature.source_id + "' has dimension " +
                                std::to_string(feature.vector.size()) +
                                ", table expects " + std::to_string(dim_));
  }
  if (!std::all_of(feature.vector.begin(), feature.vector.end(),
                   [](double v) { return std::isfinite(v); })) {
    throw std::invalid_argument("feature '" + feature.source_id +
                                "' contains non-finite values");
  }
  if (!index_.emplace(feature.source_id, records_.size()).second) {
    throw std::invalid_argument("duplicate feature id '" + feature.source_id + "'");
  }
  records_.push_back(std::move(feature));
}

const ImageFeature* FeatureTable::find(const std::string& id) const {
  const auto it = index_.find(id);
  return it == index_.end() ? nullptr : &records_[it->second];
}

void FeatureTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write feature file: " + path.string());
  out.write(kMagic, 4);
  io::write_le<std::uint32_t>(out, kFeatureFileVersion);
  io::write_le<std::uint32_t>(out, dim_);
  for (const auto& rec : records_) {
    io::write_string(out, rec.source_id);
    for (double v : rec.vector) io::write_le<float>(out, static_cast<float>(v));
  }
  if (!out) throw std::runtime_error("failed writing feature file: " + path.string());
}

FeatureTable FeatureTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read feature file: " + path.string());
  try {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
      throw std::runtime_error("not a VECF feature file: " + path.string());
    }
    const auto version = io::read_le<std::uint32_t>(in, "version");
    if (version != kFeatureFileVersion) {
      throw std::runtime_error("unsupported VECF version " + std::to_string(version));
    }
    FeatureTable table(io::read_le<std::uint32_t>(in, "dimension"));
    while (in.peek() != std::ifstream::traits_type::eof()) {
      ImageFeature f;
      f.source_id = io::read_string(in, "feature id");
      f.vector.resize(table.dim_);
      for (auto& v : f.vector) v = io::read_le<float>(in, "feature payload");
      table.add(std::move(f));
    }
    return table;
  } catch (const io::BinaryReadError& e) {
    throw std::runtime_error(std::string(e.what()) + " in " + path.string());
  }
}

}  // namespace vasr::fusion
