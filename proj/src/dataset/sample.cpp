#include "vasr/dataset/sample.hpp"

#include <fstream>
#include <stdexcept>

namespace vasr::dataset {
namespace {
constexpr const char* kKnownFields[] = {"id",      "source",  "reference", "caption",
                                        "image_feature_id", "start_time", "end_time",
                                        "split",   "origin"};
}

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string_view to_string(Origin origin) {
  return origin == Origin::kAnnotated ? "annotated" : "synthetic";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "valid") return Split::kValid;
  if (name == "test") return Split::kTest;
  throw std::invalid_argument("unknown split '" + std::string(name) + "'");
}

Origin parse_origin(std::string_view name) {
  if (name == "annotated") return Origin::kAnnotated;
  if (name == "synthetic") return Origin::kSynthetic;
  throw std::invalid_argument("unknown origin '" + std::string(name) + "'");
}

void SampleRecord::validate() const {
  auto fail = [&](const std::string& what) {
    throw std::invalid_argument("sample '" + id + "': " + what);
  };
  if (reference.empty()) fail("reference is empty");
  if (start_time < 0.0 || end_time < 0.0) fail("timestamps must be non-negative");
  if (end_time < start_time) fail("end_time precedes start_time");
  if (origin == Origin::kSynthetic && (!caption.empty() || !image_feature_id.empty())) {
    fail("synthetic records carry no caption or image feature");
  }
}

nlohmann::json to_json(const SampleRecord& rec) {
  nlohmann::json obj = rec.extra.is_object() ? rec.extra : nlohmann::json::object();
  obj["id"] = rec.id;
  obj["source"] = rec.source;
  obj["reference"] = rec.reference;
  obj["caption"] = rec.caption;
  obj["image_feature_id"] = rec.image_feature_id;
  obj["start_time"] = rec.start_time;
  obj["end_time"] = rec.end_time;
  obj["split"] = to_string(rec.split);
  obj["origin"] = to_string(rec.origin);
  return obj;
}

SampleRecord sample_from_json(const nlohmann::json& obj) {
  if (!obj.is_object()) throw std::invalid_argument("manifest record is not an object");
  SampleRecord rec;
  rec.id = obj.at("id").get<std::string>();
  rec.source = obj.value("source", "");
  rec.reference = obj.at("reference").get<std::string>();
  rec.caption = obj.value("caption", "");
  rec.image_feature_id = obj.value("image_feature_id", "");
  rec.start_time = obj.value("start_time", 0.0);
  rec.end_time = obj.value("end_time", rec.start_time);
  rec.split = parse_split(obj.value("split", "train"));
  rec.origin = parse_origin(obj.value("origin", "annotated"));
  for (const auto& [key, value] : obj.items()) {
    bool known = false;
    for (const char* k : kKnownFields) known = known || key == k;
    if (!known) rec.extra[key] = value;
  }
  rec.validate();
  return rec;
}

std::vector<SampleRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read manifest: " + path.string());
  std::vector<SampleRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(sample_from_json(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                               e.what());
    }
  }
  return records;
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const SampleRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  for (const auto& rec : records) out << to_json(rec).dump() << '\n';
}

}  // namespace vasr::dataset
