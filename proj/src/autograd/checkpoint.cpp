#include "vasr/autograd/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "../common/binary_io.hpp"

namespace vasr::autograd {
namespace {
constexpr char kMagic[4] = {'V', 'C', 'K', 'P'};
}

const NamedArray* Checkpoint::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

Checkpoint snapshot(const ParameterList& params,
                    std::map<std::string, std::string> metadata) {
  Checkpoint ckpt;
  ckpt.metadata = std::move(metadata);
  ckpt.arrays.reserve(params.size());
  for (const auto& [name, t] : params) {
    ckpt.arrays.push_back({name, t.shape(), {t.values().begin(), t.values().end()}});
  }
  return ckpt;
}

void restore(const ParameterList& params, const Checkpoint& ckpt, bool allow_missing) {
  for (const auto& [name, t] : params) {
    const NamedArray* a = ckpt.find(name);
    if (!a) {
      if (allow_missing) continue;
      throw FormatError("checkpoint lacks parameter '" + name + "'");
    }
    if (a->shape != t.shape()) {
      throw FormatError("parameter '" + name + "' has shape " +
                        shape_to_string(t.shape()) + " but checkpoint holds " +
                        shape_to_string(a->shape));
    }
    Tensor target = t;
    std::copy(a->values.begin(), a->values.end(), target.mutable_values().begin());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open checkpoint for writing: " + path.string());
  out.write(kMagic, 4);
  io::write_le<std::uint32_t>(out, kCheckpointVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.metadata.size()));
  for (const auto& [key, value] : ckpt.metadata) {
    io::write_string(out, key);
    io::write_string(out, value);
  }
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.arrays.size()));
  for (const auto& a : ckpt.arrays) {
    if (shape_numel(a.shape) != a.values.size()) {
      throw FormatError("checkpoint array '" + a.name + "' has shape " +
                        shape_to_string(a.shape) + " but " +
                        std::to_string(a.values.size()) + " values");
    }
    io::write_string(out, a.name);
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.shape.size()));
    for (auto d : a.shape) io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : a.values) io::write_le<double>(out, v);
  }
  if (!out) throw FormatError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open checkpoint: " + path.string());
  try {
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
      throw FormatError("not a checkpoint file (bad magic): " + path.string());
    }
    const auto version = io::read_le<std::uint32_t>(in, "version");
    if (version != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + std::to_string(version) +
                        " in " + path.string());
    }
    Checkpoint ckpt;
    const auto meta_count = io::read_le<std::uint32_t>(in, "metadata count");
    for (std::uint32_t i = 0; i < meta_count; ++i) {
      auto key = io::read_string(in, "metadata key");
      ckpt.metadata[key] = io::read_string(in, "metadata value");
    }
    const auto count = io::read_le<std::uint32_t>(in, "array count");
    ckpt.arrays.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
      NamedArray a;
      a.name = io::read_string(in, "array name");
      const auto ndim = io::read_le<std::uint32_t>(in, "ndim");
      for (std::uint32_t d = 0; d < ndim; ++d)
        a.shape.push_back(io::read_le<std::uint32_t>(in, "dim"));
      a.values.resize(shape_numel(a.shape));
      for (auto& v : a.values) v = io::read_le<double>(in, "payload");
      ckpt.arrays.push_back(std::move(a));
    }
    return ckpt;
  } catch (const io::BinaryReadError& e) {
    throw FormatError(std::string(e.what()) + " in " + path.string());
  }
}

}  // namespace vasr::autograd
