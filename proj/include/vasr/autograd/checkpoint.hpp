#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "vasr/autograd/tensor.hpp"

namespace vasr::autograd {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NamedArray {
  std::string name;
  Shape shape;
  std::vector<double> values;

  bool operator==(const NamedArray&) const = default;
};

/// Flat parameter container.
///
/// On disk (all integers little-endian):
///   magic "VCKP", u32 version (1),
///   u32 metadata count, then per entry u32 len + key bytes, u32 len + value bytes,
///   u32 array count, then per array u32 len + name bytes, u32 ndim,
///   ndim x u32 dims, numel x f64 payload.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  bool operator==(const Checkpoint&) const = default;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Named parameter tensors in a fixed, deterministic order.
using ParameterList = std::vector<std::pair<std::string, Tensor>>;

Checkpoint snapshot(const ParameterList& params,
                    std::map<std::string, std::string> metadata = {});

/// Copies checkpoint values into matching parameters. Throws FormatError on
/// a shape mismatch, or on a missing name unless allow_missing is set.
void restore(const ParameterList& params, const Checkpoint& ckpt,
             bool allow_missing = false);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace vasr::autograd
