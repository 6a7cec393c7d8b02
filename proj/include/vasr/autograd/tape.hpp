#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "vasr/autograd/tensor.hpp"

namespace vasr::autograd {

class TapeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Define-by-run record of differentiable operations.
///
/// Operations append themselves in execution order, so inputs always precede
/// the operations that consume them. backward() replays the record in reverse
/// and adds each contribution into the input grads. A tape is not
/// thread-safe; build one per forward pass.
class Tape {
 public:
  /// Propagates the output gradient into the inputs' grad buffers.
  using BackwardRule = std::function<void(std::span<const double> grad_out)>;

  struct Operation {
    std::vector<Tensor> inputs;
    Tensor output;
    BackwardRule backward;
  };

  Tape() = default;
  /// A tape built with recording disabled never records; use it for
  /// inference so parameters do not pull every op onto the record.
  explicit Tape(bool recording) : recording_(recording) {}

  bool recording() const { return recording_; }

  /// Records an op when any input requires grad; marks the output as
  /// requiring grad in that case. Returns whether the op was recorded.
  bool record(std::vector<Tensor> inputs, Tensor& output, BackwardRule rule);

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse.
  void backward(const Tensor& loss);

  /// Drops all recorded operations and re-arms backward().
  void reset();

  std::size_t size() const { return ops_.size(); }
  bool backward_done() const { return backward_done_; }

 private:
  std::vector<Operation> ops_;
  bool backward_done_ = false;
  bool recording_ = true;
};

}  // namespace vasr::autograd
