#include "vasr/autograd/tape.hpp"

#include <algorithm>

namespace vasr::autograd {

bool Tape::record(std::vector<Tensor> inputs, Tensor& output,
                  BackwardRule rule) {
  if (!recording_) return false;
  const bool needs_grad = std::any_of(
      inputs.begin(), inputs.end(),
      [](const Tensor& t) { return t.requires_grad(); });
  if (!needs_grad) return false;
  output.set_requires_grad(true);
  ops_.push_back({std::move(inputs), output, std::move(rule)});
  return true;
}

void Tape::backward(const Tensor& loss) {
  if (backward_done_) {
    throw TapeError("backward() called twice on the same tape without reset()");
  }
  if (loss.numel() != 1) {
    throw TapeError("backward() needs a scalar loss, got shape " +
                    shape_to_string(loss.shape()));
  }
  const bool on_tape =
      std::any_of(ops_.begin(), ops_.end(),
                  [&](const Operation& op) { return op.output.same_storage(loss); });
  if (!on_tape) {
    throw TapeError("backward() loss was not produced on this tape");
  }
  Tensor seed = loss;
  seed.grad_buffer()[0] += 1.0;
  for (auto it = ops_.rbegin(); it != ops_.rend(); ++it) {
    if (!it->output.has_grad()) continue;
    for (auto& input : it->inputs) {
      if (input.requires_grad()) input.grad_buffer();
    }
    it->backward(it->output.grad());
  }
  backward_done_ = true;
}

void Tape::reset() {
  ops_.clear();
  backward_done_ = false;
}

}  // namespace vasr::autograd
