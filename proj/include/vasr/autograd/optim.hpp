#pragma once

#include <cstdint>
#include <vector>

#include "vasr/autograd/tensor.hpp"

namespace vasr::autograd {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam with bias-corrected moments kept per parameter.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig config = {});

  /// Applies one in-place update from the parameters' current grads.
  /// Throws TapeError naming the index of a parameter without a grad.
  void step();
  void zero_grad();

  void set_lr(double lr) { config_.lr = lr; }
  double lr() const { return config_.lr; }
  std::int64_t steps_taken() const { return step_; }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
  AdamConfig config_;
  std::int64_t step_ = 0;
};

}  // namespace vasr::autograd
