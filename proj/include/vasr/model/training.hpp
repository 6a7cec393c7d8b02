#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "vasr/autograd/checkpoint.hpp"
#include "vasr/autograd/optim.hpp"
#include "vasr/model/transformer.hpp"

namespace vasr::model {

/// One teacher-forced forward/backward/update. Returns the batch's mean
/// token loss before the update. Passing a generator enables dropout.
double train_step(const EncoderDecoderModel& model,
                  std::span<const TrainingExample> batch, autograd::Adam& optimizer,
                  Rng* dropout_rng = nullptr);

struct TrainConfig {
  std::size_t steps = 1000;
  std::size_t batch_size = 16;
  double lr = 1e-3;
  std::uint64_t seed = 1;
  /// Checkpoint callback period in steps; 0 disables it.
  std::size_t save_every = 0;
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
};

/// Fixed-step training over a dataset. Each epoch visits the examples in a
/// seed-determined shuffled order, batch_size at a time.
class Trainer {
 public:
  using StepHook = std::function<void(const TrainLogEntry&)>;
  using CheckpointHook = std::function<void(std::size_t step)>;

  Trainer(const EncoderDecoderModel& model, TrainConfig config);

  /// Runs config.steps updates. Returns the per-step log.
  std::vector<TrainLogEntry> run(std::span<const TrainingExample> data,
                                 const StepHook& on_step = {},
                                 const CheckpointHook& on_checkpoint = {});

 private:
  const EncoderDecoderModel& model_;
  TrainConfig config_;
  autograd::Adam optimizer_;
  Rng order_rng_;
  Rng dropout_rng_;
};

/// Element-wise arithmetic mean of checkpoints that share parameter names
/// and shapes. Metadata comes from the first checkpoint. The running mean is
/// updated incrementally, so N identical inputs reproduce the input exactly.
autograd::Checkpoint average_checkpoints(std::span<const autograd::Checkpoint> ckpts);
autograd::Checkpoint average_checkpoint_files(std::span<const std::filesystem::path> paths);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

/// Relative error used by the gradient audit: |a - n| / max(|a|, |n|, floor).
double grad_relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compares backprop gradients of batch_loss against central differences for
/// every element of every parameter. Parameter values are restored.
GradCheckResult gradient_check(const EncoderDecoderModel& model,
                               std::span<const TrainingExample> batch,
                               double step = 1e-5);

}  // namespace vasr::model
