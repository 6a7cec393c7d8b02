#include "vasr/model/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace vasr::model {

namespace {
std::vector<Tensor> parameter_tensors(const EncoderDecoderModel& model) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : model.parameters()) out.push_back(t);
  return out;
}
}  // namespace

double train_step(const EncoderDecoderModel& model,
                  std::span<const TrainingExample> batch, autograd::Adam& optimizer,
                  Rng* dropout_rng) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  optimizer.zero_grad();
  Tape tape;
  const Tensor loss = model.batch_loss({tape, dropout_rng}, batch);
  tape.backward(loss);
  optimizer.step();
  return loss.item();
}

Trainer::Trainer(const EncoderDecoderModel& model, TrainConfig config)
    : model_(model),
      config_(config),
      optimizer_(parameter_tensors(model), autograd::AdamConfig{.lr = config.lr}),
      order_rng_(config.seed),
      dropout_rng_(config.seed ^ 0xd1b54a32d192ed03ULL) {
  if (config_.batch_size == 0) throw std::invalid_argument("trainer: batch_size must be positive");
}

std::vector<TrainLogEntry> Trainer::run(std::span<const TrainingExample> data,
                                        const StepHook& on_step,
                                        const CheckpointHook& on_checkpoint) {
  if (data.empty()) throw std::invalid_argument("trainer: empty dataset");
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();
  std::vector<TrainLogEntry> log;
  log.reserve(config_.steps);
  Rng* dropout = model_.config().dropout > 0.0 ? &dropout_rng_ : nullptr;
  std::vector<TrainingExample> batch;
  for (std::size_t step = 1; step <= config_.steps; ++step) {
    batch.clear();
    while (batch.size() < std::min(config_.batch_size, data.size())) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        order_rng_.shuffle(order.begin(), order.end());
        cursor = 0;
      }
      batch.push_back(data[order[cursor++]]);
    }
    const double loss = train_step(model_, batch, optimizer_, dropout);
    log.push_back({step, loss, optimizer_.lr()});
    if (on_step) on_step(log.back());
    if (on_checkpoint && config_.save_every && step % config_.save_every == 0) {
      on_checkpoint(step);
    }
  }
  return log;
}

autograd::Checkpoint average_checkpoints(std::span<const autograd::Checkpoint> ckpts) {
  if (ckpts.empty()) throw std::invalid_argument("average_checkpoints: no checkpoints");
  autograd::Checkpoint mean = ckpts.front();
  for (std::size_t k = 1; k < ckpts.size(); ++k) {
    const auto& next = ckpts[k];
    if (next.arrays.size() != mean.arrays.size()) {
      throw autograd::FormatError("average_checkpoints: checkpoint " + std::to_string(k) +
                                  " has " + std::to_string(next.arrays.size()) +
                                  " arrays, expected " +
                                  std::to_string(mean.arrays.size()));
    }
    const double count = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < mean.arrays.size(); ++i) {
      auto& acc = mean.arrays[i];
      const auto& a = next.arrays[i];
      if (a.name != acc.name || a.shape != acc.shape) {
        throw autograd::FormatError(
            "average_checkpoints: checkpoint " + std::to_string(k) + " has '" + a.name +
            "' " + autograd::shape_to_string(a.shape) + " where '" + acc.name + "' " +
            autograd::shape_to_string(acc.shape) + " was expected");
      }
      for (std::size_t j = 0; j < acc.values.size(); ++j) {
        acc.values[j] += (a.values[j] - acc.values[j]) / count;
      }
    }
  }
  return mean;
}

autograd::Checkpoint average_checkpoint_files(std::span<const std::filesystem::path> paths) {
  std::vector<autograd::Checkpoint> ckpts;
  ckpts.reserve(paths.size());
  for (const auto& p : paths) ckpts.push_back(autograd::load_checkpoint(p));
  return average_checkpoints(ckpts);
}

double grad_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult gradient_check(const EncoderDecoderModel& model,
                               std::span<const TrainingExample> batch, double step) {
  for (auto& [name, t] : model.parameters()) Tensor(t).zero_grad();
  {
    Tape tape;
    const Tensor loss = model.batch_loss({tape}, batch);
    tape.backward(loss);
  }
  auto loss_at = [&] {
    Tape tape(/*recording=*/false);
    return model.batch_loss({tape}, batch).item();
  };
  GradCheckResult result;
  for (const auto& [name, param] : model.parameters()) {
    Tensor t = param;
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    auto values = t.mutable_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + step;
      const double up = loss_at();
      values[i] = original - step;
      const double down = loss_at();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double err = grad_relative_error(a, numeric);
      ++result.checked;
      if (err > result.max_rel_error || result.worst_parameter.empty()) {
        result.max_rel_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
        result.worst_analytic = a;
        result.worst_numeric = numeric;
      }
    }
    t.zero_grad();
  }
  return result;
}

}  // namespace vasr::model
