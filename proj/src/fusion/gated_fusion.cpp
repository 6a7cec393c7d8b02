#include "vasr/fusion/gated_fusion.hpp"

#include <cmath>

#include "vasr/autograd/random.hpp"

namespace vasr::fusion {
namespace {

using autograd::Tape;
using autograd::Tensor;

Tensor random_matrix(Rng& rng, std::size_t in, std::size_t out) {
  std::vector<double> values(in * out);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : values) v = rng.normal() * stddev;
  return Tensor({in, out}, std::move(values), true);
}

void require_text_shape(const Tensor& t, std::size_t d, const char* what) {
  if (t.dim() != 2 || t.cols() != d) {
    throw autograd::DimensionError(std::string("gated fusion: ") + what + " " +
                                   autograd::shape_to_string(t.shape()) +
                                   " must be [L x " + std::to_string(d) + "]");
  }
}

}  // namespace

GatedFusionLayer::GatedFusionLayer(std::size_t image_dim, std::size_t model_dim,
                                   std::uint64_t seed, GateKind gate)
    : image_dim_(image_dim), model_dim_(model_dim), gate_(gate) {
  Rng rng(seed);
  proj_w_ = random_matrix(rng, image_dim, model_dim);
  proj_b_ = Tensor::zeros({model_dim}, true);
  fuse_w_ = random_matrix(rng, 2 * model_dim, model_dim);
  fuse_b_ = Tensor::zeros({model_dim}, true);
  gate_w_ = random_matrix(rng, 2 * model_dim, model_dim);
  gate_b_ = Tensor::zeros({model_dim}, true);
}

Tensor GatedFusionLayer::project_image(Tape& tape, const ImageFeature& feat,
                                       std::size_t length) const {
  if (feat.vector.size() != image_dim_) {
    throw autograd::DimensionError(
        "gated fusion: image feature '" + feat.source_id + "' has dimension " +
        std::to_string(feat.vector.size()) + ", layer expects " +
        std::to_string(image_dim_));
  }
  const Tensor row({1, image_dim_}, feat.vector);
  const Tensor projected = autograd::add_bias(tape, autograd::matmul(tape, row, proj_w_), proj_b_);
  return autograd::tile_rows(tape, projected, length);
}

Tensor GatedFusionLayer::fused(Tape& tape, const Tensor& text,
                               const Tensor& image) const {
  require_text_shape(text, model_dim_, "text states");
  if (image.shape() != text.shape()) {
    throw autograd::DimensionError("gated fusion: image states " +
                                   autograd::shape_to_string(image.shape()) +
                                   " differ from text states " +
                                   autograd::shape_to_string(text.shape()));
  }
  const Tensor joined = autograd::concat_last_dim(tape, text, image);
  return autograd::add_bias(tape, autograd::matmul(tape, joined, fuse_w_), fuse_b_);
}

Tensor GatedFusionLayer::gate_from(Tape& tape, const Tensor& text,
                                   const Tensor& fused_states) const {
  const Tensor joined = autograd::concat_last_dim(tape, text, fused_states);
  const Tensor pre = autograd::add_bias(tape, autograd::matmul(tape, joined, gate_w_), gate_b_);
  return gate_ == GateKind::kTanh ? autograd::tanh(tape, pre)
                                  : autograd::sigmoid(tape, pre);
}

Tensor GatedFusionLayer::fuse(Tape& tape, const Tensor& text,
                              const Tensor& image) const {
  const Tensor fused_states = fused(tape, text, image);
  const Tensor lambda = gate_from(tape, text, fused_states);
  return autograd::add(tape, text, autograd::mul(tape, lambda, fused_states));
}

Tensor GatedFusionLayer::fuse_absent_image(Tape& tape, const Tensor& text) const {
  require_text_shape(text, model_dim_, "text states");
  return fuse(tape, text, Tensor::zeros(text.shape()));
}

Tensor GatedFusionLayer::gate(Tape& tape, const Tensor& text,
                              const Tensor& image) const {
  return gate_from(tape, text, fused(tape, text, image));
}

autograd::ParameterList GatedFusionLayer::parameters() const {
  return {{"fusion.image_proj.weight", proj_w_}, {"fusion.image_proj.bias", proj_b_},
          {"fusion.fuse.weight", fuse_w_},       {"fusion.fuse.bias", fuse_b_},
          {"fusion.gate.weight", gate_w_},       {"fusion.gate.bias", gate_b_}};
}

}  // namespace vasr::fusion
