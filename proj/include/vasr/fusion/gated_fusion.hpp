#pragma once

#include <cstdint>
#include <string>

#include "vasr/autograd/checkpoint.hpp"
#include "vasr/autograd/ops.hpp"
#include "vasr/fusion/image_feature.hpp"

namespace vasr::fusion {

enum class GateKind { kTanh, kSigmoid };

/// Gated image/text fusion over encoder states.
///
///   H_I     = tile(P feat, L)                      image projection
///   H_fused = [H_S ; H_I] W_g + b_g                concatenation map
///   Gate    = tanh([H_S ; H_fused] W_f + b_f)      elementwise gate
///   H_out   = H_S + Gate * H_fused                 residual add
///
/// With W_f and b_f zero the gate is tanh(0) = 0 and H_out == H_S exactly.
/// The sigmoid gate is an ablation switch only.
class GatedFusionLayer {
 public:
  GatedFusionLayer(std::size_t image_dim, std::size_t model_dim, std::uint64_t seed,
                   GateKind gate = GateKind::kTanh);

  std::size_t image_dim() const { return image_dim_; }
  std::size_t model_dim() const { return model_dim_; }
  GateKind gate_kind() const { return gate_; }
  void set_gate_kind(GateKind gate) { gate_ = gate; }

  /// P·feat + b_P tiled to [length x D].
  autograd::Tensor project_image(autograd::Tape& tape, const ImageFeature& feat,
                                 std::size_t length) const;
  autograd::Tensor fuse(autograd::Tape& tape, const autograd::Tensor& text,
                        const autograd::Tensor& image) const;
  /// fuse() against an all-zero image projection input.
  autograd::Tensor fuse_absent_image(autograd::Tape& tape,
                                     const autograd::Tensor& text) const;

  /// The gate values alone, for inspection.
  autograd::Tensor gate(autograd::Tape& tape, const autograd::Tensor& text,
                        const autograd::Tensor& image) const;

  autograd::Tensor& projection_weight() { return proj_w_; }
  autograd::Tensor& projection_bias() { return proj_b_; }
  autograd::Tensor& fuse_weight() { return fuse_w_; }
  autograd::Tensor& fuse_bias() { return fuse_b_; }
  autograd::Tensor& gate_weight() { return gate_w_; }
  autograd::Tensor& gate_bias() { return gate_b_; }

  /// Names are prefixed with "fusion.".
  autograd::ParameterList parameters() const;

 private:
  autograd::Tensor fused(autograd::Tape& tape, const autograd::Tensor& text,
                         const autograd::Tensor& image) const;
  autograd::Tensor gate_from(autograd::Tape& tape, const autograd::Tensor& text,
                             const autograd::Tensor& fused) const;

  std::size_t image_dim_;
  std::size_t model_dim_;
  GateKind gate_;
  autograd::Tensor proj_w_, proj_b_;
  autograd::Tensor fuse_w_, fuse_b_;
  autograd::Tensor gate_w_, gate_b_;
};

}  // namespace vasr::fusion
