#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vasr/autograd/checkpoint.hpp"
#include "vasr/autograd/ops.hpp"
#include "vasr/autograd/random.hpp"
#include "vasr/fusion/gated_fusion.hpp"
#include "vasr/text/vocab.hpp"

namespace vasr::model {

using autograd::Tape;
using autograd::Tensor;

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_enc_layers = 2;
  std::size_t n_dec_layers = 2;
  std::size_t ffn_dim = 128;
  std::size_t max_len = 64;
  std::size_t vocab_size = 0;
  double dropout = 0.0;
  std::uint64_t seed = 1;
  /// Image feature width for an attached fusion layer; 0 means no fusion.
  std::size_t fusion_image_dim = 0;
  fusion::GateKind fusion_gate = fusion::GateKind::kTanh;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;

  std::map<std::string, std::string> to_metadata() const;
  static ModelConfig from_metadata(const std::map<std::string, std::string>& meta);

  bool operator==(const ModelConfig&) const = default;
};

/// Per-forward state: the tape and, in training mode, the dropout generator.
struct ForwardContext {
  Tape& tape;
  Rng* dropout_rng = nullptr;
};

/// One supervised pair, already tokenized. `source` and `target` carry
/// BOS/EOS; trailing PAD is allowed in either.
struct TrainingExample {
  text::TokenSequence source;
  text::TokenSequence target;
  const fusion::ImageFeature* image = nullptr;
};

/// Pre-LN encoder-decoder transformer with sinusoidal positions, a shared
/// source/target embedding and an optional gated fusion layer applied to the
/// encoder output before cross-attention.
class EncoderDecoderModel {
 public:
  explicit EncoderDecoderModel(ModelConfig config);
  // Parameters are shared handles; copy through to_checkpoint() instead.
  EncoderDecoderModel(const EncoderDecoderModel&) = delete;
  EncoderDecoderModel& operator=(const EncoderDecoderModel&) = delete;
  EncoderDecoderModel(EncoderDecoderModel&&) = default;
  EncoderDecoderModel& operator=(EncoderDecoderModel&&) = default;

  const ModelConfig& config() const { return config_; }

  /// Text encoder states H_S, [L x d_model]. Throws if L > max_len.
  Tensor encode(ForwardContext ctx, const text::TokenSequence& src) const;

  /// Encoder states after fusion when a fusion layer is attached: a null
  /// image takes the absent-image path. Without fusion this equals encode().
  Tensor memory(ForwardContext ctx, const text::TokenSequence& src,
                const fusion::ImageFeature* image) const;

  /// Next-token logits [T x vocab] for decoder inputs `tgt_in`, attending to
  /// `memory` whose PAD source positions are masked out.
  Tensor decode_logits(ForwardContext ctx, const Tensor& memory,
                       std::span<const text::TokenId> src_ids,
                       std::span<const text::TokenId> tgt_in) const;

  /// Teacher-forced logits and shifted targets for one example.
  std::pair<Tensor, std::vector<text::TokenId>> forward(ForwardContext ctx,
                                                        const TrainingExample& ex) const;

  /// Mean token cross-entropy over a batch, PAD targets ignored.
  Tensor batch_loss(ForwardContext ctx, std::span<const TrainingExample> batch) const;

  bool has_fusion() const { return fusion_ != nullptr; }
  fusion::GatedFusionLayer* fusion_layer() { return fusion_.get(); }
  const fusion::GatedFusionLayer* fusion_layer() const { return fusion_.get(); }

  autograd::ParameterList parameters() const;
  /// Parameter tensors by name; throws std::out_of_range for unknown names.
  Tensor parameter(const std::string& name) const;

  autograd::Checkpoint to_checkpoint() const;
  /// Rebuilds the model from the config stored in the checkpoint metadata.
  static EncoderDecoderModel from_checkpoint(const autograd::Checkpoint& ckpt);
  /// Loads matching parameters; fusion parameters may be absent when
  /// initializing a fusion model from a text-only checkpoint.
  void load_parameters(const autograd::Checkpoint& ckpt, bool allow_missing_fusion);

 private:
  struct Linear {
    Tensor weight;
    Tensor bias;
  };
  struct Norm {
    Tensor gain;
    Tensor bias;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct FeedForward {
    Linear in, out;
  };
  struct EncoderLayer {
    Norm norm1, norm2;
    Attention self_attn;
    FeedForward ffn;
  };
  struct DecoderLayer {
    Norm norm1, norm2, norm3;
    Attention self_attn, cross_attn;
    FeedForward ffn;
  };

  Tensor embed(ForwardContext ctx, std::span<const text::TokenId> ids) const;
  Tensor linear(ForwardContext ctx, const Linear& l, const Tensor& x) const;
  Tensor norm(ForwardContext ctx, const Norm& n, const Tensor& x) const;
  Tensor attend(ForwardContext ctx, const Attention& a, const Tensor& query,
                const Tensor& keys, std::span<const std::uint8_t> mask) const;
  Tensor feed_forward(ForwardContext ctx, const FeedForward& f, const Tensor& x) const;
  Tensor maybe_dropout(ForwardContext ctx, const Tensor& x) const;

  ModelConfig config_;
  Tensor embedding_;
  Tensor positions_;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Norm encoder_norm_, decoder_norm_;
  Linear output_;
  std::shared_ptr<fusion::GatedFusionLayer> fusion_;
  autograd::ParameterList named_;
};

}  // namespace vasr::model
