#include "vasr/model/transformer.hpp"

#include <cmath>
#include <stdexcept>

namespace vasr::model {
namespace {

namespace ag = autograd;

Tensor random_matrix(Rng& rng, std::size_t in, std::size_t out) {
  std::vector<double> values(in * out);
  const double stddev = 1.0 / std::sqrt(static_cast<double>(in));
  for (auto& v : values) v = rng.normal() * stddev;
  return Tensor({in, out}, std::move(values), true);
}

std::size_t parse_size(const std::map<std::string, std::string>& meta,
                       const std::string& key) {
  const auto it = meta.find(key);
  if (it == meta.end()) {
    throw ag::FormatError("checkpoint metadata lacks '" + key + "'");
  }
  return static_cast<std::size_t>(std::stoull(it->second));
}

std::vector<std::uint8_t> key_padding_mask(std::size_t rows,
                                           std::span<const text::TokenId> keys) {
  std::vector<std::uint8_t> mask(rows * keys.size());
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < keys.size(); ++j)
      mask[i * keys.size() + j] = keys[j] != text::kPad;
  return mask;
}

}  // namespace

void ModelConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("model config: ") + what);
  };
  require(d_model > 0, "d_model must be positive");
  require(n_heads > 0, "n_heads must be positive");
  require(d_model % n_heads == 0, "n_heads must divide d_model");
  require(n_enc_layers > 0, "n_enc_layers must be positive");
  require(n_dec_layers > 0, "n_dec_layers must be positive");
  require(ffn_dim > 0, "ffn_dim must be positive");
  require(max_len > 0, "max_len must be positive");
  require(vocab_size > static_cast<std::size_t>(text::kNumReserved),
          "vocab_size must exceed the reserved ids");
  require(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
}

std::map<std::string, std::string> ModelConfig::to_metadata() const {
  char dropout_text[32];
  std::snprintf(dropout_text, sizeof dropout_text, "%.17g", dropout);
  return {{"model.d_model", std::to_string(d_model)},
          {"model.n_heads", std::to_string(n_heads)},
          {"model.n_enc_layers", std::to_string(n_enc_layers)},
          {"model.n_dec_layers", std::to_string(n_dec_layers)},
          {"model.ffn_dim", std::to_string(ffn_dim)},
          {"model.max_len", std::to_string(max_len)},
          {"model.vocab_size", std::to_string(vocab_size)},
          {"model.dropout", dropout_text},
          {"model.seed", std::to_string(seed)},
          {"model.fusion_image_dim", std::to_string(fusion_image_dim)},
          {"model.fusion_gate",
           fusion_gate == fusion::GateKind::kTanh ? "tanh" : "sigmoid"}};
}

ModelConfig ModelConfig::from_metadata(const std::map<std::string, std::string>& meta) {
  ModelConfig c;
  c.d_model = parse_size(meta, "model.d_model");
  c.n_heads = parse_size(meta, "model.n_heads");
  c.n_enc_layers = parse_size(meta, "model.n_enc_layers");
  c.n_dec_layers = parse_size(meta, "model.n_dec_layers");
  c.ffn_dim = parse_size(meta, "model.ffn_dim");
  c.max_len = parse_size(meta, "model.max_len");
  c.vocab_size = parse_size(meta, "model.vocab_size");
  c.seed = parse_size(meta, "model.seed");
  c.fusion_image_dim = parse_size(meta, "model.fusion_image_dim");
  if (const auto it = meta.find("model.dropout"); it != meta.end())
    c.dropout = std::stod(it->second);
  if (const auto it = meta.find("model.fusion_gate"); it != meta.end())
    c.fusion_gate = it->second == "sigmoid" ? fusion::GateKind::kSigmoid
                                            : fusion::GateKind::kTanh;
  c.validate();
  return c;
}

EncoderDecoderModel::EncoderDecoderModel(ModelConfig config) : config_(config) {
  config_.validate();
  Rng rng(config_.seed);
  const std::size_t d = config_.d_model;

  auto make_linear = [&](const std::string& name, std::size_t in, std::size_t out) {
    Linear l{random_matrix(rng, in, out), Tensor::zeros({out}, true)};
    named_.emplace_back(name + ".weight", l.weight);
    named_.emplace_back(name + ".bias", l.bias);
    return l;
  };
  auto make_norm = [&](const std::string& name) {
    Norm n{Tensor::full({d}, 1.0, true), Tensor::zeros({d}, true)};
    named_.emplace_back(name + ".gain", n.gain);
    named_.emplace_back(name + ".bias", n.bias);
    return n;
  };
  auto make_attention = [&](const std::string& name) {
    Attention a;
    a.q = make_linear(name + ".q", d, d);
    a.k = make_linear(name + ".k", d, d);
    a.v = make_linear(name + ".v", d, d);
    a.o = make_linear(name + ".o", d, d);
    return a;
  };
  auto make_ffn = [&](const std::string& name) {
    FeedForward f;
    f.in = make_linear(name + ".in", d, config_.ffn_dim);
    f.out = make_linear(name + ".out", config_.ffn_dim, d);
    return f;
  };

  {
    std::vector<double> values(config_.vocab_size * d);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(d));
    for (auto& v : values) v = rng.normal() * stddev;
    embedding_ = Tensor({config_.vocab_size, d}, std::move(values), true);
    named_.emplace_back("embed.weight", embedding_);
  }
  {
    std::vector<double> pe(config_.max_len * d);
    for (std::size_t pos = 0; pos < config_.max_len; ++pos) {
      for (std::size_t i = 0; i < d; i += 2) {
        const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
        pe[pos * d + i] = std::sin(static_cast<double>(pos) * freq);
        if (i + 1 < d) pe[pos * d + i + 1] = std::cos(static_cast<double>(pos) * freq);
      }
    }
    positions_ = Tensor({config_.max_len, d}, std::move(pe));
  }
  for (std::size_t l = 0; l < config_.n_enc_layers; ++l) {
    const std::string p = "enc." + std::to_string(l);
    EncoderLayer layer;
    layer.norm1 = make_norm(p + ".norm1");
    layer.self_attn = make_attention(p + ".self_attn");
    layer.norm2 = make_norm(p + ".norm2");
    layer.ffn = make_ffn(p + ".ffn");
    encoder_.push_back(std::move(layer));
  }
  encoder_norm_ = make_norm("enc.norm");
  for (std::size_t l = 0; l < config_.n_dec_layers; ++l) {
    const std::string p = "dec." + std::to_string(l);
    DecoderLayer layer;
    layer.norm1 = make_norm(p + ".norm1");
    layer.self_attn = make_attention(p + ".self_attn");
    layer.norm2 = make_norm(p + ".norm2");
    layer.cross_attn = make_attention(p + ".cross_attn");
    layer.norm3 = make_norm(p + ".norm3");
    layer.ffn = make_ffn(p + ".ffn");
    decoder_.push_back(std::move(layer));
  }
  decoder_norm_ = make_norm("dec.norm");
  output_ = make_linear("out_proj", d, config_.vocab_size);

  if (config_.fusion_image_dim > 0) {
    fusion_ = std::make_shared<fusion::GatedFusionLayer>(
        config_.fusion_image_dim, d, config_.seed ^ 0x9e3779b97f4a7c15ULL,
        config_.fusion_gate);
    for (auto& entry : fusion_->parameters()) named_.push_back(entry);
  }
}

Tensor EncoderDecoderModel::maybe_dropout(ForwardContext ctx, const Tensor& x) const {
  if (!ctx.dropout_rng || config_.dropout <= 0.0) return x;
  std::vector<std::uint8_t> keep(x.numel());
  for (auto& k : keep) k = ctx.dropout_rng->uniform() >= config_.dropout;
  return ag::dropout(ctx.tape, x, keep, config_.dropout);
}

Tensor EncoderDecoderModel::embed(ForwardContext ctx,
                                  std::span<const text::TokenId> ids) const {
  if (ids.size() > config_.max_len) {
    throw std::length_error("sequence of length " + std::to_string(ids.size()) +
                            " exceeds max_len " + std::to_string(config_.max_len));
  }
  const std::size_t d = config_.d_model;
  const Tensor tokens = ag::gather_rows(ctx.tape, embedding_, ids);
  const Tensor scaled = ag::scale(ctx.tape, tokens, std::sqrt(static_cast<double>(d)));
  const Tensor pos({ids.size(), d},
                   std::vector<double>(positions_.values().begin(),
                                       positions_.values().begin() + ids.size() * d));
  return maybe_dropout(ctx, ag::add(ctx.tape, scaled, pos));
}

Tensor EncoderDecoderModel::linear(ForwardContext ctx, const Linear& l,
                                   const Tensor& x) const {
  return ag::add_bias(ctx.tape, ag::matmul(ctx.tape, x, l.weight), l.bias);
}

Tensor EncoderDecoderModel::norm(ForwardContext ctx, const Norm& n,
                                 const Tensor& x) const {
  return ag::layer_norm(ctx.tape, x, n.gain, n.bias);
}

Tensor EncoderDecoderModel::attend(ForwardContext ctx, const Attention& a,
                                   const Tensor& query, const Tensor& keys,
                                   std::span<const std::uint8_t> mask) const {
  const std::size_t heads = config_.n_heads;
  const std::size_t dk = config_.d_model / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dk));
  const Tensor q = linear(ctx, a.q, query);
  const Tensor k = linear(ctx, a.k, keys);
  const Tensor v = linear(ctx, a.v, keys);
  Tensor merged;
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = ag::slice_cols(ctx.tape, q, h * dk, dk);
    const Tensor kh = ag::slice_cols(ctx.tape, k, h * dk, dk);
    const Tensor vh = ag::slice_cols(ctx.tape, v, h * dk, dk);
    const Tensor scores =
        ag::scale(ctx.tape, ag::matmul(ctx.tape, qh, ag::transpose(ctx.tape, kh)), inv_sqrt);
    const Tensor weights = ag::masked_softmax_rows(ctx.tape, scores, mask);
    const Tensor head = ag::matmul(ctx.tape, weights, vh);
    merged = h == 0 ? head : ag::concat_last_dim(ctx.tape, merged, head);
  }
  return linear(ctx, a.o, merged);
}

Tensor EncoderDecoderModel::feed_forward(ForwardContext ctx, const FeedForward& f,
                                         const Tensor& x) const {
  return linear(ctx, f.out, ag::relu(ctx.tape, linear(ctx, f.in, x)));
}

Tensor EncoderDecoderModel::encode(ForwardContext ctx,
                                   const text::TokenSequence& src) const {
  if (src.ids.empty()) throw std::invalid_argument("encode: empty source");
  const std::span<const text::TokenId> ids = src.ids;
  const auto mask = key_padding_mask(ids.size(), ids);
  Tensor x = embed(ctx, ids);
  for (const auto& layer : encoder_) {
    const Tensor h = norm(ctx, layer.norm1, x);
    const Tensor attn = attend(ctx, layer.self_attn, h, h, mask);
    x = ag::add(ctx.tape, x, maybe_dropout(ctx, attn));
    const Tensor ffn = feed_forward(ctx, layer.ffn, norm(ctx, layer.norm2, x));
    x = ag::add(ctx.tape, x, maybe_dropout(ctx, ffn));
  }
  return norm(ctx, encoder_norm_, x);
}

Tensor EncoderDecoderModel::memory(ForwardContext ctx, const text::TokenSequence& src,
                                   const fusion::ImageFeature* image) const {
  const Tensor states = encode(ctx, src);
  if (!fusion_) return states;
  if (!image) return fusion_->fuse_absent_image(ctx.tape, states);
  const Tensor projected = fusion_->project_image(ctx.tape, *image, states.rows());
  return fusion_->fuse(ctx.tape, states, projected);
}

Tensor EncoderDecoderModel::decode_logits(ForwardContext ctx, const Tensor& memory,
                                          std::span<const text::TokenId> src_ids,
                                          std::span<const text::TokenId> tgt_in) const {
  if (tgt_in.empty()) throw std::invalid_argument("decode_logits: empty target prefix");
  if (memory.rows() != src_ids.size()) {
    throw autograd::DimensionError("decode_logits: memory " +
                                   autograd::shape_to_string(memory.shape()) +
                                   " does not match " + std::to_string(src_ids.size()) +
                                   " source ids");
  }
  const std::size_t t = tgt_in.size();
  std::vector<std::uint8_t> causal(t * t, 0);
  for (std::size_t i = 0; i < t; ++i)
    for (std::size_t j = 0; j <= i; ++j) causal[i * t + j] = 1;
  const auto cross = key_padding_mask(t, src_ids);

  Tensor x = embed(ctx, tgt_in);
  for (const auto& layer : decoder_) {
    const Tensor h1 = norm(ctx, layer.norm1, x);
    x = ag::add(ctx.tape, x, maybe_dropout(ctx, attend(ctx, layer.self_attn, h1, h1, causal)));
    const Tensor h2 = norm(ctx, layer.norm2, x);
    x = ag::add(ctx.tape, x,
                maybe_dropout(ctx, attend(ctx, layer.cross_attn, h2, memory, cross)));
    const Tensor ffn = feed_forward(ctx, layer.ffn, norm(ctx, layer.norm3, x));
    x = ag::add(ctx.tape, x, maybe_dropout(ctx, ffn));
  }
  return linear(ctx, output_, norm(ctx, decoder_norm_, x));
}

std::pair<Tensor, std::vector<text::TokenId>> EncoderDecoderModel::forward(
    ForwardContext ctx, const TrainingExample& ex) const {
  if (ex.target.ids.size() < 2) {
    throw std::invalid_argument("training target needs at least BOS and EOS");
  }
  const Tensor mem = memory(ctx, ex.source, ex.image);
  const std::span<const text::TokenId> tgt = ex.target.ids;
  const Tensor logits = decode_logits(ctx, mem, ex.source.ids, tgt.first(tgt.size() - 1));
  return {logits, std::vector<text::TokenId>(tgt.begin() + 1, tgt.end())};
}

Tensor EncoderDecoderModel::batch_loss(ForwardContext ctx,
                                       std::span<const TrainingExample> batch) const {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  std::vector<Tensor> logits;
  std::vector<text::TokenId> targets;
  logits.reserve(batch.size());
  for (const auto& ex : batch) {
    auto [l, t] = forward(ctx, ex);
    logits.push_back(std::move(l));
    targets.insert(targets.end(), t.begin(), t.end());
  }
  const Tensor all = logits.size() == 1 ? logits.front() : ag::concat_rows(ctx.tape, logits);
  return ag::softmax_cross_entropy(ctx.tape, all, targets, text::kPad);
}

autograd::ParameterList EncoderDecoderModel::parameters() const { return named_; }

Tensor EncoderDecoderModel::parameter(const std::string& name) const {
  for (const auto& [n, t] : named_)
    if (n == name) return t;
  throw std::out_of_range("unknown parameter '" + name + "'");
}

autograd::Checkpoint EncoderDecoderModel::to_checkpoint() const {
  return autograd::snapshot(named_, config_.to_metadata());
}

EncoderDecoderModel EncoderDecoderModel::from_checkpoint(const autograd::Checkpoint& ckpt) {
  EncoderDecoderModel model(ModelConfig::from_metadata(ckpt.metadata));
  autograd::restore(model.named_, ckpt);
  return model;
}

void EncoderDecoderModel::load_parameters(const autograd::Checkpoint& ckpt,
                                          bool allow_missing_fusion) {
  for (const auto& [name, t] : named_) {
    if (ckpt.find(name)) continue;
    if (allow_missing_fusion && name.starts_with("fusion.")) continue;
    throw autograd::FormatError("checkpoint lacks parameter '" + name + "'");
  }
  autograd::restore(named_, ckpt, /*allow_missing=*/true);
}

}  // namespace vasr::model
