#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "vasr/autograd/tape.hpp"
#include "vasr/autograd/tensor.hpp"

namespace vasr::autograd {

enum class ElementwiseKind { kTanh, kSigmoid, kRelu, kAdd, kMul };

/// Parses "tanh", "sigmoid", "relu", "add", "mul"; throws on anything else.
ElementwiseKind parse_elementwise_kind(std::string_view name);

/// C = A·B for A[m×k], B[k×n].
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

/// Unary kinds take one operand, binary kinds two of identical shape.
Tensor apply_elementwise(Tape& tape, ElementwiseKind kind,
                         std::span<const Tensor> operands);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor tanh(Tape& tape, const Tensor& a);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor relu(Tape& tape, const Tensor& a);
Tensor scale(Tape& tape, const Tensor& a, double factor);

/// Repeats a [D] or [1×D] tensor into [n×D].
Tensor tile_rows(Tape& tape, const Tensor& row, std::size_t n);
/// x[L×D] + tile_rows(bias, L).
Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias);

Tensor concat_last_dim(Tape& tape, const Tensor& a, const Tensor& b);
/// Stacks 2-D tensors with equal column counts vertically.
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
/// Columns [begin, begin+count) of a 2-D tensor.
Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin,
                  std::size_t count);

/// Row lookup: out[i] = table[ids[i]].
Tensor gather_rows(Tape& tape, const Tensor& table,
                   std::span<const std::int32_t> ids);

/// Row-wise softmax. Entries with mask == 0 are excluded and output 0.
/// An empty mask means every entry participates.
Tensor masked_softmax_rows(Tape& tape, const Tensor& x,
                           std::span<const std::uint8_t> mask = {});

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain,
                  const Tensor& bias, double eps = 1e-5);

/// Mean negative log-likelihood over the rows whose target differs from
/// ignore_index. Returns a scalar.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::int32_t> targets,
                             std::optional<std::int32_t> ignore_index = {});

/// Sum of all entries as a scalar.
Tensor sum(Tape& tape, const Tensor& a);

/// Inverted dropout with an explicit keep mask (1 keeps, 0 drops).
Tensor dropout(Tape& tape, const Tensor& a, std::span<const std::uint8_t> keep,
               double rate);

}  // namespace vasr::autograd
