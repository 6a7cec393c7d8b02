#include "vasr/autograd/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace vasr::autograd {
namespace {

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_to_string(a.shape()) + " vs " +
                         shape_to_string(b.shape()));
  }
}

void require_2d(const char* op, const Tensor& a) {
  if (a.dim() != 2) {
    throw DimensionError(std::string(op) + ": expected 2-D tensor, got " +
                         shape_to_string(a.shape()));
  }
}

// Width of a bias/gain vector given as [D] or [1xD].
std::size_t vector_width(const char* op, const Tensor& v) {
  if (v.dim() == 1) return v.size(0);
  if (v.dim() == 2 && v.size(0) == 1) return v.size(1);
  throw DimensionError(std::string(op) + ": expected [D] or [1xD], got " +
                       shape_to_string(v.shape()));
}

// Treats any tensor as rows x last-dim.
std::size_t last_dim(const Tensor& t) { return t.shape().back(); }

template <typename Fn>
Tensor unary(Tape& tape, const Tensor& a, Fn forward,
             double (*derivative)(double x, double y)) {
  std::vector<double> out(a.numel());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = forward(in[i]);
  Tensor result(a.shape(), std::move(out));
  tape.record({a}, result,
              [a, result, derivative](std::span<const double> g) mutable {
                if (!a.requires_grad()) return;
                auto& ga = a.grad_buffer();
                const auto x = a.values();
                const auto y = result.values();
                for (std::size_t i = 0; i < ga.size(); ++i) {
                  ga[i] += g[i] * derivative(x[i], y[i]);
                }
              });
  return result;
}

}  // namespace

ElementwiseKind parse_elementwise_kind(std::string_view name) {
  if (name == "tanh") return ElementwiseKind::kTanh;
  if (name == "sigmoid") return ElementwiseKind::kSigmoid;
  if (name == "relu") return ElementwiseKind::kRelu;
  if (name == "add") return ElementwiseKind::kAdd;
  if (name == "mul") return ElementwiseKind::kMul;
  throw std::invalid_argument("unknown elementwise kind '" + std::string(name) +
                              "'");
}

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d("matmul", a);
  require_2d("matmul", b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) {
    throw DimensionError("matmul: inner dimensions differ for " +
                         shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out.data() + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double s = av[i * k + p];
      const double* brow = bv.data() + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += s * brow[j];
    }
  }
  Tensor result({m, n}, std::move(out));
  tape.record({a, b}, result, [a, b, m, k, n](std::span<const double> g) mutable {
    const auto av = a.values();
    const auto bv = b.values();
    if (a.requires_grad()) {
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
          const double* brow = bv.data() + p * n;
          const double* grow = g.data() + i * n;
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
      }
    }
    if (b.requires_grad()) {
      auto& gb = b.grad_buffer();
      for (std::size_t i = 0; i < m; ++i) {
        const double* grow = g.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
          const double s = av[i * k + p];
          double* gbrow = gb.data() + p * n;
          for (std::size_t j = 0; j < n; ++j) gbrow[j] += s * grow[j];
        }
      }
    }
  });
  return result;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_2d("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> out(m * n);
  const auto av = a.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = av[i * n + j];
  Tensor result({n, m}, std::move(out));
  tape.record({a}, result, [a, m, n](std::span<const double> g) mutable {
    auto& ga = a.grad_buffer();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
  });
  return result;
}

Tensor apply_elementwise(Tape& tape, ElementwiseKind kind,
                         std::span<const Tensor> operands) {
  const bool binary =
      kind == ElementwiseKind::kAdd || kind == ElementwiseKind::kMul;
  const std::size_t expected = binary ? 2 : 1;
  if (operands.size() != expected) {
    throw std::invalid_argument("apply_elementwise: expected " +
                                std::to_string(expected) + " operand(s), got " +
                                std::to_string(operands.size()));
  }
  switch (kind) {
    case ElementwiseKind::kTanh:
      return unary(
          tape, operands[0], [](double x) { return std::tanh(x); },
          [](double, double y) { return 1.0 - y * y; });
    case ElementwiseKind::kSigmoid:
      return unary(
          tape, operands[0], [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
          [](double, double y) { return y * (1.0 - y); });
    case ElementwiseKind::kRelu:
      return unary(
          tape, operands[0], [](double x) { return x > 0.0 ? x : 0.0; },
          [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
    case ElementwiseKind::kAdd: {
      const Tensor& a = operands[0];
      const Tensor& b = operands[1];
      require_same_shape("add", a, b);
      std::vector<double> out(a.numel());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] + b.values()[i];
      Tensor result(a.shape(), std::move(out));
      tape.record({a, b}, result, [a, b](std::span<const double> g) mutable {
        if (a.requires_grad()) {
          auto& ga = a.grad_buffer();
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.grad_buffer();
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i];
        }
      });
      return result;
    }
    case ElementwiseKind::kMul: {
      const Tensor& a = operands[0];
      const Tensor& b = operands[1];
      require_same_shape("mul", a, b);
      std::vector<double> out(a.numel());
      for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] * b.values()[i];
      Tensor result(a.shape(), std::move(out));
      tape.record({a, b}, result, [a, b](std::span<const double> g) mutable {
        const auto av = a.values();
        const auto bv = b.values();
        if (a.requires_grad()) {
          auto& ga = a.grad_buffer();
          for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * bv[i];
        }
        if (b.requires_grad()) {
          auto& gb = b.grad_buffer();
          for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += g[i] * av[i];
        }
      });
      return result;
    }
  }
  throw std::invalid_argument("apply_elementwise: unknown kind");
}

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  const Tensor ops[] = {a, b};
  return apply_elementwise(tape, ElementwiseKind::kAdd, ops);
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  const Tensor ops[] = {a, b};
  return apply_elementwise(tape, ElementwiseKind::kMul, ops);
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return apply_elementwise(tape, ElementwiseKind::kTanh, std::span<const Tensor>(&a, 1));
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return apply_elementwise(tape, ElementwiseKind::kSigmoid, std::span<const Tensor>(&a, 1));
}

Tensor relu(Tape& tape, const Tensor& a) {
  return apply_elementwise(tape, ElementwiseKind::kRelu, std::span<const Tensor>(&a, 1));
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  std::vector<double> out(a.values().begin(), a.values().end());
  for (auto& v : out) v *= factor;
  Tensor result(a.shape(), std::move(out));
  tape.record({a}, result, [a, factor](std::span<const double> g) mutable {
    auto& ga = a.grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * factor;
  });
  return result;
}

Tensor tile_rows(Tape& tape, const Tensor& row, std::size_t n) {
  const std::size_t d = vector_width("tile_rows", row);
  if (n == 0) throw DimensionError("tile_rows: row count must be positive");
  std::vector<double> out(n * d);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(row.values().begin(), row.values().end(), out.begin() + i * d);
  Tensor result({n, d}, std::move(out));
  tape.record({row}, result, [row, n, d](std::span<const double> g) mutable {
    auto& gr = row.grad_buffer();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) gr[j] += g[i * d + j];
  });
  return result;
}

Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias) {
  require_2d("add_bias", x);
  return add(tape, x, tile_rows(tape, bias, x.rows()));
}

Tensor concat_last_dim(Tape& tape, const Tensor& a, const Tensor& b) {
  require_2d("concat_last_dim", a);
  require_2d("concat_last_dim", b);
  if (a.rows() != b.rows()) {
    throw DimensionError("concat_last_dim: leading dimensions differ for " +
                         shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  const std::size_t rows = a.rows(), da = a.cols(), db = b.cols();
  std::vector<double> out(rows * (da + db));
  for (std::size_t i = 0; i < rows; ++i) {
    std::copy_n(a.values().begin() + i * da, da, out.begin() + i * (da + db));
    std::copy_n(b.values().begin() + i * db, db,
                out.begin() + i * (da + db) + da);
  }
  Tensor result({rows, da + db}, std::move(out));
  tape.record({a, b}, result, [a, b, rows, da, db](std::span<const double> g) mutable {
    const std::size_t w = da + db;
    if (a.requires_grad()) {
      auto& ga = a.grad_buffer();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < da; ++j) ga[i * da + j] += g[i * w + j];
    }
    if (b.requires_grad()) {
      auto& gb = b.grad_buffer();
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < db; ++j) gb[i * db + j] += g[i * w + da + j];
    }
  });
  return result;
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no parts");
  const std::size_t cols = parts.front().cols();
  std::size_t rows = 0;
  for (const auto& p : parts) {
    require_2d("concat_rows", p);
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_to_string(parts.front().shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    rows += p.rows();
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts)
    out.insert(out.end(), p.values().begin(), p.values().end());
  Tensor result({rows, cols}, std::move(out));
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  tape.record(inputs, result, [inputs](std::span<const double> g) mutable {
    std::size_t offset = 0;
    for (auto& p : inputs) {
      if (p.requires_grad()) {
        auto& gp = p.grad_buffer();
        for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offset + i];
      }
      offset += p.numel();
    }
  });
  return result;
}

Tensor slice_cols(Tape& tape, const Tensor& a, std::size_t begin,
                  std::size_t count) {
  require_2d("slice_cols", a);
  if (count == 0 || begin + count > a.cols()) {
    throw DimensionError("slice_cols: columns [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of range for " +
                         shape_to_string(a.shape()));
  }
  const std::size_t rows = a.rows(), width = a.cols();
  std::vector<double> out(rows * count);
  for (std::size_t i = 0; i < rows; ++i)
    std::copy_n(a.values().begin() + i * width + begin, count,
                out.begin() + i * count);
  Tensor result({rows, count}, std::move(out));
  tape.record({a}, result,
              [a, rows, width, begin, count](std::span<const double> g) mutable {
                auto& ga = a.grad_buffer();
                for (std::size_t i = 0; i < rows; ++i)
                  for (std::size_t j = 0; j < count; ++j)
                    ga[i * width + begin + j] += g[i * count + j];
              });
  return result;
}

Tensor gather_rows(Tape& tape, const Tensor& table,
                   std::span<const std::int32_t> ids) {
  require_2d("gather_rows", table);
  if (ids.empty()) throw DimensionError("gather_rows: empty id list");
  const std::size_t d = table.cols();
  std::vector<double> out(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.rows()) {
      throw DimensionError("gather_rows: id " + std::to_string(ids[i]) +
                           " out of range for table " +
                           shape_to_string(table.shape()));
    }
    std::copy_n(table.values().begin() + ids[i] * d, d, out.begin() + i * d);
  }
  Tensor result({ids.size(), d}, std::move(out));
  std::vector<std::int32_t> saved(ids.begin(), ids.end());
  tape.record({table}, result, [table, saved, d](std::span<const double> g) mutable {
    auto& gt = table.grad_buffer();
    for (std::size_t i = 0; i < saved.size(); ++i)
      for (std::size_t j = 0; j < d; ++j) gt[saved[i] * d + j] += g[i * d + j];
  });
  return result;
}

Tensor masked_softmax_rows(Tape& tape, const Tensor& x,
                           std::span<const std::uint8_t> mask) {
  require_2d("masked_softmax_rows", x);
  const std::size_t rows = x.rows(), cols = x.cols();
  if (!mask.empty() && mask.size() != x.numel()) {
    throw DimensionError("masked_softmax_rows: mask has " +
                         std::to_string(mask.size()) + " entries for " +
                         shape_to_string(x.shape()));
  }
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  if (keep.empty()) keep.assign(x.numel(), 1);
  std::vector<double> out(x.numel(), 0.0);
  const auto xv = x.values();
  for (std::size_t i = 0; i < rows; ++i) {
    double max = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols; ++j)
      if (keep[i * cols + j]) max = std::max(max, xv[i * cols + j]);
    if (max == -std::numeric_limits<double>::infinity()) continue;
    double total = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (!keep[i * cols + j]) continue;
      out[i * cols + j] = std::exp(xv[i * cols + j] - max);
      total += out[i * cols + j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] /= total;
  }
  Tensor result(x.shape(), std::move(out));
  tape.record({x}, result, [x, result, rows, cols](std::span<const double> g) mutable {
    auto& gx = x.grad_buffer();
    const auto y = result.values();
    for (std::size_t i = 0; i < rows; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < cols; ++j) dot += y[i * cols + j] * g[i * cols + j];
      for (std::size_t j = 0; j < cols; ++j)
        gx[i * cols + j] += y[i * cols + j] * (g[i * cols + j] - dot);
    }
  });
  return result;
}

Tensor layer_norm(Tape& tape, const Tensor& x, const Tensor& gain,
                  const Tensor& bias, double eps) {
  const std::size_t d = last_dim(x);
  if (vector_width("layer_norm", gain) != d ||
      vector_width("layer_norm", bias) != d) {
    throw DimensionError("layer_norm: last dimension of " +
                         shape_to_string(x.shape()) + " does not match gain " +
                         shape_to_string(gain.shape()) + " / bias " +
                         shape_to_string(bias.shape()));
  }
  const std::size_t rows = x.numel() / d;
  std::vector<double> normalized(x.numel());
  std::vector<double> rstd(rows);
  std::vector<double> out(x.numel());
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  for (std::size_t i = 0; i < rows; ++i) {
    const double* row = xv.data() + i * d;
    double mean = 0.0;
    for (std::size_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (row[j] - mean) * (row[j] - mean);
    var /= static_cast<double>(d);
    rstd[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) {
      normalized[i * d + j] = (row[j] - mean) * rstd[i];
      out[i * d + j] = gv[j] * normalized[i * d + j] + bv[j];
    }
  }
  Tensor result(x.shape(), std::move(out));
  tape.record({x, gain, bias}, result,
              [x, gain, bias, normalized = std::move(normalized),
               rstd = std::move(rstd), rows, d](std::span<const double> g) mutable {
                const auto gv = gain.values();
                if (gain.requires_grad()) {
                  auto& gg = gain.grad_buffer();
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < d; ++j)
                      gg[j] += g[i * d + j] * normalized[i * d + j];
                }
                if (bias.requires_grad()) {
                  auto& gb = bias.grad_buffer();
                  for (std::size_t i = 0; i < rows; ++i)
                    for (std::size_t j = 0; j < d; ++j) gb[j] += g[i * d + j];
                }
                if (x.requires_grad()) {
                  auto& gx = x.grad_buffer();
                  const double inv_d = 1.0 / static_cast<double>(d);
                  for (std::size_t i = 0; i < rows; ++i) {
                    double mean_dn = 0.0, mean_dn_n = 0.0;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dn = g[i * d + j] * gv[j];
                      mean_dn += dn;
                      mean_dn_n += dn * normalized[i * d + j];
                    }
                    mean_dn *= inv_d;
                    mean_dn_n *= inv_d;
                    for (std::size_t j = 0; j < d; ++j) {
                      const double dn = g[i * d + j] * gv[j];
                      gx[i * d + j] += rstd[i] * (dn - mean_dn -
                                                  normalized[i * d + j] * mean_dn_n);
                    }
                  }
                }
              });
  return result;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::span<const std::int32_t> targets,
                             std::optional<std::int32_t> ignore_index) {
  require_2d("softmax_cross_entropy", logits);
  const std::size_t n = logits.rows(), v = logits.cols();
  if (targets.size() != n) {
    throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                         " targets for logits " + shape_to_string(logits.shape()));
  }
  std::vector<double> probs(n * v, 0.0);
  std::vector<std::uint8_t> active(n, 0);
  std::size_t count = 0;
  double total = 0.0;
  const auto lv = logits.values();
  for (std::size_t i = 0; i < n; ++i) {
    const auto t = targets[i];
    if (ignore_index && t == *ignore_index) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= v) {
      throw std::out_of_range("softmax_cross_entropy: target " + std::to_string(t) +
                              " outside [0, " + std::to_string(v) + ")");
    }
    const double* row = lv.data() + i * v;
    const double max = *std::max_element(row, row + v);
    double z = 0.0;
    for (std::size_t j = 0; j < v; ++j) {
      probs[i * v + j] = std::exp(row[j] - max);
      z += probs[i * v + j];
    }
    for (std::size_t j = 0; j < v; ++j) probs[i * v + j] /= z;
    total += std::log(z) + max - row[t];
    active[i] = 1;
    ++count;
  }
  const double loss = count ? total / static_cast<double>(count) : 0.0;
  Tensor result = Tensor::scalar(loss);
  std::vector<std::int32_t> saved(targets.begin(), targets.end());
  tape.record({logits}, result,
              [logits, probs = std::move(probs), active = std::move(active), saved,
               count, n, v](std::span<const double> g) mutable {
                if (count == 0) return;
                auto& gl = logits.grad_buffer();
                const double s = g[0] / static_cast<double>(count);
                for (std::size_t i = 0; i < n; ++i) {
                  if (!active[i]) continue;
                  for (std::size_t j = 0; j < v; ++j) gl[i * v + j] += s * probs[i * v + j];
                  gl[i * v + saved[i]] -= s;
                }
              });
  return result;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (double x : a.values()) total += x;
  Tensor result = Tensor::scalar(total);
  tape.record({a}, result, [a](std::span<const double> g) mutable {
    auto& ga = a.grad_buffer();
    for (auto& x : ga) x += g[0];
  });
  return result;
}

Tensor dropout(Tape& tape, const Tensor& a, std::span<const std::uint8_t> keep,
               double rate) {
  if (keep.size() != a.numel()) {
    throw DimensionError("dropout: mask has " + std::to_string(keep.size()) +
                         " entries for " + shape_to_string(a.shape()));
  }
  if (rate < 0.0 || rate >= 1.0) {
    throw std::invalid_argument("dropout: rate must lie in [0, 1)");
  }
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> scales(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) scales[i] = keep[i] ? factor : 0.0;
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * scales[i];
  Tensor result(a.shape(), std::move(out));
  tape.record({a}, result, [a, scales = std::move(scales)](std::span<const double> g) mutable {
    auto& ga = a.grad_buffer();
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g[i] * scales[i];
  });
  return result;
}

}  // namespace vasr::autograd
