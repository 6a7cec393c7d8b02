#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "test_util.hpp"

namespace vasr {
namespace {

using autograd::DimensionError;
using autograd::ElementwiseKind;
using autograd::TapeError;
using autograd::Tensor;
using testing::max_op_grad_error;
using testing::random_tensor;

void expect_values(const Tensor& t, std::vector<double> expected, double tol = 0.0) {
  ASSERT_EQ(t.numel(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_NEAR(t.values()[i], expected[i], tol) << "index " << i;
  }
}

TEST(MatmulTest, IdentityLeavesOperandUnchanged) {
  autograd::Tape tape;
  auto eye = Tensor::matrix({{1, 0}, {0, 1}});
  auto b = Tensor::matrix({{1, 2}, {3, 4}});
  expect_values(autograd::matmul(tape, eye, b), {1, 2, 3, 4});
}

TEST(MatmulTest, ProjectorSelectsFirstRow) {
  autograd::Tape tape;
  auto p = Tensor::matrix({{1, 0}, {0, 0}});
  auto b = Tensor::matrix({{5, 6}, {7, 8}});
  expect_values(autograd::matmul(tape, p, b), {5, 6, 0, 0});
}

TEST(MatmulTest, ShapeMismatchNamesBothShapes) {
  autograd::Tape tape;
  auto a = Tensor::zeros({2, 3});
  auto b = Tensor::zeros({2, 3});
  try {
    autograd::matmul(tape, a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos) << msg;
  }
}

TEST(ElementwiseTest, Examples) {
  autograd::Tape tape;
  expect_values(autograd::tanh(tape, Tensor::scalar(0.0)), {0.0});
  expect_values(autograd::add(tape, Tensor({2}, {1, 2}), Tensor({2}, {3, 4})), {4, 6});
  expect_values(autograd::mul(tape, Tensor({2}, {1, 2}), Tensor({2}, {3, 4})), {3, 8});
  expect_values(autograd::relu(tape, Tensor({3}, {-1, 0, 2})), {0, 0, 2});
  expect_values(autograd::sigmoid(tape, Tensor::scalar(0.0)), {0.5});
}

TEST(ElementwiseTest, ParsesKindsAndRejectsArity) {
  EXPECT_EQ(autograd::parse_elementwise_kind("sigmoid"), ElementwiseKind::kSigmoid);
  EXPECT_THROW(autograd::parse_elementwise_kind("gelu"), std::invalid_argument);
  autograd::Tape tape;
  std::vector<Tensor> one{Tensor({2}, {1, 2})};
  EXPECT_THROW(autograd::apply_elementwise(tape, ElementwiseKind::kAdd, one),
               std::invalid_argument);
  EXPECT_THROW(autograd::add(tape, Tensor::zeros({2}), Tensor::zeros({3})), DimensionError);
}

TEST(ConcatTest, LastDimExample) {
  autograd::Tape tape;
  auto out = autograd::concat_last_dim(tape, Tensor::matrix({{1}, {2}}),
                                       Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(out.shape(), (autograd::Shape{2, 2}));
  expect_values(out, {1, 3, 2, 4});
  EXPECT_THROW(autograd::concat_last_dim(tape, Tensor::zeros({2, 1}), Tensor::zeros({3, 1})),
               DimensionError);
}

TEST(CrossEntropyTest, ConfidentCorrectClassIsNearZero) {
  autograd::Tape tape;
  std::vector<std::int32_t> target{0};
  auto loss = autograd::softmax_cross_entropy(tape, Tensor::matrix({{10, -10}}), target);
  EXPECT_LT(loss.item(), 1e-4);
}

TEST(CrossEntropyTest, UniformLogitsGiveLogV) {
  autograd::Tape tape;
  for (std::int32_t t = 0; t < 4; ++t) {
    std::vector<std::int32_t> target{t};
    auto loss = autograd::softmax_cross_entropy(tape, Tensor::matrix({{0.3, 0.3, 0.3, 0.3}}),
                                                target);
    EXPECT_NEAR(loss.item(), std::log(4.0), 1e-12);
  }
}

TEST(CrossEntropyTest, IgnoredRowsDropOutOfTheMean) {
  autograd::Tape tape;
  auto logits = Tensor::matrix({{10, -10}, {0, 0}}, true);
  std::vector<std::int32_t> targets{1, 0};
  auto with_ignore = autograd::softmax_cross_entropy(tape, logits, targets, 1);
  EXPECT_NEAR(with_ignore.item(), std::log(2.0), 1e-12);
  tape.backward(with_ignore);
  EXPECT_EQ(logits.grad()[0], 0.0);
  EXPECT_EQ(logits.grad()[1], 0.0);

  std::vector<std::int32_t> bad{2, 0};
  autograd::Tape t2;
  EXPECT_THROW(autograd::softmax_cross_entropy(t2, logits, bad), std::out_of_range);
}

TEST(LayerNormTest, ConstantRowBecomesZero) {
  autograd::Tape tape;
  auto out = autograd::layer_norm(tape, Tensor::matrix({{3, 3, 3, 3}}), Tensor::full({4}, 1.0),
                                  Tensor::zeros({4}));
  expect_values(out, {0, 0, 0, 0}, 0.0);
}

TEST(LayerNormTest, StandardizedRowUnchanged) {
  autograd::Tape tape;
  const double a = 1.0;  // mean 0, population variance 1
  auto row = Tensor::matrix({{-a, a, -a, a}});
  auto out = autograd::layer_norm(tape, row, Tensor::full({4}, 1.0), Tensor::zeros({4}));
  expect_values(out, {-1, 1, -1, 1}, 1e-4);
}

TEST(MaskedSoftmaxTest, MaskedEntriesAreExactlyZero) {
  autograd::Tape tape;
  std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 0};
  auto out = autograd::masked_softmax_rows(tape, Tensor::matrix({{1, 50, 1}, {2, 2, -40}}), mask);
  expect_values(out, {0.5, 0.0, 0.5, 0.5, 0.5, 0.0}, 1e-15);
  EXPECT_EQ(out.values()[1], 0.0);
  EXPECT_EQ(out.values()[5], 0.0);
}

TEST(BackwardTest, SumGivesOnes) {
  Rng rng(3);
  auto x = random_tensor(rng, {3, 4});
  autograd::Tape tape;
  tape.backward(autograd::sum(tape, x));
  for (double g : x.grad()) EXPECT_EQ(g, 1.0);
}

TEST(BackwardTest, SquareAtThreeGivesSix) {
  auto x = Tensor({1}, {3.0}, true);
  autograd::Tape tape;
  tape.backward(autograd::sum(tape, autograd::mul(tape, x, x)));
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(BackwardTest, DiamondGraphAccumulates) {
  Rng rng(5);
  auto x = random_tensor(rng, {2, 3});
  auto w = random_tensor(rng, {3, 3});
  // x feeds two branches that are later joined: gradients must add.
  const double err = max_op_grad_error(
      [](autograd::Tape& t, const std::vector<Tensor>& in) {
        auto left = autograd::tanh(t, autograd::matmul(t, in[0], in[1]));
        auto right = autograd::mul(t, in[0], in[0]);
        return autograd::add(t, left, right);
      },
      {x, w});
  EXPECT_LT(err, 1e-5);

  // The same tensor used twice by one op.
  auto y = Tensor({2}, {1.5, -2.0}, true);
  autograd::Tape tape;
  tape.backward(autograd::sum(tape, autograd::add(tape, y, y)));
  EXPECT_EQ(y.grad()[0], 2.0);
  EXPECT_EQ(y.grad()[1], 2.0);
}

TEST(BackwardTest, GradsAccumulateAcrossTapes) {
  auto x = Tensor({1}, {2.0}, true);
  for (int i = 0; i < 2; ++i) {
    autograd::Tape tape;
    tape.backward(autograd::sum(tape, autograd::scale(tape, x, 3.0)));
  }
  EXPECT_EQ(x.grad()[0], 6.0);
}

TEST(BackwardTest, ErrorCases) {
  auto x = Tensor({2}, {1.0, 2.0}, true);
  autograd::Tape tape;
  auto loss = autograd::sum(tape, x);
  EXPECT_THROW(tape.backward(autograd::scale(tape, x, 2.0)), TapeError);  // not scalar
  tape.backward(loss);
  EXPECT_THROW(tape.backward(loss), TapeError);
  tape.reset();
  auto loss2 = autograd::sum(tape, x);
  EXPECT_NO_THROW(tape.backward(loss2));

  autograd::Tape other;
  EXPECT_THROW(other.backward(loss2), TapeError);
}

TEST(BackwardTest, NonRecordingTapeRecordsNothing) {
  auto x = Tensor({2}, {1.0, 2.0}, true);
  autograd::Tape tape(false);
  auto y = autograd::sum(tape, autograd::mul(tape, x, x));
  EXPECT_EQ(tape.size(), 0u);
  EXPECT_EQ(y.item(), 5.0);
}

// Finite-difference audit of every differentiable op on random inputs.
class OpGradTest : public ::testing::Test {
 protected:
  Rng rng{1234};
};

TEST_F(OpGradTest, Matmul) {
  auto a = random_tensor(rng, {3, 4});
  auto b = random_tensor(rng, {4, 2});
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::matmul(t, in[0], in[1]); },
                              {a, b}),
            1e-5);
}

TEST_F(OpGradTest, Transpose) {
  auto a = random_tensor(rng, {3, 5});
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::transpose(t, in[0]); },
                              {a}),
            1e-5);
}

TEST_F(OpGradTest, ElementwiseKinds) {
  auto a = random_tensor(rng, {4, 3});
  auto b = random_tensor(rng, {4, 3});
  for (auto kind : {ElementwiseKind::kTanh, ElementwiseKind::kSigmoid}) {
    EXPECT_LT(max_op_grad_error(
                  [kind](auto& t, auto& in) {
                    return autograd::apply_elementwise(t, kind, std::span(in.data(), 1));
                  },
                  {a}),
              1e-5);
  }
  for (auto kind : {ElementwiseKind::kAdd, ElementwiseKind::kMul}) {
    EXPECT_LT(max_op_grad_error(
                  [kind](auto& t, auto& in) { return autograd::apply_elementwise(t, kind, in); },
                  {a, b}),
              1e-5);
  }
  // relu away from the kink
  auto c = Tensor({4}, {-1.5, -0.3, 0.4, 2.0}, true);
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::relu(t, in[0]); }, {c}),
            1e-5);
}

TEST_F(OpGradTest, ShapeOps) {
  auto row = random_tensor(rng, {1, 4});
  auto x = random_tensor(rng, {3, 4});
  auto y = random_tensor(rng, {2, 4});
  auto z = random_tensor(rng, {3, 2});
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::tile_rows(t, in[0], 5); },
                              {row}),
            1e-5);
  EXPECT_LT(max_op_grad_error(
                [](auto& t, auto& in) { return autograd::add_bias(t, in[0], in[1]); }, {x, row}),
            1e-5);
  EXPECT_LT(max_op_grad_error(
                [](auto& t, auto& in) { return autograd::concat_last_dim(t, in[0], in[1]); },
                {x, z}),
            1e-5);
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::concat_rows(t, in); },
                              {x, y}),
            1e-5);
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::slice_cols(t, in[0], 1, 2); },
                              {x}),
            1e-5);
  EXPECT_LT(max_op_grad_error([](auto& t, auto& in) { return autograd::scale(t, in[0], -0.7); },
                              {x}),
            1e-5);
}

TEST_F(OpGradTest, GatherRowsAccumulatesRepeatedIds) {
  auto table = random_tensor(rng, {5, 3});
  const std::vector<std::int32_t> ids{4, 1, 4, 0, 4};
  EXPECT_LT(max_op_grad_error(
                [&](auto& t, auto& in) { return autograd::gather_rows(t, in[0], ids); }, {table}),
            1e-5);
}

TEST_F(OpGradTest, MaskedSoftmax) {
  auto x = random_tensor(rng, {3, 4});
  const std::vector<std::uint8_t> mask{1, 1, 0, 1, 0, 1, 1, 1, 1, 0, 0, 1};
  EXPECT_LT(max_op_grad_error(
                [&](auto& t, auto& in) { return autograd::masked_softmax_rows(t, in[0], mask); },
                {x}),
            1e-5);
  EXPECT_LT(max_op_grad_error(
                [](auto& t, auto& in) { return autograd::masked_softmax_rows(t, in[0]); }, {x}),
            1e-5);
}

TEST_F(OpGradTest, LayerNorm) {
  auto x = random_tensor(rng, {3, 6});
  auto g = random_tensor(rng, {6});
  auto b = random_tensor(rng, {6});
  EXPECT_LT(max_op_grad_error(
                [](auto& t, auto& in) { return autograd::layer_norm(t, in[0], in[1], in[2]); },
                {x, g, b}),
            1e-5);
}

TEST_F(OpGradTest, CrossEntropyWithIgnore) {
  auto logits = random_tensor(rng, {4, 5});
  const std::vector<std::int32_t> targets{2, 0, 4, 0};
  EXPECT_LT(max_op_grad_error(
                [&](auto& t, auto& in) {
                  return autograd::softmax_cross_entropy(t, in[0], targets, 0);
                },
                {logits}),
            1e-5);
}

TEST_F(OpGradTest, Dropout) {
  auto x = random_tensor(rng, {2, 3});
  const std::vector<std::uint8_t> keep{1, 0, 1, 1, 1, 0};
  EXPECT_LT(max_op_grad_error(
                [&](auto& t, auto& in) { return autograd::dropout(t, in[0], keep, 0.25); }, {x}),
            1e-5);
  autograd::Tape tape;
  auto y = autograd::dropout(tape, x, keep, 0.25);
  EXPECT_EQ(y.values()[1], 0.0);
  EXPECT_DOUBLE_EQ(y.values()[0], x.values()[0] / 0.75);
}

TEST(DeterminismTest, SameSeedSameValuesAndGrads) {
  auto run = [] {
    Rng rng(77);
    auto a = random_tensor(rng, {3, 3});
    auto b = random_tensor(rng, {3, 3});
    autograd::Tape tape;
    auto loss = autograd::sum(
        tape, autograd::tanh(tape, autograd::matmul(tape, a, autograd::sigmoid(tape, b))));
    tape.backward(loss);
    std::vector<double> out(a.grad().begin(), a.grad().end());
    out.push_back(loss.item());
    return out;
  };
  EXPECT_EQ(run(), run());
}

}  // namespace
}  // namespace vasr
