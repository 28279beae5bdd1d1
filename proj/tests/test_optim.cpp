#include "xgnn/optim.hpp"
#include "xgnn/random.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace xgnn;
using namespace xgnn::ad;

namespace {

Matrix random_matrix(Index r, Index c, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

}  // namespace

TEST(Parameter, MaskedInitialValueIsProjected) {
  const ExpanderMask mask = sample_mask(4, 6, 1.0 / 3.0, 1);
  Parameter p("w", ParamRole::UpdateStep, Matrix::Ones(4, 6), mask);
  EXPECT_EQ(p.weight().value(), mask.dense());
  EXPECT_EQ(p.count(), 8);
  EXPECT_EQ(p.mask_matrix(), mask.dense());
}

TEST(Parameter, MaskShapeMustMatch) {
  EXPECT_THROW(Parameter("w", ParamRole::UpdateStep, Matrix::Ones(4, 5), sample_mask(4, 6, 0.5, 1)),
               InvalidArgument);
}

TEST(Parameter, UnmaskedCountsEveryEntry) {
  Parameter p("w", ParamRole::Head, Matrix::Zero(3, 7));
  EXPECT_EQ(p.count(), 21);
  EXPECT_FALSE(p.masked());
}

TEST(Adam, ZeroGradientLeavesParametersUnchanged) {
  Parameter p("w", ParamRole::Head, random_matrix(3, 3, 1));
  const Matrix before = p.weight().value();
  Adam opt({&p}, {});
  opt.zero_grad();
  opt.step();
  EXPECT_EQ(p.weight().value(), before);
}

TEST(Adam, ZeroGradientWithDecayShrinksTowardZero) {
  Parameter p("w", ParamRole::Head, random_matrix(3, 3, 2));
  const Matrix before = p.weight().value();
  AdamOptions o;
  o.weight_decay = 0.1;
  Adam opt({&p}, o);
  opt.step();
  for (Index i = 0; i < before.size(); ++i)
    EXPECT_LT(std::abs(p.weight().value().data()[i]), std::abs(before.data()[i]));
}

TEST(Adam, FirstStepIsLrTimesSign) {
  Parameter p("w", ParamRole::Head, Matrix::Zero(2, 2));
  Matrix c(2, 2);
  c << 3.0, -0.5, 2e-3, -40.0;
  backward(sum(mul(p.weight(), Tensor::constant(c))));
  AdamOptions o;
  o.lr = 0.01;
  Adam opt({&p}, o);
  opt.step();
  for (Index i = 0; i < 4; ++i) {
    const double g = c.data()[i];
    EXPECT_DOUBLE_EQ(p.weight().value().data()[i], -0.01 * g / (std::abs(g) + 1e-8));
    EXPECT_NEAR(p.weight().value().data()[i], -0.01 * (g > 0 ? 1 : -1), 0.01 * 1e-8 / std::abs(g) + 1e-15);
  }
}

TEST(Adam, MaskedEntriesStayZero) {
  const ExpanderMask mask = sample_mask(5, 8, 0.25, 3);
  Parameter p("w", ParamRole::UpdateStep, random_matrix(5, 8, 4), mask);
  const Tensor x = Tensor::constant(random_matrix(6, 5, 5));
  AdamOptions o;
  o.lr = 0.05;
  o.weight_decay = 1e-3;
  Adam opt({&p}, o);
  for (int step = 0; step < 100; ++step) {
    opt.zero_grad();
    backward(sum(tanh(matmul(x, p.effective()))));
    opt.step();
    for (Index i = 0; i < p.weight().value().size(); ++i)
      if (mask.dense().data()[i] == 0.0) ASSERT_EQ(p.weight().value().data()[i], 0.0);
  }
  EXPECT_EQ(opt.steps(), 100);
}

TEST(Adam, ReducesQuadratic) {
  Parameter p("w", ParamRole::Head, Matrix::Constant(1, 3, 5.0));
  AdamOptions o;
  o.lr = 0.1;
  Adam opt({&p}, o);
  for (int i = 0; i < 300; ++i) {
    opt.zero_grad();
    backward(sum(mul(p.weight(), p.weight())));
    opt.step();
  }
  EXPECT_LT(p.weight().value().cwiseAbs().maxCoeff(), 0.1);
}
