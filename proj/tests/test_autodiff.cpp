#include <cmath>
#include <functional>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gde/autodiff/gradcheck.hpp"
#include "gde/autodiff/ops.hpp"
#include "gde/autodiff/parameters.hpp"
#include "gde/cli/gradcheck_suite.hpp"
#include "gde/errors.hpp"
#include "support/helpers.hpp"

using namespace gde;
using ad::Matrix;
using gde::testing::mat;
using gde::testing::uniform;

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  ad::Tape tape;
  const Matrix m = mat({{1.5, -2}, {0.25, 4}});
  const auto c = ad::matmul(tape.constant(Matrix::Identity(2, 2)), tape.constant(m));
  EXPECT_EQ(c.value(), m);
}

TEST(Matmul, HandEvaluatedProduct) {
  ad::Tape tape;
  const auto c = ad::matmul(tape.constant(mat({{1, 2}, {3, 4}})), tape.constant(mat({{1}, {1}})));
  EXPECT_EQ(c.value(), mat({{3}, {7}}));
}

TEST(Matmul, GradientOfSumIsColumnBroadcast) {
  ad::Tape tape;
  const auto a = tape.variable(mat({{0.3, -1}, {2, 0.5}}));
  const auto loss = ad::sum(ad::matmul(a, tape.constant(mat({{1}, {1}}))));
  const auto g = tape.backward(loss);
  EXPECT_EQ(g[a], mat({{1, 1}, {1, 1}}));

  // Central differences, eps 1e-5.
  for (ad::Index i = 0; i < 2; ++i)
    for (ad::Index j = 0; j < 2; ++j) {
      Matrix plus = a.value(), minus = a.value();
      plus(i, j) += 1e-5;
      minus(i, j) -= 1e-5;
      const double fd = ((plus * mat({{1}, {1}})).sum() - (minus * mat({{1}, {1}})).sum()) / 2e-5;
      EXPECT_NEAR(fd, g[a](i, j), 1e-9);
    }
}

TEST(Matmul, ShapeErrorNamesBothShapes) {
  ad::Tape tape;
  try {
    ad::matmul(tape.constant(Matrix::Zero(2, 3)), tape.constant(Matrix::Zero(2, 3)));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("2x3"), std::string::npos) << what;
    EXPECT_NE(what.find("x 2x3"), std::string::npos) << what;
  }
}

TEST(Matmul, AssociativityOnUnitScaleInputs) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape tape;
    const auto a = tape.constant(uniform(4, 5, rng));
    const auto b = tape.constant(uniform(5, 3, rng));
    const auto c = tape.constant(uniform(3, 6, rng));
    const Matrix left = ad::matmul(ad::matmul(a, b), c).value();
    const Matrix right = ad::matmul(a, ad::matmul(b, c)).value();
    EXPECT_LT((left - right).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Elementwise, KnownValues) {
  ad::Tape tape;
  EXPECT_DOUBLE_EQ(ad::sigmoid(tape.constant(Matrix::Zero(1, 1))).value()(0, 0), 0.5);
  EXPECT_NEAR(ad::softplus(tape.constant(Matrix::Zero(1, 1))).value()(0, 0), 0.693147, 1e-6);
  EXPECT_DOUBLE_EQ(ad::softplus(tape.constant(Matrix::Zero(1, 1))).value()(0, 0), std::log(2.0));
  EXPECT_EQ(ad::hadamard(tape.constant(mat({{2, 3}})), tape.constant(mat({{4, 5}}))).value(), mat({{8, 15}}));
  EXPECT_EQ(ad::relu(tape.constant(mat({{-1, 0, 2}}))).value(), mat({{0, 0, 2}}));
  EXPECT_EQ(ad::add(tape.constant(mat({{1, 2}})), tape.constant(mat({{3, 4}}))).value(), mat({{4, 6}}));
  EXPECT_EQ(ad::sub(tape.constant(mat({{1, 2}})), tape.constant(mat({{3, 4}}))).value(), mat({{-2, -2}}));
  EXPECT_EQ(ad::scale(tape.constant(mat({{1, -2}})), 3.0).value(), mat({{3, -6}}));
  EXPECT_DOUBLE_EQ(ad::tanh(tape.constant(mat({{0.5}}))).value()(0, 0), std::tanh(0.5));
}

TEST(Elementwise, SoftplusIsOverflowSafe) {
  ad::Tape tape;
  const auto x = tape.variable(mat({{800, -800, 30}}));
  const auto y = ad::softplus(x);
  EXPECT_TRUE(ad::all_finite(y.value()));
  EXPECT_DOUBLE_EQ(y.value()(0, 0), 800.0);
  EXPECT_GE(y.value()(0, 1), 0.0);
  EXPECT_LT(y.value()(0, 1), 1e-300);
  // softplus' = sigmoid
  const auto g = tape.backward(ad::sum(y));
  EXPECT_DOUBLE_EQ(g[x](0, 0), 1.0);
  EXPECT_NEAR(g[x](0, 2), 1.0 / (1.0 + std::exp(-30.0)), 1e-15);
}

TEST(Elementwise, BinaryShapeMismatch) {
  ad::Tape tape;
  const auto a = tape.constant(Matrix::Zero(1, 2));
  const auto b = tape.constant(Matrix::Zero(2, 1));
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::sub(a, b), ShapeError);
  EXPECT_THROW(ad::hadamard(a, b), ShapeError);
}

TEST(Backward, SumOfWeightsGivesOnes) {
  ad::Tape tape;
  const auto w = tape.variable(mat({{1, 2}, {3, 4}}));
  EXPECT_EQ(tape.backward(ad::sum(w))[w], Matrix::Ones(2, 2));
}

TEST(Backward, SigmoidAtZeroGivesQuarter) {
  ad::Tape tape;
  const auto w = tape.variable(Matrix::Zero(2, 2));
  EXPECT_EQ(tape.backward(ad::sum(ad::sigmoid(w)))[w], Matrix::Constant(2, 2, 0.25));
}

TEST(Backward, NonScalarLossIsContractError) {
  ad::Tape tape;
  const auto w = tape.variable(Matrix::Zero(2, 2));
  EXPECT_THROW(tape.backward(w), ContractError);
}

TEST(Backward, ConstantsReceiveNoGradient) {
  ad::Tape tape;
  const auto w = tape.variable(mat({{1.0}}));
  const auto c = tape.constant(mat({{2.0}}));
  const auto g = tape.backward(ad::sum(ad::hadamard(w, c)));
  EXPECT_TRUE(g.contains(w));
  EXPECT_FALSE(g.contains(c));
  EXPECT_FALSE(c.requires_grad());
}

TEST(Backward, TapeIsReusableAndDeterministic) {
  std::mt19937_64 rng(3);
  ad::Tape tape;
  const auto w = tape.variable(uniform(3, 3, rng));
  const auto x = tape.constant(uniform(4, 3, rng));
  const auto loss = ad::mean(ad::softplus(ad::matmul(x, w)));
  const std::size_t size = tape.size();
  const Matrix g1 = tape.backward(loss)[w];
  const Matrix g2 = tape.backward(loss)[w];
  EXPECT_EQ(g1, g2);
  EXPECT_EQ(tape.size(), size);
}

TEST(Backward, RewindDropsLaterNodes) {
  ad::Tape tape;
  const auto w = tape.variable(mat({{2.0}}));
  const auto mark = tape.mark();
  ad::scale(w, 3.0);
  ad::scale(w, 4.0);
  tape.rewind(mark);
  EXPECT_EQ(tape.size(), mark);
  const auto g = tape.backward(ad::sum(ad::scale(w, 5.0)));
  EXPECT_EQ(g[w](0, 0), 5.0);
  EXPECT_THROW(tape.rewind(tape.size() + 1), ContractError);
}

TEST(Backward, GradientsAccumulateOverSharedInputs) {
  ad::Tape tape;
  const auto w = tape.variable(mat({{3.0}}));
  // d/dw (w*w + w) = 2w + 1
  const auto g = tape.backward(ad::sum(ad::add(ad::hadamard(w, w), w)));
  EXPECT_EQ(g[w](0, 0), 7.0);
}

TEST(Mse, ValueAndGradient) {
  ad::Tape tape;
  const auto p = tape.variable(mat({{0, 0}}));
  const auto loss = ad::mse(p, tape.constant(mat({{3, 4}})));
  EXPECT_DOUBLE_EQ(loss.value()(0, 0), 12.5);
  // 2 (pred - target) / count
  EXPECT_EQ(tape.backward(loss)[p], mat({{-3, -4}}));
}

TEST(Ops, ReshapeAndSliceChecks) {
  ad::Tape tape;
  const auto a = tape.constant(mat({{1, 2, 3}, {4, 5, 6}}));
  EXPECT_EQ(ad::reshape(a, 3, 2).value(), mat({{1, 2}, {3, 4}, {5, 6}}));
  EXPECT_EQ(ad::slice_cols(a, 1, 2).value(), mat({{2, 3}, {5, 6}}));
  EXPECT_EQ(ad::concat_cols(a, a).cols(), 6);
  EXPECT_THROW(ad::reshape(a, 4, 2), ShapeError);
  EXPECT_THROW(ad::slice_cols(a, 2, 2), ShapeError);
  EXPECT_THROW(ad::concat_cols(a, tape.constant(Matrix::Zero(3, 1))), ShapeError);
}

TEST(Ops, MaskedSoftmaxRowsSumToOne) {
  ad::Tape tape;
  auto mask = std::make_shared<const Matrix>(mat({{1, 0, 1}, {0, 1, 0}}));
  const auto s = ad::masked_softmax_rows(tape.constant(mat({{0.3, 9, -1}, {5, 2, 7}})), mask);
  EXPECT_NEAR(s.value().row(0).sum(), 1.0, 1e-15);
  EXPECT_EQ(s.value()(0, 1), 0.0);
  EXPECT_EQ(s.value()(1, 1), 1.0);
}

TEST(Ops, SoftmaxCrossEntropyKnownValue) {
  ad::Tape tape;
  const auto logits = tape.variable(Matrix::Zero(2, 2));
  const auto loss = ad::softmax_cross_entropy(logits, {0, 1}, {1, 0});
  EXPECT_NEAR(loss.value()(0, 0), std::log(2.0), 1e-15);
  const auto g = tape.backward(loss);
  EXPECT_NEAR(g[logits](0, 0), -0.5, 1e-15);
  EXPECT_EQ(g[logits](1, 0), 0.0);
  EXPECT_THROW(ad::softmax_cross_entropy(logits, {0, 1}, {0, 0}), ContractError);
}

// Every op against central differences on 100 random inputs in [-1, 1].
TEST(Gradcheck, OpsOverRandomTrials) {
  std::mt19937_64 rng(11);
  struct Case {
    const char* name;
    std::function<ad::Tensor(const ad::Binding&)> loss;
  };
  const std::vector<Case> cases = {
      {"matmul", [](const ad::Binding& b) { return ad::sum(ad::matmul(b["a"], b["b"])); }},
      {"hadamard", [](const ad::Binding& b) { return ad::sum(ad::hadamard(b["a"], ad::tanh(b["a"]))); }},
      {"sigmoid", [](const ad::Binding& b) { return ad::sum(ad::sigmoid(b["a"])); }},
      {"tanh", [](const ad::Binding& b) { return ad::mean(ad::tanh(b["a"])); }},
      {"softplus", [](const ad::Binding& b) { return ad::sum(ad::softplus(b["a"])); }},
      {"sub_scale", [](const ad::Binding& b) { return ad::sum(ad::scale(ad::sub(b["a"], ad::sigmoid(b["a"])), 1.7)); }},
      {"mse", [](const ad::Binding& b) { return ad::mse(ad::matmul(b["a"], b["b"]), b["c"]); }},
      {"one_minus", [](const ad::Binding& b) { return ad::sum(ad::hadamard(ad::one_minus(b["a"]), b["a"])); }},
  };
  for (const auto& c : cases) {
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      ad::ParameterSet params;
      params.add("a", uniform(3, 4, rng));
      params.add("b", uniform(4, 2, rng));
      params.add("c", uniform(3, 2, rng));
      const auto r = ad::gradcheck(c.name, params, c.loss, 1e-4);
      worst = std::max(worst, r.worst_relative);
      ASSERT_TRUE(r.passed) << c.name << " trial " << trial << " rel " << r.worst_relative;
    }
    EXPECT_LT(worst, 1e-4) << c.name;
  }
}

TEST(Gradcheck, SuiteCoversOpsAndModelsAndPasses) {
  const auto results = cli::run_gradcheck_suite();
  std::set<std::string> names;
  for (const auto& r : results) {
    names.insert(r.name);
    EXPECT_TRUE(r.passed) << r.name << " " << r.worst_relative;
    EXPECT_FALSE(r.worst_parameter.empty()) << r.name;
  }
  for (const char* required : {"matmul", "sigmoid", "softplus", "gcde_field", "gcgru_cell", "second_order_field",
                               "gmde_field", "gade_field", "output_head", "solve_rk4", "solve_dopri5",
                               "hybrid_rollout_3_jumps"})
    EXPECT_TRUE(names.count(required)) << required;
}

TEST(Gradcheck, NegativeControlIsDetected) {
  const auto results = cli::run_gradcheck_suite({0, true});
  const auto& last = results.back();
  EXPECT_EQ(last.name.rfind("negative_control", 0), 0u);
  EXPECT_FALSE(last.passed);
  EXPECT_GT(last.worst_relative, 1e-2);
}

TEST(Parameters, JsonCheckpointFormatAndRoundTrip) {
  std::mt19937_64 rng(5);
  ad::ParameterSet params;
  params.add("w", uniform(2, 3, rng));
  params.add_zeros("b", 1, 3);
  const auto j = params.to_json();
  EXPECT_EQ(j.at("w").at("rows"), 2);
  EXPECT_EQ(j.at("w").at("cols"), 3);
  EXPECT_EQ(j.at("w").at("data").size(), 6u);
  EXPECT_EQ(ad::ParameterSet::from_json(j), params);

  gde::testing::TempDir dir("params");
  params.save(dir / "p.json");
  EXPECT_EQ(ad::ParameterSet::load(dir / "p.json"), params);
}

TEST(Parameters, MalformedCheckpointIsIoError) {
  nlohmann::json j = {{"w", {{"rows", 2}, {"cols", 2}, {"data", {1.0, 2.0, 3.0}}}}};
  EXPECT_THROW(ad::ParameterSet::from_json(j), IoError);
  EXPECT_THROW(ad::ParameterSet::from_json(nlohmann::json::array()), IoError);
  EXPECT_THROW(ad::ParameterSet::load("/nonexistent/checkpoint.json"), IoError);
}

TEST(Parameters, GlorotRange) {
  std::mt19937_64 rng(2);
  ad::ParameterSet params;
  const Matrix& w = params.add_glorot("w", 30, 20, rng);
  const double bound = std::sqrt(6.0 / 50.0);
  EXPECT_LE(w.cwiseAbs().maxCoeff(), bound);
  EXPECT_GT(w.cwiseAbs().maxCoeff(), 0.5 * bound);
  EXPECT_THROW(params.add_zeros("w", 1, 1), ContractError);
}
