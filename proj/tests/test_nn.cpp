#include <gtest/gtest.h>

#include "support/gradcheck.hpp"
#include "uavckm/nn.hpp"

using namespace uavckm;

namespace {

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-scale, scale);
  return m;
}

}  // namespace

TEST(Forward, ZeroNetworkGivesZero) {
  Rng rng(1);
  Network net = Network::build(4, {{3, Activation::identity, false}}, rng);
  net.set_zero();
  EXPECT_TRUE(net.forward(random_matrix(rng, 5, 4)).isZero(0.0));
}

TEST(Forward, IdentityLayerPassesInput) {
  Rng rng(2);
  Network net = Network::build(3, {{3, Activation::identity, false}}, rng);
  net.layers()[0].weight = Matrix::Identity(3, 3);
  const Matrix x = random_matrix(rng, 6, 3);
  EXPECT_EQ(net.forward(x), x);
}

TEST(Forward, BatchNormStandardizesInTrainMode) {
  Rng rng(3);
  Network net = Network::build(2, {{3, Activation::identity, true}}, rng);
  auto& l = net.layers()[0];
  l.gamma << 2.0, 0.5, 3.0;
  l.beta << -1.0, 4.0, 0.25;
  const Matrix x = random_matrix(rng, 64, 2, 500.0);
  const Matrix y = net.forward(x, Mode::train);
  const Matrix mean = y.colwise().mean();
  for (int c = 0; c < 3; ++c) {
    const double var = (y.col(c).array() - mean(0, c)).square().mean();
    EXPECT_NEAR(mean(0, c), l.beta(0, c), 1e-6);
    EXPECT_NEAR(std::sqrt(var), l.gamma(0, c), 1e-6);
  }
}

TEST(Forward, DimensionMismatchNamesLayer) {
  Rng rng(4);
  Network net = Network::build(3, {{4, Activation::relu, false}, {2, Activation::identity, false}}, rng);
  try {
    net.forward(Matrix::Zero(2, 5));
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos);
  }
}

TEST(Forward, InferModeIsPureAndUsesRunningStats) {
  Rng rng(5);
  Network net = Network::build(3, {{8, Activation::relu, true}, {2, Activation::tanh, false}}, rng);
  const Matrix x = random_matrix(rng, 16, 3);
  ForwardCache cache;
  net.forward(x, Mode::train, &cache);
  net.absorb_batch_statistics(cache);
  const Matrix a = net.forward(x);
  const Matrix b = net.forward(x);
  EXPECT_EQ(a, b);
  // Row-by-row inference equals batch inference.
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    EXPECT_LT((net.forward(x.row(r)) - a.row(r)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Backward, ZeroOutputGradientGivesZeroGradients) {
  Rng rng(6);
  Network net = Network::build(3, {{4, Activation::tanh, true}, {2, Activation::identity, false}}, rng);
  ForwardCache cache;
  const Matrix x = random_matrix(rng, 5, 3);
  net.forward(x, Mode::train, &cache);
  const Gradients g = net.backward(cache, Matrix::Zero(5, 2));
  for (const auto* t : g.tensors()) EXPECT_TRUE(t->isZero(0.0));
}

TEST(Backward, LinearLayerMseClosedForm) {
  // dMSE/dW = (2/N) x^T (pred - target), N = number of output entries.
  Rng rng(7);
  Network net = Network::build(2, {{2, Activation::identity, false}}, rng);
  net.layers()[0].weight << 1.0, 2.0, 3.0, 4.0;
  Matrix x(2, 2);
  x << 1.0, -1.0, 0.5, 2.0;
  Matrix target(2, 2);
  target << 0.0, 1.0, 2.0, 3.0;
  ForwardCache cache;
  const Matrix pred = net.forward(x, Mode::train, &cache);
  const Gradients g = net.backward(cache, mse_gradient(pred, target));
  // pred = [[-2,-2],[6.5,9]], error = [[-2,-3],[4.5,6]]; mean over 4 entries.
  Matrix expected(2, 2);
  expected << (2.0 / 4.0) * (1.0 * -2.0 + 0.5 * 4.5), (2.0 / 4.0) * (1.0 * -3.0 + 0.5 * 6.0),
      (2.0 / 4.0) * (-1.0 * -2.0 + 2.0 * 4.5), (2.0 / 4.0) * (-1.0 * -3.0 + 2.0 * 6.0);
  EXPECT_LT((g.layers[0].weight - expected).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Backward, MatchesFiniteDifferencesOnRandomArchitectures) {
  Rng rng(2024);
  int with_bn = 0;
  for (int arch = 0; arch < 30; ++arch) {
    const auto check = oracle::check_random_architecture(rng, arch % 2 == 0);
    EXPECT_LT(check.parameter_error, 1e-5) << "architecture " << arch;
    EXPECT_LT(check.input_error, 1e-5) << "architecture " << arch;
    with_bn += check.has_batch_norm ? 1 : 0;
  }
  EXPECT_GE(with_bn, 15);
}

TEST(Backward, InferModeBatchNormMatchesFiniteDifferences) {
  Rng rng(77);
  for (int arch = 0; arch < 10; ++arch) {
    const auto check = oracle::check_random_architecture(rng, true, Mode::infer);
    EXPECT_LT(check.parameter_error, 1e-5) << "architecture " << arch;
    EXPECT_LT(check.input_error, 1e-5) << "architecture " << arch;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  Rng rng(8);
  Network net = Network::build(3, {{2, Activation::relu, false}}, rng);
  const Network before = net;
  AdamState state(1e-3);
  adam_step(net, zero_gradients(net), state);
  EXPECT_EQ(net, before);
  EXPECT_EQ(state.step_count, 1);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Matrix p = Matrix::Constant(2, 3, 0.5);
  Matrix g(2, 3);
  g << 1e-3, -2.0, 50.0, -7.0, 0.25, 3.0;
  AdamState state(1e-3);
  adam_step({&p}, {&g}, state);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(std::abs(p.data()[i] - 0.5), 1e-3, 1e-8);
    EXPECT_EQ(p.data()[i] < 0.5, g.data()[i] > 0.0);
  }
}

TEST(Adam, DeterministicAndZeroRateIsIdentity) {
  Matrix g = Matrix::Constant(1, 4, 0.3);
  Matrix p1 = Matrix::Constant(1, 4, 1.0), p2 = p1, p3 = p1;
  AdamState s1(1e-2), s2(1e-2), s0(0.0);
  for (int i = 0; i < 5; ++i) {
    adam_step({&p1}, {&g}, s1);
    adam_step({&p2}, {&g}, s2);
    adam_step({&p3}, {&g}, s0);
  }
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(p3, Matrix::Constant(1, 4, 1.0));
}

TEST(Adam, RejectsNonFiniteGradient) {
  Matrix p = Matrix::Zero(1, 2);
  Matrix g(1, 2);
  g << 1.0, std::nan("");
  AdamState state;
  EXPECT_THROW(adam_step({&p}, {&g}, state), std::domain_error);
}

TEST(Mse, Examples) {
  Rng rng(9);
  const Matrix a = random_matrix(rng, 5, 3);
  EXPECT_EQ(mse(a, a), 0.0);
  EXPECT_DOUBLE_EQ(mse(a, (a.array() - 1.0).matrix()), 1.0);
  const Matrix b = random_matrix(rng, 5, 3);
  double brute = 0.0;
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 3; ++c) brute += (a(r, c) - b(r, c)) * (a(r, c) - b(r, c));
  }
  EXPECT_NEAR(mse(a, b), brute / 15.0, 1e-15);
}

TEST(Checkpoint, RoundTripPredictsIdentically) {
  Rng rng(10);
  Network net = Network::build(4, {{16, Activation::relu, true}, {8, Activation::tanh, false},
                                   {1, Activation::sigmoid, false}}, rng);
  const Matrix x = random_matrix(rng, 32, 4);
  ForwardCache cache;
  net.forward(x, Mode::train, &cache);
  net.absorb_batch_statistics(cache);
  const Network back = network_from_json(nlohmann::json::parse(network_to_json(net).dump()));
  EXPECT_EQ(back, net);
  EXPECT_LT((back.forward(x) - net.forward(x)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(back.parameter_count(), net.parameter_count());
}

TEST(Checkpoint, RejectsForeignDocuments) {
  EXPECT_THROW(network_from_json({{"format", "other"}}), std::invalid_argument);
}
