#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "td3fg/adam.hpp"
#include "td3fg/checkpoint.hpp"
#include "td3fg/mlp.hpp"
#include "td3fg/tensor.hpp"
#include "grad_check.hpp"

using namespace td3fg;

TEST(Matrix, ShapeAndAccess) {
  Matrix m(2, 3);
  EXPECT_EQ(m.size(), 6u);
  m(1, 2) = 4.0;
  EXPECT_EQ(m.data()[5], 4.0);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
}

TEST(Matrix, HconcatAndSlice) {
  Matrix a(2, 1, {1, 2}), b(2, 2, {3, 4, 5, 6});
  Matrix c = hconcat(a, b);
  EXPECT_EQ(c, Matrix(2, 3, {1, 3, 4, 2, 5, 6}));
  EXPECT_EQ(slice_cols(c, 1, 2), b);
  EXPECT_THROW(hconcat(a, Matrix(3, 1)), ShapeError);
  EXPECT_THROW(slice_cols(c, 2, 2), ShapeError);
}

TEST(MseLoss, EqualInputsGiveZero) {
  const Vector p{0.3, -1.2, 4.0};
  auto lg = mse_loss(p, p);
  EXPECT_EQ(lg.loss, 0.0);
  for (double g : lg.grad) EXPECT_EQ(g, 0.0);
}

TEST(MseLoss, SmallArithmeticCase) {
  auto lg = mse_loss(Vector{0, 0}, Vector{1, 1});
  EXPECT_DOUBLE_EQ(lg.loss, 1.0);
  EXPECT_DOUBLE_EQ(lg.grad[0], -1.0);
  EXPECT_DOUBLE_EQ(lg.grad[1], -1.0);
}

TEST(MseLoss, MatchesBruteForceSum) {
  Rng rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    Vector p(37), t(37);
    for (auto& v : p) v = g(rng);
    for (auto& v : t) v = g(rng);
    long double sum = 0;
    for (std::size_t i = 0; i < p.size(); ++i) sum += (long double)(p[i] - t[i]) * (p[i] - t[i]);
    const double oracle = double(sum / p.size());
    auto lg = mse_loss(p, t);
    EXPECT_NEAR(lg.loss, oracle, 1e-12);
    for (std::size_t i = 0; i < p.size(); ++i) {
      EXPECT_NEAR(lg.grad[i], 2.0 * (p[i] - t[i]) / 37.0, 1e-15);
    }
  }
}

TEST(MseLoss, LengthMismatchThrows) {
  EXPECT_THROW(mse_loss(Vector{1, 2}, Vector{1}), ShapeError);
}

TEST(MlpForward, ZeroNetworkGivesZero) {
  Rng rng(1);
  auto p = make_mlp({4, 8, 3}, OutputActivation::Tanh, 2.0, rng);
  for (auto& l : p.layers) {
    l.weight.fill(0.0);
    std::fill(l.bias.begin(), l.bias.end(), 0.0);
  }
  auto r = mlp_forward(p, Vector{1.0, -2.0, 3.0, 0.5});
  for (double v : r.output) EXPECT_EQ(v, 0.0);
}

TEST(MlpForward, IdentityLikeTanhOfZero) {
  MLPParams p;
  p.output_activation = OutputActivation::Tanh;
  p.layers.push_back({Matrix(1, 1, {1.0}), Vector{0.0}});
  p.layers.push_back({Matrix(1, 1, {1.0}), Vector{0.0}});
  EXPECT_EQ(mlp_forward(p, Vector{0.0}).output[0], 0.0);
}

TEST(MlpForward, MatchesNaiveOracle) {
  Rng rng(2);
  for (auto hidden : {HiddenActivation::Tanh, HiddenActivation::Relu}) {
    for (auto out : {OutputActivation::Tanh, OutputActivation::Identity}) {
      auto p = make_mlp({5, 7, 6, 3}, out, 1.5, rng, hidden);
      std::normal_distribution<double> g;
      Matrix x(4, 5);
      for (auto& v : x.data()) v = g(rng);
      Matrix y = mlp_forward(p, x).output;
      Matrix y2 = mlp_predict(p, x);
      for (std::size_t r = 0; r < 4; ++r) {
        Vector oracle = testing_oracle::naive_forward(p, x.row_span(r));
        for (std::size_t c = 0; c < 3; ++c) {
          EXPECT_NEAR(y(r, c), oracle[c], 1e-12);
          EXPECT_EQ(y(r, c), y2(r, c));
        }
      }
    }
  }
}

TEST(MlpForward, DimensionMismatchThrows) {
  Rng rng(3);
  auto p = make_mlp({3, 4, 2}, OutputActivation::Identity, 1.0, rng);
  EXPECT_THROW(mlp_forward(p, Vector{1.0, 2.0}), ShapeError);
  EXPECT_THROW(mlp_predict(p, Matrix(2, 4)), ShapeError);
}

TEST(MlpParams, ValidateRejectsBrokenChains) {
  Rng rng(3);
  auto p = make_mlp({3, 4, 2}, OutputActivation::Identity, 1.0, rng);
  p.layers[1].weight = Matrix(2, 5);
  EXPECT_THROW(p.validate(), ShapeError);
  EXPECT_THROW(make_mlp({3, 2}, OutputActivation::Identity, 1.0, rng), ShapeError);
}

TEST(MlpInit, UniformWithinFanInBound) {
  Rng rng(4);
  auto p = make_mlp({9, 16, 4}, OutputActivation::Identity, 1.0, rng);
  for (const auto& l : p.layers) {
    const double bound = 1.0 / std::sqrt(double(l.in()));
    for (double w : l.weight.data()) EXPECT_LE(std::abs(w), bound);
    for (double b : l.bias) EXPECT_LE(std::abs(b), bound);
  }
}

TEST(MlpBackward, ZeroOutputGradGivesZeroGradient) {
  Rng rng(6);
  auto p = make_mlp({3, 5, 2}, OutputActivation::Tanh, 1.0, rng);
  auto fwd = mlp_forward(p, Vector{0.1, 0.2, 0.3});
  auto back = mlp_backward(p, fwd.tape, Vector{0.0, 0.0});
  for (double v : flatten(back.grads)) EXPECT_EQ(v, 0.0);
  for (double v : back.input_grad.data()) EXPECT_EQ(v, 0.0);
}

TEST(MlpBackward, SingleLinearNeuronClosedForm) {
  // 1-1-1 net: the output layer is linear, so dw = g * (its input).
  MLPParams p;
  p.layers.push_back({Matrix(1, 1, {0.7}), Vector{0.1}});
  p.layers.push_back({Matrix(1, 1, {1.3}), Vector{0.0}});
  const double x = 0.4, g = 2.5;
  auto fwd = mlp_forward(p, Vector{x});
  auto back = mlp_backward(p, fwd.tape, Vector{g});
  const double h = std::tanh(0.7 * x + 0.1);
  EXPECT_NEAR(back.grads.layers[1].weight(0, 0), g * h, 1e-15);
  EXPECT_NEAR(back.grads.layers[1].bias[0], g, 1e-15);
  EXPECT_NEAR(back.grads.layers[0].weight(0, 0), g * 1.3 * (1 - h * h) * x, 1e-15);
}

TEST(MlpBackward, MatchesFiniteDifferences) {
  Rng rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const auto out = trial % 2 ? OutputActivation::Tanh : OutputActivation::Identity;
    auto p = make_mlp({4, 6, 5, 2}, out, 1.7, rng, HiddenActivation::Tanh);
    auto res = testing_oracle::check_gradients(p, rng, 3);
    EXPECT_LT(res.max_rel_error, 1e-4) << "trial " << trial;
  }
}

TEST(MlpBackward, ReluMatchesFiniteDifferencesAwayFromKinks) {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    auto p = make_mlp({4, 8, 2}, OutputActivation::Tanh, 1.0, rng, HiddenActivation::Relu);
    auto res = testing_oracle::check_gradients(p, rng, 3);
    EXPECT_LT(res.max_rel_error, 1e-4) << "trial " << trial;
  }
}

TEST(MlpBackward, InputGradientMatchesFiniteDifferences) {
  Rng rng(9);
  auto p = make_mlp({3, 6, 1}, OutputActivation::Identity, 1.0, rng);
  Vector x{0.2, -0.5, 0.9};
  auto fwd = mlp_forward(p, x);
  Matrix gi = mlp_input_grad(p, fwd.tape, Matrix(1, 1, {1.0}));
  EXPECT_EQ(gi, mlp_backward(p, fwd.tape, Vector{1.0}).input_grad);
  for (std::size_t i = 0; i < 3; ++i) {
    Vector xp = x, xm = x;
    xp[i] += 1e-6;
    xm[i] -= 1e-6;
    const double fd = (mlp_predict(p, xp)[0] - mlp_predict(p, xm)[0]) / 2e-6;
    EXPECT_NEAR(gi(0, i), fd, 1e-8);
  }
}

TEST(MlpBackward, StaleTapeThrows) {
  Rng rng(10);
  auto p = make_mlp({2, 3, 1}, OutputActivation::Identity, 1.0, rng);
  auto fwd = mlp_forward(p, Vector{1.0, 2.0});
  AdamState st(p, AdamConfig{});
  auto g = mlp_backward(p, fwd.tape, Vector{1.0}).grads;
  adam_step(p, g, st);
  EXPECT_THROW(mlp_backward(p, fwd.tape, Vector{1.0}), ShapeError);

  auto other = make_mlp({2, 3, 1}, OutputActivation::Identity, 1.0, rng);
  auto fwd2 = mlp_forward(p, Vector{1.0, 2.0});
  EXPECT_THROW(mlp_backward(other, fwd2.tape, Vector{1.0}), ShapeError);
  EXPECT_THROW(mlp_backward(p, fwd2.tape, Vector{1.0, 2.0}), ShapeError);
}

TEST(MlpDeterminism, SameSeedSameEverything) {
  auto run = [] {
    Rng rng(11);
    auto p = make_mlp({3, 8, 2}, OutputActivation::Tanh, 1.0, rng);
    AdamState st(p, AdamConfig{});
    Matrix x(5, 3);
    std::normal_distribution<double> g;
    for (auto& v : x.data()) v = g(rng);
    for (int i = 0; i < 5; ++i) {
      auto fwd = mlp_forward(p, x);
      auto back = mlp_backward(p, fwd.tape, fwd.output);
      adam_step(p, back.grads, st);
    }
    return flatten(p);
  };
  EXPECT_EQ(run(), run());
}

TEST(MlpFinite, OutputsFiniteForLargeInputs) {
  Rng rng(12);
  auto p = make_mlp({2, 16, 16, 2}, OutputActivation::Tanh, 1.0, rng);
  auto y = mlp_predict(p, Vector{1e6, -1e6});
  EXPECT_TRUE(all_finite(y));
}

TEST(SoftUpdate, ExactBlend) {
  Rng rng(13);
  auto online = make_mlp({3, 4, 2}, OutputActivation::Identity, 1.0, rng);
  auto target = make_mlp({3, 4, 2}, OutputActivation::Identity, 1.0, rng);
  const auto before = flatten(target);
  soft_update(target, online, 0.005);
  const auto after = flatten(target), on = flatten(online);
  for (std::size_t i = 0; i < on.size(); ++i) {
    EXPECT_EQ(after[i], 0.005 * on[i] + (1.0 - 0.005) * before[i]);
  }
  soft_update(target, online, 1.0);
  EXPECT_EQ(flatten(target), flatten(online));
}

TEST(Adam, ZeroGradsLeaveParamsAndMoments) {
  Rng rng(14);
  auto p = make_mlp({2, 3, 1}, OutputActivation::Identity, 1.0, rng);
  const auto before = flatten(p);
  AdamState st(p, AdamConfig{});
  adam_step(p, zeros_like(p), st);
  EXPECT_EQ(flatten(p), before);
  EXPECT_EQ(st.step, 1u);
  for (double v : flatten(st.m)) EXPECT_EQ(v, 0.0);
  for (double v : flatten(st.v)) EXPECT_EQ(v, 0.0);
}

TEST(Adam, FirstStepHandComputed) {
  MLPParams p;
  p.layers.push_back({Matrix(1, 1, {0.5}), Vector{0.0}});
  p.layers.push_back({Matrix(1, 1, {0.5}), Vector{0.0}});
  AdamState st(p, AdamConfig{1e-3, 0.9, 0.999, 1e-8});
  auto g = zeros_like(p);
  g.layers[0].weight(0, 0) = 0.1;
  adam_step(p, g, st);
  // m_hat = 0.1, v_hat = 0.01, delta = -lr * 0.1 / (0.1 + 1e-8).
  const double expected = -1e-3 * 0.1 / (0.1 + 1e-8);
  EXPECT_NEAR(p.layers[0].weight(0, 0) - 0.5, expected, 1e-15);
  EXPECT_NEAR(expected, -9.99e-4, 1e-6);
}

TEST(Adam, TwoStepsShrinkQuadraticLoss) {
  MLPParams p;
  p.layers.push_back({Matrix(1, 1, {2.0}), Vector{0.0}});
  p.layers.push_back({Matrix(1, 1, {1.0}), Vector{0.0}});
  AdamState st(p, AdamConfig{0.1});
  double w_prev = 2.0;
  for (int i = 0; i < 2; ++i) {
    auto g = zeros_like(p);
    g.layers[0].weight(0, 0) = 2.0 * p.layers[0].weight(0, 0);  // d/dw of w^2
    adam_step(p, g, st);
    const double w = p.layers[0].weight(0, 0);
    EXPECT_LT(w * w, w_prev * w_prev);
    w_prev = w;
  }
  EXPECT_EQ(st.step, 2u);
}

TEST(Adam, ShapeMismatchThrows) {
  Rng rng(15);
  auto p = make_mlp({2, 3, 1}, OutputActivation::Identity, 1.0, rng);
  auto q = make_mlp({2, 4, 1}, OutputActivation::Identity, 1.0, rng);
  AdamState st(p, AdamConfig{});
  EXPECT_THROW(adam_step(p, zeros_like(q), st), ShapeError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(16);
  for (auto hidden : {HiddenActivation::Tanh, HiddenActivation::Relu}) {
    auto p = make_mlp({5, 7, 3}, OutputActivation::Tanh, 2.0, rng, hidden);
    p.layers[0].weight(0, 0) = 0.1 + 0.2;  // not exactly representable in short decimal
    p.layers[1].bias[1] = std::nextafter(1.0, 2.0);
    const auto path = (std::filesystem::temp_directory_path() / "td3fg_ckpt_test.json").string();
    save_mlp(p, path);
    const auto q = load_mlp(path);
    EXPECT_EQ(p, q);
    EXPECT_EQ(q.hidden_activation, hidden);
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, RejectsMalformed) {
  EXPECT_THROW(mlp_from_json(nlohmann::json{{"format", "other"}}), ParseError);
  Rng rng(17);
  auto j = mlp_to_json(make_mlp({2, 3, 1}, OutputActivation::Identity, 1.0, rng));
  j["layers"][1]["in"] = 4;
  j["layers"][1]["weight"] = std::vector<double>(4, 0.0);
  EXPECT_THROW(mlp_from_json(j), ShapeError);
  EXPECT_THROW(load_mlp("/nonexistent/ckpt.json"), InputError);
}
