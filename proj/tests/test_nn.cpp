#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "scenemotion/core/random.hpp"
#include "scenemotion/nn/adam.hpp"
#include "scenemotion/nn/checkpoint.hpp"
#include "scenemotion/nn/cvae.hpp"
#include "scenemotion/nn/dense.hpp"
#include "scenemotion/nn/gradcheck.hpp"

using namespace scenemotion;
using namespace scenemotion::nn;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rng.normal();
  return m;
}

double scalar_act(Activation a, double v) {
  switch (a) {
    case Activation::kIdentity: return v;
    case Activation::kRelu: return v > 0.0 ? v : 0.0;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kSigmoid: return 1.0 / (1.0 + std::exp(-v));
  }
  return v;
}

std::vector<double> scalar_forward(const std::vector<DenseLayer>& layers, std::vector<double> x) {
  for (const DenseLayer& L : layers) {
    std::vector<double> y(static_cast<std::size_t>(L.weights.cols()));
    for (Eigen::Index o = 0; o < L.weights.cols(); ++o) {
      double s = L.bias(o);
      for (Eigen::Index i = 0; i < L.weights.rows(); ++i) s += x[static_cast<std::size_t>(i)] * L.weights(i, o);
      y[static_cast<std::size_t>(o)] = scalar_act(L.activation, s);
    }
    x = std::move(y);
  }
  return x;
}

CvaeModel small_cvae(std::uint64_t seed, std::vector<int> cond_hidden = {5}) {
  return make_cvae({4, 3, 2, 8, std::move(cond_hidden)}, seed, "test");
}

GradCheckReport check_cvae(CvaeModel& m, const Matrix& x, const Matrix& c, const Matrix& eps, double kl,
                           std::uint64_t seed) {
  CvaeLoss loss = cvae_loss(m, x, c, eps, kl);
  auto params = parameter_views(m);
  auto grads = gradient_views(loss.gradients);
  auto probe = [&] {
    CvaeLoss l = cvae_loss(m, x, c, eps, kl, false, true);
    return LossProbe{l.total, l.relu_pattern};
  };
  GradCheckOptions opt;
  opt.coords_per_tensor = 0;
  opt.seed = seed;
  return finite_difference_check(params, grads, probe, opt);
}

}  // namespace

TEST(Dense, IdentityLayer) {
  DenseLayer L;
  L.weights = Matrix::Identity(3, 3);
  L.bias = RowVector::Zero(3);
  std::vector<double> x{1.5, -2.0, 0.25};
  EXPECT_EQ(mlp_forward({L}, x), x);
}

TEST(Dense, ReluOnNegativeInputs) {
  Rng rng(1);
  DenseLayer L = make_dense(3, 4, Activation::kRelu, rng);
  L.weights = L.weights.cwiseAbs();
  L.bias = RowVector::Constant(4, -0.1);
  auto y = mlp_forward({L}, std::vector<double>{-1.0, -2.0, -0.5});
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(Dense, MatchesScalarRecomputation) {
  Rng rng(2);
  std::vector<DenseLayer> net{make_dense(5, 7, Activation::kRelu, rng), make_dense(7, 6, Activation::kTanh, rng),
                              make_dense(6, 3, Activation::kSigmoid, rng)};
  for (auto& L : net) L.bias = random_matrix(1, L.bias.size(), rng) * 0.1;
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> x(5);
    for (double& v : x) v = rng.normal();
    auto got = mlp_forward(net, x);
    auto want = scalar_forward(net, x);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-13);
  }
}

TEST(Dense, LinearGradientIsProductRule) {
  DenseLayer L;
  L.weights = Matrix(3, 1);
  L.weights << 0.5, -1.0, 2.0;
  L.bias = RowVector::Zero(1);
  Matrix x(1, 3);
  x << 3.0, 4.0, -1.0;
  MlpCache cache;
  mlp_forward({L}, x, &cache);
  MlpGradients g = mlp_backward({L}, cache, Matrix::Ones(1, 1));
  for (int i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(g.layers[0].weights(i, 0), x(0, i));
    EXPECT_DOUBLE_EQ(g.input(0, i), L.weights(i, 0));
  }
}

TEST(Dense, ZeroUpstreamGivesZeroGradients) {
  Rng rng(3);
  std::vector<DenseLayer> net{make_dense(4, 6, Activation::kRelu, rng), make_dense(6, 2, Activation::kIdentity, rng)};
  MlpCache cache;
  mlp_forward(net, random_matrix(3, 4, rng), &cache);
  MlpGradients g = mlp_backward(net, cache, Matrix::Zero(3, 2));
  for (const auto& lg : g.layers) {
    EXPECT_EQ(lg.weights.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(lg.bias.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Dense, MlpGradientMatchesFiniteDifferences) {
  Rng rng(4);
  std::vector<DenseLayer> net{make_dense(4, 6, Activation::kTanh, rng), make_dense(6, 5, Activation::kRelu, rng),
                              make_dense(5, 2, Activation::kSigmoid, rng)};
  Matrix x = random_matrix(3, 4, rng);
  Matrix w = random_matrix(3, 2, rng);
  auto loss = [&] { return (mlp_forward(net, x).cwiseProduct(w)).sum(); };
  MlpCache cache;
  mlp_forward(net, x, &cache);
  MlpGradients g = mlp_backward(net, cache, w);
  const double h = 1e-5;
  for (std::size_t l = 0; l < net.size(); ++l) {
    for (Eigen::Index i = 0; i < net[l].weights.size(); ++i) {
      double& p = net[l].weights.data()[i];
      double saved = p;
      p = saved + h;
      double up = loss();
      p = saved - h;
      double dn = loss();
      p = saved;
      double num = (up - dn) / (2 * h);
      double an = g.layers[l].weights.data()[i];
      EXPECT_LT(std::abs(num - an) / std::max({std::abs(num), std::abs(an), 1e-6}), 1e-4);
    }
  }
}

TEST(Kl, ZeroForStandardNormal) {
  std::vector<double> z(7, 0.0);
  EXPECT_EQ(kl_standard_normal(z, z), 0.0);
}

TEST(Kl, UnitMeanUnitSigma32) {
  std::vector<double> mu(32, 1.0), ls(32, 0.0);
  double oracle = 0.0;
  for (int i = 0; i < 32; ++i) oracle += 0.5 * (1.0 + 1.0 - 1.0 - 0.0);
  EXPECT_DOUBLE_EQ(oracle, 16.0);
  EXPECT_DOUBLE_EQ(kl_standard_normal(mu, ls), oracle);
}

TEST(Kl, GradientMatchesFiniteDifferences) {
  std::vector<double> mu{0.3, -1.2, 0.7}, ls{-0.4, 0.2, 1.1};
  auto [gm, gl] = kl_gradient(mu, ls);
  const double h = 1e-6;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    auto m1 = mu, m2 = mu, l1 = ls, l2 = ls;
    m1[i] += h;
    m2[i] -= h;
    l1[i] += h;
    l2[i] -= h;
    double nm = (kl_standard_normal(m1, ls) - kl_standard_normal(m2, ls)) / (2 * h);
    double nl = (kl_standard_normal(mu, l1) - kl_standard_normal(mu, l2)) / (2 * h);
    EXPECT_LT(std::abs(nm - gm[i]) / std::max(std::abs(gm[i]), 1e-6), 1e-6);
    EXPECT_LT(std::abs(nl - gl[i]) / std::max(std::abs(gl[i]), 1e-6), 1e-6);
  }
}

TEST(Reparameterize, Cases) {
  std::vector<double> mu{0.5, -1.0}, ls{0.3, -0.2}, zero{0.0, 0.0};
  EXPECT_EQ(reparameterize(mu, ls, zero), mu);
  std::vector<double> eps{0.7, -1.3};
  EXPECT_EQ(reparameterize(zero, zero, eps), eps);
  auto z = reparameterize(std::vector<double>{1, 2}, std::vector<double>{0, std::log(2.0)}, std::vector<double>{1, 1});
  EXPECT_DOUBLE_EQ(z[0], 2.0);
  EXPECT_DOUBLE_EQ(z[1], 4.0);
  EXPECT_THROW(reparameterize(mu, ls, std::vector<double>{1.0}), Error);
}

TEST(Adam, ZeroGradientKeepsParams) {
  std::vector<double> w{1.0, -2.0};
  std::vector<double> g{0.0, 0.0};
  std::vector<std::span<double>> p{w};
  std::vector<std::span<const double>> gv{g};
  AdamState s;
  adam_step(p, gv, s);
  EXPECT_EQ(w[0], 1.0);
  EXPECT_EQ(w[1], -2.0);
}

TEST(Adam, ConstantGradientUnitStep) {
  // Scalar Adam written out independently.
  const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8, g = 3.7;
  double m = 0, v = 0, w_ref = 0.0;
  std::vector<double> w{0.0};
  std::vector<double> gr{g};
  std::vector<std::span<double>> p{w};
  std::vector<std::span<const double>> gv{gr};
  AdamState s;
  s.learning_rate = lr;
  for (int t = 1; t <= 200; ++t) {
    double before = w[0];
    adam_step(p, gv, s);
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    w_ref -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    EXPECT_NEAR(w[0], w_ref, 1e-12);
    EXPECT_NEAR(std::abs(w[0] - before), lr, 1e-9);
  }
}

TEST(Adam, StepOnSquareDecreasesMagnitude) {
  std::vector<double> w{1.0};
  std::vector<double> g{2.0 * w[0]};
  std::vector<std::span<double>> p{w};
  std::vector<std::span<const double>> gv{g};
  AdamState s;
  adam_step(p, gv, s);
  EXPECT_LT(std::abs(w[0]), 1.0);
}

TEST(Adam, ShapeMismatchThrows) {
  std::vector<double> w{1.0, 2.0}, g{1.0};
  std::vector<std::span<double>> p{w};
  std::vector<std::span<const double>> gv{g};
  AdamState s;
  EXPECT_THROW(adam_step(p, gv, s), Error);
}

TEST(Cvae, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (auto hidden : {std::vector<int>{}, std::vector<int>{5}}) {
      Rng rng(100 + seed);
      CvaeModel m = small_cvae(seed, hidden);
      Matrix x = random_matrix(3, 4, rng), c = random_matrix(3, 3, rng), e = random_matrix(3, 2, rng);
      GradCheckReport r = check_cvae(m, x, c, e, 0.7, seed);
      EXPECT_GT(r.checked, 100u);
      EXPECT_LT(r.max_relative_error, 1e-4) << "seed " << seed;
    }
  }
}

TEST(Cvae, ConstantTargetIsReconstructed) {
  CvaeModel m = small_cvae(9);
  Matrix x(16, 4), c(16, 3);
  for (int i = 0; i < 16; ++i) {
    x.row(i) << 0.5, -0.25, 1.0, 0.0;
    c.row(i) << 1.0, 0.0, 0.0;
  }
  TrainOptions opt{.epochs = 200, .batch_size = 4, .learning_rate = 3e-3, .kl_weight = 1e-3, .warmup_fraction = 0.1,
                   .seed = 1};
  TrainResult r = train_cvae(m, x, c, opt);
  EXPECT_LT(r.trace.back().reconstruction, 1e-3);
}

TEST(Cvae, SameSeedSameTrace) {
  Rng rng(5);
  Matrix x = random_matrix(20, 4, rng), c = random_matrix(20, 3, rng);
  TrainOptions opt{.epochs = 5, .batch_size = 4, .learning_rate = 1e-3, .kl_weight = 1e-3, .warmup_fraction = 0.1,
                   .seed = 3};
  TrainResult a = train_cvae(small_cvae(1), x, c, opt), b = train_cvae(small_cvae(1), x, c, opt);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) EXPECT_EQ(a.trace[i].loss, b.trace[i].loss);
  EXPECT_EQ(to_json(a.model).dump(), to_json(b.model).dump());
}

TEST(Cvae, AutoencoderReconstructsAtLeastAsWell) {
  Rng rng(6);
  Matrix x = random_matrix(64, 4, rng), c = random_matrix(64, 3, rng);
  TrainOptions opt{.epochs = 150, .batch_size = 8, .learning_rate = 3e-3, .kl_weight = 0.0, .warmup_fraction = 0.1,
                   .seed = 2};
  TrainResult ae = train_cvae(small_cvae(2), x, c, opt);
  opt.kl_weight = 1.0;
  TrainResult vae = train_cvae(small_cvae(2), x, c, opt);
  EXPECT_LE(ae.trace.back().reconstruction, vae.trace.back().reconstruction);
}

TEST(Cvae, RejectsBadData) {
  Matrix x = Matrix::Zero(4, 5), c = Matrix::Zero(4, 3);
  EXPECT_THROW(train_cvae(small_cvae(0), x, c, {}), Error);
  Matrix xn = Matrix::Zero(4, 4);
  xn(0, 0) = std::nan("");
  try {
    train_cvae(small_cvae(0), xn, c, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kTraining);
  }
}

TEST(Checkpoint, RoundTripIsExact) {
  CvaeModel m = small_cvae(12);
  m.basis_seed = 77;
  m.basis_size = 16;
  auto path = std::filesystem::temp_directory_path() / "scenemotion_ckpt_test.json";
  save_checkpoint(m, path);
  CvaeModel back = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  EXPECT_EQ(back.basis_seed, m.basis_seed);
  std::vector<double> z{0.3, -0.2}, c{1, 0, 0};
  EXPECT_EQ(decode(back, z, c), decode(m, z, c));
}

TEST(Checkpoint, RejectsForeignJson) {
  try {
    cvae_from_json(nlohmann::json{{"format", "other"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
  }
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), Error);
}
