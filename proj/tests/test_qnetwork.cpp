#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rlhh/qnetwork.hpp"

using namespace rlhh;

namespace {

Mlp random_mlp(std::vector<int> sizes, std::uint64_t seed) {
  Mlp m(std::move(sizes));
  Rng rng(seed);
  m.initialize(rng);
  for (Eigen::Index i = 0; i < m.parameters().size(); ++i) m.parameters()(i) += 0.1 * rng.normal();
  return m;
}

Eigen::MatrixXd random_batch(int features, int n, Rng& rng) {
  Eigen::MatrixXd x(features, n);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = rng.normal();
  return x;
}

QModel random_model(ProblemKind kind, std::uint64_t seed) {
  QModel m;
  m.kind = kind;
  m.network = random_mlp({feature_count(kind), 16, 16, 5}, seed);
  m.scaler = FeatureScaler(feature_count(kind));
  Rng rng(seed + 1);
  for (int i = 0; i < 30; ++i) {
    std::vector<double> x(static_cast<std::size_t>(feature_count(kind)));
    for (auto& v : x) v = rng.uniform(-5, 50);
    m.scaler.update(x);
  }
  m.scaler.freeze();
  m.config.hidden = {16, 16};
  return m;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rlhh_test_" + name);
}

}  // namespace

TEST(Mlp, ParameterLayout) {
  Mlp m({3, 4, 2});
  EXPECT_EQ(m.parameters().size(), 4 * 3 + 4 + 2 * 4 + 2);
  EXPECT_EQ(m.layers(), 2u);
  m.weight(0)(1, 2) = 7;
  EXPECT_EQ(m.parameters()(2 * 4 + 1), 7);
  m.bias(1)(1) = 9;
  EXPECT_EQ(m.parameters()(m.parameters().size() - 1), 9);
  EXPECT_THROW(Mlp({3}), ArgumentError);
  EXPECT_THROW(Mlp({3, 0, 2}), ArgumentError);
}

TEST(Mlp, ZeroNetworkTiesToLowestIndex) {
  Mlp m({20, 8, 5});
  const std::vector<double> x(20, 1.5);
  const auto q = m.forward(std::span<const double>(x));
  for (Eigen::Index i = 0; i < q.size(); ++i) EXPECT_EQ(q(i), 0);
  EXPECT_EQ(argmax(q), 0);
}

TEST(Mlp, HandForward) {
  Mlp m({2, 2, 1});
  m.weight(0) << 1, -1, 2, 0.5;
  m.bias(0) << 0, -3;
  m.weight(1) << 2, 3;
  m.bias(1) << 1;
  // hidden = relu([1 - 2, 2 + 1 - 3]) = [0, 0] for x = (1, 2)
  EXPECT_EQ(m.forward(std::vector<double>{1, 2})(0), 1);
  // x = (3, 1): hidden = relu([2, 3.5]) -> 2*2 + 3*3.5 + 1
  EXPECT_DOUBLE_EQ(m.forward(std::vector<double>{3, 1})(0), 15.5);
  EXPECT_THROW(m.forward(std::vector<double>{1, 2, 3}), ArgumentError);
}

TEST(Mlp, PositiveOutputScalingKeepsArgmax) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    Mlp m = random_mlp({6, 10, 5}, static_cast<std::uint64_t>(trial));
    std::vector<double> x(6);
    for (auto& v : x) v = rng.normal();
    const int a = argmax(m.forward(std::span<const double>(x)));
    const double lambda = rng.uniform(0.01, 100);
    m.weight(1) *= lambda;
    m.bias(1) *= lambda;
    EXPECT_EQ(argmax(m.forward(std::span<const double>(x))), a);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  const double h = 1e-5;
  Rng rng(11);
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Mlp m = random_mlp({4, 7, 6, 3}, seed);
    const Eigen::MatrixXd x = random_batch(4, 5, rng);
    std::vector<int> a(5);
    std::vector<double> y(5);
    for (int i = 0; i < 5; ++i) {
      a[static_cast<std::size_t>(i)] = static_cast<int>(rng.index(3));
      y[static_cast<std::size_t>(i)] = rng.normal();
    }
    Eigen::VectorXd grad, dummy;
    m.loss_and_gradient(x, a, y, grad);
    for (Eigen::Index p = 0; p < m.parameters().size(); ++p) {
      const double orig = m.parameters()(p);
      m.parameters()(p) = orig + h;
      const double up = m.loss_and_gradient(x, a, y, dummy);
      m.parameters()(p) = orig - h;
      const double down = m.loss_and_gradient(x, a, y, dummy);
      m.parameters()(p) = orig;
      const double fd = (up - down) / (2 * h);
      const double scale = std::max(std::abs(fd), std::abs(grad(p)));
      if (scale < 1e-7) {
        EXPECT_NEAR(grad(p), fd, 1e-9);
      } else {
        EXPECT_LE(std::abs(grad(p) - fd) / scale, 1e-4) << "seed " << seed << " param " << p;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Mlp, LossIsNonNegativeAndZeroAtTarget) {
  Rng rng(2);
  Mlp m = random_mlp({3, 5, 2}, 1);
  const Eigen::MatrixXd x = random_batch(3, 4, rng);
  const std::vector<int> a{0, 1, 1, 0};
  const Eigen::MatrixXd q = m.forward(x);
  std::vector<double> y(4);
  for (int i = 0; i < 4; ++i) y[static_cast<std::size_t>(i)] = q(a[static_cast<std::size_t>(i)], i);
  Eigen::VectorXd grad;
  EXPECT_NEAR(m.loss_and_gradient(x, a, y, grad), 0.0, 1e-24);
  EXPECT_LE(grad.cwiseAbs().maxCoeff(), 1e-12);
  y[2] += 3;
  EXPECT_NEAR(m.loss_and_gradient(x, a, y, grad), 9.0, 1e-9);
  EXPECT_THROW(m.loss_and_gradient(x, std::vector<int>{0, 1, 2, 0}, y, grad), ArgumentError);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Adam opt(0.01);
  Eigen::VectorXd theta(3), grad(3);
  theta << 1, 2, 3;
  grad << 5, -0.001, 0;
  opt.step(theta, grad);
  EXPECT_NEAR(theta(0), 0.99, 1e-9);
  EXPECT_NEAR(theta(1), 2.01, 1e-6);
  EXPECT_EQ(theta(2), 3);
}

TEST(FeatureScaler, WelfordMatchesTwoPass) {
  Rng rng(4);
  FeatureScaler s(3);
  std::vector<std::vector<double>> xs;
  for (int i = 0; i < 200; ++i) {
    xs.push_back({rng.uniform(0, 1000), rng.normal(), 42.0});
    s.update(xs.back());
  }
  double mean = 0, var = 0;
  for (const auto& x : xs) mean += x[0];
  mean /= 200;
  for (const auto& x : xs) var += (x[0] - mean) * (x[0] - mean);
  var /= 200;
  const std::vector<double> probe{mean + std::sqrt(var), 0.0, 42.0};
  const auto z = s.transform(probe);
  EXPECT_NEAR(z[0], 1.0, 1e-9);
  // constant feature: centered, not divided by zero
  EXPECT_EQ(z[2], 0.0);
  s.freeze();
  const long before = s.count();
  s.update(std::vector<double>{1, 2, 3});
  EXPECT_EQ(s.count(), before);
  EXPECT_EQ(FeatureScaler::from_json(s.to_json()), s);
  EXPECT_THROW(s.transform(std::vector<double>{1, 2}), ArgumentError);
}

TEST(DdqnConfig, JsonRoundTripAndFieldPaths) {
  DdqnConfig c;
  c.gamma = 0.5;
  c.hidden = {32};
  c.double_q = false;
  const auto back = DdqnConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  auto expect_path = [](const nlohmann::json& j, const std::string& needle) {
    try {
      DdqnConfig::from_json(j, "agent");
      ADD_FAILURE() << "accepted " << j.dump();
    } catch (const FormatError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_path({{"gama", 0.9}}, "agent.gama");
  expect_path({{"batch_size", "big"}}, "agent.batch_size");
  expect_path({{"gamma", 1.5}}, "agent.gamma");
  expect_path({{"hidden", {8, 0}}}, "agent.hidden");
  expect_path(nlohmann::json::array(), "agent");
}

TEST(ModelFile, RoundTripIsBitwise) {
  for (auto kind : {ProblemKind::Vrptw, ProblemKind::Bdsp}) {
    const QModel m = random_model(kind, kind == ProblemKind::Vrptw ? 1 : 2);
    const auto path = temp_path("roundtrip.rlhh.model");
    save_model(m, path);
    const QModel back = load_model(path);
    EXPECT_EQ(back.kind, kind);
    EXPECT_EQ(back.network, m.network);
    EXPECT_EQ(back.scaler, m.scaler);
    EXPECT_EQ(back.config.to_json(), m.config.to_json());
    Rng rng(9);
    for (int t = 0; t < 20; ++t) {
      std::vector<double> x(static_cast<std::size_t>(m.features()));
      for (auto& v : x) v = rng.uniform(-10, 100);
      const auto a = m.scores(x), b = back.scores(x);
      for (Eigen::Index i = 0; i < a.size(); ++i) EXPECT_EQ(a(i), b(i));
    }
    EXPECT_EQ(serialize_model(back), serialize_model(m));
    std::filesystem::remove(path);
  }
}

TEST(ModelFile, KindMismatch) {
  const QModel bdsp = random_model(ProblemKind::Bdsp, 3);
  EXPECT_THROW(bdsp.require(ProblemKind::Vrptw), FormatError);
  EXPECT_NO_THROW(bdsp.require(ProblemKind::Bdsp));
  const auto back = parse_model(serialize_model(bdsp));
  EXPECT_THROW(back.require(ProblemKind::Vrptw), FormatError);
}

TEST(ModelFile, CorruptionIsDetected) {
  const std::string text = serialize_model(random_model(ProblemKind::Vrptw, 4));
  std::string flipped = text;
  const auto pos = flipped.find("\"weights\":[") + 12;
  flipped[pos] = flipped[pos] == '1' ? '2' : '1';
  EXPECT_THROW(parse_model(flipped), ChecksumError);

  std::string wrong_version = text;
  wrong_version.replace(0, std::string(kModelHeader).size(), "RLHH-MODEL v9");
  EXPECT_THROW(parse_model(wrong_version), VersionError);

  EXPECT_THROW(parse_model("hello\n"), FormatError);
  EXPECT_THROW(parse_model(text.substr(0, text.size() / 2)), ChecksumError);
  EXPECT_THROW(load_model(temp_path("does_not_exist.model")), IoError);
}

TEST(ModelFile, FeatureLengthMustMatchKind) {
  QModel m = random_model(ProblemKind::Vrptw, 5);
  m.kind = ProblemKind::Bdsp;  // 20 inputs tagged as BDSP
  EXPECT_THROW(parse_model(serialize_model(m)), FormatError);
}
