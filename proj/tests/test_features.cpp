#include <gtest/gtest.h>

#include <cmath>

#include "rlhh/features.hpp"
#include "rlhh/rmp.hpp"
#include "test_util.hpp"

using namespace rlhh;

TEST(Summary, HandValues) {
  const std::vector<double> v{1, 2, 3, 4};
  const auto s = summarize(v);
  EXPECT_DOUBLE_EQ(s.min, 1);
  EXPECT_DOUBLE_EQ(s.max, 4);
  EXPECT_DOUBLE_EQ(s.mean, 2.5);
  EXPECT_DOUBLE_EQ(s.std, std::sqrt(1.25));
  // bins 0, 3, 6 and 9 (the max clamps into the last bin) each hold a quarter
  EXPECT_NEAR(s.entropy, std::log(4.0), 1e-12);
}

TEST(Summary, ConstantAndEmpty) {
  const std::vector<double> c(7, 3.5);
  const auto s = summarize(c);
  EXPECT_EQ(s.std, 0);
  EXPECT_EQ(s.entropy, 0);
  EXPECT_EQ(s.mean, 3.5);
  const auto e = summarize(std::vector<double>{});
  EXPECT_EQ(e.mean, 0);
  EXPECT_EQ(e.entropy, 0);
}

TEST(Summary, EntropyBoundedByBins) {
  Rng rng(5);
  std::vector<double> v(1000);
  for (auto& x : v) x = rng.uniform(-3, 9);
  const auto s = summarize(v);
  EXPECT_GE(s.entropy, 0);
  EXPECT_LE(s.entropy, std::log(10.0) + 1e-12);
}

TEST(Summary, CoefficientOfVariation) {
  EXPECT_EQ(coefficient_of_variation(std::vector<double>{0, 0}), 0);
  EXPECT_DOUBLE_EQ(coefficient_of_variation(std::vector<double>{1, 3}), 0.5);
  EXPECT_DOUBLE_EQ(coefficient_of_variation(std::vector<double>{-1, -3}), 0.5);
}

TEST(Features, LengthByKind) {
  const auto v = build_network(fx::random_vrptw(6, 1));
  const auto b = build_network(generate_bdsp(6, 1));
  EXPECT_EQ(feature_names(v).size(), 20u);
  EXPECT_EQ(feature_names(b).size(), 21u);
  for (const auto* net : {&v, &b}) {
    Rng rng(2);
    const auto pi = fx::random_duals(net->customers, rng);
    const auto cbar = modified_costs(*net, pi);
    const std::vector<double> x{0.5, 1, 0, 0.25};
    const auto f = featurize(x, 80, 100, *net, pi, cbar);
    EXPECT_EQ(static_cast<int>(f.size()), feature_count(net->kind));
    for (double val : f) EXPECT_TRUE(std::isfinite(val));
  }
}

TEST(Features, FirstIterationAndIntegralLp) {
  const auto net = build_network(fx::random_vrptw(5, 3));
  ColumnPool pool = init_pool(net);
  const auto st = solve_lp(pool);
  const auto cbar = modified_costs(net, st.duals);
  const auto f = featurize(st.x, st.objective, st.objective, net, st.duals, cbar);
  EXPECT_EQ(f[0], 1.0);
  // singleton cover is integral
  EXPECT_EQ(f[1], 0.0);
  EXPECT_EQ(f[2], 0.0);
}

TEST(Features, FractionalStatistics) {
  const auto net = build_network(fx::random_vrptw(4, 4));
  const std::vector<double> pi(4, 10.0);
  const auto cbar = modified_costs(net, pi);
  const std::vector<double> x{0.5, 1.0, 0.0, 0.25, 1e-7};
  const auto f = featurize(x, 50, 200, net, pi, cbar);
  EXPECT_DOUBLE_EQ(f[0], 0.25);
  EXPECT_DOUBLE_EQ(f[1], 0.375);
  EXPECT_DOUBLE_EQ(f[2], 2.0 / 5.0);
  // constant duals: std and entropy vanish
  EXPECT_EQ(f[3], 10.0);
  EXPECT_EQ(f[4], 10.0);
  EXPECT_EQ(f[6], 0.0);
  EXPECT_EQ(f[7], 0.0);
}

TEST(Features, EntriesNonNegativeWhereDefined) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto net = build_network(seed % 2 ? Instance(generate_bdsp(8, seed)) : Instance(fx::random_vrptw(8, seed)));
    Rng rng(seed);
    const auto pi = fx::random_duals(net.customers, rng);
    const auto cbar = modified_costs(net, pi);
    std::vector<double> x(12);
    for (auto& v : x) v = rng.uniform();
    const auto f = featurize(x, 70, 100, net, pi, cbar);
    EXPECT_GE(f[0], 0);
    EXPECT_GE(f[1], 0);
    EXPECT_GE(f[2], 0);
    for (int g = 0; g < 3; ++g) EXPECT_GE(f[3 + 5 * g + 4], 0);
    for (std::size_t i = 18; i < f.size(); ++i) EXPECT_GE(f[i], 0);
  }
}
