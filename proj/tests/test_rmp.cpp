#include <gtest/gtest.h>

#include <functional>
#include <sstream>

#include "rlhh/rmp.hpp"
#include "test_util.hpp"

using namespace rlhh;

namespace {

/// Exhaustive minimum-cost cover: branch on which column covers the lowest
/// uncovered constraint.
double exhaustive_cover(const ColumnPool& pool) {
  const int m = pool.constraints();
  std::vector<int> count(static_cast<std::size_t>(m), 0);
  double best = kInf;
  std::function<void(double)> rec = [&](double cost) {
    if (cost >= best) return;
    int row = -1;
    for (int i = 0; i < m; ++i)
      if (count[static_cast<std::size_t>(i)] == 0) {
        row = i;
        break;
      }
    if (row < 0) {
      best = cost;
      return;
    }
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const auto& cov = pool[j].covered;
      if (!std::binary_search(cov.begin(), cov.end(), row)) continue;
      for (int k : cov) ++count[static_cast<std::size_t>(k)];
      rec(cost + pool[j].cost);
      for (int k : cov) --count[static_cast<std::size_t>(k)];
    }
  };
  rec(0.0);
  return best;
}

/// Plain column generation on the complete network, one column per iteration.
ColumnPool converge(const PricingNetwork& net) {
  ColumnPool pool = init_pool(net);
  RestrictedMaster master(pool);
  for (int it = 0; it < 5000; ++it) {
    const auto& st = master.solve();
    const auto cbar = modified_costs(net, st.duals);
    const auto res = solve_pricing(NetworkView(net), cbar, {});
    if (res.columns.empty()) break;
    EXPECT_TRUE(pool.add(res.columns[0]));
  }
  return pool;
}

}  // namespace

TEST(Pool, InitialSingletons) {
  const auto inst = truncate(load_solomon(fx::fixture("toy4.txt")), 3);
  const auto net = build_vrptw_network(inst);
  const auto pool = init_pool(net);
  ASSERT_EQ(pool.size(), 3u);
  double total = 0;
  for (std::size_t j = 0; j < 3; ++j) {
    EXPECT_EQ(pool[j].covered, std::vector<int>{static_cast<int>(j)});
    total += pool[j].cost;
  }
  const auto st = solve_lp(pool);
  EXPECT_NEAR(st.objective, total, 1e-9);
  for (double x : st.x) EXPECT_NEAR(x, 1.0, 1e-9);
  const auto ip = solve_irmp(pool);
  EXPECT_NEAR(ip.objective, st.objective, 1e-9);
  EXPECT_TRUE(ip.optimal);
}

TEST(Pool, InfeasibleSingletonIsRejected) {
  VrptwInstance inst;
  inst.capacity = 10;
  inst.depot = {0, 0, 0, 0, 0, 50, 0};
  inst.customers = {{1, 30, 0, 1, 0, 100, 5}};  // cannot get back by 50
  EXPECT_THROW(init_pool(Instance(inst)), InfeasibleInstance);
}

TEST(Pool, DuplicateFilterAndLengthCheck) {
  ColumnPool pool(3);
  const std::vector<std::uint8_t> a{1, 1, 0};
  EXPECT_TRUE(pool.add(a, 4.0));
  EXPECT_FALSE(pool.add(a, 4.0));
  EXPECT_FALSE(pool.add(a, 4.0 + 1e-12));
  EXPECT_TRUE(pool.add(a, 4.1));
  EXPECT_EQ(pool.size(), 2u);
  EXPECT_EQ(pool[0].cost, 4.0);
  EXPECT_THROW(pool.add(std::vector<std::uint8_t>{1, 0}, 1.0), ArgumentError);
  Column bad;
  bad.covered = {5};
  EXPECT_THROW(pool.add(bad), ArgumentError);
}

TEST(Rmp, ImprovingColumnLowersObjective) {
  ColumnPool pool(2);
  pool.add(std::vector<std::uint8_t>{1, 0}, 10);
  pool.add(std::vector<std::uint8_t>{0, 1}, 10);
  RestrictedMaster master(pool);
  const double before = master.solve().objective;
  pool.add(std::vector<std::uint8_t>{1, 1}, 15);
  EXPECT_LT(master.solve().objective, before - 1e-6);
}

TEST(Rmp, ConvergedLpMatchesFullEnumeration) {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const int n = 4 + static_cast<int>(seed % 5);  // n <= 8
    const auto net = build_vrptw_network(fx::random_vrptw(n, 300 + seed, 20, 140));
    const auto pool = converge(net);
    const auto cg = solve_lp(pool);

    ColumnPool full(n);
    const std::vector<double> zero(net.edge_count(), 0.0);
    for (auto& c : enumerate_all_columns(NetworkView(net), zero, PricingMode::Espprc)) full.add(std::move(c));
    EXPECT_NEAR(cg.objective, solve_lp(full).objective, 1e-6) << "seed " << seed;

    // no stored column prices out, and the integer master matches exhaustive search
    for (const auto& col : pool.columns()) {
      double rc = col.cost;
      for (int k : col.covered) rc -= cg.duals[static_cast<std::size_t>(k)];
      EXPECT_GE(rc, -1e-6);
    }
    const auto ip = solve_irmp(pool);
    EXPECT_TRUE(ip.optimal);
    EXPECT_NEAR(ip.objective, exhaustive_cover(pool), 1e-6) << "seed " << seed;
    EXPECT_GE(ip.objective / cg.objective, 1 - 1e-9);
  }
}

TEST(Rmp, WarmMasterIsMonotone) {
  const auto net = build_vrptw_network(truncate(load_solomon(fx::solomon("r101")), 25));
  ColumnPool pool = init_pool(net);
  RestrictedMaster master(pool);
  double last = kInf;
  for (int it = 0; it < 300; ++it) {
    const auto& st = master.solve();
    EXPECT_LE(st.objective, last + 1e-9);
    last = st.objective;
    const auto res = solve_pricing(NetworkView(net), modified_costs(net, st.duals), {});
    if (res.columns.empty()) break;
    pool.add(res.columns[0]);
  }
  const auto cold = solve_lp(pool);
  EXPECT_NEAR(cold.objective, master.state().objective, 1e-6);
}

TEST(Irmp, TimeLimitFallsBackToIncumbent) {
  Rng rng(4);
  ColumnPool pool(30);
  for (int i = 0; i < 30; ++i) {
    std::vector<std::uint8_t> a(30, 0);
    a[static_cast<std::size_t>(i)] = 1;
    pool.add(a, 10);
  }
  for (int j = 0; j < 400; ++j) {
    std::vector<std::uint8_t> a(30, 0);
    for (auto& v : a) v = rng.uniform() < 0.15;
    pool.add(a, 3 + rng.uniform(0, 20));
  }
  IrmpOptions opt;
  opt.time_limit = 0;
  const auto ip = solve_irmp(pool, opt);
  EXPECT_FALSE(ip.optimal);
  EXPECT_LE(ip.objective, 300 + 1e-9);
  EXPECT_TRUE(detail::covers_all(pool, ip.selected));
}

TEST(Irmp, LpDumpHasOneRowPerConstraint) {
  const auto pool = init_pool(build_vrptw_network(load_solomon(fx::fixture("toy4.txt"))));
  std::ostringstream out;
  write_master(out, pool, true);
  const auto s = out.str();
  EXPECT_NE(s.find(" c3:"), std::string::npos);
  EXPECT_EQ(s.find(" c4:"), std::string::npos);
}
