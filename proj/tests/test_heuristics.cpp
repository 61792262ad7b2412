#include <gtest/gtest.h>

#include <algorithm>
#include <functional>
#include <map>

#include "rlhh/heuristics.hpp"
#include "test_util.hpp"

using namespace rlhh;

namespace {

PricingNetwork vrptw(int n, std::uint64_t seed) { return build_vrptw_network(fx::random_vrptw(n, seed, 40, 200)); }

std::vector<double> random_costs(std::size_t m, Rng& rng) {
  std::vector<double> c(m);
  for (auto& v : c) v = std::round(rng.uniform(-30, 30));  // integral values force ties
  return c;
}

void expect_subset_with_structure(const PricingNetwork& net, const EdgeMask& m) {
  ASSERT_EQ(m.size(), net.edge_count());
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.is_structural(e)) EXPECT_TRUE(m[e]);
}

/// All loopless source-to-sink path costs, by plain DFS.
std::vector<double> all_path_costs(const PricingNetwork& net, const std::vector<double>& w) {
  std::vector<double> out;
  std::vector<std::uint8_t> on(static_cast<std::size_t>(net.node_count()), 0);
  std::function<void(int, double)> dfs = [&](int v, double c) {
    if (v == net.sink()) {
      out.push_back(c);
      return;
    }
    on[static_cast<std::size_t>(v)] = 1;
    for (std::size_t e = 0; e < net.edge_count(); ++e) {
      const auto& ed = net.edges[e];
      if (ed.tail == v && !on[static_cast<std::size_t>(ed.head)]) dfs(ed.head, c + w[e]);
    }
    on[static_cast<std::size_t>(v)] = 0;
  };
  dfs(net.source(), 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Schedules, ValuesCursorAndReset) {
  EXPECT_EQ(default_schedule(HeuristicKind::BE1), (std::vector<double>{0.1, 0.3, 0.5, 0.7}));
  EXPECT_EQ(default_schedule(HeuristicKind::BE2), (std::vector<double>{0.1, 0.2, 0.3}));
  EXPECT_EQ(default_schedule(HeuristicKind::BE3), (std::vector<double>{0.3, 0.5, 0.7}));
  EXPECT_EQ(default_schedule(HeuristicKind::BN), (std::vector<double>{0.9, 0.7, 0.3}));
  EXPECT_EQ(default_schedule(HeuristicKind::BP), (std::vector<double>{3, 5, 7, 9}));
  HeuristicAction a(HeuristicKind::BE1);
  EXPECT_EQ(next_parameter(a), 0.1);
  for (int i = 0; i < 3; ++i) a.fail();
  EXPECT_EQ(next_parameter(a), 0.7);
  a.fail();
  EXPECT_FALSE(next_parameter(a).has_value());
  a.fail();
  EXPECT_TRUE(a.exhausted());
  a.reset();
  EXPECT_EQ(next_parameter(a), 0.1);
  EXPECT_EQ(parse_heuristic("bp"), HeuristicKind::BP);
  EXPECT_FALSE(parse_heuristic("xx").has_value());
}

TEST(Be1, ThresholdRule) {
  PricingNetwork net;
  net.customers = 2;
  net.resources = 0;
  net.windows.resize(4);
  net.edges = {{0, 1, 1, {}, 0}, {0, 2, 1, {}, 0}, {1, 2, 6, {}, 0}, {2, 1, 4, {}, 0}, {1, 3, 1, {}, 0}, {2, 3, 1, {}, 0}};
  net.finalize();
  const std::vector<double> pi{10, 3};
  const auto m = be1(net, pi, 0.5);
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const auto& ed = net.edges[e];
    if (ed.tail == 1 && ed.head == 2) EXPECT_FALSE(m[e]);
    if (ed.tail == 2 && ed.head == 1) EXPECT_TRUE(m[e]);
  }
  EXPECT_EQ(be1(net, pi, 0.7).kept(), net.edge_count());
  EXPECT_EQ(be1(net, std::vector<double>{-1, 0}, 0.1).kept(), net.edge_count());
  EXPECT_THROW(be1(net, std::vector<double>{}, 0.1), ArgumentError);
}

TEST(Be1, MatchesEdgewiseFilter) {
  Rng rng(2);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto net = vrptw(15, s);
    const auto pi = fx::random_duals(15, rng, -5, 80);
    const double alpha = 0.1 + 0.2 * static_cast<double>(s % 4);
    const auto m = be1(net, pi, alpha);
    const double thr = alpha * *std::max_element(pi.begin(), pi.end());
    for (std::size_t e = 0; e < net.edge_count(); ++e)
      EXPECT_EQ(m[e], net.is_structural(e) || !(net.edges[e].cost > thr));
  }
}

TEST(Be2, CardinalityAndSortPrefix) {
  Rng rng(3);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto net = vrptw(20, s);
    const auto c = random_costs(net.edge_count(), rng);
    std::vector<int> prunable;
    for (std::size_t e = 0; e < net.edge_count(); ++e)
      if (!net.is_structural(e)) prunable.push_back(static_cast<int>(e));
    for (double alpha : {0.1, 0.2, 0.3}) {
      const auto m = be2(net, c, alpha);
      expect_subset_with_structure(net, m);
      const auto expected = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(prunable.size()) - 1e-9));
      std::size_t kept = 0;
      for (int e : prunable) kept += m[static_cast<std::size_t>(e)];
      EXPECT_EQ(kept, expected);
      // independent full sort by (c̄, tail, head)
      auto sorted = prunable;
      std::stable_sort(sorted.begin(), sorted.end(), [&](int a, int b) {
        const auto& ea = net.edges[static_cast<std::size_t>(a)];
        const auto& eb = net.edges[static_cast<std::size_t>(b)];
        return std::tie(c[static_cast<std::size_t>(a)], ea.tail, ea.head) < std::tie(c[static_cast<std::size_t>(b)], eb.tail, eb.head);
      });
      for (std::size_t k = 0; k < sorted.size(); ++k) EXPECT_EQ(m[static_cast<std::size_t>(sorted[k])], k < expected);
    }
  }
}

TEST(Be2, ExactCountOnHundredPrunableEdges) {
  PricingNetwork net;
  net.customers = 11;
  net.resources = 0;
  net.windows.resize(13);
  for (int v = 1; v <= 11; ++v) {
    net.edges.push_back({0, v, 0, {}, 0});
    net.edges.push_back({v, 12, 0, {}, 0});
  }
  int added = 0;
  for (int i = 1; i <= 11 && added < 100; ++i)
    for (int j = 1; j <= 11 && added < 100; ++j)
      if (i != j) {
        net.edges.push_back({i, j, 1, {}, 0});
        ++added;
      }
  net.finalize();
  Rng rng(1);
  const auto c = random_costs(net.edge_count(), rng);
  EXPECT_EQ(be2(net, c, 0.1).kept() - 22, 10u);
}

TEST(Be3, PerNodeSelection) {
  Rng rng(4);
  for (std::uint64_t s = 0; s < 15; ++s) {
    const auto net = vrptw(18, s);
    const auto c = random_costs(net.edge_count(), rng);
    for (double frac : {0.3, 0.5, 0.7}) {
      const int N = be3_count(net, frac);
      EXPECT_EQ(N, static_cast<int>(std::ceil(frac * 20 - 1e-9)));
      const auto m = be3(net, c, N);
      expect_subset_with_structure(net, m);
      std::vector<std::uint8_t> oracle(net.edge_count(), 0);
      auto rank = [&](std::vector<int> ids) {
        std::sort(ids.begin(), ids.end(), [&](int a, int b) {
          const auto& ea = net.edges[static_cast<std::size_t>(a)];
          const auto& eb = net.edges[static_cast<std::size_t>(b)];
          return std::tie(c[static_cast<std::size_t>(a)], ea.tail, ea.head) < std::tie(c[static_cast<std::size_t>(b)], eb.tail, eb.head);
        });
        for (std::size_t k = 0; k < ids.size() && k < static_cast<std::size_t>(N); ++k) oracle[static_cast<std::size_t>(ids[k])] = 1;
      };
      for (int v = 1; v <= net.customers; ++v) {
        std::vector<int> in, out;
        for (std::size_t e = 0; e < net.edge_count(); ++e) {
          if (net.is_structural(e)) continue;
          if (net.edges[e].head == v) in.push_back(static_cast<int>(e));
          if (net.edges[e].tail == v) out.push_back(static_cast<int>(e));
        }
        rank(in);
        rank(out);
      }
      for (std::size_t e = 0; e < net.edge_count(); ++e) EXPECT_EQ(m[e], net.is_structural(e) || oracle[e]);
      for (int v = 1; v <= net.customers; ++v) {
        std::size_t indeg = 0, kept = 0;
        for (int e : net.in_edges(v)) {
          ++indeg;
          kept += m[static_cast<std::size_t>(e)];
        }
        EXPECT_GE(kept, std::min<std::size_t>(static_cast<std::size_t>(N), indeg));
      }
    }
  }
}

TEST(Be3, SmallDegreeAndMinimum) {
  PricingNetwork net;
  net.customers = 3;
  net.resources = 0;
  net.windows.resize(5);
  for (int v = 1; v <= 3; ++v) {
    net.edges.push_back({0, v, 0, {}, 0});
    net.edges.push_back({v, 4, 0, {}, 0});
  }
  net.edges.push_back({1, 3, 0, {}, 0});
  net.edges.push_back({2, 3, 0, {}, 0});
  net.finalize();
  std::vector<double> c(net.edge_count(), 0.0);
  int e13 = -1, e23 = -1;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    if (net.edges[e].tail == 1 && net.edges[e].head == 3) e13 = static_cast<int>(e), c[e] = 2;
    if (net.edges[e].tail == 2 && net.edges[e].head == 3) e23 = static_cast<int>(e), c[e] = 5;
  }
  EXPECT_EQ(be3(net, c, 5).kept(), net.edge_count());
  // N = 1: the in-edge rule at node 3 keeps only c̄ = 2; 2 -> 3 survives only as node 2's cheapest out-edge
  const auto m = be3(net, c, 1);
  EXPECT_TRUE(m[static_cast<std::size_t>(e13)]);
  EXPECT_TRUE(m[static_cast<std::size_t>(e23)]);
  EXPECT_THROW(be3(net, c, 0), ArgumentError);
}

TEST(Bn, NormalizationEndpointsAndDeterminism) {
  const auto p = bn_normalize(std::vector<double>{2, 7}, 0.9);
  EXPECT_DOUBLE_EQ(p[0], 0);
  EXPECT_DOUBLE_EQ(p[1], 0.9);
  EXPECT_TRUE(bn_normalize(std::vector<double>{3, 3}, 0.9).empty());

  const auto net = vrptw(15, 1);
  Rng draw(8);
  const auto pi = fx::random_duals(15, draw, 0, 50);
  Rng a(42), b(42);
  const auto ma = bn(net, pi, 0.7, a);
  EXPECT_EQ(ma, bn(net, pi, 0.7, b));
  expect_subset_with_structure(net, ma);
  const auto argmin = static_cast<int>(std::min_element(pi.begin(), pi.end()) - pi.begin());
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edges[e].head == argmin + 1) EXPECT_TRUE(ma[e]);
  Rng c(1);
  EXPECT_EQ(bn(net, std::vector<double>(15, 4.0), 0.9, c).kept(), net.edge_count());
}

TEST(Bn, RemovalFrequency) {
  PricingNetwork net;
  net.customers = 3;
  net.resources = 0;
  net.windows.resize(5);
  for (int v = 1; v <= 3; ++v) {
    net.edges.push_back({0, v, 0, {}, 0});
    net.edges.push_back({v, 4, 0, {}, 0});
  }
  net.edges.push_back({1, 2, 0, {}, 0});
  net.finalize();
  std::size_t e12 = 0;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (net.edges[e].tail == 1 && net.edges[e].head == 2) e12 = e;
  // π' of customer 2 (index 1) = 0.9 * (7 - 0) / (9 - 0) = 0.7
  const std::vector<double> pi{0, 7, 9};
  Rng rng(2025);
  int removed = 0;
  const int trials = 100'000;
  for (int t = 0; t < trials; ++t) removed += !bn(net, pi, 0.9, rng)[e12];
  EXPECT_NEAR(removed / static_cast<double>(trials), 0.7, 0.01);
}

TEST(Bp, NormalizationEndpoints) {
  const auto w = bp_normalize(std::vector<double>{-4, 6, 1, 3.5});
  EXPECT_DOUBLE_EQ(w[0], 0);
  EXPECT_DOUBLE_EQ(w[1], 1);
  EXPECT_DOUBLE_EQ(w[2], 0);  // midpoint
  EXPECT_DOUBLE_EQ(w[3], 0.5);
  for (double v : bp_normalize(std::vector<double>{2, 2, 2})) EXPECT_EQ(v, 0);
}

TEST(Bp, KShortestMatchEnumerationOnSevenNodes) {
  Rng rng(6);
  for (std::uint64_t s = 0; s < 40; ++s) {
    const auto net = vrptw(5, 900 + s);  // 7 nodes
    std::vector<double> w(net.edge_count());
    for (auto& v : w) v = rng.uniform(0, 1);
    const auto costs = all_path_costs(net, w);
    for (int k : {1, 3, 5, 9}) {
      const auto paths = k_shortest_paths(net, w, k);
      ASSERT_EQ(paths.size(), std::min<std::size_t>(static_cast<std::size_t>(k), costs.size()));
      for (std::size_t i = 0; i < paths.size(); ++i) EXPECT_NEAR(paths[i].cost, costs[i], 1e-12) << "seed " << s << " k " << k;
      std::set<std::vector<int>> distinct;
      for (const auto& p : paths) distinct.insert(p.edges);
      EXPECT_EQ(distinct.size(), paths.size());
    }
  }
}

TEST(Bp, MaskContainsShortestPathAndFallsBackGracefully) {
  Rng rng(7);
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto net = vrptw(25, s);
    const auto c = random_costs(net.edge_count(), rng);
    const auto shortest = k_shortest_paths(net, bp_normalize(c), 1);
    ASSERT_EQ(shortest.size(), 1u);
    for (int k : {1, 3, 9}) {
      const auto m = bp(net, c, k);
      expect_subset_with_structure(net, m);
      for (int e : shortest[0].edges) EXPECT_TRUE(m[static_cast<std::size_t>(e)]);
    }
  }
  // a two-customer network with no customer arcs has exactly two paths
  PricingNetwork tiny;
  tiny.customers = 2;
  tiny.resources = 0;
  tiny.windows.resize(4);
  tiny.edges = {{0, 1, 0, {}, 0}, {0, 2, 0, {}, 0}, {1, 3, 0, {}, 0}, {2, 3, 0, {}, 0}};
  tiny.finalize();
  EXPECT_EQ(k_shortest_paths(tiny, std::vector<double>(4, 0.0), 9).size(), 2u);
  EXPECT_EQ(bp(tiny, std::vector<double>(4, 1.0), 3).kept(), 4u);
}
