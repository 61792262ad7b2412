#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/network.hpp"

namespace rlhh {

enum class HeuristicKind { BE1, BE2, BE3, BN, BP };

inline constexpr int kHeuristicCount = 5;
inline constexpr std::array<HeuristicKind, kHeuristicCount> kAllHeuristics = {
    HeuristicKind::BE1, HeuristicKind::BE2, HeuristicKind::BE3, HeuristicKind::BN, HeuristicKind::BP};

inline std::string_view to_string(HeuristicKind k) {
  constexpr std::array<std::string_view, kHeuristicCount> names = {"be1", "be2", "be3", "bn", "bp"};
  return names[static_cast<std::size_t>(k)];
}

inline std::optional<HeuristicKind> parse_heuristic(std::string_view s) {
  for (auto k : kAllHeuristics)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// Parameter values tried in order. BE3 values are fractions of |V|.
inline std::vector<double> default_schedule(HeuristicKind k) {
  switch (k) {
    case HeuristicKind::BE1: return {0.1, 0.3, 0.5, 0.7};
    case HeuristicKind::BE2: return {0.1, 0.2, 0.3};
    case HeuristicKind::BE3: return {0.3, 0.5, 0.7};
    case HeuristicKind::BN: return {0.9, 0.7, 0.3};
    case HeuristicKind::BP: return {3, 5, 7, 9};
  }
  return {};
}

/// A heuristic with its parameter schedule and a cursor that moves forward
/// each time pricing on its reduced network fails.
class HeuristicAction {
 public:
  explicit HeuristicAction(HeuristicKind kind) : HeuristicAction(kind, default_schedule(kind)) {}
  HeuristicAction(HeuristicKind kind, std::vector<double> schedule) : kind_(kind), schedule_(std::move(schedule)) {
    if (schedule_.empty()) throw ArgumentError("empty parameter schedule for " + std::string(to_string(kind)));
  }

  HeuristicKind kind() const { return kind_; }
  const std::vector<double>& schedule() const { return schedule_; }
  std::size_t cursor() const { return cursor_; }
  bool exhausted() const { return cursor_ >= schedule_.size(); }

  std::optional<double> current() const {
    if (exhausted()) return std::nullopt;
    return schedule_[cursor_];
  }
  void fail() {
    if (!exhausted()) ++cursor_;
  }
  void reset() { cursor_ = 0; }

 private:
  HeuristicKind kind_;
  std::vector<double> schedule_;
  std::size_t cursor_ = 0;
};

/// Value at the cursor, or nullopt once every value has failed.
inline std::optional<double> next_parameter(const HeuristicAction& action) { return action.current(); }

namespace detail {

inline EdgeMask structural_only(const PricingNetwork& net) {
  EdgeMask m = EdgeMask::none(net.edge_count());
  for (std::size_t e = 0; e < net.edge_count(); ++e) m.keep[e] = net.is_structural(e);
  return m;
}

inline void check_costs(const PricingNetwork& net, std::span<const double> cbar) {
  if (cbar.size() != net.edge_count()) throw ArgumentError("modified cost vector does not match edge count");
}

/// Orders edge ids by (c̄, tail, head).
inline auto by_reduced_cost(const PricingNetwork& net, std::span<const double> cbar) {
  return [&net, cbar](int a, int b) {
    const auto ua = static_cast<std::size_t>(a), ub = static_cast<std::size_t>(b);
    if (cbar[ua] != cbar[ub]) return cbar[ua] < cbar[ub];
    if (net.edges[ua].tail != net.edges[ub].tail) return net.edges[ua].tail < net.edges[ub].tail;
    return net.edges[ua].head < net.edges[ub].head;
  };
}

}  // namespace detail

/// Removes prunable edges whose original cost exceeds alpha * max(π). Keeps
/// everything when max(π) <= 0.
inline EdgeMask be1(const PricingNetwork& net, std::span<const double> duals, double alpha) {
  if (duals.empty()) throw ArgumentError("be1: empty dual vector");
  EdgeMask m = EdgeMask::all(net.edge_count());
  const double pi_max = *std::max_element(duals.begin(), duals.end());
  if (pi_max <= 0) return m;
  const double threshold = alpha * pi_max;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (!net.is_structural(e) && net.edges[e].cost > threshold) m.keep[e] = 0;
  return m;
}

/// Number of prunable edges BE2 keeps.
inline std::size_t be2_keep_count(std::size_t prunable, double alpha) {
  return std::min(prunable, static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(prunable) - 1e-9)));
}

/// Keeps the ceil(alpha * |E'|) prunable edges of lowest c̄, where E' is the
/// set of prunable edges.
inline EdgeMask be2(const PricingNetwork& net, std::span<const double> cbar, double alpha) {
  detail::check_costs(net, cbar);
  EdgeMask m = detail::structural_only(net);
  std::vector<int> prunable;
  for (std::size_t e = 0; e < net.edge_count(); ++e)
    if (!net.is_structural(e)) prunable.push_back(static_cast<int>(e));
  const std::size_t keep = be2_keep_count(prunable.size(), alpha);
  std::partial_sort(prunable.begin(), prunable.begin() + static_cast<std::ptrdiff_t>(keep), prunable.end(),
                    detail::by_reduced_cost(net, cbar));
  for (std::size_t k = 0; k < keep; ++k) m.keep[static_cast<std::size_t>(prunable[k])] = 1;
  return m;
}

/// N from a fraction of |V| = customers + 2.
inline int be3_count(const PricingNetwork& net, double fraction) {
  return std::max(1, static_cast<int>(std::ceil(fraction * net.node_count() - 1e-9)));
}

/// Keeps a prunable edge iff it is among the N cheapest prunable in-edges of
/// its head or the N cheapest prunable out-edges of its tail.
inline EdgeMask be3(const PricingNetwork& net, std::span<const double> cbar, int n_keep) {
  detail::check_costs(net, cbar);
  if (n_keep < 1) throw ArgumentError("be3: N must be at least 1");
  EdgeMask m = detail::structural_only(net);
  const auto less = detail::by_reduced_cost(net, cbar);
  std::vector<int> list;
  auto keep_cheapest = [&] {
    const auto k = std::min(list.size(), static_cast<std::size_t>(n_keep));
    std::partial_sort(list.begin(), list.begin() + static_cast<std::ptrdiff_t>(k), list.end(), less);
    for (std::size_t i = 0; i < k; ++i) m.keep[static_cast<std::size_t>(list[i])] = 1;
  };
  for (int v = 1; v <= net.customers; ++v) {
    list.clear();
    for (int e : net.in_edges(v))
      if (!net.is_structural(static_cast<std::size_t>(e))) list.push_back(e);
    keep_cheapest();
    list.clear();
    for (int e : net.out_edges(v))
      if (!net.is_structural(static_cast<std::size_t>(e))) list.push_back(e);
    keep_cheapest();
  }
  return m;
}

/// π'_k = beta * (π_k - π_min) / (π_max - π_min); empty when all duals are equal.
inline std::vector<double> bn_normalize(std::span<const double> duals, double beta) {
  if (duals.empty()) throw ArgumentError("bn: empty dual vector");
  const auto [lo, hi] = std::minmax_element(duals.begin(), duals.end());
  if (*hi == *lo) return {};
  std::vector<double> out(duals.size());
  for (std::size_t k = 0; k < duals.size(); ++k) out[k] = beta * ((duals[k] - *lo) / (*hi - *lo));
  return out;
}

/// Drops each prunable edge into customer j with probability π'_j. One
/// uniform draw per prunable edge, in edge order.
inline EdgeMask bn(const PricingNetwork& net, std::span<const double> duals, double beta, Rng& rng) {
  if (duals.size() != static_cast<std::size_t>(net.customers)) throw ArgumentError("bn: dual vector length mismatch");
  EdgeMask m = EdgeMask::all(net.edge_count());
  const auto p = bn_normalize(duals, beta);
  if (p.empty()) return m;
  for (std::size_t e = 0; e < net.edge_count(); ++e) {
    const int k = net.constraint_of(net.edges[e]);
    if (net.is_structural(e) || k < 0) continue;
    if (rng.uniform() < p[static_cast<std::size_t>(k)]) m.keep[e] = 0;
  }
  return m;
}

/// max(0, ((c̄ - min) - (max - c̄)) / (max - min)); all zero when max == min.
inline std::vector<double> bp_normalize(std::span<const double> cbar) {
  std::vector<double> out(cbar.size(), 0.0);
  if (cbar.empty()) return out;
  const auto [lo, hi] = std::minmax_element(cbar.begin(), cbar.end());
  const double range = *hi - *lo;
  if (range <= 0) return out;
  for (std::size_t e = 0; e < cbar.size(); ++e) out[e] = std::max(0.0, ((cbar[e] - *lo) - (*hi - cbar[e])) / range);
  return out;
}

struct WeightedPath {
  std::vector<int> edges;
  double cost = 0;
};

namespace detail {

/// Dijkstra from `from` to `to` over nonnegative weights, skipping banned
/// nodes and edges. Ties resolve toward lower node ids and earlier edges.
inline std::optional<WeightedPath> dijkstra(const PricingNetwork& net, std::span<const double> w, int from, int to,
                                            const std::vector<std::uint8_t>& banned_node,
                                            const std::vector<std::uint8_t>& banned_edge) {
  const auto nodes = static_cast<std::size_t>(net.node_count());
  std::vector<double> dist(nodes, kInf);
  std::vector<int> via(nodes, -1);
  std::vector<std::uint8_t> done(nodes, 0);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[static_cast<std::size_t>(from)] = 0;
  pq.emplace(0.0, from);
  while (!pq.empty()) {
    const auto [d, v] = pq.top();
    pq.pop();
    if (done[static_cast<std::size_t>(v)]) continue;
    done[static_cast<std::size_t>(v)] = 1;
    if (v == to) break;
    for (int e : net.out_edges(v)) {
      if (banned_edge[static_cast<std::size_t>(e)]) continue;
      const int h = net.edges[static_cast<std::size_t>(e)].head;
      if (banned_node[static_cast<std::size_t>(h)] || done[static_cast<std::size_t>(h)]) continue;
      const double nd = d + w[static_cast<std::size_t>(e)];
      if (nd < dist[static_cast<std::size_t>(h)]) {
        dist[static_cast<std::size_t>(h)] = nd;
        via[static_cast<std::size_t>(h)] = e;
        pq.emplace(nd, h);
      }
    }
  }
  if (!std::isfinite(dist[static_cast<std::size_t>(to)])) return std::nullopt;
  WeightedPath p;
  p.cost = dist[static_cast<std::size_t>(to)];
  for (int v = to; v != from; v = net.edges[static_cast<std::size_t>(via[static_cast<std::size_t>(v)])].tail)
    p.edges.push_back(via[static_cast<std::size_t>(v)]);
  std::reverse(p.edges.begin(), p.edges.end());
  return p;
}

}  // namespace detail

/// Yen's K shortest loopless source-to-sink paths under nonnegative edge
/// weights, ascending by cost (ties by edge sequence). Fewer than K when the
/// network has fewer paths.
inline std::vector<WeightedPath> k_shortest_paths(const PricingNetwork& net, std::span<const double> w, int k) {
  if (w.size() != net.edge_count()) throw ArgumentError("weight vector does not match edge count");
  if (k < 1) throw ArgumentError("k_shortest_paths: K must be at least 1");
  std::vector<std::uint8_t> banned_node(static_cast<std::size_t>(net.node_count()), 0);
  std::vector<std::uint8_t> banned_edge(net.edge_count(), 0);
  std::vector<WeightedPath> found;
  auto first = detail::dijkstra(net, w, net.source(), net.sink(), banned_node, banned_edge);
  if (!first) return found;
  found.push_back(std::move(*first));

  auto better = [](const WeightedPath& a, const WeightedPath& b) {
    return a.cost != b.cost ? a.cost < b.cost : a.edges < b.edges;
  };
  std::vector<WeightedPath> candidates;
  while (static_cast<int>(found.size()) < k) {
    const auto& last = found.back().edges;
    double root_cost = 0;
    for (std::size_t i = 0; i < last.size(); ++i) {
      const int spur = net.edges[static_cast<std::size_t>(last[i])].tail;
      std::fill(banned_edge.begin(), banned_edge.end(), 0);
      std::fill(banned_node.begin(), banned_node.end(), 0);
      for (const auto& p : found)
        if (p.edges.size() > i && std::equal(p.edges.begin(), p.edges.begin() + static_cast<std::ptrdiff_t>(i), last.begin()))
          banned_edge[static_cast<std::size_t>(p.edges[i])] = 1;
      for (std::size_t r = 0; r < i; ++r) banned_node[static_cast<std::size_t>(net.edges[static_cast<std::size_t>(last[r])].tail)] = 1;
      if (auto tail = detail::dijkstra(net, w, spur, net.sink(), banned_node, banned_edge)) {
        WeightedPath cand;
        cand.edges.assign(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(i));
        cand.edges.insert(cand.edges.end(), tail->edges.begin(), tail->edges.end());
        cand.cost = root_cost + tail->cost;
        const bool known = std::any_of(candidates.begin(), candidates.end(), [&](const WeightedPath& c) { return c.edges == cand.edges; });
        if (!known) candidates.push_back(std::move(cand));
      }
      root_cost += w[static_cast<std::size_t>(last[i])];
    }
    if (candidates.empty()) break;
    auto best = std::min_element(candidates.begin(), candidates.end(), better);
    found.push_back(std::move(*best));
    candidates.erase(best);
  }
  // recompute costs by summation so equal paths report identical totals
  for (auto& p : found) {
    p.cost = 0;
    for (int e : p.edges) p.cost += w[static_cast<std::size_t>(e)];
  }
  return found;
}

/// Keeps structural edges plus every edge on the K shortest paths under
/// bp_normalize(c̄).
inline EdgeMask bp(const PricingNetwork& net, std::span<const double> cbar, int k) {
  detail::check_costs(net, cbar);
  const auto w = bp_normalize(cbar);
  EdgeMask m = detail::structural_only(net);
  for (const auto& p : k_shortest_paths(net, w, k))
    for (int e : p.edges) m.keep[static_cast<std::size_t>(e)] = 1;
  return m;
}

/// Runs heuristic `kind` with raw schedule value `param` (BE3 fractions are
/// converted to N, BP values to K).
inline EdgeMask apply_heuristic(HeuristicKind kind, const PricingNetwork& net, std::span<const double> duals,
                                std::span<const double> cbar, double param, Rng& rng) {
  switch (kind) {
    case HeuristicKind::BE1: return be1(net, duals, param);
    case HeuristicKind::BE2: return be2(net, cbar, param);
    case HeuristicKind::BE3: return be3(net, cbar, be3_count(net, param));
    case HeuristicKind::BN: return bn(net, duals, param, rng);
    case HeuristicKind::BP: return bp(net, cbar, static_cast<int>(std::lround(param)));
  }
  throw ArgumentError("unknown heuristic");
}

}  // namespace rlhh
