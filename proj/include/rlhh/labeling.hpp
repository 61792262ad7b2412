#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <span>
#include <tuple>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/network.hpp"

namespace rlhh {

/// SPPRC allows node repetition; ESPPRC tracks visited customers.
enum class PricingMode { Spprc, Espprc };

inline PricingMode default_mode(ProblemKind kind) {
  return kind == ProblemKind::Vrptw ? PricingMode::Espprc : PricingMode::Spprc;
}

/// A source-to-sink path priced as a master-problem column.
struct Column {
  std::vector<int> edges;    ///< edge indices, path order
  std::vector<int> nodes;    ///< source, customers..., sink
  std::vector<int> covered;  ///< covering-constraint indices, ascending
  double cost = 0;           ///< Σ c_ij
  double reduced_cost = 0;   ///< Σ c̄_ij under the costs it was priced with

  std::vector<std::uint8_t> covering_vector(int constraints) const {
    std::vector<std::uint8_t> a(static_cast<std::size_t>(constraints), 0);
    for (int k : covered) a[static_cast<std::size_t>(k)] = 1;
    return a;
  }
};

/// Builds a column from an edge path; reduced cost uses `modified` when given.
inline Column make_column(const PricingNetwork& net, std::vector<int> edges, std::span<const double> modified = {}) {
  Column col;
  col.nodes.push_back(net.source());
  for (int e : edges) {
    const auto& ed = net.edges[static_cast<std::size_t>(e)];
    col.cost += ed.cost;
    if (!modified.empty()) col.reduced_cost += modified[static_cast<std::size_t>(e)];
    col.nodes.push_back(ed.head);
    if (const int k = net.constraint_of(ed); k >= 0) col.covered.push_back(k);
  }
  std::sort(col.covered.begin(), col.covered.end());
  col.covered.erase(std::unique(col.covered.begin(), col.covered.end()), col.covered.end());
  col.edges = std::move(edges);
  return col;
}

/// Replays a path against flow conservation and every resource window.
inline bool replay_feasible(const PricingNetwork& net, std::span<const int> edges, bool elementary) {
  if (edges.empty()) return false;
  int at = net.source();
  ResourceVec res = source_resources(net);
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(net.node_count()), 0);
  for (int e : edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= net.edge_count()) return false;
    const auto& ed = net.edges[static_cast<std::size_t>(e)];
    if (ed.tail != at) return false;
    for (int r = 0; r < net.resources; ++r) {
      const double v = extend_resource(net, ed, r, res[static_cast<std::size_t>(r)]);
      if (std::isnan(v)) return false;
      res[static_cast<std::size_t>(r)] = v;
    }
    at = ed.head;
    if (net.is_customer(at)) {
      if (elementary && seen[static_cast<std::size_t>(at)]) return false;
      seen[static_cast<std::size_t>(at)] = 1;
    }
  }
  return at == net.sink();
}

/// Partial path state: node, accumulated modified cost, resource values and
/// (ESPPRC) the visited customer set as a bitset over nodes.
struct Label {
  int node = 0;
  double cost = 0;
  ResourceVec resources{};
  std::vector<std::uint64_t> visited;
};

namespace detail {

inline bool subset_words(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
  for (std::size_t w = 0; w < words; ++w)
    if (a[w] & ~b[w]) return false;
  return true;
}

/// Componentwise a <= b. `strict` reports whether some component is strictly smaller.
inline bool weakly_dominates(double ca, const ResourceVec& ra, const std::uint64_t* va, double cb, const ResourceVec& rb,
                             const std::uint64_t* vb, int resources, std::size_t words, bool& strict) {
  if (ca > cb) return false;
  strict = ca < cb;
  for (int r = 0; r < resources; ++r) {
    const auto i = static_cast<std::size_t>(r);
    if (ra[i] > rb[i]) return false;
    strict = strict || ra[i] < rb[i];
  }
  if (words == 0) return true;
  if (!subset_words(va, vb, words)) return false;
  if (!strict)
    for (std::size_t w = 0; w < words; ++w)
      if (va[w] != vb[w]) {
        strict = true;
        break;
      }
  return true;
}

}  // namespace detail

/// True iff `a` is no worse than `b` in cost, every resource and the visited
/// set (subset), and strictly better in at least one of them.
inline bool dominates(const Label& a, const Label& b, int resources) {
  if (a.node != b.node) throw ArgumentError("dominance between labels at different nodes");
  if (a.visited.size() != b.visited.size()) throw ArgumentError("visited sets of different width");
  bool strict = false;
  const bool weak = detail::weakly_dominates(a.cost, a.resources, a.visited.data(), b.cost, b.resources, b.visited.data(),
                                             resources, a.visited.size(), strict);
  return weak && strict;
}

struct PricingOptions {
  PricingMode mode = PricingMode::Espprc;
  std::size_t label_budget = 2'000'000;
  std::size_t max_columns = 1;
  double epsilon = kNegativeReducedCost;
  bool use_dominance = true;
  double time_limit = kInf;  ///< seconds for this call
};

struct PricingResult {
  std::vector<Column> columns;  ///< ascending reduced cost, all below -epsilon
  bool budget_truncated = false;
  bool time_truncated = false;
  std::size_t labels_created = 0;

  /// The search stopped early, so an empty result proves nothing.
  bool truncated() const { return budget_truncated || time_truncated; }
};

namespace detail {

/// Per customer node and resource, the least consumption of any edge into it.
/// Empty when some edge into a customer resets a resource or consumes a
/// negative amount; then no reachability bound is derived.
inline std::vector<ResourceVec> min_inbound_use(const PricingNetwork& net) {
  std::vector<ResourceVec> out(static_cast<std::size_t>(net.node_count()));
  for (auto& v : out) v.fill(kInf);
  for (const auto& e : net.edges) {
    if (!net.is_customer(e.head)) continue;
    if (e.resets) return {};
    for (int r = 0; r < net.resources; ++r) {
      const double u = e.use[static_cast<std::size_t>(r)];
      if (u < 0) return {};
      auto& m = out[static_cast<std::size_t>(e.head)][static_cast<std::size_t>(r)];
      m = std::min(m, u);
    }
  }
  return out;
}

}  // namespace detail

/// Forward labeling over the view with modified edge costs. Labels are
/// expanded best-first by cost (ties by node id, then creation order). In
/// ESPPRC mode a label's customer set holds the visited customers plus those
/// it can no longer reach within their resource windows.
inline PricingResult solve_pricing(const NetworkView& view, std::span<const double> modified, const PricingOptions& opt) {
  const PricingNetwork& net = view.network();
  if (modified.size() != net.edge_count()) throw ArgumentError("modified cost vector does not match edge count");
  if (opt.label_budget < 1) throw ArgumentError("label budget must be at least 1");
  PricingResult result;

  const bool elementary = opt.mode == PricingMode::Espprc;
  const std::size_t words = elementary ? (static_cast<std::size_t>(net.node_count()) + 63) / 64 : 0;
  const int R = net.resources;

  struct Entry {
    double cost;
    ResourceVec res;
    int node;
    int parent;
    int edge;
    bool alive;
  };
  std::vector<Entry> labels;
  std::vector<std::uint64_t> visited;  // words per label
  std::vector<std::vector<int>> at_node(static_cast<std::size_t>(net.node_count()));
  std::vector<int> sink_labels;

  using Key = std::tuple<double, int, int>;  // cost, node, index
  std::priority_queue<Key, std::vector<Key>, std::greater<>> open;

  auto vis = [&](int idx) { return visited.data() + static_cast<std::size_t>(idx) * words; };

  labels.push_back({0.0, source_resources(net), net.source(), -1, -1, true});
  visited.resize(words, 0);
  at_node[0].push_back(0);
  open.emplace(0.0, net.source(), 0);
  result.labels_created = 1;

  const auto min_in = elementary ? detail::min_inbound_use(net) : std::vector<ResourceVec>{};
  // marks customers whose window no label with resources `res` can still meet
  auto mark_unreachable = [&](const ResourceVec& res, std::uint64_t* set) {
    if (min_in.empty()) return;
    for (int k = 1; k <= net.customers; ++k) {
      if ((set[k >> 6] >> (k & 63)) & 1u) continue;
      for (int r = 0; r < R; ++r) {
        const auto i = static_cast<std::size_t>(r);
        if (res[i] + min_in[static_cast<std::size_t>(k)][i] > net.windows[static_cast<std::size_t>(k)][i].hi + 1e-9) {
          set[static_cast<std::size_t>(k >> 6)] |= std::uint64_t{1} << (k & 63);
          break;
        }
      }
    }
  };

  Stopwatch clock;
  std::vector<std::uint64_t> scratch(words);
  std::size_t pops = 0;
  while (!open.empty()) {
    if ((++pops & 1023u) == 0 && clock.seconds() > opt.time_limit) {
      result.time_truncated = true;
      break;
    }
    const auto [cost, node, idx] = open.top();
    open.pop();
    if (!labels[static_cast<std::size_t>(idx)].alive) continue;
    for (int e : net.out_edges(node)) {
      if (!view.has(static_cast<std::size_t>(e))) continue;
      const Edge& ed = net.edges[static_cast<std::size_t>(e)];
      const int head = ed.head;
      if (elementary && net.is_customer(head) && ((vis(idx)[head >> 6] >> (head & 63)) & 1u)) continue;
      const Entry& from = labels[static_cast<std::size_t>(idx)];
      ResourceVec res{};
      bool feasible = true;
      for (int r = 0; r < R && feasible; ++r) {
        const double v = extend_resource(net, ed, r, from.res[static_cast<std::size_t>(r)]);
        feasible = !std::isnan(v);
        res[static_cast<std::size_t>(r)] = v;
      }
      if (!feasible) continue;
      const double c = from.cost + modified[static_cast<std::size_t>(e)];
      if (elementary) {
        std::copy(vis(idx), vis(idx) + words, scratch.begin());
        if (net.is_customer(head)) scratch[static_cast<std::size_t>(head >> 6)] |= std::uint64_t{1} << (head & 63);
        if (head != net.sink()) mark_unreachable(res, scratch.data());
      }

      if (result.labels_created >= opt.label_budget) {
        result.budget_truncated = true;
        break;
      }

      if (head == net.sink()) {
        if (c < -opt.epsilon) {
          labels.push_back({c, res, head, idx, e, true});
          visited.insert(visited.end(), scratch.begin(), scratch.end());
          sink_labels.push_back(static_cast<int>(labels.size()) - 1);
          ++result.labels_created;
        }
        continue;
      }

      auto& bucket = at_node[static_cast<std::size_t>(head)];
      bool dominated = false;
      if (opt.use_dominance) {
        for (int other : bucket) {
          const Entry& o = labels[static_cast<std::size_t>(other)];
          bool strict = false;
          if (detail::weakly_dominates(o.cost, o.res, vis(other), c, res, scratch.data(), R, words, strict)) {
            dominated = true;
            break;
          }
        }
        if (dominated) continue;
        std::erase_if(bucket, [&](int other) {
          Entry& o = labels[static_cast<std::size_t>(other)];
          bool strict = false;
          if (detail::weakly_dominates(c, res, scratch.data(), o.cost, o.res, vis(other), R, words, strict)) {
            o.alive = false;
            return true;
          }
          return false;
        });
      }
      labels.push_back({c, res, head, idx, e, true});
      visited.insert(visited.end(), scratch.begin(), scratch.end());
      const int id = static_cast<int>(labels.size()) - 1;
      bucket.push_back(id);
      open.emplace(c, head, id);
      ++result.labels_created;
    }
    if (result.budget_truncated) break;
  }

  std::sort(sink_labels.begin(), sink_labels.end(), [&](int a, int b) {
    const double ca = labels[static_cast<std::size_t>(a)].cost, cb = labels[static_cast<std::size_t>(b)].cost;
    return ca != cb ? ca < cb : a < b;
  });
  const std::size_t keep = std::min(sink_labels.size(), opt.max_columns);
  for (std::size_t k = 0; k < keep; ++k) {
    std::vector<int> path;
    for (int at = sink_labels[k]; labels[static_cast<std::size_t>(at)].parent >= 0; at = labels[static_cast<std::size_t>(at)].parent)
      path.push_back(labels[static_cast<std::size_t>(at)].edge);
    std::reverse(path.begin(), path.end());
    result.columns.push_back(make_column(net, std::move(path), modified));
  }
  return result;
}

inline constexpr int kEnumerationNodeLimit = 14;

/// Every resource-feasible source-to-sink path of the view (elementary in
/// ESPPRC mode), each exactly once. Test oracle; refuses networks above
/// kEnumerationNodeLimit nodes.
inline std::vector<Column> enumerate_all_columns(const NetworkView& view, std::span<const double> modified, PricingMode mode) {
  const PricingNetwork& net = view.network();
  if (net.node_count() > kEnumerationNodeLimit)
    throw ArgumentError("enumerate_all_columns: " + std::to_string(net.node_count()) + " nodes exceeds the limit of " +
                        std::to_string(kEnumerationNodeLimit));
  if (modified.size() != net.edge_count()) throw ArgumentError("modified cost vector does not match edge count");
  const bool elementary = mode == PricingMode::Espprc;
  std::vector<Column> out;
  std::vector<int> path;
  std::vector<std::uint8_t> on_path(static_cast<std::size_t>(net.node_count()), 0);
  constexpr std::size_t kDepthLimit = 64;

  auto dfs = [&](auto&& self, int node, const ResourceVec& res) -> void {
    if (path.size() > kDepthLimit) throw ArgumentError("enumerate_all_columns: path depth limit exceeded");
    for (int e : net.out_edges(node)) {
      if (!view.has(static_cast<std::size_t>(e))) continue;
      const Edge& ed = net.edges[static_cast<std::size_t>(e)];
      if (elementary && on_path[static_cast<std::size_t>(ed.head)]) continue;
      ResourceVec next{};
      bool ok = true;
      for (int r = 0; r < net.resources && ok; ++r) {
        next[static_cast<std::size_t>(r)] = extend_resource(net, ed, r, res[static_cast<std::size_t>(r)]);
        ok = !std::isnan(next[static_cast<std::size_t>(r)]);
      }
      if (!ok) continue;
      path.push_back(e);
      if (ed.head == net.sink()) {
        out.push_back(make_column(net, path, modified));
      } else {
        on_path[static_cast<std::size_t>(ed.head)] = 1;
        self(self, ed.head, next);
        on_path[static_cast<std::size_t>(ed.head)] = 0;
      }
      path.pop_back();
    }
  };
  dfs(dfs, net.source(), source_resources(net));
  return out;
}

}  // namespace rlhh
