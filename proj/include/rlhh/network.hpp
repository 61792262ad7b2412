#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/instance.hpp"

namespace rlhh {

inline constexpr int kMaxResources = 3;
using ResourceVec = std::array<double, kMaxResources>;

struct ResourceWindow {
  double lo = 0;
  double hi = kInf;
};

/// Directed edge with cost and per-resource consumption. When bit r of
/// `resets` is set, resource r restarts from zero before the edge's
/// consumption is added.
struct Edge {
  int tail = 0;
  int head = 0;
  double cost = 0;
  ResourceVec use{};
  std::uint8_t resets = 0;
};

/// Pricing network. Node 0 is the source, nodes 1..n are customers/trips
/// (customer k lives at node k + 1), node n + 1 is the sink. Edges are sorted
/// by (tail, head).
class PricingNetwork {
 public:
  ProblemKind kind = ProblemKind::Vrptw;
  int customers = 0;
  int resources = 0;
  std::vector<std::string> resource_names;
  std::vector<Edge> edges;
  std::vector<std::array<ResourceWindow, kMaxResources>> windows;  ///< per node

  int source() const { return 0; }
  int sink() const { return customers + 1; }
  int node_count() const { return customers + 2; }
  std::size_t edge_count() const { return edges.size(); }

  bool is_customer(int node) const { return node >= 1 && node <= customers; }
  /// Covering constraint an edge contributes to (its head), or -1 for sink edges.
  int constraint_of(const Edge& e) const { return is_customer(e.head) ? e.head - 1 : -1; }
  /// Source-outgoing and sink-incoming edges; no heuristic removes them.
  bool is_structural(std::size_t e) const { return edges[e].tail == source() || edges[e].head == sink(); }

  /// Edge indices leaving `node`, contiguous because edges are sorted by tail.
  std::span<const int> out_edges(int node) const {
    const auto b = out_offset_[static_cast<std::size_t>(node)], e = out_offset_[static_cast<std::size_t>(node) + 1];
    return std::span<const int>(out_index_).subspan(static_cast<std::size_t>(b), static_cast<std::size_t>(e - b));
  }
  std::span<const int> in_edges(int node) const { return in_edges_[static_cast<std::size_t>(node)]; }

  /// Sorts edges and rebuilds the adjacency indices. Called by the builders.
  void finalize() {
    std::sort(edges.begin(), edges.end(),
              [](const Edge& a, const Edge& b) { return a.tail != b.tail ? a.tail < b.tail : a.head < b.head; });
    const auto nodes = static_cast<std::size_t>(node_count());
    out_offset_.assign(nodes + 1, 0);
    out_index_.resize(edges.size());
    in_edges_.assign(nodes, {});
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto& ed = edges[e];
      if (ed.tail == ed.head) throw ArgumentError("self-loop in pricing network");
      if (ed.head == source()) throw ArgumentError("edge into the source");
      if (ed.tail == sink()) throw ArgumentError("edge out of the sink");
      ++out_offset_[static_cast<std::size_t>(ed.tail) + 1];
      out_index_[e] = static_cast<int>(e);
      in_edges_[static_cast<std::size_t>(ed.head)].push_back(static_cast<int>(e));
    }
    for (std::size_t v = 0; v < nodes; ++v) out_offset_[v + 1] += out_offset_[v];
  }

 private:
  std::vector<int> out_offset_;
  std::vector<int> out_index_;
  std::vector<std::vector<int>> in_edges_;
};

inline double euclidean(const Customer& a, const Customer& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Resources: 0 = time, 1 = load. Customer pair (i, j) is linked iff
/// due_j - ready_i >= service_i + dist(i, j). Travel time equals distance.
inline PricingNetwork build_vrptw_network(const VrptwInstance& inst) {
  inst.validate();
  PricingNetwork net;
  net.kind = ProblemKind::Vrptw;
  net.customers = static_cast<int>(inst.customers.size());
  net.resources = 2;
  net.resource_names = {"time", "load"};
  const int n = net.customers;
  net.windows.resize(static_cast<std::size_t>(n + 2));
  const ResourceWindow load{0, inst.capacity};
  net.windows.front() = {ResourceWindow{inst.depot.ready, inst.depot.due}, load, ResourceWindow{}};
  net.windows.back() = net.windows.front();
  for (int k = 0; k < n; ++k) {
    const auto& c = inst.customers[static_cast<std::size_t>(k)];
    net.windows[static_cast<std::size_t>(k + 1)] = {ResourceWindow{c.ready, c.due}, load, ResourceWindow{}};
  }
  const auto& depot = inst.depot;
  for (int i = 0; i < n; ++i) {
    const auto& ci = inst.customers[static_cast<std::size_t>(i)];
    const double d0 = euclidean(depot, ci);
    net.edges.push_back({0, i + 1, d0 + inst.vehicle_fixed_cost, {depot.service + d0, ci.demand, 0}, 0});
    net.edges.push_back({i + 1, n + 1, d0, {ci.service + d0, 0, 0}, 0});
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& cj = inst.customers[static_cast<std::size_t>(j)];
      const double d = euclidean(ci, cj);
      if (cj.due - ci.ready >= ci.service + d) net.edges.push_back({i + 1, j + 1, d, {ci.service + d, cj.demand, 0}, 0});
    }
  }
  net.finalize();
  return net;
}

/// Resources: 0 = working time, 1 = driving time, 2 = continuous driving.
/// Trip pair (i, j) is linked iff start_j - end_i >= min-changeover; the edge
/// costs end_j - end_i. Continuous driving restarts after a gap of at least
/// the break threshold.
inline PricingNetwork build_bdsp_network(const BdspInstance& inst) {
  inst.validate();
  PricingNetwork net;
  net.kind = ProblemKind::Bdsp;
  net.customers = static_cast<int>(inst.trips.size());
  net.resources = 3;
  net.resource_names = {"working", "driving", "continuous_driving"};
  const int n = net.customers;
  const auto& rules = inst.rules;
  const std::array<ResourceWindow, kMaxResources> limits = {
      ResourceWindow{0, static_cast<double>(rules.max_working)}, ResourceWindow{0, static_cast<double>(rules.max_driving)},
      ResourceWindow{0, static_cast<double>(rules.max_continuous_driving)}};
  net.windows.assign(static_cast<std::size_t>(n + 2), limits);
  for (int i = 0; i < n; ++i) {
    const auto& ti = inst.trips[static_cast<std::size_t>(i)];
    const double dur = ti.duration();
    net.edges.push_back({0, i + 1, rules.driver_fixed_cost + dur, {dur, dur, dur}, 0});
    net.edges.push_back({i + 1, n + 1, 0, {0, 0, 0}, 0});
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const auto& tj = inst.trips[static_cast<std::size_t>(j)];
      const int gap = tj.start - ti.end;
      if (gap < rules.min_changeover) continue;
      const double span = tj.end - ti.end;
      const std::uint8_t resets = gap >= rules.break_threshold ? std::uint8_t{1u << 2} : std::uint8_t{0};
      net.edges.push_back({i + 1, j + 1, span, {span, static_cast<double>(tj.duration()), static_cast<double>(tj.duration())}, resets});
    }
  }
  net.finalize();
  return net;
}

inline PricingNetwork build_network(const Instance& inst) {
  return std::visit(
      [](const auto& i) {
        if constexpr (std::is_same_v<std::decay_t<decltype(i)>, VrptwInstance>)
          return build_vrptw_network(i);
        else
          return build_bdsp_network(i);
      },
      inst);
}

/// Resource extension along edge `e` from value `from` at its tail. Returns
/// the value at the head, or NaN if the head's window is exceeded.
inline double extend_resource(const PricingNetwork& net, const Edge& e, int r, double from) {
  const auto& w = net.windows[static_cast<std::size_t>(e.head)][static_cast<std::size_t>(r)];
  const double base = (e.resets >> r) & 1u ? 0.0 : from;
  const double v = std::max(w.lo, base + e.use[static_cast<std::size_t>(r)]);
  return v <= w.hi ? v : std::numeric_limits<double>::quiet_NaN();
}

/// Initial resource values at the source.
inline ResourceVec source_resources(const PricingNetwork& net) {
  ResourceVec v{};
  for (int r = 0; r < net.resources; ++r) v[static_cast<std::size_t>(r)] = net.windows[0][static_cast<std::size_t>(r)].lo;
  return v;
}

/// c̄_ij = c_ij - π_head for customer heads; sink edges keep their cost.
inline std::vector<double> modified_costs(const PricingNetwork& net, std::span<const double> duals) {
  if (duals.size() != static_cast<std::size_t>(net.customers))
    throw ArgumentError("dual vector length " + std::to_string(duals.size()) + " does not match " +
                        std::to_string(net.customers) + " covering constraints");
  std::vector<double> out(net.edges.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) {
    const int k = net.constraint_of(net.edges[e]);
    out[e] = net.edges[e].cost - (k >= 0 ? duals[static_cast<std::size_t>(k)] : 0.0);
  }
  return out;
}

/// Keep-flag per edge.
struct EdgeMask {
  std::vector<std::uint8_t> keep;

  static EdgeMask all(std::size_t n) { return EdgeMask{std::vector<std::uint8_t>(n, 1)}; }
  static EdgeMask none(std::size_t n) { return EdgeMask{std::vector<std::uint8_t>(n, 0)}; }
  std::size_t size() const { return keep.size(); }
  std::size_t kept() const { return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), std::uint8_t{1})); }
  bool operator[](std::size_t e) const { return keep[e] != 0; }
  bool operator==(const EdgeMask&) const = default;
};

/// Read-only view of a network restricted to the edges kept by a mask. The
/// view borrows both; they must outlive it.
class NetworkView {
 public:
  explicit NetworkView(const PricingNetwork& net) : net_(&net) {}
  NetworkView(const PricingNetwork& net, const EdgeMask& mask) : net_(&net), mask_(&mask) {
    if (mask.size() != net.edge_count())
      throw ArgumentError("edge mask length " + std::to_string(mask.size()) + " does not match " +
                          std::to_string(net.edge_count()) + " edges");
  }

  const PricingNetwork& network() const { return *net_; }
  bool has(std::size_t e) const { return mask_ == nullptr || (*mask_)[e]; }
  std::size_t edge_count() const { return mask_ == nullptr ? net_->edge_count() : mask_->kept(); }
  bool masked() const { return mask_ != nullptr; }

 private:
  const PricingNetwork* net_;
  const EdgeMask* mask_ = nullptr;
};

inline NetworkView apply_mask(const PricingNetwork& net, const EdgeMask& mask) { return NetworkView(net, mask); }

/// Kahn topological order; empty if the network has a cycle.
inline std::vector<int> topological_order(const PricingNetwork& net) {
  std::vector<int> indeg(static_cast<std::size_t>(net.node_count()), 0);
  for (const auto& e : net.edges) ++indeg[static_cast<std::size_t>(e.head)];
  std::vector<int> order;
  for (int v = 0; v < net.node_count(); ++v)
    if (indeg[static_cast<std::size_t>(v)] == 0) order.push_back(v);
  for (std::size_t i = 0; i < order.size(); ++i)
    for (int e : net.out_edges(order[i]))
      if (--indeg[static_cast<std::size_t>(net.edges[static_cast<std::size_t>(e)].head)] == 0)
        order.push_back(net.edges[static_cast<std::size_t>(e)].head);
  if (order.size() != static_cast<std::size_t>(net.node_count())) order.clear();
  return order;
}

}  // namespace rlhh
