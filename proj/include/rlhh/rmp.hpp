#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/labeling.hpp"
#include "rlhh/network.hpp"
#include "rlhh/simplex.hpp"

namespace rlhh {

/// Insertion-ordered column store with a duplicate filter keyed on
/// (covered set, cost rounded to 1e-9).
class ColumnPool {
 public:
  explicit ColumnPool(int constraints = 0) : constraints_(constraints) {}

  int constraints() const { return constraints_; }
  std::size_t size() const { return columns_.size(); }
  bool empty() const { return columns_.empty(); }
  const Column& operator[](std::size_t i) const { return columns_[i]; }
  const std::vector<Column>& columns() const { return columns_; }

  bool contains(const Column& col) const { return keys_.count(key(col.covered, col.cost)) > 0; }

  /// Appends `col` unless an identical column is stored. Returns whether it was added.
  bool add(Column col) {
    for (int k : col.covered)
      if (k < 0 || k >= constraints_) throw ArgumentError("column covers constraint " + std::to_string(k) + " outside [0, " + std::to_string(constraints_) + ")");
    if (!std::is_sorted(col.covered.begin(), col.covered.end()) ||
        std::adjacent_find(col.covered.begin(), col.covered.end()) != col.covered.end())
      throw ArgumentError("column covered set must be strictly ascending");
    if (!keys_.insert(key(col.covered, col.cost)).second) return false;
    columns_.push_back(std::move(col));
    return true;
  }

  /// Adds a column given as a dense 0/1 covering vector.
  bool add(std::span<const std::uint8_t> covering, double cost) {
    if (covering.size() != static_cast<std::size_t>(constraints_))
      throw ArgumentError("covering vector length " + std::to_string(covering.size()) + " does not match " +
                          std::to_string(constraints_) + " constraints");
    Column col;
    col.cost = cost;
    for (std::size_t k = 0; k < covering.size(); ++k)
      if (covering[k]) col.covered.push_back(static_cast<int>(k));
    return add(std::move(col));
  }

 private:
  static std::pair<std::vector<int>, long long> key(const std::vector<int>& covered, double cost) {
    return {covered, std::llround(cost * 1e9)};
  }

  int constraints_;
  std::vector<Column> columns_;
  std::set<std::pair<std::vector<int>, long long>> keys_;
};

/// One source → v → sink column per customer, in customer order.
inline ColumnPool init_pool(const PricingNetwork& net) {
  ColumnPool pool(net.customers);
  for (int v = 1; v <= net.customers; ++v) {
    int in = -1, out = -1;
    for (int e : net.out_edges(net.source()))
      if (net.edges[static_cast<std::size_t>(e)].head == v) in = e;
    for (int e : net.out_edges(v))
      if (net.edges[static_cast<std::size_t>(e)].head == net.sink()) out = e;
    const std::vector<int> path{in, out};
    if (in < 0 || out < 0 || !replay_feasible(net, path, true))
      throw InfeasibleInstance("customer " + std::to_string(v - 1) + " has no feasible single-customer route");
    pool.add(make_column(net, path));
  }
  return pool;
}

inline ColumnPool init_pool(const Instance& inst) { return init_pool(build_network(inst)); }

inline LpModel make_lp_model(const ColumnPool& pool) {
  LpModel model;
  model.rows = pool.constraints();
  model.rhs.assign(static_cast<std::size_t>(model.rows), 1.0);
  for (const auto& c : pool.columns()) model.add_column({c.covered, std::vector<double>(c.covered.size(), 1.0)}, c.cost);
  return model;
}

struct RmpState {
  double objective = 0;
  std::vector<double> x;      ///< per pool column
  std::vector<double> duals;  ///< per covering constraint
  LpBasis basis;
  long iterations = 0;
};

inline RmpState to_state(const LpResult& r) {
  if (r.status == LpStatus::Infeasible) throw InfeasibleInstance("restricted master LP is infeasible");
  if (r.status == LpStatus::Unbounded) throw NumericalError("restricted master LP is unbounded");
  return RmpState{r.objective, r.x, r.duals, r.basis, r.iterations};
}

/// Cold LP solve of the covering master over the pool.
inline RmpState solve_lp(const ColumnPool& pool) {
  if (pool.empty()) throw ArgumentError("empty column pool");
  return to_state(rlhh::solve_lp(make_lp_model(pool)));
}

/// LP master that follows a growing pool and warm starts from its last basis.
class RestrictedMaster {
 public:
  explicit RestrictedMaster(const ColumnPool& pool) : pool_(&pool) { model_ = make_lp_model(pool); }

  const RmpState& solve() {
    if (pool_->empty()) throw ArgumentError("empty column pool");
    for (std::size_t j = static_cast<std::size_t>(model_.cols()); j < pool_->size(); ++j) {
      const auto& c = (*pool_)[j];
      model_.add_column({c.covered, std::vector<double>(c.covered.size(), 1.0)}, c.cost);
    }
    state_ = to_state(rlhh::solve_lp(model_, state_.basis.empty() ? nullptr : &state_.basis));
    ++solves_;
    return state_;
  }

  const RmpState& state() const { return state_; }
  const LpModel& model() const { return model_; }
  int solves() const { return solves_; }

 private:
  const ColumnPool* pool_;
  LpModel model_;
  RmpState state_;
  int solves_ = 0;
};

struct IrmpOptions {
  double time_limit = 60;
  long node_limit = 1'000'000;
  long restart_every = 10'000;  ///< best-bound restart period in nodes
};

struct IrmpResult {
  double objective = 0;
  std::vector<int> selected;  ///< pool indices with x = 1, ascending
  bool optimal = false;
  double lp_bound = 0;
  long nodes = 0;
};

namespace detail {

inline bool covers_all(const ColumnPool& pool, const std::vector<int>& chosen) {
  std::vector<std::uint8_t> hit(static_cast<std::size_t>(pool.constraints()), 0);
  for (int j : chosen)
    for (int k : pool[static_cast<std::size_t>(j)].covered) hit[static_cast<std::size_t>(k)] = 1;
  return std::all_of(hit.begin(), hit.end(), [](std::uint8_t h) { return h != 0; });
}

inline double cost_of(const ColumnPool& pool, const std::vector<int>& chosen) {
  double s = 0;
  for (int j : chosen) s += pool[static_cast<std::size_t>(j)].cost;
  return s;
}

/// Cheapest single-customer column per constraint.
inline std::vector<int> singleton_solution(const ColumnPool& pool) {
  std::vector<int> best(static_cast<std::size_t>(pool.constraints()), -1);
  for (std::size_t j = 0; j < pool.size(); ++j) {
    const auto& c = pool[j];
    if (c.covered.size() != 1) continue;
    auto& b = best[static_cast<std::size_t>(c.covered[0])];
    if (b < 0 || c.cost < pool[static_cast<std::size_t>(b)].cost) b = static_cast<int>(j);
  }
  if (std::find(best.begin(), best.end(), -1) != best.end()) return {};
  std::sort(best.begin(), best.end());
  return best;
}

/// Greedy cover from an LP point: take columns by descending value until
/// every row is covered, then drop redundant ones from the expensive end.
inline std::vector<int> round_cover(const ColumnPool& pool, const std::vector<double>& x) {
  std::vector<int> order(pool.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return x[static_cast<std::size_t>(a)] > x[static_cast<std::size_t>(b)]; });
  std::vector<int> count(static_cast<std::size_t>(pool.constraints()), 0);
  int missing = pool.constraints();
  std::vector<int> chosen;
  for (int j : order) {
    if (missing == 0) break;
    bool useful = false;
    for (int k : pool[static_cast<std::size_t>(j)].covered) useful = useful || count[static_cast<std::size_t>(k)] == 0;
    if (!useful) continue;
    chosen.push_back(j);
    for (int k : pool[static_cast<std::size_t>(j)].covered)
      if (count[static_cast<std::size_t>(k)]++ == 0) --missing;
  }
  if (missing > 0) return {};
  std::sort(chosen.begin(), chosen.end(), [&](int a, int b) { return pool[static_cast<std::size_t>(a)].cost > pool[static_cast<std::size_t>(b)].cost; });
  std::vector<int> kept;
  for (int j : chosen) {
    const auto& cov = pool[static_cast<std::size_t>(j)].covered;
    const bool redundant = std::all_of(cov.begin(), cov.end(), [&](int k) { return count[static_cast<std::size_t>(k)] > 1; });
    if (redundant)
      for (int k : cov) --count[static_cast<std::size_t>(k)];
    else
      kept.push_back(j);
  }
  std::sort(kept.begin(), kept.end());
  return kept;
}

}  // namespace detail

/// Branch-and-bound over x ∈ {0,1} on the covering master. Depth-first on the
/// most fractional variable (up branch first) with periodic best-bound
/// restarts. The singleton solution is the initial incumbent.
inline IrmpResult solve_irmp(const ColumnPool& pool, const IrmpOptions& opt = {}) {
  if (pool.empty()) throw ArgumentError("empty column pool");
  Stopwatch clock;
  IrmpResult best;
  best.selected = detail::singleton_solution(pool);
  if (best.selected.empty()) throw InfeasibleInstance("column pool lacks a single-customer column for some constraint");
  best.objective = detail::cost_of(pool, best.selected);

  LpModel model = make_lp_model(pool);
  for (auto& u : model.upper) u = 1.0;
  const std::vector<double> base_lower = model.lower, base_upper = model.upper;

  struct Node {
    std::vector<std::pair<int, std::uint8_t>> fixed;
    double bound;
  };
  std::vector<Node> open{{{}, -kInf}};
  constexpr double kIntTol = 1e-6;
  bool root = true;
  bool exhausted = true;

  auto offer = [&](std::vector<int> chosen) {
    if (chosen.empty() || !detail::covers_all(pool, chosen)) return;
    const double c = detail::cost_of(pool, chosen);
    if (c < best.objective - 1e-9) {
      best.objective = c;
      best.selected = std::move(chosen);
    }
  };

  while (!open.empty()) {
    if (best.nodes >= opt.node_limit || clock.seconds() > opt.time_limit) {
      exhausted = false;
      break;
    }
    if (best.nodes > 0 && best.nodes % opt.restart_every == 0) {
      auto it = std::min_element(open.begin(), open.end(), [](const Node& a, const Node& b) { return a.bound < b.bound; });
      std::iter_swap(it, open.end() - 1);
    }
    Node node = std::move(open.back());
    open.pop_back();
    ++best.nodes;
    if (node.bound >= best.objective - 1e-9) continue;

    model.lower = base_lower;
    model.upper = base_upper;
    for (auto [j, v] : node.fixed) model.lower[static_cast<std::size_t>(j)] = model.upper[static_cast<std::size_t>(j)] = v;
    const LpResult lp = rlhh::solve_lp(model);
    if (lp.status != LpStatus::Optimal) continue;
    if (root) {
      best.lp_bound = lp.objective;
      root = false;
      offer(detail::round_cover(pool, lp.x));
    }
    if (lp.objective >= best.objective - 1e-9) continue;

    int branch = -1;
    double frac_best = -1;
    for (std::size_t j = 0; j < lp.x.size(); ++j) {
      const double f = lp.x[j] - std::floor(lp.x[j]);
      if (f < kIntTol || f > 1 - kIntTol) continue;
      const double score = 0.5 - std::abs(f - 0.5);
      if (score > frac_best) {
        frac_best = score;
        branch = static_cast<int>(j);
      }
    }
    if (branch < 0) {
      std::vector<int> chosen;
      for (std::size_t j = 0; j < lp.x.size(); ++j)
        if (lp.x[j] > 0.5) chosen.push_back(static_cast<int>(j));
      offer(std::move(chosen));
      continue;
    }
    Node down{node.fixed, lp.objective}, up{std::move(node.fixed), lp.objective};
    down.fixed.emplace_back(branch, 0);
    up.fixed.emplace_back(branch, 1);
    open.push_back(std::move(down));
    open.push_back(std::move(up));
  }
  if (root) best.lp_bound = solve_lp(pool).objective;
  best.optimal = exhausted && open.empty();
  std::sort(best.selected.begin(), best.selected.end());
  return best;
}

/// Writes the current master in LP text format; `integer` marks columns binary.
inline void write_master(std::ostream& out, const ColumnPool& pool, bool integer) {
  LpModel model = make_lp_model(pool);
  if (integer)
    for (auto& u : model.upper) u = 1.0;
  write_lp_format(out, model, integer);
}

}  // namespace rlhh
