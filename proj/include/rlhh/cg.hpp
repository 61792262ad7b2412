#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <istream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/ddqn.hpp"
#include "rlhh/features.hpp"
#include "rlhh/heuristics.hpp"
#include "rlhh/instance.hpp"
#include "rlhh/labeling.hpp"
#include "rlhh/network.hpp"
#include "rlhh/qnetwork.hpp"
#include "rlhh/rmp.hpp"

namespace rlhh {

/// `Inverse` scores 100^(obj_frac/obj_int) so better integer solutions earn
/// more; `Literal` scores 100^(obj_int/obj_frac).
enum class RewardMode { Inverse, Literal };

inline std::string_view to_string(RewardMode m) { return m == RewardMode::Inverse ? "inverse" : "literal"; }

inline RewardMode parse_reward_mode(std::string_view s) {
  if (s == "inverse") return RewardMode::Inverse;
  if (s == "literal") return RewardMode::Literal;
  throw ArgumentError("unknown reward mode '" + std::string(s) + "'");
}

/// +1 for an improving column, 0 for a non-improving one, -1 for none.
inline int step_reward(bool found, bool improved) {
  if (improved && !found) throw ArgumentError("step_reward: improvement without a column");
  return found ? (improved ? 1 : 0) : -1;
}

inline double terminal_reward(double obj_frac, double obj_int, RewardMode mode) {
  if (!(obj_frac > 0)) throw ArgumentError("terminal_reward: LP objective must be positive");
  if (!(obj_int > 0)) throw ArgumentError("terminal_reward: integer objective must be positive");
  const double gap = obj_int / obj_frac;
  return std::pow(100.0, mode == RewardMode::Literal ? gap : 1.0 / gap);
}

struct CgConfig {
  double time_limit = 600;       ///< seconds for CG plus IRMP
  double irmp_min_time = 5;      ///< IRMP budget floor
  double epsilon = kNegativeReducedCost;
  std::size_t columns_per_iteration = 1;
  std::size_t label_budget = 2'000'000;
  long max_iterations = 1'000'000;
  long irmp_node_limit = 1'000'000;
  RewardMode reward_mode = RewardMode::Inverse;
  std::uint64_t seed = 0;
  bool deterministic = false;  ///< zero wall-clock fields in traces
};

struct IterationRecord {
  int iteration = 0;
  std::string action;                ///< heuristic name or "full"
  std::optional<double> parameter;   ///< schedule value that produced the column, if any
  int parameters_tried = 0;
  bool fallback = false;             ///< the complete network was searched
  bool found = false;                ///< the selected action's network produced a new column
  bool improved = false;
  int reward = 0;
  std::optional<double> reduced_cost;  ///< of the column added this iteration
  double objective = 0;                ///< LP objective after this iteration
  std::size_t pool_size = 0;
  std::size_t labels = 0;
  double pricing_time = 0;
  double lp_time = 0;
  double elapsed = 0;
};

struct TerminalRecord {
  double obj_frac = 0;
  double obj_int = 0;
  double gap = 1;
  int iterations = 0;
  std::size_t columns = 0;
  int fallbacks = 0;
  bool cg_truncated = false;
  bool irmp_optimal = false;
  RewardMode reward_mode = RewardMode::Inverse;
  double terminal_reward = 0;
  double cg_time = 0;
  double irmp_time = 0;
  double total_time = 0;
};

struct TraceHeader {
  std::string instance;
  ProblemKind kind = ProblemKind::Vrptw;
  int n = 0;
  std::string selector;
  std::uint64_t seed = 0;
  double time_limit = 0;
  double initial_objective = 0;
};

struct EpisodeTrace {
  TraceHeader header;
  std::vector<IterationRecord> iterations;
  TerminalRecord terminal;
};

namespace detail {

template <class T>
nlohmann::json opt_json(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline ProblemKind parse_kind(const std::string& s) {
  if (s == "VRPTW") return ProblemKind::Vrptw;
  if (s == "BDSP") return ProblemKind::Bdsp;
  throw FormatError("unknown problem kind '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const TraceHeader& h) {
  return {{"type", "header"}, {"instance", h.instance}, {"kind", std::string(to_string(h.kind))},
          {"n", h.n},         {"selector", h.selector}, {"seed", h.seed},
          {"time_limit", h.time_limit}, {"initial_objective", h.initial_objective}};
}

inline nlohmann::json to_json(const IterationRecord& r) {
  return {{"type", "iteration"},
          {"iteration", r.iteration},
          {"action", r.action},
          {"parameter", detail::opt_json(r.parameter)},
          {"parameters_tried", r.parameters_tried},
          {"fallback", r.fallback},
          {"found", r.found},
          {"improved", r.improved},
          {"reward", r.reward},
          {"reduced_cost", detail::opt_json(r.reduced_cost)},
          {"objective", r.objective},
          {"pool_size", r.pool_size},
          {"labels", r.labels},
          {"pricing_time", r.pricing_time},
          {"lp_time", r.lp_time},
          {"elapsed", r.elapsed}};
}

inline nlohmann::json to_json(const TerminalRecord& t) {
  return {{"type", "terminal"},
          {"obj_frac", t.obj_frac},
          {"obj_int", t.obj_int},
          {"gap", t.gap},
          {"iterations", t.iterations},
          {"columns", t.columns},
          {"fallbacks", t.fallbacks},
          {"cg_truncated", t.cg_truncated},
          {"irmp_optimal", t.irmp_optimal},
          {"reward_mode", std::string(to_string(t.reward_mode))},
          {"terminal_reward", t.terminal_reward},
          {"cg_time", t.cg_time},
          {"irmp_time", t.irmp_time},
          {"total_time", t.total_time}};
}

/// One JSON object per line: header, iterations, terminal.
inline void write_trace(std::ostream& out, const EpisodeTrace& trace) {
  out << to_json(trace.header).dump() << '\n';
  for (const auto& r : trace.iterations) out << to_json(r).dump() << '\n';
  out << to_json(trace.terminal).dump() << '\n';
}

inline EpisodeTrace read_trace(std::istream& in) {
  EpisodeTrace t;
  std::string line;
  int lineno = 0;
  bool header = false, terminal = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (terminal) throw ParseError("record after the terminal record", lineno);
    try {
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (header) throw ParseError("duplicate header", lineno);
        header = true;
        t.header.instance = j.at("instance").get<std::string>();
        t.header.kind = detail::parse_kind(j.at("kind").get<std::string>());
        t.header.n = j.at("n").get<int>();
        t.header.selector = j.at("selector").get<std::string>();
        t.header.seed = j.at("seed").get<std::uint64_t>();
        t.header.time_limit = j.at("time_limit").get<double>();
        t.header.initial_objective = j.at("initial_objective").get<double>();
      } else if (type == "iteration") {
        if (!header) throw ParseError("iteration before header", lineno);
        IterationRecord r;
        r.iteration = j.at("iteration").get<int>();
        r.action = j.at("action").get<std::string>();
        if (!j.at("parameter").is_null()) r.parameter = j.at("parameter").get<double>();
        r.parameters_tried = j.at("parameters_tried").get<int>();
        r.fallback = j.at("fallback").get<bool>();
        r.found = j.at("found").get<bool>();
        r.improved = j.at("improved").get<bool>();
        r.reward = j.at("reward").get<int>();
        if (!j.at("reduced_cost").is_null()) r.reduced_cost = j.at("reduced_cost").get<double>();
        r.objective = j.at("objective").get<double>();
        r.pool_size = j.at("pool_size").get<std::size_t>();
        r.labels = j.at("labels").get<std::size_t>();
        r.pricing_time = j.at("pricing_time").get<double>();
        r.lp_time = j.at("lp_time").get<double>();
        r.elapsed = j.at("elapsed").get<double>();
        t.iterations.push_back(std::move(r));
      } else if (type == "terminal") {
        if (!header) throw ParseError("terminal before header", lineno);
        terminal = true;
        auto& x = t.terminal;
        x.obj_frac = j.at("obj_frac").get<double>();
        x.obj_int = j.at("obj_int").get<double>();
        x.gap = j.at("gap").get<double>();
        x.iterations = j.at("iterations").get<int>();
        x.columns = j.at("columns").get<std::size_t>();
        x.fallbacks = j.at("fallbacks").get<int>();
        x.cg_truncated = j.at("cg_truncated").get<bool>();
        x.irmp_optimal = j.at("irmp_optimal").get<bool>();
        x.reward_mode = parse_reward_mode(j.at("reward_mode").get<std::string>());
        x.terminal_reward = j.at("terminal_reward").get<double>();
        x.cg_time = j.at("cg_time").get<double>();
        x.irmp_time = j.at("irmp_time").get<double>();
        x.total_time = j.at("total_time").get<double>();
      } else {
        throw ParseError("unknown record type '" + type + "'", lineno);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed trace record: ") + e.what(), lineno);
    } catch (const ArgumentError& e) {
      throw ParseError(e.what(), lineno);
    } catch (const FormatError& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  if (!header) throw ParseError("trace has no header", lineno);
  if (!terminal) throw ParseError("trace has no terminal record", lineno);
  return t;
}

/// Chooses the pricing network for each CG iteration; nullopt means the
/// complete network.
class Selector {
 public:
  virtual ~Selector() = default;
  virtual std::string name() const = 0;
  virtual std::optional<HeuristicKind> choose(std::span<const double> features) = 0;
};

class FullSelector : public Selector {
 public:
  std::string name() const override { return "full"; }
  std::optional<HeuristicKind> choose(std::span<const double>) override { return std::nullopt; }
};

class FixedSelector : public Selector {
 public:
  explicit FixedSelector(HeuristicKind k) : kind_(k) {}
  std::string name() const override { return std::string(to_string(kind_)); }
  std::optional<HeuristicKind> choose(std::span<const double>) override { return kind_; }

 private:
  HeuristicKind kind_;
};

class RandomSelector : public Selector {
 public:
  explicit RandomSelector(std::uint64_t seed) : rng_(split_seed(seed, 3)) {}
  std::string name() const override { return "random"; }
  std::optional<HeuristicKind> choose(std::span<const double>) override {
    return kAllHeuristics[rng_.index(kAllHeuristics.size())];
  }

 private:
  Rng rng_;
};

/// Greedy (or epsilon-greedy) policy of a trained Q-function.
class AgentSelector : public Selector {
 public:
  AgentSelector(std::shared_ptr<const QModel> model, std::string label, double epsilon = 0, std::uint64_t seed = 0)
      : model_(std::move(model)), label_(std::move(label)), epsilon_(epsilon), rng_(split_seed(seed, 4)) {}
  std::string name() const override { return label_; }
  std::optional<HeuristicKind> choose(std::span<const double> features) override {
    if (epsilon_ > 0 && rng_.uniform() < epsilon_) return kAllHeuristics[rng_.index(kAllHeuristics.size())];
    return kAllHeuristics[static_cast<std::size_t>(model_->greedy(features))];
  }

 private:
  std::shared_ptr<const QModel> model_;
  std::string label_;
  double epsilon_;
  Rng rng_;
};

/// One column-generation episode, advanced one iteration at a time.
class CgSession {
 public:
  CgSession(const Instance& inst, const CgConfig& cfg, std::string selector_name = "")
      : cfg_(cfg), net_(build_network(inst)), pool_(init_pool(net_)), master_(pool_),
        bn_rng_(split_seed(cfg.seed, 1)), actions_{HeuristicAction(HeuristicKind::BE1), HeuristicAction(HeuristicKind::BE2),
                                                   HeuristicAction(HeuristicKind::BE3), HeuristicAction(HeuristicKind::BN),
                                                   HeuristicAction(HeuristicKind::BP)} {
    if (!(cfg.time_limit > 0)) throw ArgumentError("time limit must be positive");
    mode_ = default_mode(net_.kind);
    trace_.header = {name_of(inst), net_.kind, net_.customers, std::move(selector_name), cfg.seed, cfg.time_limit, 0};
    master_.solve();
    initial_objective_ = master_.state().objective;
    trace_.header.initial_objective = initial_objective_;
    refresh_state();
  }
  CgSession(const CgSession&) = delete;
  CgSession& operator=(const CgSession&) = delete;

  bool done() const { return done_; }
  const std::vector<double>& features() const { return features_; }
  const PricingNetwork& network() const { return net_; }
  const ColumnPool& pool() const { return pool_; }
  const RmpState& lp() const { return master_.state(); }
  const EpisodeTrace& trace() const { return trace_; }
  const HeuristicAction& action_state(HeuristicKind k) const { return actions_[static_cast<std::size_t>(k)]; }

  /// Runs one iteration with `kind` (nullopt = complete network only).
  const IterationRecord& step(std::optional<HeuristicKind> kind) {
    if (done_) throw ArgumentError("CG episode already finished");
    IterationRecord rec;
    rec.iteration = static_cast<int>(trace_.iterations.size()) + 1;
    rec.action = kind ? std::string(to_string(*kind)) : "full";
    const double before = master_.state().objective;
    Stopwatch pricing;
    std::vector<Column> fresh;

    if (kind) {
      auto& act = actions_[static_cast<std::size_t>(*kind)];
      while (auto p = act.current()) {
        ++rec.parameters_tried;
        const EdgeMask mask = apply_heuristic(*kind, net_, master_.state().duals, cbar_, *p, bn_rng_);
        fresh = price(NetworkView(net_, mask), rec);
        if (!fresh.empty()) {
          rec.parameter = *p;
          break;
        }
        act.fail();
      }
      rec.found = !fresh.empty();
      if (!rec.found) {
        rec.fallback = true;
        ++fallbacks_;
        fresh = price(NetworkView(net_), rec);
      }
    } else {
      fresh = price(NetworkView(net_), rec);
      rec.found = !fresh.empty();
    }
    rec.pricing_time = pricing.seconds();

    if (fresh.empty()) {
      done_ = true;
      // an interrupted search on the complete network does not prove convergence
      truncated_ = truncated_ || last_price_truncated_;
      rec.objective = before;
    } else {
      rec.reduced_cost = fresh.front().reduced_cost;
      for (auto& c : fresh) pool_.add(std::move(c));
      Stopwatch lp;
      master_.solve();
      rec.lp_time = lp.seconds();
      rec.objective = master_.state().objective;
      rec.improved = rec.found && before - rec.objective > 1e-6;
      refresh_state();
    }
    rec.reward = step_reward(rec.found, rec.improved);
    rec.pool_size = pool_.size();
    rec.elapsed = clock_.seconds();
    if (!done_ && (rec.elapsed > cfg_.time_limit || rec.iteration >= cfg_.max_iterations)) {
      done_ = true;
      truncated_ = true;
    }
    if (cfg_.deterministic) rec.pricing_time = rec.lp_time = rec.elapsed = 0;
    trace_.iterations.push_back(std::move(rec));
    return trace_.iterations.back();
  }

  /// Solves the integer master over the final pool and closes the trace.
  const IrmpResult& finish() {
    if (finished_) return irmp_;
    const double cg_time = clock_.seconds();
    IrmpOptions opt;
    opt.time_limit = std::max(cfg_.irmp_min_time, cfg_.time_limit - cg_time);
    opt.node_limit = cfg_.irmp_node_limit;
    Stopwatch ip;
    irmp_ = solve_irmp(pool_, opt);
    auto& t = trace_.terminal;
    t.obj_frac = master_.state().objective;
    t.obj_int = irmp_.objective;
    t.gap = t.obj_int / t.obj_frac;
    t.iterations = static_cast<int>(trace_.iterations.size());
    t.columns = pool_.size();
    t.fallbacks = fallbacks_;
    t.cg_truncated = truncated_;
    t.irmp_optimal = irmp_.optimal;
    t.reward_mode = cfg_.reward_mode;
    t.terminal_reward = terminal_reward(t.obj_frac, t.obj_int, cfg_.reward_mode);
    if (!cfg_.deterministic) {
      t.cg_time = cg_time;
      t.irmp_time = ip.seconds();
      t.total_time = clock_.seconds();
    }
    done_ = finished_ = true;
    return irmp_;
  }

  /// Customer ids of each route in the integer solution.
  std::vector<std::vector<int>> routes() const {
    std::vector<std::vector<int>> out;
    for (int j : irmp_.selected) {
      std::vector<int> r;
      for (int v : pool_[static_cast<std::size_t>(j)].nodes)
        if (net_.is_customer(v)) r.push_back(v);
      out.push_back(std::move(r));
    }
    return out;
  }

 private:
  std::vector<Column> price(const NetworkView& view, IterationRecord& rec) {
    PricingOptions opt;
    opt.mode = mode_;
    opt.label_budget = cfg_.label_budget;
    opt.max_columns = std::max<std::size_t>(1, cfg_.columns_per_iteration);
    opt.epsilon = cfg_.epsilon;
    opt.time_limit = std::max(0.0, cfg_.time_limit - clock_.seconds());
    auto res = solve_pricing(view, cbar_, opt);
    rec.labels += res.labels_created;
    last_price_truncated_ = res.truncated();
    std::vector<Column> out;
    for (auto& c : res.columns)
      if (!pool_.contains(c)) out.push_back(std::move(c));
    return out;
  }

  void refresh_state() {
    const auto& st = master_.state();
    cbar_ = modified_costs(net_, st.duals);
    features_ = featurize(st.x, st.objective, initial_objective_, net_, st.duals, cbar_);
  }

  CgConfig cfg_;
  PricingNetwork net_;
  ColumnPool pool_;
  RestrictedMaster master_;
  Rng bn_rng_;
  std::array<HeuristicAction, kHeuristicCount> actions_;
  PricingMode mode_ = PricingMode::Espprc;
  Stopwatch clock_;
  double initial_objective_ = 0;
  std::vector<double> cbar_;
  std::vector<double> features_;
  EpisodeTrace trace_;
  IrmpResult irmp_;
  int fallbacks_ = 0;
  bool done_ = false;
  bool finished_ = false;
  bool truncated_ = false;
  bool last_price_truncated_ = false;
};

struct CgResult {
  EpisodeTrace trace;
  std::vector<std::vector<int>> routes;
};

/// Full episode: CG until no negative column (or the limit), then the IRMP.
inline CgResult run_cg(const Instance& inst, const CgConfig& cfg, Selector& selector) {
  CgSession s(inst, cfg, selector.name());
  while (!s.done()) s.step(selector.choose(s.features()));
  s.finish();
  return {s.trace(), s.routes()};
}

/// Draws a training instance for each episode.
using InstanceSampler = std::function<Instance(Rng&)>;

/// Picks one of `pool` with equal probability and truncates it to a size
/// drawn uniformly from [n_lo, n_hi] (capped at the instance size).
inline InstanceSampler uniform_sampler(std::vector<Instance> pool, int n_lo, int n_hi) {
  if (pool.empty()) throw ArgumentError("instance sampler needs at least one instance");
  if (n_lo < 1 || n_hi < n_lo) throw ArgumentError("invalid size range for instance sampler");
  return [pool = std::move(pool), n_lo, n_hi](Rng& rng) {
    const auto& base = pool[rng.index(pool.size())];
    const int n = static_cast<int>(rng.uniform_int(n_lo, n_hi));
    return truncate(base, std::min<int>(n, static_cast<int>(size_of(base))));
  };
}

/// CG as a training environment: one episode per instance draw, actions
/// index kAllHeuristics, the terminal reward lands on the last transition.
class CgEnvironment : public Environment {
 public:
  CgEnvironment(ProblemKind kind, InstanceSampler sampler, CgConfig cfg)
      : kind_(kind), sampler_(std::move(sampler)), cfg_(cfg) {}

  ProblemKind kind() const override { return kind_; }
  int feature_count() const override { return rlhh::feature_count(kind_); }
  int action_count() const override { return kHeuristicCount; }

  std::vector<double> reset(Rng& rng) override {
    const Instance inst = sampler_(rng);
    if (kind_of(inst) != kind_) throw ArgumentError("sampler produced an instance of the wrong kind");
    CgConfig c = cfg_;
    c.seed = rng.next();
    session_ = std::make_unique<CgSession>(inst, c, "train");
    return session_->features();
  }

  Step step(int action) override {
    if (!session_) throw ArgumentError("step before reset");
    const auto& rec = session_->step(kAllHeuristics.at(static_cast<std::size_t>(action)));
    Step out{session_->features(), static_cast<double>(rec.reward), false};
    if (session_->done()) {
      session_->finish();
      out.reward += session_->trace().terminal.terminal_reward;
      out.terminal = true;
    }
    return out;
  }

  nlohmann::json episode_info() const override {
    if (!session_) return nlohmann::json::object();
    const auto& t = session_->trace();
    return {{"instance", t.header.instance}, {"n", t.header.n},         {"obj_frac", t.terminal.obj_frac},
            {"obj_int", t.terminal.obj_int}, {"gap", t.terminal.gap}, {"iterations", t.terminal.iterations},
            {"fallbacks", t.terminal.fallbacks}};
  }

  const CgSession* session() const { return session_.get(); }

 private:
  ProblemKind kind_;
  InstanceSampler sampler_;
  CgConfig cfg_;
  std::unique_ptr<CgSession> session_;
};

}  // namespace rlhh
