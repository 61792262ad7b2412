#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rlhh/bench.hpp"
#include "rlhh/cg.hpp"
#include "rlhh/ddqn.hpp"
#include "rlhh/instance.hpp"
#include "rlhh/qnetwork.hpp"

namespace rlhh {

/// 10 minutes for small instances, 1 hour for large ones.
inline double default_time_limit(ProblemKind kind, std::size_t n) {
  const std::size_t small = kind == ProblemKind::Vrptw ? 35 : 100;
  return n <= small ? 600.0 : 3600.0;
}

/// Builds a selector from its command-line name: be1..bp, random, full or
/// rlhh:<model path>. Learned selectors are labelled "rlhh".
inline std::unique_ptr<Selector> make_selector(const std::string& spec, ProblemKind kind, std::uint64_t seed) {
  if (spec == "full") return std::make_unique<FullSelector>();
  if (spec == "random") return std::make_unique<RandomSelector>(seed);
  if (spec.rfind("rlhh:", 0) == 0) {
    const std::string path = spec.substr(5);
    if (path.empty()) throw ArgumentError("selector 'rlhh:' needs a model path");
    auto model = std::make_shared<const QModel>(load_model(path));
    model->require(kind);
    return std::make_unique<AgentSelector>(std::move(model), "rlhh", 0.0, seed);
  }
  if (const auto k = parse_heuristic(spec)) return std::make_unique<FixedSelector>(*k);
  throw ArgumentError("unknown selector '" + spec + "' (expected be1, be2, be3, bn, bp, random, full or rlhh:<model>)");
}

// ---------------------------------------------------------------------------
// Configuration

namespace detail {

template <class T>
T field(const nlohmann::json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError(where + ": wrong type");
  }
}

inline void require_object(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw FormatError(where + ": expected an object");
}

}  // namespace detail

/// CG settings from a JSON object; absent fields keep `base`.
inline CgConfig cg_config_from_json(const nlohmann::json& j, const std::string& path, CgConfig base = {}) {
  using detail::field;
  detail::require_object(j, path);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    const std::string where = path + "." + k;
    if (k == "time_limit") {
      base.time_limit = field<double>(v, where);
      if (!(base.time_limit > 0)) throw FormatError(where + ": must be positive");
    } else if (k == "irmp_min_time") {
      base.irmp_min_time = field<double>(v, where);
      if (base.irmp_min_time < 0) throw FormatError(where + ": must be non-negative");
    } else if (k == "epsilon") {
      base.epsilon = field<double>(v, where);
      if (base.epsilon < 0) throw FormatError(where + ": must be non-negative");
    } else if (k == "columns_per_iteration") {
      base.columns_per_iteration = field<std::size_t>(v, where);
      if (base.columns_per_iteration < 1) throw FormatError(where + ": must be positive");
    } else if (k == "label_budget") {
      base.label_budget = field<std::size_t>(v, where);
    } else if (k == "max_iterations") {
      base.max_iterations = field<long>(v, where);
      if (base.max_iterations < 1) throw FormatError(where + ": must be positive");
    } else if (k == "irmp_node_limit") {
      base.irmp_node_limit = field<long>(v, where);
    } else if (k == "reward_mode") {
      try {
        base.reward_mode = parse_reward_mode(field<std::string>(v, where));
      } catch (const ArgumentError& e) {
        throw FormatError(where + ": " + e.what());
      }
    } else if (k == "deterministic") {
      base.deterministic = field<bool>(v, where);
    } else {
      throw FormatError(where + ": unknown field");
    }
  }
  return base;
}

/// Training run description, usually read from a JSON file.
struct TrainConfig {
  ProblemKind kind = ProblemKind::Vrptw;
  std::vector<std::filesystem::path> instances;  ///< files or directories
  std::vector<std::string> prefixes;             ///< keep files whose name starts with one of these
  int bdsp_count = 0;                            ///< generated BDSP pool size (BDSP only)
  int bdsp_n = 0;
  int size_lo = 25, size_hi = 35;
  int episodes = 10'000;
  double time_budget = kInf;
  std::uint64_t seed = 0;
  CgConfig cg;
  DdqnConfig ddqn;
  std::filesystem::path model = "rlhh.model";
  std::filesystem::path log;  ///< empty: no log file
};

inline TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "config") {
  using detail::field;
  detail::require_object(j, path);
  TrainConfig c;
  c.cg.time_limit = 600;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& k = it.key();
    const auto& v = it.value();
    const std::string where = path + "." + k;
    if (k == "kind") {
      const auto s = field<std::string>(v, where);
      if (s == "VRPTW") c.kind = ProblemKind::Vrptw;
      else if (s == "BDSP") c.kind = ProblemKind::Bdsp;
      else throw FormatError(where + ": expected \"VRPTW\" or \"BDSP\"");
    } else if (k == "instances") {
      for (const auto& p : field<std::vector<std::string>>(v, where)) c.instances.emplace_back(p);
    } else if (k == "prefixes") {
      c.prefixes = field<std::vector<std::string>>(v, where);
    } else if (k == "generate") {
      detail::require_object(v, where);
      for (auto g = v.begin(); g != v.end(); ++g) {
        const std::string w = where + "." + g.key();
        if (g.key() == "count") c.bdsp_count = field<int>(g.value(), w);
        else if (g.key() == "n") c.bdsp_n = field<int>(g.value(), w);
        else throw FormatError(w + ": unknown field");
      }
      if (c.bdsp_count < 1) throw FormatError(where + ".count: must be positive");
      if (c.bdsp_n < 1) throw FormatError(where + ".n: must be positive");
    } else if (k == "size") {
      const auto s = field<std::vector<int>>(v, where);
      if (s.size() != 2) throw FormatError(where + ": expected [min, max]");
      c.size_lo = s[0];
      c.size_hi = s[1];
      if (c.size_lo < 1 || c.size_hi < c.size_lo) throw FormatError(where + ": need 1 <= min <= max");
    } else if (k == "episodes") {
      c.episodes = field<int>(v, where);
      if (c.episodes < 0) throw FormatError(where + ": must be non-negative");
    } else if (k == "time_budget") {
      if (!v.is_null()) c.time_budget = field<double>(v, where);
      if (!(c.time_budget > 0)) throw FormatError(where + ": must be positive");
    } else if (k == "seed") {
      c.seed = field<std::uint64_t>(v, where);
    } else if (k == "cg") {
      c.cg = cg_config_from_json(v, where, c.cg);
    } else if (k == "ddqn") {
      c.ddqn = DdqnConfig::from_json(v, where);
    } else if (k == "model") {
      c.model = field<std::string>(v, where);
    } else if (k == "log") {
      c.log = field<std::string>(v, where);
    } else {
      throw FormatError(where + ": unknown field");
    }
  }
  if (c.instances.empty() && c.bdsp_count == 0) throw FormatError(path + ".instances: no instance source given");
  if (c.bdsp_count > 0 && c.kind != ProblemKind::Bdsp) throw FormatError(path + ".generate: only valid for BDSP");
  return c;
}

inline TrainConfig load_train_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open config " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config: " + std::string(e.what()));
  }
  return train_config_from_json(j);
}

/// Expands files and directories (sorted, non-recursive) into instance files.
inline std::vector<std::filesystem::path> expand_instance_paths(const std::vector<std::filesystem::path>& sources,
                                                                const std::vector<std::string>& prefixes = {}) {
  std::vector<std::filesystem::path> out;
  auto keep = [&](const std::filesystem::path& p) {
    if (prefixes.empty()) return true;
    const auto name = p.filename().string();
    return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& s) { return name.rfind(s, 0) == 0; });
  };
  for (const auto& src : sources) {
    if (std::filesystem::is_directory(src)) {
      std::vector<std::filesystem::path> files;
      for (const auto& e : std::filesystem::directory_iterator(src))
        if (e.is_regular_file() && keep(e.path())) files.push_back(e.path());
      std::sort(files.begin(), files.end());
      out.insert(out.end(), files.begin(), files.end());
    } else if (std::filesystem::is_regular_file(src)) {
      out.push_back(src);
    } else {
      throw IoError("instance source not found: " + src.string());
    }
  }
  return out;
}

/// Loads the training pool; fails before any episode when a source is missing.
inline std::vector<Instance> load_training_pool(const TrainConfig& c) {
  std::vector<Instance> pool;
  for (const auto& p : expand_instance_paths(c.instances, c.prefixes)) {
    Instance inst = load_any_instance(p);
    if (kind_of(inst) != c.kind) throw FormatError(p.string() + ": instance kind differs from config.kind");
    pool.push_back(std::move(inst));
  }
  for (int i = 0; i < c.bdsp_count; ++i) pool.emplace_back(generate_bdsp(c.bdsp_n, split_seed(c.seed, 1000 + static_cast<std::uint64_t>(i))));
  if (pool.empty()) throw ArgumentError("training pool is empty");
  return pool;
}

struct TrainOutcome {
  QModel model;
  TrainResult result;
};

/// Trains a selector and writes the checkpoint (and the log when configured).
/// The checkpoint is written even when no episode runs or time runs out.
inline TrainOutcome run_training(const TrainConfig& c, const std::function<void(const EpisodeLog&)>& on_episode = {}) {
  auto pool = load_training_pool(c);
  std::ofstream log;
  if (!c.log.empty()) {
    log.open(c.log, std::ios::binary);
    if (!log) throw IoError("cannot write " + c.log.string());
  }
  CgEnvironment env(c.kind, uniform_sampler(std::move(pool), c.size_lo, c.size_hi), c.cg);
  DdqnAgent agent(c.kind, env.feature_count(), env.action_count(), c.ddqn, c.seed);
  Rng rng(split_seed(c.seed, 20));
  TrainOptions opt;
  opt.episodes = c.episodes;
  opt.time_budget = c.time_budget;
  TrainOutcome out;
  out.result = train(env, agent, opt, rng, [&](const EpisodeLog& e) {
    if (log) log << e.to_json().dump() << '\n' << std::flush;
    if (on_episode) on_episode(e);
  });
  out.model = agent.model();
  save_model(out.model, c.model);
  return out;
}

// ---------------------------------------------------------------------------
// Runs

struct RunOutput {
  BenchmarkRow row;
  std::optional<EpisodeTrace> trace;
};

/// One CG episode. Failures become a row with the error column set.
inline RunOutput run_one(const Instance& inst, const std::string& selector_spec, const CgConfig& cfg) {
  RunOutput out;
  try {
    auto sel = make_selector(selector_spec, kind_of(inst), cfg.seed);
    auto res = run_cg(inst, cfg, *sel);
    out.row = make_row(res.trace);
    out.trace = std::move(res.trace);
  } catch (const std::exception& e) {
    out.row.instance = name_of(inst);
    out.row.kind = std::string(to_string(kind_of(inst)));
    out.row.type = instance_type(out.row.instance, out.row.kind);
    out.row.n = static_cast<int>(size_of(inst));
    out.row.selector = selector_spec.rfind("rlhh:", 0) == 0 ? "rlhh" : selector_spec;
    out.row.seed = cfg.seed;
    out.row.error = e.what();
  }
  return out;
}

struct BenchOptions {
  std::vector<std::filesystem::path> instances;
  std::vector<std::string> selectors;
  std::vector<int> sizes;             ///< truncate each instance to these sizes; empty keeps it whole
  std::optional<double> time_limit;   ///< default depends on kind and size
  CgConfig cg;
  std::filesystem::path trace_dir;    ///< empty: traces are not written
};

/// Runs instances x sizes x selectors in order. Unreadable instances yield
/// error rows for every selector.
inline std::vector<BenchmarkRow> run_bench(const BenchOptions& o, const std::function<void(const BenchmarkRow&)>& on_row = {}) {
  if (o.instances.empty()) throw ArgumentError("bench needs at least one instance");
  if (o.selectors.empty()) throw ArgumentError("bench needs at least one selector");
  if (!o.trace_dir.empty()) std::filesystem::create_directories(o.trace_dir);
  std::vector<BenchmarkRow> rows;
  auto emit = [&](BenchmarkRow r) {
    if (on_row) on_row(r);
    rows.push_back(std::move(r));
  };
  for (const auto& path : o.instances) {
    std::optional<Instance> base;
    std::string load_error;
    try {
      base = load_any_instance(path);
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    if (!base) {
      for (const auto& s : o.selectors) {
        BenchmarkRow r;
        r.instance = path.filename().string();
        r.selector = s.rfind("rlhh:", 0) == 0 ? "rlhh" : s;
        r.seed = o.cg.seed;
        r.error = load_error;
        emit(std::move(r));
      }
      continue;
    }
    std::vector<int> sizes = o.sizes;
    if (sizes.empty()) sizes.push_back(static_cast<int>(size_of(*base)));
    for (int n : sizes) {
      const Instance inst = n == static_cast<int>(size_of(*base)) ? *base : truncate(*base, n);
      CgConfig cfg = o.cg;
      cfg.time_limit = o.time_limit.value_or(default_time_limit(kind_of(inst), size_of(inst)));
      for (const auto& s : o.selectors) {
        auto run = run_one(inst, s, cfg);
        if (run.trace && !o.trace_dir.empty()) {
          const auto file = o.trace_dir / (name_of(inst) + "-" + std::to_string(size_of(inst)) + "-" + run.row.selector + ".jsonl");
          std::ofstream out(file, std::ios::binary);
          if (!out) throw IoError("cannot write " + file.string());
          write_trace(out, *run.trace);
        }
        emit(std::move(run.row));
      }
    }
  }
  return rows;
}

}  // namespace rlhh
