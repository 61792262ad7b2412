#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "rlhh/app.hpp"

namespace {

using namespace rlhh;

/// Machine-readable failure line on stderr.
int fail(const std::string& type, const std::string& message) {
  std::cerr << nlohmann::json{{"error", {{"type", type}, {"message", message}}}}.dump() << '\n';
  return 1;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

/// CG settings from the "cg" section of a JSON file; `time_limit` is set
/// only when the file gives one.
CgConfig cg_from_file(const std::string& path, std::optional<double>& time_limit) {
  if (path.empty()) return {};
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("config: " + std::string(e.what()));
  }
  detail::require_object(j, "config");
  if (!j.contains("cg")) return {};
  const auto& cg = j.at("cg");
  CgConfig c = cg_config_from_json(cg, "config.cg");
  if (cg.contains("time_limit")) time_limit = c.time_limit;
  return c;
}

std::vector<int> parse_sizes(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw ArgumentError("--sizes: not an integer '" + tok + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Column generation with learned pricing-network reduction"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a heuristic selector");
  std::string train_config;
  std::optional<std::uint64_t> train_seed;
  std::string train_model, train_log;
  std::optional<int> train_episodes;
  train_cmd->add_option("--config", train_config, "JSON training config")->required();
  train_cmd->add_option("--seed", train_seed, "Override config.seed");
  train_cmd->add_option("--episodes", train_episodes, "Override config.episodes");
  train_cmd->add_option("--model", train_model, "Override config.model");
  train_cmd->add_option("--log", train_log, "Override config.log");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Run one column-generation episode");
  std::string solve_instance, solve_selector = "full", solve_trace, solve_row, solve_config;
  std::uint64_t solve_seed = 0;
  std::optional<double> solve_time;
  std::optional<int> solve_n;
  bool solve_det = false;
  solve_cmd->add_option("--instance", solve_instance, "Solomon or canonical instance file")->required();
  solve_cmd->add_option("--selector", solve_selector, "be1|be2|be3|bn|bp|random|full|rlhh:<model>");
  solve_cmd->add_option("--seed", solve_seed);
  solve_cmd->add_option("--time-limit", solve_time, "Seconds (default 600 or 3600 by size)");
  solve_cmd->add_option("--n", solve_n, "Keep only the first n customers or trips");
  solve_cmd->add_option("--config", solve_config, "JSON file with a \"cg\" section");
  solve_cmd->add_option("--trace", solve_trace, "Write the iteration trace here");
  solve_cmd->add_option("--row", solve_row, "Write the result row CSV here (default stdout)");
  solve_cmd->add_flag("--deterministic", solve_det, "Zero wall-clock fields in outputs");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Benchmark selectors over instance sets");
  std::vector<std::string> bench_instances, bench_selectors;
  std::string bench_sizes, bench_rows_out = "rows.csv", bench_summary = "summary.csv", bench_means, bench_traces,
                           bench_from, bench_config;
  std::uint64_t bench_seed = 0;
  std::optional<double> bench_time;
  bool bench_det = false;
  bench_cmd->add_option("--instances", bench_instances, "Instance files or directories");
  bench_cmd->add_option("--selectors", bench_selectors, "Selector names")->delimiter(',');
  bench_cmd->add_option("--sizes", bench_sizes, "Comma-separated truncation sizes");
  bench_cmd->add_option("--seed", bench_seed);
  bench_cmd->add_option("--time-limit", bench_time, "Seconds per run (default 600 or 3600 by size)");
  bench_cmd->add_option("--config", bench_config, "JSON file with a \"cg\" section");
  bench_cmd->add_option("--rows", bench_rows_out, "Row CSV output");
  bench_cmd->add_option("--summary", bench_summary, "Summary CSV output");
  bench_cmd->add_option("--means", bench_means, "Per-selector means CSV output");
  bench_cmd->add_option("--traces", bench_traces, "Directory for per-run traces");
  bench_cmd->add_option("--from-rows", bench_from, "Summarize an existing row CSV instead of solving");
  bench_cmd->add_flag("--deterministic", bench_det);

  // trace-export
  auto* export_cmd = app.add_subcommand("trace-export", "Convergence series CSV from trace files");
  std::vector<std::string> export_traces;
  std::string export_out;
  export_cmd->add_option("traces", export_traces, "Trace files");
  export_cmd->add_option("--out", export_out, "CSV output (default stdout)");

  // gen-bdsp
  auto* gen_cmd = app.add_subcommand("gen-bdsp", "Generate random BDSP timetables");
  int gen_n = 0, gen_count = 1;
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen_cmd->add_option("--n", gen_n, "Trips per instance")->required()->check(CLI::PositiveNumber);
  gen_cmd->add_option("--count", gen_count, "Number of instances")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--seed", gen_seed);
  gen_cmd->add_option("--out", gen_out, "Output file, or directory when count > 1")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*train_cmd) {
      TrainConfig c = load_train_config(train_config);
      if (train_seed) c.seed = *train_seed;
      if (train_episodes) {
        if (*train_episodes < 0) throw FormatError("--episodes: must be non-negative");
        c.episodes = *train_episodes;
      }
      if (!train_model.empty()) c.model = train_model;
      if (!train_log.empty()) c.log = train_log;
      const auto out = run_training(c, [](const EpisodeLog& e) { std::cout << e.to_json().dump() << '\n'; });
      std::cout << nlohmann::json{{"model", c.model.string()},
                                  {"episodes", out.result.log.size()},
                                  {"stopped_on_time", out.result.stopped_on_time}}
                       .dump()
                << '\n';
    } else if (*solve_cmd) {
      Instance inst = load_any_instance(solve_instance);
      if (solve_n) inst = truncate(inst, *solve_n);
      std::optional<double> file_time;
      CgConfig cfg = cg_from_file(solve_config, file_time);
      cfg.seed = solve_seed;
      cfg.deterministic = cfg.deterministic || solve_det;
      cfg.time_limit = solve_time.value_or(file_time.value_or(default_time_limit(kind_of(inst), size_of(inst))));
      // selector and instance errors surface here rather than as an error row
      auto sel = make_selector(solve_selector, kind_of(inst), cfg.seed);
      const auto res = run_cg(inst, cfg, *sel);
      if (!solve_trace.empty()) {
        auto out = open_out(solve_trace);
        write_trace(out, res.trace);
      }
      const std::vector<BenchmarkRow> rows{make_row(res.trace)};
      if (solve_row.empty()) {
        write_rows(std::cout, rows);
      } else {
        auto out = open_out(solve_row);
        write_rows(out, rows);
      }
    } else if (*bench_cmd) {
      std::vector<BenchmarkRow> rows;
      if (!bench_from.empty()) {
        std::ifstream in(bench_from);
        if (!in) throw IoError("cannot open " + bench_from);
        rows = read_rows(in);
      } else {
        BenchOptions o;
        o.instances = expand_instance_paths({bench_instances.begin(), bench_instances.end()});
        o.selectors = bench_selectors;
        o.sizes = parse_sizes(bench_sizes);
        std::optional<double> file_time;
        o.cg = cg_from_file(bench_config, file_time);
        o.time_limit = bench_time ? bench_time : file_time;
        o.cg.seed = bench_seed;
        o.cg.deterministic = o.cg.deterministic || bench_det;
        o.trace_dir = bench_traces;
        rows = run_bench(o, [](const BenchmarkRow& r) {
          std::cerr << r.instance << " n=" << r.n << " " << r.selector << ": "
                    << (r.ok() ? format_double(r.objective) : "error: " + r.error) << '\n';
        });
        auto out = open_out(bench_rows_out);
        write_rows(out, rows);
      }
      const auto summary = summarize(rows);
      {
        auto out = open_out(bench_summary);
        write_summary(out, summary);
      }
      if (!bench_means.empty()) {
        auto out = open_out(bench_means);
        write_means(out, summary);
      }
    } else if (*export_cmd) {
      std::vector<EpisodeTrace> traces;
      for (const auto& p : export_traces) {
        std::ifstream in(p);
        if (!in) throw IoError("cannot open " + p);
        try {
          traces.push_back(read_trace(in));
        } catch (const ParseError& e) {
          throw ParseError(p + ": " + e.what(), 0);
        }
      }
      if (export_out.empty()) {
        write_convergence(std::cout, traces);
      } else {
        auto out = open_out(export_out);
        write_convergence(out, traces);
      }
    } else if (*gen_cmd) {
      if (gen_count == 1) {
        save_instance(generate_bdsp(gen_n, gen_seed), gen_out);
      } else {
        std::filesystem::create_directories(gen_out);
        for (int i = 0; i < gen_count; ++i) {
          const auto seed = split_seed(gen_seed, static_cast<std::uint64_t>(i));
          save_instance(generate_bdsp(gen_n, seed),
                        std::filesystem::path(gen_out) / ("bdsp-" + std::to_string(gen_n) + "-" + std::to_string(i) + ".bdsp.txt"));
        }
      }
    }
  } catch (const rlhh::Error& e) {
    return fail(std::string(e.kind()), e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
  return 0;
}
