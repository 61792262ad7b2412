#pragma once

#include <algorithm>
#include <cctype>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "rlhh/cg.hpp"
#include "rlhh/common.hpp"

namespace rlhh {

/// One (instance, selector) run.
struct BenchmarkRow {
  std::string instance;
  std::string kind;
  std::string type;  ///< group label, e.g. "C1", "RC2" or "BDSP"
  int n = 0;
  std::string selector;
  std::uint64_t seed = 0;
  double objective = 0;  ///< integer objective
  double obj_frac = 0;
  double time = 0;  ///< seconds
  int iterations = 0;
  int fallbacks = 0;
  double gap = 1;
  bool cg_truncated = false;
  std::string error;  ///< empty on success

  bool ok() const { return error.empty(); }
  bool operator==(const BenchmarkRow&) const = default;
};

struct SelectorMean {
  std::string selector;
  int runs = 0;
  double objective = 0;
  double time = 0;
  bool operator==(const SelectorMean&) const = default;
};

/// Per (type, n) comparison of the learned selector against the baselines.
struct SummaryRow {
  std::string type;
  int n = 0;
  std::vector<SelectorMean> means;  ///< every selector in the group, by name
  std::string best_baseline;
  double best_objective = 0;
  double best_time = 0;
  std::string rlhh;
  double rlhh_objective = 0;
  double rlhh_time = 0;
  double gain_pct = 0;  ///< (best - rlhh) / best * 100
  double speedup = 0;   ///< best time / rlhh time
  int rank = 0;         ///< 1 + methods with strictly lower mean objective
};

/// "c101" -> "C1", "rc205" -> "RC2"; BDSP instances group as "BDSP".
inline std::string instance_type(const std::string& name, const std::string& kind) {
  if (kind == "BDSP") return "BDSP";
  std::string t;
  std::size_t i = 0;
  while (i < name.size() && std::isalpha(static_cast<unsigned char>(name[i]))) t += static_cast<char>(std::toupper(static_cast<unsigned char>(name[i++])));
  if (i < name.size() && std::isdigit(static_cast<unsigned char>(name[i]))) t += name[i];
  return t.empty() ? name : t;
}

inline BenchmarkRow make_row(const EpisodeTrace& t) {
  BenchmarkRow r;
  r.instance = t.header.instance;
  r.kind = std::string(to_string(t.header.kind));
  r.type = instance_type(r.instance, r.kind);
  r.n = t.header.n;
  r.selector = t.header.selector;
  r.seed = t.header.seed;
  r.objective = t.terminal.obj_int;
  r.obj_frac = t.terminal.obj_frac;
  r.time = t.terminal.total_time;
  r.iterations = t.terminal.iterations;
  r.fallbacks = t.terminal.fallbacks;
  r.gap = t.terminal.gap;
  r.cg_truncated = t.terminal.cg_truncated;
  return r;
}

inline const std::vector<std::string>& baseline_selectors() {
  static const std::vector<std::string> names{"be1", "be2", "be3", "bn", "bp"};
  return names;
}

inline bool is_learned_selector(const std::string& s) { return s.rfind("rlhh", 0) == 0; }

/// Groups successful rows by (type, n). Gain, speedup and rank compare the
/// learned selector (name starting with "rlhh") against `baselines`; the
/// best baseline is the one with the lowest mean objective (ties: earlier in
/// `baselines`). Groups without a learned selector or baseline keep those
/// fields at zero.
inline std::vector<SummaryRow> summarize(const std::vector<BenchmarkRow>& rows,
                                         const std::vector<std::string>& baselines = baseline_selectors()) {
  std::map<std::pair<std::string, int>, std::map<std::string, SelectorMean>> groups;
  std::vector<std::pair<std::string, int>> order;
  for (const auto& r : rows) {
    if (!r.ok()) continue;
    const auto key = std::make_pair(r.type, r.n);
    if (!groups.count(key)) order.push_back(key);
    auto& m = groups[key][r.selector];
    m.selector = r.selector;
    ++m.runs;
    m.objective += r.objective;
    m.time += r.time;
  }
  std::vector<SummaryRow> out;
  for (const auto& key : order) {
    SummaryRow s;
    s.type = key.first;
    s.n = key.second;
    for (auto [name, m] : groups[key]) {
      m.objective /= m.runs;
      m.time /= m.runs;
      s.means.push_back(m);
    }
    auto find = [&](const std::string& name) -> const SelectorMean* {
      for (const auto& m : s.means)
        if (m.selector == name) return &m;
      return nullptr;
    };
    const SelectorMean* best = nullptr;
    for (const auto& b : baselines)
      if (const auto* m = find(b); m && (!best || m->objective < best->objective)) best = m;
    const SelectorMean* learned = nullptr;
    for (const auto& m : s.means)
      if (is_learned_selector(m.selector)) {
        learned = &m;
        break;
      }
    if (best) {
      s.best_baseline = best->selector;
      s.best_objective = best->objective;
      s.best_time = best->time;
    }
    if (learned) {
      s.rlhh = learned->selector;
      s.rlhh_objective = learned->objective;
      s.rlhh_time = learned->time;
      s.rank = 1;
      for (const auto& b : baselines)
        if (const auto* m = find(b); m && m->objective < learned->objective) ++s.rank;
    }
    if (best && learned) {
      s.gain_pct = (best->objective - learned->objective) / best->objective * 100.0;
      s.speedup = learned->time > 0 ? best->time / learned->time : 0.0;
    }
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace csv {

inline std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

inline void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << quote(fields[i]);
  out << '\n';
}

/// Reads one record (quoted fields may span lines). False at end of input.
inline bool read_record(std::istream& in, std::vector<std::string>& fields, int& lineno) {
  fields.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  ++lineno;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0;; ++i) {
    if (i == line.size()) {
      if (quoted) {
        if (!std::getline(in, line)) throw ParseError("unterminated quoted field", lineno);
        ++lineno;
        cur += '\n';
        i = static_cast<std::size_t>(-1);
        continue;
      }
      break;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return true;
}

inline double to_double(const std::string& s, int line, const char* field) {
  double v;
  if (!parse_double(s, v)) throw ParseError(std::string("field ") + field + ": not a number '" + s + "'", line);
  return v;
}

inline long long to_int(const std::string& s, int line, const char* field) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(std::string("field ") + field + ": not an integer '" + s + "'", line);
  }
}

}  // namespace csv

inline const std::vector<std::string>& row_columns() {
  static const std::vector<std::string> cols{"instance", "kind",       "type",      "n",   "selector",
                                             "seed",     "objective",  "obj_frac",  "time", "iterations",
                                             "fallbacks", "gap",       "cg_truncated", "error"};
  return cols;
}

inline void write_rows(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  csv::write_line(out, row_columns());
  for (const auto& r : rows)
    csv::write_line(out, {r.instance, r.kind, r.type, std::to_string(r.n), r.selector, std::to_string(r.seed),
                          format_double(r.objective), format_double(r.obj_frac), format_double(r.time),
                          std::to_string(r.iterations), std::to_string(r.fallbacks), format_double(r.gap),
                          r.cg_truncated ? "1" : "0", r.error});
}

inline std::vector<BenchmarkRow> read_rows(std::istream& in) {
  std::vector<std::string> f;
  int line = 0;
  if (!csv::read_record(in, f, line)) throw ParseError("empty CSV", 0);
  if (f != row_columns()) throw ParseError("unexpected CSV header", line);
  std::vector<BenchmarkRow> rows;
  while (csv::read_record(in, f, line)) {
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != row_columns().size())
      throw ParseError("expected " + std::to_string(row_columns().size()) + " fields, found " + std::to_string(f.size()), line);
    BenchmarkRow r;
    r.instance = f[0];
    r.kind = f[1];
    r.type = f[2];
    r.n = static_cast<int>(csv::to_int(f[3], line, "n"));
    r.selector = f[4];
    r.seed = static_cast<std::uint64_t>(csv::to_int(f[5], line, "seed"));
    r.objective = csv::to_double(f[6], line, "objective");
    r.obj_frac = csv::to_double(f[7], line, "obj_frac");
    r.time = csv::to_double(f[8], line, "time");
    r.iterations = static_cast<int>(csv::to_int(f[9], line, "iterations"));
    r.fallbacks = static_cast<int>(csv::to_int(f[10], line, "fallbacks"));
    r.gap = csv::to_double(f[11], line, "gap");
    r.cg_truncated = csv::to_int(f[12], line, "cg_truncated") != 0;
    r.error = f[13];
    rows.push_back(std::move(r));
  }
  return rows;
}

inline const std::vector<std::string>& summary_columns() {
  static const std::vector<std::string> cols{"type",       "n",         "best_baseline", "best_objective",
                                             "best_time",  "rlhh",      "rlhh_objective", "rlhh_time",
                                             "gain_pct",   "speedup",   "rank"};
  return cols;
}

inline void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  csv::write_line(out, summary_columns());
  for (const auto& s : rows)
    csv::write_line(out, {s.type, std::to_string(s.n), s.best_baseline, format_double(s.best_objective),
                          format_double(s.best_time), s.rlhh, format_double(s.rlhh_objective),
                          format_double(s.rlhh_time), format_double(s.gain_pct), format_double(s.speedup),
                          std::to_string(s.rank)});
}

/// Long form: one line per (group, selector).
inline void write_means(std::ostream& out, const std::vector<SummaryRow>& rows) {
  csv::write_line(out, {"type", "n", "selector", "runs", "mean_objective", "mean_time"});
  for (const auto& s : rows)
    for (const auto& m : s.means)
      csv::write_line(out, {s.type, std::to_string(s.n), m.selector, std::to_string(m.runs), format_double(m.objective),
                            format_double(m.time)});
}

/// Convergence series: one line per iteration (plus the starting point) of every trace.
inline void write_convergence(std::ostream& out, const std::vector<EpisodeTrace>& traces) {
  csv::write_line(out, {"selector", "instance", "n", "iteration", "time", "objective"});
  for (const auto& t : traces) {
    const std::string n = std::to_string(t.header.n);
    csv::write_line(out, {t.header.selector, t.header.instance, n, "0", "0", format_double(t.header.initial_objective)});
    for (const auto& r : t.iterations)
      csv::write_line(out, {t.header.selector, t.header.instance, n, std::to_string(r.iteration), format_double(r.elapsed),
                            format_double(r.objective)});
  }
}

}  // namespace rlhh
