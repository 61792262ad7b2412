#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "rlhh/common.hpp"

namespace rlhh {

enum class ProblemKind { Vrptw, Bdsp };

inline std::string_view to_string(ProblemKind k) { return k == ProblemKind::Vrptw ? "VRPTW" : "BDSP"; }

/// A Solomon node record. Times and demands keep the units of the source file.
struct Customer {
  int id = 0;
  double x = 0, y = 0;
  double demand = 0;
  double ready = 0;    ///< earliest service start
  double due = 0;      ///< latest service start
  double service = 0;  ///< service duration

  bool operator==(const Customer&) const = default;
};

struct VrptwInstance {
  std::string name;
  Customer depot;
  std::vector<Customer> customers;
  int vehicle_count = 0;
  double capacity = 0;
  double vehicle_fixed_cost = 0;

  std::size_t size() const { return customers.size(); }
  bool operator==(const VrptwInstance&) const = default;

  /// Throws ArgumentError when an invariant does not hold.
  void validate() const {
    if (customers.empty()) throw ArgumentError("VRPTW instance has no customers");
    if (depot.demand != 0 || depot.service != 0)
      throw ArgumentError("depot must have zero demand and zero service time");
    double max_demand = 0;
    for (const auto& c : customers) {
      if (!(c.ready <= c.due))
        throw ArgumentError("customer " + std::to_string(c.id) + " has ready time after due date");
      if (c.demand < 0 || c.service < 0)
        throw ArgumentError("customer " + std::to_string(c.id) + " has negative demand or service time");
      max_demand = std::max(max_demand, c.demand);
    }
    if (capacity < max_demand) throw ArgumentError("vehicle capacity is below the largest customer demand");
  }
};

/// A timetabled trip, times in minutes from midnight.
struct Trip {
  int id = 0;
  int start = 0;
  int end = 0;

  int duration() const { return end - start; }
  bool operator==(const Trip&) const = default;
};

/// Labour rules and cost parameters of a driver duty (minutes / cost units).
struct BdspRules {
  int min_changeover = 10;
  int max_driving = 540;
  int max_working = 720;
  int max_continuous_driving = 240;
  /// A gap between trips at least this long resets continuous driving.
  int break_threshold = 30;
  double driver_fixed_cost = 500;

  bool operator==(const BdspRules&) const = default;
};

struct BdspInstance {
  std::string name;
  std::vector<Trip> trips;
  BdspRules rules;

  std::size_t size() const { return trips.size(); }
  bool operator==(const BdspInstance&) const = default;

  void validate() const {
    if (trips.empty()) throw ArgumentError("BDSP instance has no trips");
    if (rules.min_changeover < 0) throw ArgumentError("min-changeover must be non-negative");
    for (const auto& t : trips)
      if (t.end <= t.start) throw ArgumentError("trip " + std::to_string(t.id) + " does not end after it starts");
  }
};

using Instance = std::variant<VrptwInstance, BdspInstance>;

inline ProblemKind kind_of(const Instance& inst) {
  return std::holds_alternative<VrptwInstance>(inst) ? ProblemKind::Vrptw : ProblemKind::Bdsp;
}

inline const std::string& name_of(const Instance& inst) {
  return std::visit([](const auto& i) -> const std::string& { return i.name; }, inst);
}

inline std::size_t size_of(const Instance& inst) {
  return std::visit([](const auto& i) { return i.size(); }, inst);
}

/// Identifies one instance inside a benchmark run.
struct InstanceRef {
  ProblemKind kind = ProblemKind::Vrptw;
  std::string name;
  int n = 0;
  std::string source;  ///< file path, or "seed:<value>" for generated instances
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_numbers(const std::vector<std::string>& toks, std::vector<double>& out) {
  out.clear();
  for (const auto& t : toks) {
    double v;
    if (!parse_double(t, v)) return false;
    out.push_back(v);
  }
  return true;
}

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

}  // namespace detail

/// Reads the Solomon text layout: a name line, a VEHICLE section with
/// "NUMBER CAPACITY" followed by the two values, a CUSTOMER section with a
/// column-title line and one 7-field row per node, node 0 being the depot.
inline VrptwInstance parse_solomon(std::istream& in, std::string fallback_name = {}) {
  VrptwInstance inst;
  std::string line;
  int lineno = 0;
  enum class Section { Preamble, Vehicle, Customer } section = Section::Preamble;
  bool have_vehicle = false;
  bool have_depot = false;
  int capacity_line = 0;
  std::vector<double> nums;

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;
    const std::string head = detail::upper(toks.front());
    if (head == "VEHICLE") {
      section = Section::Vehicle;
      continue;
    }
    if (head == "CUSTOMER") {
      if (!have_vehicle) throw ParseError("CUSTOMER section before vehicle header", lineno);
      section = Section::Customer;
      continue;
    }
    switch (section) {
      case Section::Preamble:
        if (inst.name.empty()) inst.name = toks.front();
        break;
      case Section::Vehicle:
        if (head == "NUMBER") continue;
        if (have_vehicle) throw ParseError("unexpected line in VEHICLE section", lineno);
        if (toks.size() != 2 || !detail::parse_numbers(toks, nums))
          throw ParseError("expected vehicle number and capacity", lineno);
        inst.vehicle_count = static_cast<int>(nums[0]);
        inst.capacity = nums[1];
        capacity_line = lineno;
        have_vehicle = true;
        break;
      case Section::Customer: {
        if (head == "CUST" || head == "CUST.") continue;
        if (toks.size() != 7 || !detail::parse_numbers(toks, nums))
          throw ParseError("malformed customer row (expected 7 numeric fields)", lineno);
        Customer c{static_cast<int>(nums[0]), nums[1], nums[2], nums[3], nums[4], nums[5], nums[6]};
        if (!(c.ready <= c.due)) throw ParseError("ready time exceeds due date", lineno);
        if (c.demand < 0 || c.service < 0) throw ParseError("negative demand or service time", lineno);
        if (!have_depot) {
          if (c.id != 0) throw ParseError("first node row must be the depot (id 0)", lineno);
          if (c.demand != 0 || c.service != 0)
            throw ParseError("depot must have zero demand and service time", lineno);
          inst.depot = c;
          have_depot = true;
        } else {
          if (c.demand > inst.capacity)
            throw ParseError("customer demand exceeds vehicle capacity " + format_double(inst.capacity) +
                                 " declared on line " + std::to_string(capacity_line),
                             lineno);
          inst.customers.push_back(c);
        }
        break;
      }
    }
  }
  if (!have_vehicle) throw ParseError("missing VEHICLE header", lineno);
  if (!have_depot) throw ParseError("missing depot row", lineno);
  if (inst.customers.empty()) throw ParseError("no customer rows", lineno);
  if (inst.name.empty()) inst.name = std::move(fallback_name);
  return inst;
}

inline VrptwInstance load_solomon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_solomon(in, path.stem().string());
}

inline VrptwInstance truncate(const VrptwInstance& inst, int n) {
  if (n < 1 || static_cast<std::size_t>(n) > inst.customers.size())
    throw ArgumentError("truncate: n=" + std::to_string(n) + " outside [1, " + std::to_string(inst.customers.size()) + "]");
  VrptwInstance out = inst;
  out.customers.resize(static_cast<std::size_t>(n));
  return out;
}

inline BdspInstance truncate(const BdspInstance& inst, int n) {
  if (n < 1 || static_cast<std::size_t>(n) > inst.trips.size())
    throw ArgumentError("truncate: n=" + std::to_string(n) + " outside [1, " + std::to_string(inst.trips.size()) + "]");
  BdspInstance out = inst;
  out.trips.resize(static_cast<std::size_t>(n));
  return out;
}

inline Instance truncate(const Instance& inst, int n) {
  return std::visit([n](const auto& i) -> Instance { return truncate(i, n); }, inst);
}

/// Trip start-hour distribution in percent, index = hour of day (0 = midnight).
inline constexpr std::array<int, 24> kStartHourPercent = {0, 0, 0, 0, 3, 3, 5,  9,  10, 8, 5, 4,
                                                          3, 3, 4, 5, 9, 10, 8, 5, 3,  3, 0, 0};

inline constexpr int kMinTripDuration = 60;
inline constexpr int kMaxTripDuration = 90;

/// Random timetable of n trips: start hour from kStartHourPercent, start minute
/// uniform on 0..59, duration uniform on [60, 90].
inline BdspInstance generate_bdsp(int n, std::uint64_t seed, const BdspRules& rules = {}) {
  if (n < 1) throw ArgumentError("generate_bdsp: n must be at least 1");
  BdspInstance inst;
  inst.name = "bdsp_" + std::to_string(n) + "_" + std::to_string(seed);
  inst.rules = rules;
  Rng rng(seed);
  inst.trips.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const auto roll = rng.uniform_int(0, 99);
    int hour = 0;
    for (int acc = 0; hour < 24; ++hour) {
      acc += kStartHourPercent[static_cast<std::size_t>(hour)];
      if (roll < acc) break;
    }
    const int minute = static_cast<int>(rng.uniform_int(0, 59));
    const int duration = static_cast<int>(rng.uniform_int(kMinTripDuration, kMaxTripDuration));
    const int start = hour * 60 + minute;
    inst.trips.push_back({k + 1, start, start + duration});
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Canonical text serialization ("FORMAT v1").

inline constexpr std::string_view kInstanceFormatTag = "FORMAT v1";

inline void write_instance(std::ostream& out, const Instance& inst) {
  out << kInstanceFormatTag << '\n';
  if (const auto* v = std::get_if<VrptwInstance>(&inst)) {
    auto row = [&](const char* tag, const Customer& c) {
      out << tag << ' ' << c.id << ' ' << format_double(c.x) << ' ' << format_double(c.y) << ' '
          << format_double(c.demand) << ' ' << format_double(c.ready) << ' ' << format_double(c.due) << ' '
          << format_double(c.service) << '\n';
    };
    out << "KIND VRPTW\n"
        << "NAME " << v->name << '\n'
        << "VEHICLES " << v->vehicle_count << '\n'
        << "CAPACITY " << format_double(v->capacity) << '\n'
        << "VEHICLE_FIXED_COST " << format_double(v->vehicle_fixed_cost) << '\n';
    row("DEPOT", v->depot);
    out << "CUSTOMERS " << v->customers.size() << '\n';
    for (const auto& c : v->customers) row("C", c);
  } else {
    const auto& b = std::get<BdspInstance>(inst);
    out << "KIND BDSP\n"
        << "NAME " << b.name << '\n'
        << "MIN_CHANGEOVER " << b.rules.min_changeover << '\n'
        << "MAX_DRIVING " << b.rules.max_driving << '\n'
        << "MAX_WORKING " << b.rules.max_working << '\n'
        << "MAX_CONTINUOUS_DRIVING " << b.rules.max_continuous_driving << '\n'
        << "BREAK_THRESHOLD " << b.rules.break_threshold << '\n'
        << "DRIVER_FIXED_COST " << format_double(b.rules.driver_fixed_cost) << '\n'
        << "TRIPS " << b.trips.size() << '\n';
    for (const auto& t : b.trips) out << "T " << t.id << ' ' << t.start << ' ' << t.end << '\n';
  }
  out << "END\n";
}

namespace detail {

class RecordReader {
 public:
  explicit RecordReader(std::istream& in) : in_(in) {}

  /// Next non-empty line split into tokens; throws FormatError at end of input.
  std::vector<std::string> next(std::string_view expect) {
    std::string line;
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      if (!expect.empty() && toks.front() != expect)
        throw FormatError("line " + std::to_string(lineno_) + ": expected " + std::string(expect) + ", found " +
                          toks.front());
      return toks;
    }
    throw FormatError("unexpected end of file, expected " + std::string(expect));
  }

  std::string text_field(std::string_view key) {
    auto toks = next(key);
    std::string v;
    for (std::size_t i = 1; i < toks.size(); ++i) v += (i > 1 ? " " : "") + toks[i];
    return v;
  }

  double number(std::string_view key) {
    auto toks = next(key);
    double v;
    if (toks.size() != 2 || !parse_double(toks[1], v)) fail("bad value for " + std::string(key));
    return v;
  }

  int integer(std::string_view key) {
    const double v = number(key);
    if (v != static_cast<int>(v)) fail(std::string(key) + " must be an integer");
    return static_cast<int>(v);
  }

  std::vector<double> numbers(std::string_view key, std::size_t count) {
    auto toks = next(key);
    std::vector<double> out;
    if (toks.size() != count + 1) fail("wrong field count for " + std::string(key));
    for (std::size_t i = 1; i < toks.size(); ++i) {
      double v;
      if (!parse_double(toks[i], v)) fail("non-numeric field in " + std::string(key));
      out.push_back(v);
    }
    return out;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError("line " + std::to_string(lineno_) + ": " + msg);
  }

  int line() const { return lineno_; }

 private:
  std::istream& in_;
  int lineno_ = 0;
};

}  // namespace detail

inline Instance read_instance(std::istream& in) {
  std::string first;
  while (std::getline(in, first)) {
    if (!first.empty() && first.back() == '\r') first.pop_back();
    if (!first.empty()) break;
  }
  if (first.rfind("FORMAT", 0) != 0) throw FormatError("missing FORMAT header");
  if (first != kInstanceFormatTag) throw VersionError("unsupported instance format '" + first + "'");
  detail::RecordReader r(in);
  const std::string kind = r.text_field("KIND");
  Instance result;
  if (kind == "VRPTW") {
    VrptwInstance v;
    v.name = r.text_field("NAME");
    v.vehicle_count = r.integer("VEHICLES");
    v.capacity = r.number("CAPACITY");
    v.vehicle_fixed_cost = r.number("VEHICLE_FIXED_COST");
    auto node = [](const std::vector<double>& f) {
      return Customer{static_cast<int>(f[0]), f[1], f[2], f[3], f[4], f[5], f[6]};
    };
    v.depot = node(r.numbers("DEPOT", 7));
    const int n = r.integer("CUSTOMERS");
    if (n < 1) r.fail("CUSTOMERS must be positive");
    for (int k = 0; k < n; ++k) v.customers.push_back(node(r.numbers("C", 7)));
    try {
      v.validate();
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("schema violation: ") + e.what());
    }
    result = std::move(v);
  } else if (kind == "BDSP") {
    BdspInstance b;
    b.name = r.text_field("NAME");
    b.rules.min_changeover = r.integer("MIN_CHANGEOVER");
    b.rules.max_driving = r.integer("MAX_DRIVING");
    b.rules.max_working = r.integer("MAX_WORKING");
    b.rules.max_continuous_driving = r.integer("MAX_CONTINUOUS_DRIVING");
    b.rules.break_threshold = r.integer("BREAK_THRESHOLD");
    b.rules.driver_fixed_cost = r.number("DRIVER_FIXED_COST");
    const int n = r.integer("TRIPS");
    if (n < 1) r.fail("TRIPS must be positive");
    for (int k = 0; k < n; ++k) {
      auto f = r.numbers("T", 3);
      b.trips.push_back({static_cast<int>(f[0]), static_cast<int>(f[1]), static_cast<int>(f[2])});
    }
    try {
      b.validate();
    } catch (const ArgumentError& e) {
      throw FormatError(std::string("schema violation: ") + e.what());
    }
    result = std::move(b);
  } else {
    r.fail("unknown KIND '" + kind + "'");
  }
  r.next("END");
  return result;
}

inline void save_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  write_instance(out, inst);
  if (!out) throw IoError("write failed for " + path.string());
}

inline Instance load_instance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return read_instance(in);
}

/// Canonical files (*.vrptw.txt, *.bdsp.txt) or anything else as a Solomon file.
inline Instance load_any_instance(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".vrptw.txt") || ends_with(".bdsp.txt")) return load_instance(path);
  return load_solomon(path);
}

}  // namespace rlhh
