#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rlhh/common.hpp"
#include "rlhh/instance.hpp"

namespace rlhh::fx {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(RLHH_FIXTURE_DIR) / name; }
inline std::filesystem::path solomon(const std::string& name) {
  return std::filesystem::path(RLHH_DATA_DIR) / "solomon" / (name + ".txt");
}

/// Small random VRPTW instance where every singleton route is feasible.
inline VrptwInstance random_vrptw(int n, std::uint64_t seed, double width_lo = 10, double width_hi = 80) {
  Rng rng(seed);
  VrptwInstance inst;
  inst.name = "rand" + std::to_string(seed);
  inst.depot = {0, 25, 25, 0, 0, 300, 0};
  inst.capacity = 25;
  inst.vehicle_count = n;
  for (int i = 1; i <= n; ++i) {
    Customer c;
    c.id = i;
    c.x = static_cast<double>(rng.uniform_int(0, 50));
    c.y = static_cast<double>(rng.uniform_int(0, 50));
    c.demand = static_cast<double>(rng.uniform_int(1, 10));
    c.ready = static_cast<double>(rng.uniform_int(0, 150));
    c.due = c.ready + rng.uniform(width_lo, width_hi);
    c.service = 5;
    inst.customers.push_back(c);
  }
  return inst;
}

inline std::vector<double> random_duals(int n, Rng& rng, double lo = 0, double hi = 60) {
  std::vector<double> pi(static_cast<std::size_t>(n));
  for (auto& p : pi) p = rng.uniform(lo, hi);
  return pi;
}

}  // namespace rlhh::fx
