#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "rlhh/network.hpp"

namespace rlhh {

inline constexpr double kFractionalTol = 1e-6;
inline constexpr int kEntropyBins = 10;

/// Layout: objective ratio, mean fractional value, fractional share, then
/// {min, max, mean, std, entropy} of duals, edge costs and modified edge
/// costs, then the coefficient of variation of each resource's consumption.
inline int feature_count(ProblemKind kind) { return kind == ProblemKind::Vrptw ? 20 : 21; }

inline std::vector<std::string> feature_names(const PricingNetwork& net) {
  std::vector<std::string> names{"objective_ratio", "fractional_mean", "fractional_share"};
  for (const char* group : {"dual", "cost", "reduced_cost"})
    for (const char* stat : {"min", "max", "mean", "std", "entropy"}) names.push_back(std::string(group) + "_" + stat);
  for (const auto& r : net.resource_names) names.push_back("cv_" + r);
  return names;
}

struct Summary {
  double min = 0, max = 0, mean = 0, std = 0, entropy = 0;
};

/// Population statistics plus the Shannon entropy (nats) of a 10-bin
/// equal-width histogram. Empty or constant input gives zero spread and entropy.
inline Summary summarize(std::span<const double> v) {
  Summary s;
  if (v.empty()) return s;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  double sum = 0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  double ss = 0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(v.size()));
  const double range = s.max - s.min;
  if (range > 0) {
    std::array<std::size_t, kEntropyBins> bins{};
    for (double x : v) {
      auto b = static_cast<int>((x - s.min) / range * kEntropyBins);
      ++bins[static_cast<std::size_t>(std::clamp(b, 0, kEntropyBins - 1))];
    }
    for (auto c : bins) {
      if (c == 0) continue;
      const double p = static_cast<double>(c) / static_cast<double>(v.size());
      s.entropy -= p * std::log(p);
    }
  }
  return s;
}

inline double coefficient_of_variation(std::span<const double> v) {
  const auto s = summarize(v);
  return s.mean == 0 ? 0.0 : s.std / std::abs(s.mean);
}

/// State vector for one CG iteration.
inline std::vector<double> featurize(std::span<const double> x, double objective, double initial_objective,
                                     const PricingNetwork& net, std::span<const double> duals,
                                     std::span<const double> cbar) {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(feature_count(net.kind)));
  f.push_back(initial_objective != 0 ? objective / initial_objective : 0.0);
  double frac_sum = 0;
  std::size_t frac_count = 0;
  for (double v : x)
    if (v > kFractionalTol && v < 1 - kFractionalTol) {
      frac_sum += v;
      ++frac_count;
    }
  f.push_back(frac_count ? frac_sum / static_cast<double>(frac_count) : 0.0);
  f.push_back(frac_count && !x.empty() ? static_cast<double>(frac_count) / static_cast<double>(x.size()) : 0.0);

  std::vector<double> costs(net.edge_count());
  for (std::size_t e = 0; e < net.edge_count(); ++e) costs[e] = net.edges[e].cost;
  for (const auto& s : {summarize(duals), summarize(costs), summarize(cbar)}) {
    f.push_back(s.min);
    f.push_back(s.max);
    f.push_back(s.mean);
    f.push_back(s.std);
    f.push_back(s.entropy);
  }
  std::vector<double> use(net.edge_count());
  for (int r = 0; r < net.resources; ++r) {
    for (std::size_t e = 0; e < net.edge_count(); ++e) use[e] = net.edges[e].use[static_cast<std::size_t>(r)];
    f.push_back(coefficient_of_variation(use));
  }
  for (auto& v : f)
    if (!std::isfinite(v)) v = 0.0;
  return f;
}

}  // namespace rlhh
