#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "rlhh/common.hpp"

namespace rlhh {

struct SparseColumn {
  std::vector<int> rows;
  std::vector<double> values;
};

/// min cᵀx  s.t.  A x >= rhs,  lower <= x <= upper.
struct LpModel {
  int rows = 0;
  std::vector<double> rhs;
  std::vector<SparseColumn> columns;
  std::vector<double> cost;
  std::vector<double> lower;
  std::vector<double> upper;

  int cols() const { return static_cast<int>(columns.size()); }

  void add_column(SparseColumn col, double c, double lo = 0.0, double up = kInf) {
    columns.push_back(std::move(col));
    cost.push_back(c);
    lower.push_back(lo);
    upper.push_back(up);
  }
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

/// Basis snapshot for warm starts. Variable ids: [0, m) surplus of row i,
/// [m, 2m) artificial of row i, [2m, 2m + n) structural column j.
struct LpBasis {
  std::vector<int> basic;
  std::vector<int> at_upper;  ///< nonbasic structural columns resting at their upper bound
  bool empty() const { return basic.empty(); }
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  double objective = 0;
  std::vector<double> x;      ///< structural values
  std::vector<double> duals;  ///< one per row, >= 0 at optimality for >= rows
  LpBasis basis;
  long iterations = 0;
  bool warm_started = false;
};

struct SimplexOptions {
  double feasibility_tol = 1e-7;
  double optimality_tol = 1e-6;
  double pivot_tol = 1e-9;
  int degenerate_switch = 500;  ///< consecutive degenerate pivots before Bland's rule
  int refactor_every = 50;
  int recovery_attempts = 2;
};

/// Bounded-variable revised primal simplex, two phases, dense explicit basis
/// inverse refreshed by LU refactorization. Dantzig pricing with a switch to
/// Bland's rule after a run of degenerate pivots.
class SimplexSolver {
 public:
  explicit SimplexSolver(const LpModel& model, SimplexOptions opt = {}) : model_(model), opt_(opt) {
    m_ = model.rows;
    n_ = model.cols();
    if (static_cast<int>(model.rhs.size()) != m_) throw ArgumentError("LP rhs size mismatch");
  }

  LpResult solve(const LpBasis* warm = nullptr) {
    for (int attempt = 0; attempt <= opt_.recovery_attempts; ++attempt) {
      const bool force_bland = attempt > 0;
      try {
        return run(attempt == 0 ? warm : nullptr, force_bland);
      } catch (const IterationLimit&) {
        continue;
      }
    }
    throw NumericalError("simplex stalled after Bland's-rule recovery attempts");
  }

 private:
  struct IterationLimit {};

  int total() const { return 2 * m_ + n_; }
  bool is_structural(int j) const { return j >= 2 * m_; }
  bool is_artificial(int j) const { return j >= m_ && j < 2 * m_; }

  double lower(int j) const { return is_structural(j) ? model_.lower[static_cast<std::size_t>(j - 2 * m_)] : 0.0; }
  double upper(int j) const {
    if (is_structural(j)) return model_.upper[static_cast<std::size_t>(j - 2 * m_)];
    if (is_artificial(j)) return phase_ == 1 ? kInf : 0.0;
    return kInf;
  }
  double cost(int j) const {
    if (phase_ == 1) return is_artificial(j) ? 1.0 : 0.0;
    return is_structural(j) ? model_.cost[static_cast<std::size_t>(j - 2 * m_)] : 0.0;
  }

  template <class F>
  void for_column(int j, F&& f) const {
    if (j < m_) {
      f(j, -1.0);
    } else if (j < 2 * m_) {
      f(j - m_, 1.0);
    } else {
      const auto& c = model_.columns[static_cast<std::size_t>(j - 2 * m_)];
      for (std::size_t k = 0; k < c.rows.size(); ++k) f(c.rows[k], c.values[k]);
    }
  }

  bool refactor() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) for_column(basic_[static_cast<std::size_t>(i)], [&](int r, double v) { B(r, i) += v; });
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
    const auto& LU = lu.matrixLU();
    double scale = 1.0;
    for (int i = 0; i < m_; ++i) scale = std::max(scale, std::abs(B.col(i).maxCoeff()));
    for (int i = 0; i < m_; ++i)
      if (std::abs(LU(i, i)) < 1e-11 * scale) return false;
    binv_ = lu.inverse();
    pivots_since_refactor_ = 0;
    return true;
  }

  void compute_basic_values() {
    Eigen::VectorXd r(m_);
    for (int i = 0; i < m_; ++i) r(i) = model_.rhs[static_cast<std::size_t>(i)];
    for (int j = 0; j < total(); ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
      const double xj = x_[static_cast<std::size_t>(j)];
      if (xj != 0.0) for_column(j, [&](int row, double v) { r(row) -= v * xj; });
    }
    const Eigen::VectorXd xb = binv_ * r;
    for (int i = 0; i < m_; ++i) x_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(i)])] = xb(i);
  }

  bool primal_feasible() const {
    for (int i = 0; i < m_; ++i) {
      const int j = basic_[static_cast<std::size_t>(i)];
      const double v = x_[static_cast<std::size_t>(j)];
      if (v < lower(j) - opt_.feasibility_tol || v > upper(j) + opt_.feasibility_tol) return false;
    }
    return true;
  }

  void place_nonbasic(const std::vector<int>& at_upper) {
    std::vector<std::uint8_t> up(static_cast<std::size_t>(n_), 0);
    for (int j : at_upper)
      if (j >= 0 && j < n_) up[static_cast<std::size_t>(j)] = 1;
    for (int j = 0; j < total(); ++j) {
      if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
      double v = lower(j);
      if (is_structural(j) && up[static_cast<std::size_t>(j - 2 * m_)] && std::isfinite(upper(j))) v = upper(j);
      x_[static_cast<std::size_t>(j)] = v;
    }
  }

  bool try_warm(const LpBasis& warm) {
    if (static_cast<int>(warm.basic.size()) != m_) return false;
    basic_ = warm.basic;
    pos_.assign(static_cast<std::size_t>(total()), -1);
    for (int i = 0; i < m_; ++i) {
      const int j = basic_[static_cast<std::size_t>(i)];
      if (j < 0 || j >= total() || pos_[static_cast<std::size_t>(j)] >= 0) return false;
      pos_[static_cast<std::size_t>(j)] = i;
    }
    x_.assign(static_cast<std::size_t>(total()), 0.0);
    phase_ = 2;
    place_nonbasic(warm.at_upper);
    if (!refactor()) return false;
    compute_basic_values();
    return primal_feasible();
  }

  void cold_start() {
    x_.assign(static_cast<std::size_t>(total()), 0.0);
    pos_.assign(static_cast<std::size_t>(total()), -1);
    basic_.assign(static_cast<std::size_t>(m_), -1);
    phase_ = 1;
    for (int j = 2 * m_; j < total(); ++j) x_[static_cast<std::size_t>(j)] = lower(j);
    std::vector<double> residual(model_.rhs);
    for (int j = 2 * m_; j < total(); ++j) {
      const double xj = x_[static_cast<std::size_t>(j)];
      if (xj != 0.0) for_column(j, [&](int r, double v) { residual[static_cast<std::size_t>(r)] -= v * xj; });
    }
    for (int i = 0; i < m_; ++i) {
      const int j = residual[static_cast<std::size_t>(i)] > 0 ? m_ + i : i;
      basic_[static_cast<std::size_t>(i)] = j;
      pos_[static_cast<std::size_t>(j)] = i;
    }
    refactor();
    compute_basic_values();
  }

  /// Runs the current phase to optimality. Returns false if unbounded.
  bool iterate(bool force_bland, long& iterations, long limit) {
    bool bland = force_bland;
    int degenerate = 0;
    Eigen::VectorXd cb(m_), y(m_), alpha(m_);
    while (true) {
      if (++iterations > limit) throw IterationLimit{};
      if (pivots_since_refactor_ >= opt_.refactor_every) {
        if (!refactor()) throw NumericalError("basis became singular");
        compute_basic_values();
      }
      for (int i = 0; i < m_; ++i) cb(i) = cost(basic_[static_cast<std::size_t>(i)]);
      y.noalias() = binv_.transpose() * cb;

      int enter = -1;
      double best = 0.0;
      int dir = 0;
      for (int j = 0; j < total(); ++j) {
        if (pos_[static_cast<std::size_t>(j)] >= 0) continue;
        const double lo = lower(j), up = upper(j);
        if (up - lo <= 0.0) continue;
        double d = cost(j);
        for_column(j, [&](int r, double v) { d -= y(r) * v; });
        const double xj = x_[static_cast<std::size_t>(j)];
        int cand = 0;
        if (xj <= lo && d < -opt_.optimality_tol) cand = 1;
        else if (xj >= up && d > opt_.optimality_tol) cand = -1;
        if (cand == 0) continue;
        if (bland) {
          enter = j;
          dir = cand;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = cand;
        }
      }
      if (enter < 0) return true;

      alpha.setZero();
      for_column(enter, [&](int r, double v) { alpha += binv_.col(r) * v; });

      double theta = upper(enter) - lower(enter);
      int leave = -1;
      double leave_bound = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double delta = -dir * alpha(i);
        if (std::abs(delta) <= opt_.pivot_tol) continue;
        const int j = basic_[static_cast<std::size_t>(i)];
        const double v = x_[static_cast<std::size_t>(j)];
        double limit_i, bound;
        if (delta < 0) {
          bound = lower(j);
          limit_i = std::max(0.0, (v - bound) / -delta);
        } else {
          bound = upper(j);
          if (!std::isfinite(bound)) continue;
          limit_i = std::max(0.0, (bound - v) / delta);
        }
        bool take = false;
        if (leave < 0 || limit_i < theta - 1e-12) {
          take = limit_i < theta || leave < 0;
        } else if (limit_i <= theta + 1e-12) {
          const int current = basic_[static_cast<std::size_t>(leave)];
          take = bland ? j < current : std::abs(alpha(i)) > std::abs(alpha(leave));
        }
        if (take && limit_i <= theta + 1e-12) {
          theta = std::min(theta, limit_i);
          leave = i;
          leave_bound = bound;
        }
      }
      if (!std::isfinite(theta)) return false;

      const double step = dir * theta;
      x_[static_cast<std::size_t>(enter)] += step;
      for (int i = 0; i < m_; ++i) x_[static_cast<std::size_t>(basic_[static_cast<std::size_t>(i)])] -= step * alpha(i);

      if (theta <= 1e-12) {
        if (++degenerate >= opt_.degenerate_switch) bland = true;
      } else {
        degenerate = 0;
        bland = force_bland;
      }

      if (leave < 0) {
        // bound flip
        x_[static_cast<std::size_t>(enter)] = dir > 0 ? upper(enter) : lower(enter);
        continue;
      }
      const int out = basic_[static_cast<std::size_t>(leave)];
      x_[static_cast<std::size_t>(out)] = leave_bound;
      pos_[static_cast<std::size_t>(out)] = -1;
      pos_[static_cast<std::size_t>(enter)] = leave;
      basic_[static_cast<std::size_t>(leave)] = enter;

      const double piv = alpha(leave);
      binv_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave || alpha(i) == 0.0) continue;
        binv_.row(i) -= alpha(i) * binv_.row(leave);
      }
      ++pivots_since_refactor_;
    }
  }

  LpResult run(const LpBasis* warm, bool force_bland) {
    LpResult res;
    for (int j = 0; j < n_; ++j)
      if (model_.upper[static_cast<std::size_t>(j)] < model_.lower[static_cast<std::size_t>(j)]) {
        res.status = LpStatus::Infeasible;
        return res;
      }
    long iterations = 0;
    const long limit = 100L * (m_ + n_) + 10000;
    if (warm != nullptr && !warm->empty() && try_warm(*warm)) {
      res.warm_started = true;
    } else {
      cold_start();
      if (!iterate(force_bland, iterations, limit)) throw NumericalError("phase I unbounded");
      double infeas = 0.0;
      for (int i = 0; i < m_; ++i) infeas += x_[static_cast<std::size_t>(m_ + i)];
      if (infeas > opt_.feasibility_tol * std::max(1, m_)) {
        res.status = LpStatus::Infeasible;
        res.iterations = iterations;
        return res;
      }
      phase_ = 2;
      for (int i = 0; i < m_; ++i)
        if (pos_[static_cast<std::size_t>(m_ + i)] < 0) x_[static_cast<std::size_t>(m_ + i)] = 0.0;
    }
    if (!iterate(force_bland, iterations, limit)) {
      res.status = LpStatus::Unbounded;
      res.iterations = iterations;
      return res;
    }
    refactor();
    compute_basic_values();

    res.status = LpStatus::Optimal;
    res.iterations = iterations;
    res.x.resize(static_cast<std::size_t>(n_));
    res.objective = 0.0;
    for (int j = 0; j < n_; ++j) {
      double v = x_[static_cast<std::size_t>(2 * m_ + j)];
      const double lo = model_.lower[static_cast<std::size_t>(j)], up = model_.upper[static_cast<std::size_t>(j)];
      if (std::abs(v - lo) < 1e-11) v = lo;
      if (std::isfinite(up) && std::abs(v - up) < 1e-11) v = up;
      res.x[static_cast<std::size_t>(j)] = v;
      res.objective += model_.cost[static_cast<std::size_t>(j)] * v;
    }
    Eigen::VectorXd cb(m_);
    for (int i = 0; i < m_; ++i) cb(i) = cost(basic_[static_cast<std::size_t>(i)]);
    const Eigen::VectorXd y = binv_.transpose() * cb;
    res.duals.assign(y.data(), y.data() + m_);
    res.basis.basic = basic_;
    for (int j = 0; j < n_; ++j) {
      const int v = 2 * m_ + j;
      if (pos_[static_cast<std::size_t>(v)] < 0 && std::isfinite(upper(v)) && upper(v) > lower(v) &&
          x_[static_cast<std::size_t>(v)] >= upper(v))
        res.basis.at_upper.push_back(j);
    }
    return res;
  }

  const LpModel& model_;
  SimplexOptions opt_;
  int m_ = 0, n_ = 0;
  int phase_ = 1;
  std::vector<int> basic_;
  std::vector<int> pos_;
  std::vector<double> x_;
  Eigen::MatrixXd binv_;
  int pivots_since_refactor_ = 0;
};

inline LpResult solve_lp(const LpModel& model, const LpBasis* warm = nullptr, SimplexOptions opt = {}) {
  return SimplexSolver(model, opt).solve(warm);
}

/// Writes the model in CPLEX LP text format (binary section when `integer`).
inline void write_lp_format(std::ostream& out, const LpModel& model, bool integer) {
  auto var = [](int j) { return "x" + std::to_string(j); };
  out << "\\ restricted master problem\nMinimize\n obj:";
  for (int j = 0; j < model.cols(); ++j) out << (j ? " + " : " ") << format_double(model.cost[static_cast<std::size_t>(j)]) << ' ' << var(j);
  out << "\nSubject To\n";
  std::vector<std::vector<std::pair<int, double>>> rows(static_cast<std::size_t>(model.rows));
  for (int j = 0; j < model.cols(); ++j) {
    const auto& c = model.columns[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < c.rows.size(); ++k) rows[static_cast<std::size_t>(c.rows[k])].emplace_back(j, c.values[k]);
  }
  for (int i = 0; i < model.rows; ++i) {
    out << " c" << i << ':';
    const auto& row = rows[static_cast<std::size_t>(i)];
    if (row.empty()) out << " 0 x0";
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? " + " : " ") << format_double(row[k].second) << ' ' << var(row[k].first);
    out << " >= " << format_double(model.rhs[static_cast<std::size_t>(i)]) << '\n';
  }
  out << "Bounds\n";
  for (int j = 0; j < model.cols(); ++j) {
    const double up = model.upper[static_cast<std::size_t>(j)];
    out << ' ' << format_double(model.lower[static_cast<std::size_t>(j)]) << " <= " << var(j) << " <= "
        << (std::isfinite(up) ? format_double(up) : std::string("+inf")) << '\n';
  }
  if (integer) {
    out << "Binaries\n";
    for (int j = 0; j < model.cols(); ++j) out << ' ' << var(j) << '\n';
  }
  out << "End\n";
}

}  // namespace rlhh
