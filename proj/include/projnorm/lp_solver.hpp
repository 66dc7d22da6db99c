#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "projnorm/errors.hpp"
#include "projnorm/lp_model.hpp"

namespace projnorm {

enum class SeparationMode { exact, heuristic_then_exact };

inline const char* to_string(SeparationMode m) {
  return m == SeparationMode::exact ? "exact" : "heuristic-then-exact";
}

struct SolverConfig {
  double tol_feas = 1e-9;
  double tol_opt = 1e-9;
  std::size_t max_rows = 200'000;
  std::size_t max_iterations = 5'000;  ///< cutting-plane rounds
  std::size_t max_pivots = 200'000;    ///< per restricted solve
  std::size_t rows_per_round = 32;
  std::size_t heuristic_starts = 16;
  SeparationMode separation = SeparationMode::exact;
  std::uint64_t separation_budget = default_separation_budget;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate(std::size_t num_vars = 0) const {
    if (!(tol_feas > 0.0) || !(tol_opt > 0.0)) throw std::invalid_argument("tolerances must be positive");
    if (max_rows < num_vars) throw std::invalid_argument("max_rows must be at least the number of variables");
    if (rows_per_round == 0) throw std::invalid_argument("rows_per_round must be positive");
  }
};

enum class SolveStatus { optimal, budget_exceeded, iteration_limit };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::budget_exceeded: return "budget_exceeded";
    case SolveStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

struct ActiveRow {
  Selector selector;
  int sign = 1;  ///< row . x = sign
};

struct SolverTelemetry {
  std::size_t rounds = 0;
  std::size_t rows_generated = 0;  ///< rows in the final restricted LP
  std::size_t rows_added = 0;      ///< rows added by separation
  std::size_t pivots = 0;
  std::size_t separation_calls = 0;
  std::size_t heuristic_hits = 0;
  std::uint64_t rows_total = 0;
  SeparationMode separation = SeparationMode::exact;
  std::vector<double> value_history;  ///< restricted LP value per round
};

struct LpSolution {
  double value = 0.0;
  Eigen::VectorXd primal;
  std::vector<ActiveRow> active_rows;
  SolveStatus status = SolveStatus::optimal;
  /// max |row . primal| over the full row universe (exact separation); only
  /// meaningful when status is optimal.
  double max_row_value = 0.0;
  std::string message;
  SolverTelemetry telemetry;
};

namespace detail {

/// Vertex simplex for  max c.x  s.t.  -1 <= a_r.x <= 1  with free x.
///
/// A basis is d constraints held at equality. It starts from x = 0 with the
/// artificial equalities x_i = 0; those leave first. Interval rows stay
/// two-sided: a basic row carries the bound (+1 or -1) it sits on, and a row
/// that runs to its opposite bound flips in place.
class IntervalSimplex {
 public:
  enum class Status { optimal, unbounded, iteration_limit };

  struct Result {
    Status status = Status::optimal;
    Eigen::VectorXd x;
    Eigen::VectorXd ray;
    double value = 0.0;
    std::vector<std::size_t> basic_rows;
    std::vector<int> basic_signs;
    std::size_t pivots = 0;
  };

  IntervalSimplex(std::span<const double> rows, std::size_t num_rows, const Eigen::VectorXd& c,
                  double tol_opt, std::size_t max_pivots)
      : d_(static_cast<std::size_t>(c.size())),
        m_(num_rows),
        A_(rows.data(), static_cast<Eigen::Index>(num_rows), static_cast<Eigen::Index>(c.size())),
        c_(c),
        max_pivots_(max_pivots) {
    const double cscale = c.size() ? c.cwiseAbs().maxCoeff() : 0.0;
    tol_dual_ = tol_opt * std::max(cscale, 1e-300);
    row_norm_.resize(static_cast<Eigen::Index>(m_));
    for (std::size_t r = 0; r < m_; ++r) row_norm_[static_cast<Eigen::Index>(r)] = A_.row(static_cast<Eigen::Index>(r)).norm();
  }

  Result solve() {
    const auto d = static_cast<Eigen::Index>(d_);
    basis_.assign(d_, Slot{});
    for (std::size_t k = 0; k < d_; ++k) basis_[k] = {true, k, 0};
    in_basis_.assign(m_, false);
    stuck_.assign(d_, false);
    Binv_ = Eigen::MatrixXd::Identity(d, d);
    x_ = Eigen::VectorXd::Zero(d);

    Result res;
    // With c = 0 every feasible point is optimal; x = 0 is feasible for any row set.
    if (d_ == 0 || c_.isZero(0.0)) return finish(res, false);

    std::size_t since_refactor = 0;
    std::size_t degenerate_streak = 0;
    bool bland = false;

    while (true) {
      if (res.pivots >= max_pivots_) {
        res.status = Status::iteration_limit;
        return finish(res, false);
      }
      const Eigen::VectorXd y = Binv_.transpose() * c_;

      // Pick the basic constraint to release.
      std::ptrdiff_t leave = -1;
      double best_rate = 0.0;
      for (std::size_t k = 0; k < d_; ++k) {
        const auto& s = basis_[k];
        double rate = 0.0;
        if (s.artificial) {
          rate = std::abs(y[static_cast<Eigen::Index>(k)]);
        } else {
          rate = -y[static_cast<Eigen::Index>(k)] * s.sign;
        }
        if (rate <= tol_dual_) continue;
        if (bland) {
          if (leave < 0 || slot_key(k) < slot_key(static_cast<std::size_t>(leave))) leave = static_cast<std::ptrdiff_t>(k);
        } else if (rate > best_rate) {
          best_rate = rate;
          leave = static_cast<std::ptrdiff_t>(k);
        }
      }

      bool zero_cost = false;
      if (leave < 0) {
        // Dual feasible. Drive out remaining artificials so the answer is a vertex.
        for (std::size_t k = 0; k < d_; ++k) {
          if (basis_[k].artificial && !stuck_[k]) {
            leave = static_cast<std::ptrdiff_t>(k);
            zero_cost = true;
            break;
          }
        }
        if (leave < 0) return finish(res);
      }

      const auto k = static_cast<std::size_t>(leave);
      const Eigen::VectorXd w = Binv_.col(static_cast<Eigen::Index>(k));
      Eigen::VectorXd u;
      if (basis_[k].artificial) {
        const double yk = y[static_cast<Eigen::Index>(k)];
        u = (zero_cost ? 1.0 : (yk > 0 ? 1.0 : -1.0)) * w;
      } else {
        u = -basis_[k].sign * w;
      }

      auto step = ratio_test(u, k, bland);
      if (!step.blocked && zero_cost) {
        u = -u;
        step = ratio_test(u, k, bland);
      }
      if (!step.blocked) {
        if (zero_cost) {
          stuck_[k] = true;
          continue;
        }
        res.status = Status::unbounded;
        res.ray = u;
        return finish(res, false);
      }

      x_ += step.t * u;
      ++res.pivots;
      if (step.t <= 1e-12) {
        if (++degenerate_streak >= 20) bland = true;
      } else {
        degenerate_streak = 0;
        bland = false;
      }

      if (step.flip) {
        basis_[k].sign = -basis_[k].sign;
        continue;
      }

      const auto r = step.row;
      const Eigen::RowVectorXd ar = A_.row(static_cast<Eigen::Index>(r));
      const double denom = ar.dot(w);
      const Eigen::RowVectorXd arBinv = ar * Binv_;
      Eigen::RowVectorXd delta = arBinv;
      delta[static_cast<Eigen::Index>(k)] -= 1.0;
      Binv_.noalias() -= (w / denom) * delta;
      if (!basis_[k].artificial) in_basis_[basis_[k].index] = false;
      basis_[k] = {false, r, step.sign};
      in_basis_[r] = true;

      if (++since_refactor >= 64) {
        refactor();
        since_refactor = 0;
      }
    }
  }

 private:
  struct Slot {
    bool artificial = true;
    std::size_t index = 0;  // artificial axis or row id
    int sign = 0;
  };

  struct Step {
    bool blocked = false;
    bool flip = false;
    double t = 0.0;
    std::size_t row = 0;
    int sign = 0;
  };

  std::size_t slot_key(std::size_t k) const {
    return basis_[k].artificial ? basis_[k].index : d_ + basis_[k].index;
  }

  Step ratio_test(const Eigen::VectorXd& u, std::size_t leaving, bool bland) const {
    const Eigen::VectorXd g = A_ * u;
    const Eigen::VectorXd v = A_ * x_;
    const double unorm = u.norm();
    Step best;
    double best_g = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (in_basis_[r]) continue;
      const auto ri = static_cast<Eigen::Index>(r);
      const double gr = g[ri];
      if (std::abs(gr) <= 1e-11 * unorm * row_norm_[ri]) continue;
      const double bound = gr > 0 ? 1.0 : -1.0;
      const double t = std::max(0.0, (bound - v[ri]) / gr);
      bool take = false;
      if (!best.blocked || t < best.t - 1e-12) {
        take = true;
      } else if (t <= best.t + 1e-12) {
        take = bland ? r < best.row : std::abs(gr) / row_norm_[ri] > best_g;
      }
      if (take) {
        best = {true, false, t, r, gr > 0 ? 1 : -1};
        best_g = std::abs(gr) / row_norm_[ri];
      }
    }
    // A basic row released from bound s reaches -s after t = 2 / |a.u|.
    if (!basis_[leaving].artificial) {
      const auto r = basis_[leaving].index;
      const double gr = std::abs(A_.row(static_cast<Eigen::Index>(r)).dot(u));
      if (gr > 0.0) {
        const double t = 2.0 / gr;
        if (!best.blocked || t < best.t - 1e-12) best = {true, true, t, r, -basis_[leaving].sign};
      }
    }
    return best;
  }

  void refactor() {
    const auto d = static_cast<Eigen::Index>(d_);
    Eigen::MatrixXd B(d, d);
    for (std::size_t k = 0; k < d_; ++k) {
      if (basis_[k].artificial) {
        B.row(static_cast<Eigen::Index>(k)) = Eigen::RowVectorXd::Unit(d, static_cast<Eigen::Index>(basis_[k].index));
      } else {
        B.row(static_cast<Eigen::Index>(k)) = A_.row(static_cast<Eigen::Index>(basis_[k].index));
      }
    }
    Binv_ = B.partialPivLu().inverse();
    x_ = Binv_ * rhs();
  }

  Eigen::VectorXd rhs() const {
    Eigen::VectorXd b(static_cast<Eigen::Index>(d_));
    for (std::size_t k = 0; k < d_; ++k) {
      b[static_cast<Eigen::Index>(k)] = basis_[k].artificial ? 0.0 : static_cast<double>(basis_[k].sign);
    }
    return b;
  }

  Result& finish(Result& res, bool recompute = true) {
    if (recompute && d_ > 0) refactor();
    res.x = x_;
    res.value = c_.dot(x_);
    res.basic_rows.clear();
    res.basic_signs.clear();
    for (const auto& s : basis_) {
      if (!s.artificial) {
        res.basic_rows.push_back(s.index);
        res.basic_signs.push_back(s.sign);
      }
    }
    return res;
  }

  std::size_t d_;
  std::size_t m_;
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> A_;
  Eigen::VectorXd c_;
  std::size_t max_pivots_;
  double tol_dual_ = 0.0;
  Eigen::VectorXd row_norm_;
  std::vector<Slot> basis_;
  std::vector<bool> in_basis_;
  std::vector<bool> stuck_;
  Eigen::MatrixXd Binv_;
  Eigen::VectorXd x_;
};

}  // namespace detail

/// Solves the interval-constrained LP over an explicit row list.
inline LpSolution solve_dense(const std::vector<ConstraintRow>& rows, const Eigen::VectorXd& objective,
                              const SolverConfig& cfg = {}) {
  cfg.validate();
  if (rows.size() > cfg.max_rows) {
    throw BudgetExceeded("dense LP row count", rows.size(), cfg.max_rows);
  }
  const auto d = static_cast<std::size_t>(objective.size());
  std::vector<double> flat;
  flat.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (static_cast<std::size_t>(r.coeffs.size()) != d) throw ShapeMismatch("row length differs from objective length");
    flat.insert(flat.end(), r.coeffs.data(), r.coeffs.data() + d);
  }
  detail::IntervalSimplex simplex(flat, rows.size(), objective, cfg.tol_opt, cfg.max_pivots);
  const auto res = simplex.solve();
  if (res.status == detail::IntervalSimplex::Status::unbounded) {
    throw Unbounded("objective is unbounded over the given rows");
  }
  LpSolution sol;
  sol.value = res.value;
  sol.primal = res.x;
  sol.status = res.status == detail::IntervalSimplex::Status::optimal ? SolveStatus::optimal
                                                                       : SolveStatus::iteration_limit;
  for (std::size_t i = 0; i < res.basic_rows.size(); ++i) {
    sol.active_rows.push_back({rows[res.basic_rows[i]].selector, res.basic_signs[i]});
  }
  double mx = 0.0;
  for (const auto& r : rows) mx = std::max(mx, std::abs(r.coeffs.dot(res.x)));
  sol.max_row_value = mx;
  sol.telemetry.rounds = 1;
  sol.telemetry.pivots = res.pivots;
  sol.telemetry.rows_generated = rows.size();
  sol.telemetry.rows_total = rows.size();
  sol.telemetry.value_history = {res.value};
  return sol;
}

/// Materialises the full row universe and solves it densely.
inline LpSolution solve_full(const LpProblem& p, const SolverConfig& cfg = {}) {
  const auto total = p.rows_total();
  if (total > cfg.max_rows) throw BudgetExceeded("full row universe", total, cfg.max_rows);
  std::vector<ConstraintRow> rows;
  rows.reserve(static_cast<std::size_t>(total));
  auto cursor = enumerate_rows(p);
  while (auto r = cursor.next()) rows.push_back(std::move(*r));
  return solve_dense(rows, p.objective(), cfg);
}

/// Cutting-plane solve: restricted LP over a growing row set, with
/// separation at each restricted optimum until no row of the full universe
/// is violated by more than tol_feas.
inline LpSolution solve_lazy(const LpProblem& p, const SolverConfig& cfg = {}) {
  const auto d = p.num_vars();
  cfg.validate(d);

  LpSolution sol;
  auto& tel = sol.telemetry;
  tel.rows_total = p.rows_total();
  tel.separation = cfg.separation;

  std::vector<Selector> selectors;
  std::set<Selector> present;
  std::vector<double> flat;
  auto add_row = [&](const Selector& s) {
    if (!present.insert(s).second) return false;
    const auto row = p.row(s);
    selectors.push_back(s);
    flat.insert(flat.end(), row.coeffs.data(), row.coeffs.data() + d);
    return true;
  };
  for (const auto& s : p.seed_selectors()) add_row(s);

  const SeparationOptions sep_opt{cfg.separation_budget, cfg.threads};
  Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  double value = 0.0;
  bool have_solution = false;

  auto fill_solution = [&](const detail::IntervalSimplex::Result& res) {
    sol.value = res.value;
    sol.primal = res.x;
    sol.active_rows.clear();
    for (std::size_t i = 0; i < res.basic_rows.size(); ++i) {
      sol.active_rows.push_back({selectors[res.basic_rows[i]], res.basic_signs[i]});
    }
  };

  for (std::size_t round = 0; round < cfg.max_iterations; ++round) {
    ++tel.rounds;
    detail::IntervalSimplex simplex(flat, selectors.size(), p.objective(), cfg.tol_opt, cfg.max_pivots);
    const auto res = simplex.solve();
    tel.pivots += res.pivots;

    if (res.status == detail::IntervalSimplex::Status::iteration_limit) {
      sol.status = SolveStatus::iteration_limit;
      sol.message = "pivot limit reached in restricted solve";
      tel.rows_generated = selectors.size();
      return sol;
    }

    std::vector<SeparationCandidate> cands;
    try {
      if (res.status == detail::IntervalSimplex::Status::unbounded) {
        // Pull rows that cut the ray.
        ++tel.separation_calls;
        const double tiny = 1e-9 * res.ray.norm();
        cands = separate_top(p, res.ray, cfg.rows_per_round, tiny, sep_opt);
        std::size_t added = 0;
        for (const auto& c : cands) added += add_row(c.selector) ? 1 : 0;
        tel.rows_added += added;
        if (added == 0) throw Unbounded("row universe does not bound the objective");
        if (selectors.size() > cfg.max_rows) {
          sol.status = SolveStatus::budget_exceeded;
          sol.message = "restricted row budget exceeded";
          tel.rows_generated = selectors.size();
          return sol;
        }
        continue;
      }

      fill_solution(res);
      have_solution = true;
      x = res.x;
      value = res.value;
      tel.value_history.push_back(value);

      if (cfg.separation == SeparationMode::heuristic_then_exact) {
        ++tel.separation_calls;
        const auto h = separate_heuristic(p, x, cfg.heuristic_starts, cfg.seed + round);
        if (h.value > 1.0 + cfg.tol_feas && add_row(h.row.selector)) {
          ++tel.heuristic_hits;
          ++tel.rows_added;
          continue;
        }
      }
      ++tel.separation_calls;
      cands = separate_top(p, x, cfg.rows_per_round, 1.0 + cfg.tol_feas, sep_opt);
      std::size_t added = 0;
      for (const auto& c : cands) added += add_row(c.selector) ? 1 : 0;
      tel.rows_added += added;
      if (added == 0) {
        ++tel.separation_calls;
        const auto exact = separate_exact(p, x, sep_opt);
        sol.max_row_value = exact.value;
        sol.status = SolveStatus::optimal;
        tel.rows_generated = selectors.size();
        return sol;
      }
      if (selectors.size() > cfg.max_rows) {
        sol.status = SolveStatus::budget_exceeded;
        sol.message = "restricted row budget exceeded";
        tel.rows_generated = selectors.size();
        return sol;
      }
    } catch (const BudgetExceeded& e) {
      sol.status = SolveStatus::budget_exceeded;
      sol.message = e.what();
      tel.rows_generated = selectors.size();
      if (!have_solution) sol.value = std::numeric_limits<double>::infinity();
      return sol;
    }
  }
  sol.status = SolveStatus::iteration_limit;
  sol.message = "cutting-plane round limit reached";
  tel.rows_generated = selectors.size();
  return sol;
}

}  // namespace projnorm
