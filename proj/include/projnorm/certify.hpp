#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "projnorm/covering.hpp"
#include "projnorm/errors.hpp"
#include "projnorm/lp_model.hpp"
#include "projnorm/lp_solver.hpp"
#include "projnorm/tensor.hpp"

namespace projnorm {

/// Which net to put on each factor sphere. `automatic` uses the circle net
/// for 2-dimensional real spheres and the grid net otherwise.
enum class CoveringKind { grid, circle, automatic };

inline const char* to_string(CoveringKind k) {
  switch (k) {
    case CoveringKind::grid: return "grid";
    case CoveringKind::circle: return "circle";
    case CoveringKind::automatic: return "auto";
  }
  return "unknown";
}

struct EstimateOptions {
  /// One m for every factor, or one per factor.
  std::vector<int> m{4};
  CoveringKind covering = CoveringKind::grid;
  GuaranteeMode guarantee = GuaranteeMode::paper;
  SolverConfig solver;
  std::uint64_t grid_budget = default_grid_budget;
};

/// Builds coverings once per (dim, m, kind) and shares them across factors.
class CoveringCache {
 public:
  CoveringPtr get(std::size_t dim, int m, CoveringKind kind, std::uint64_t grid_budget) {
    const CoveringKind k = kind == CoveringKind::automatic ? (dim == 2 ? CoveringKind::circle : CoveringKind::grid)
                                                           : kind;
    if (k == CoveringKind::circle && dim != 2) {
      throw std::invalid_argument("circle coverings exist only for 2-dimensional real spheres (got " +
                                  std::to_string(dim) + ")");
    }
    const auto key = std::tuple{dim, m, k};
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    CoveringPtr c = k == CoveringKind::circle ? std::make_shared<const Covering>(circle_covering(m))
                                              : std::make_shared<const Covering>(grid_covering(dim, m, grid_budget));
    cache_.emplace(key, c);
    return c;
  }

 private:
  std::map<std::tuple<std::size_t, int, CoveringKind>, CoveringPtr> cache_;
};

inline std::vector<int> per_factor_m(const std::vector<int>& m, std::size_t k) {
  if (m.size() == 1) return std::vector<int>(k, m.front());
  if (m.size() != k) throw ShapeMismatch("need one m value or one per factor");
  for (int v : m) {
    if (v < 2) throw std::invalid_argument("m must be >= 2");
  }
  return m;
}

inline std::vector<CoveringPtr> make_coverings(const std::vector<std::size_t>& sphere_dims,
                                               const std::vector<int>& m, CoveringKind kind,
                                               std::uint64_t grid_budget, CoveringCache* cache = nullptr) {
  CoveringCache local;
  auto& cc = cache ? *cache : local;
  const auto ms = per_factor_m(m, sphere_dims.size());
  std::vector<CoveringPtr> out;
  for (std::size_t j = 0; j < sphere_dims.size(); ++j) {
    if (ms[j] < 2) throw std::invalid_argument("m must be >= 2");
    out.push_back(cc.get(sphere_dims[j], ms[j], kind, grid_budget));
  }
  return out;
}

/// Certified two-sided bracket lower <= pi(rho) <= upper.
struct NormEstimate {
  double value = 0.0;  ///< LP value V
  double gamma = 1.0;  ///< prod of per-factor guarantees
  double lower = 0.0;
  double upper = 0.0;
  std::vector<int> m;
  GuaranteeMode guarantee = GuaranteeMode::paper;
  bool certified = false;
  Field field = Field::real;
  std::vector<CoveringPtr> coverings;
  LpSolution solution;
};

/// gamma = prod_j gamma1_j over the factor coverings.
inline double bracket_gamma(const std::vector<CoveringPtr>& coverings, GuaranteeMode mode) {
  double g = 1.0;
  for (const auto& c : coverings) g *= c->guarantee(mode).lower;
  return g;
}

namespace detail {

inline NormEstimate finish_estimate(LpProblem problem, const EstimateOptions& opt, Field field) {
  NormEstimate est;
  est.field = field;
  est.guarantee = opt.guarantee;
  est.coverings = problem.coverings();
  for (const auto& c : est.coverings) est.m.push_back(c->m());
  est.gamma = bracket_gamma(est.coverings, opt.guarantee);
  est.solution = solve_lazy(problem, opt.solver);
  est.value = est.solution.value;
  est.certified = est.solution.status == SolveStatus::optimal;
  est.upper = est.value;
  // lambda* / max_row is feasible for every row, so pi >= V gamma / max_row.
  const double slack = est.certified ? std::max(1.0, est.solution.max_row_value) : 1.0;
  est.lower = est.value * est.gamma / slack;
  return est;
}

}  // namespace detail

/// Projective norm bracket of a real tensor over prod of l2^{n_j} (real field).
inline NormEstimate estimate_pi_norm(const RealTensor& rho, const EstimateOptions& opt = {},
                                     CoveringCache* cache = nullptr) {
  auto cov = make_coverings(rho.dims(), opt.m, opt.covering, opt.grid_budget, cache);
  return detail::finish_estimate(build_real(rho, std::move(cov)), opt, Field::real);
}

/// Projective norm bracket of a complex tensor, through the realified LP.
inline NormEstimate estimate_pi_norm(const ComplexTensor& rho, const EstimateOptions& opt = {},
                                     CoveringCache* cache = nullptr) {
  std::vector<std::size_t> sphere(rho.dims());
  for (auto& d : sphere) d *= 2;
  auto cov = make_coverings(sphere, opt.m, opt.covering, opt.grid_budget, cache);
  return detail::finish_estimate(build_complex(rho, std::move(cov)), opt, Field::complex);
}

struct WitnessBound {
  double pairing = 0.0;    ///< <rho, lambda*>
  double eps_upper = 0.0;  ///< certified upper bound on the injective norm of lambda*
  double bound = 0.0;      ///< pairing / eps_upper <= pi(rho)
};

/// Certified lower bound on pi(rho) from the LP maximiser lambda*.
///
/// eps(lambda*) <= min(|lambda*|_F, max_s |row_s . lambda*| / gamma); the
/// first term is Cauchy-Schwarz on the multilinear form, the second the
/// embedding sandwich applied in every factor.
inline WitnessBound extract_witness_bound(const LpProblem& problem, const LpSolution& solution,
                                          GuaranteeMode mode, const SeparationOptions& sep = {}) {
  if (solution.status != SolveStatus::optimal) {
    throw std::invalid_argument("witness extraction needs an optimal LP solution");
  }
  const auto& x = solution.primal;
  WitnessBound w;
  w.pairing = problem.objective().dot(x);
  double frob = x.norm();
  const double gamma = bracket_gamma(problem.coverings(), mode);
  const double max_row = separate_exact(problem, x, sep).value;
  w.eps_upper = std::min(frob, max_row / gamma);
  w.bound = w.eps_upper > 0.0 ? w.pairing / w.eps_upper : 0.0;
  return w;
}

enum class VerdictKind { entangled, not_detected, invalid_state };

inline const char* to_string(VerdictKind v) {
  switch (v) {
    case VerdictKind::entangled: return "entangled";
    case VerdictKind::not_detected: return "not_detected";
    case VerdictKind::invalid_state: return "invalid_state";
  }
  return "unknown";
}

/// Field the certifier works over. `automatic` picks real when every matrix
/// entry is real and complex otherwise.
enum class FieldChoice { automatic, real, complex };

inline const char* to_string(FieldChoice f) {
  switch (f) {
    case FieldChoice::automatic: return "auto";
    case FieldChoice::real: return "real";
    case FieldChoice::complex: return "complex";
  }
  return "unknown";
}

struct CertifyOptions {
  std::vector<int> m_schedule{2, 4, 8, 16};
  CoveringKind covering = CoveringKind::automatic;
  GuaranteeMode guarantee = GuaranteeMode::tight;
  FieldChoice field = FieldChoice::automatic;
  SolverConfig solver;
  std::uint64_t grid_budget = default_grid_budget;
};

struct Verdict {
  VerdictKind kind = VerdictKind::not_detected;
  double pi_lower = 1.0;
  double pi_upper = std::numeric_limits<double>::infinity();
  std::optional<WitnessBound> witness;
  std::vector<int> m_trail;
  Field field = Field::real;
  bool budget_exceeded = false;
  std::string message;
  std::vector<NormEstimate> runs;
};

/// Separability test via pi(rho) <= 1. Reports entanglement when a certified
/// lower bound exceeds 1; otherwise reports the tightest bracket found.
inline Verdict certify_state(const DensityMatrix& rho, const CertifyOptions& opt = {}) {
  Verdict v;
  if (opt.m_schedule.empty()) throw std::invalid_argument("m schedule must not be empty");
  for (std::size_t i = 0; i < opt.m_schedule.size(); ++i) {
    if (opt.m_schedule[i] < 2) throw std::invalid_argument("m must be >= 2");
    if (i > 0 && opt.m_schedule[i] <= opt.m_schedule[i - 1]) {
      throw std::invalid_argument("m schedule must be increasing");
    }
  }
  const auto flat = state_to_tensor(rho);
  bool use_real = opt.field == FieldChoice::real || (opt.field == FieldChoice::automatic && rho.is_real());
  if (opt.field == FieldChoice::real && !rho.is_real()) {
    throw InvalidField("real-field certification needs a real density matrix");
  }
  v.field = use_real ? Field::real : Field::complex;
  std::optional<RealTensor> real_flat;
  if (use_real) real_flat = real_part(flat);

  CoveringCache cache;
  for (int m : opt.m_schedule) {
    EstimateOptions eo;
    eo.m = {m};
    eo.covering = opt.covering;
    eo.guarantee = opt.guarantee;
    eo.solver = opt.solver;
    eo.grid_budget = opt.grid_budget;
    v.m_trail.push_back(m);
    NormEstimate est;
    try {
      est = use_real ? estimate_pi_norm(*real_flat, eo, &cache) : estimate_pi_norm(flat, eo, &cache);
    } catch (const BudgetExceeded& e) {
      v.budget_exceeded = true;
      v.message = e.what();
      break;
    }
    if (!est.certified) {
      v.budget_exceeded = true;
      v.message = est.solution.message;
      v.runs.push_back(std::move(est));
      break;
    }
    // Tr(rho) = 1 and the trace functional has injective norm 1, so pi >= 1.
    v.pi_lower = std::max({v.pi_lower, est.lower, 1.0});
    v.pi_upper = std::min(v.pi_upper, est.upper);
    const auto problem = use_real ? build_real(*real_flat, est.coverings) : build_complex(flat, est.coverings);
    v.witness = extract_witness_bound(problem, est.solution, opt.guarantee,
                                      {opt.solver.separation_budget, opt.solver.threads});
    v.pi_lower = std::max(v.pi_lower, v.witness->bound);
    v.runs.push_back(std::move(est));
    if (v.pi_lower > 1.0) {
      v.kind = VerdictKind::entangled;
      return v;
    }
  }
  v.kind = VerdictKind::not_detected;
  return v;
}

/// As above, but reports malformed states as an invalid_state verdict.
inline Verdict certify_state(std::vector<std::size_t> party_dims, Eigen::MatrixXcd entries,
                             const CertifyOptions& opt = {}) {
  std::optional<DensityMatrix> rho;
  try {
    rho.emplace(std::move(party_dims), std::move(entries));
  } catch (const InvalidState& e) {
    Verdict v;
    v.kind = VerdictKind::invalid_state;
    v.message = e.what();
    return v;
  }
  return certify_state(*rho, opt);
}

}  // namespace projnorm
