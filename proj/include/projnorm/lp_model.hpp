#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "projnorm/covering.hpp"
#include "projnorm/errors.hpp"
#include "projnorm/tensor.hpp"

namespace projnorm {

using CoveringPtr = std::shared_ptr<const Covering>;
/// One covering direction index per factor.
using Selector = std::vector<std::size_t>;

struct ConstraintRow {
  Selector selector;
  Eigen::VectorXd coeffs;
};

inline constexpr std::uint64_t default_separation_budget = 1'000'000'000;

/// The LP  max c.x  s.t.  |row_s . x| <= 1  for every selector s in the
/// product of the factor coverings.
///
/// Real case: x is the tensor lambda itself and row_s is the flattened outer
/// product of the selected directions. Complex case: x holds the free
/// variables (r, q) and every coordinate of the realified tensor is one free
/// variable times a sign (`Tie`); rows are the outer products folded through
/// that map.
class LpProblem {
 public:
  struct Tie {
    std::uint32_t var;
    std::int32_t sign;
  };

  LpProblem(Field field, std::vector<std::size_t> tensor_dims, std::vector<CoveringPtr> coverings,
            Eigen::VectorXd objective, std::vector<Tie> ties)
      : field_(field),
        tensor_dims_(std::move(tensor_dims)),
        coverings_(std::move(coverings)),
        objective_(std::move(objective)),
        ties_(std::move(ties)) {
    for (const auto& c : coverings_) full_dims_.push_back(c->dim());
    full_shape_ = Shape(full_dims_, Field::real);
  }

  Field field() const noexcept { return field_; }
  std::size_t order() const noexcept { return coverings_.size(); }
  std::size_t num_vars() const noexcept { return static_cast<std::size_t>(objective_.size()); }
  const Eigen::VectorXd& objective() const noexcept { return objective_; }
  const std::vector<CoveringPtr>& coverings() const noexcept { return coverings_; }
  const std::vector<std::size_t>& tensor_dims() const noexcept { return tensor_dims_; }
  /// Dimensions of the real tensor the rows act on (2 n_j in the complex case).
  const std::vector<std::size_t>& full_dims() const noexcept { return full_dims_; }
  const Shape& full_shape() const noexcept { return full_shape_; }
  const std::vector<Tie>& ties() const noexcept { return ties_; }

  std::vector<std::size_t> covering_sizes() const {
    std::vector<std::size_t> out;
    for (const auto& c : coverings_) out.push_back(c->size());
    return out;
  }

  /// prod N_j, saturating at UINT64_MAX.
  std::uint64_t rows_total() const {
    std::uint64_t r = 1;
    for (const auto& c : coverings_) {
      const std::uint64_t n = c->size();
      if (n != 0 && r > std::numeric_limits<std::uint64_t>::max() / n) {
        return std::numeric_limits<std::uint64_t>::max();
      }
      r *= n;
    }
    return r;
  }

  /// Realified (or, real case, identical) full tensor of a variable vector.
  std::vector<double> full_tensor(const Eigen::VectorXd& vars) const {
    if (static_cast<std::size_t>(vars.size()) != num_vars()) {
      throw ShapeMismatch("variable vector has wrong length");
    }
    std::vector<double> out(ties_.size());
    for (std::size_t i = 0; i < ties_.size(); ++i) out[i] = ties_[i].sign * vars[ties_[i].var];
    return out;
  }

  /// Transpose of full_tensor: accumulates full coordinates onto variables.
  Eigen::VectorXd fold(std::span<const double> full) const {
    if (full.size() != ties_.size()) throw ShapeMismatch("fold: wrong full tensor size");
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(num_vars()));
    for (std::size_t i = 0; i < ties_.size(); ++i) out[ties_[i].var] += ties_[i].sign * full[i];
    return out;
  }

  void check_selector(const Selector& s) const {
    if (s.size() != order()) throw ShapeMismatch("selector has wrong length");
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (s[j] >= coverings_[j]->size()) throw IndexOutOfRange("selector component out of range");
    }
  }

  /// Flattened outer product b^1_{s_1} (x) ... (x) b^k_{s_k}.
  std::vector<double> outer_product(const Selector& s) const {
    check_selector(s);
    std::vector<double> out{1.0};
    for (std::size_t j = 0; j < order(); ++j) {
      const auto b = coverings_[j]->direction(s[j]);
      std::vector<double> next(out.size() * b.size());
      for (std::size_t a = 0; a < out.size(); ++a) {
        for (std::size_t i = 0; i < b.size(); ++i) next[a * b.size() + i] = out[a] * b[i];
      }
      out = std::move(next);
    }
    return out;
  }

  ConstraintRow row(const Selector& s) const { return {s, fold(outer_product(s))}; }

  Selector selector_at(std::uint64_t linear) const {
    if (linear >= rows_total()) throw IndexOutOfRange("row index out of range");
    Selector s(order());
    for (std::size_t j = order(); j-- > 0;) {
      const auto n = coverings_[j]->size();
      s[j] = static_cast<std::size_t>(linear % n);
      linear /= n;
    }
    return s;
  }

  /// One row per variable: in each factor, the direction closest to the
  /// canonical axis of that variable's index (lowest direction index on ties).
  std::vector<Selector> seed_selectors() const {
    const Shape var_shape = field_ == Field::real ? Shape(tensor_dims_, Field::real)
                                                  : free_variable_shape(tensor_dims_);
    std::vector<std::vector<std::size_t>> nearest(order());
    for (std::size_t j = 0; j < order(); ++j) {
      const auto& c = *coverings_[j];
      nearest[j].resize(c.dim());
      for (std::size_t i = 0; i < c.dim(); ++i) {
        double best = -1.0;
        for (std::size_t s = 0; s < c.size(); ++s) {
          const double v = std::abs(c.direction(s)[i]);
          if (v > best) {
            best = v;
            nearest[j][i] = s;
          }
        }
      }
    }
    std::vector<Selector> seeds;
    for (std::size_t v = 0; v < var_shape.size(); ++v) {
      const auto idx = var_shape.unravel(v);
      Selector s(order());
      for (std::size_t j = 0; j < order(); ++j) s[j] = nearest[j][idx[j]];
      if (std::find(seeds.begin(), seeds.end(), s) == seeds.end()) seeds.push_back(std::move(s));
    }
    return seeds;
  }

 private:
  Field field_;
  std::vector<std::size_t> tensor_dims_;
  std::vector<CoveringPtr> coverings_;
  Eigen::VectorXd objective_;
  std::vector<Tie> ties_;
  std::vector<std::size_t> full_dims_;
  Shape full_shape_;
};

inline LpProblem build_real(const RealTensor& rho, std::vector<CoveringPtr> coverings) {
  if (coverings.size() != rho.order()) throw ShapeMismatch("need one covering per tensor factor");
  for (std::size_t j = 0; j < rho.order(); ++j) {
    if (!coverings[j] || coverings[j]->dim() != rho.dims()[j]) {
      throw ShapeMismatch("covering dimension does not match factor " + std::to_string(j));
    }
  }
  Eigen::VectorXd c(static_cast<Eigen::Index>(rho.size()));
  std::vector<LpProblem::Tie> ties(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    c[static_cast<Eigen::Index>(i)] = rho[i];
    ties[i] = {static_cast<std::uint32_t>(i), 1};
  }
  return LpProblem(Field::real, rho.dims(), std::move(coverings), std::move(c), std::move(ties));
}

/// Tying map of the complex LP: realified coordinate -> (free variable, sign).
inline std::vector<LpProblem::Tie> complex_ties(const std::vector<std::size_t>& complex_dims) {
  std::vector<std::size_t> rd(complex_dims);
  for (auto& d : rd) d *= 2;
  const Shape rs(rd, Field::real);
  std::vector<LpProblem::Tie> ties(rs.size());
  for (std::size_t flat = 0; flat < rs.size(); ++flat) {
    const auto full = rs.unravel(flat);
    const auto m = realified_index(complex_dims, full);
    ties[flat] = {static_cast<std::uint32_t>(free_variable_index(complex_dims, m.reduced, m.component)),
                  m.sign};
  }
  return ties;
}

inline LpProblem build_complex(const ComplexTensor& rho, std::vector<CoveringPtr> coverings) {
  if (coverings.size() != rho.order()) throw ShapeMismatch("need one covering per tensor factor");
  for (std::size_t j = 0; j < rho.order(); ++j) {
    if (!coverings[j] || coverings[j]->dim() != 2 * rho.dims()[j]) {
      throw ShapeMismatch("complex factor " + std::to_string(j) +
                          " needs a covering of the real sphere of dimension 2n");
    }
  }
  const auto obj = realify_objective(rho);
  Eigen::VectorXd c = Eigen::Map<const Eigen::VectorXd>(obj.data(), static_cast<Eigen::Index>(obj.size()));
  return LpProblem(Field::complex, rho.dims(), std::move(coverings), std::move(c),
                   complex_ties(rho.dims()));
}

inline LpProblem build_complex(const RealTensor&, std::vector<CoveringPtr>) {
  throw InvalidField("build_complex requires a complex tensor");
}

/// Streams rows [begin, end) of the row universe in lexicographic selector order.
class RowCursor {
 public:
  RowCursor(const LpProblem& p, std::uint64_t begin, std::uint64_t end)
      : problem_(&p), next_(begin), end_(end) {
    if (begin > end || end > p.rows_total()) throw IndexOutOfRange("row range out of bounds");
  }

  std::optional<ConstraintRow> next() {
    if (next_ >= end_) return std::nullopt;
    return problem_->row(problem_->selector_at(next_++));
  }

  std::uint64_t remaining() const noexcept { return end_ - next_; }

 private:
  const LpProblem* problem_;
  std::uint64_t next_;
  std::uint64_t end_;
};

inline RowCursor enumerate_rows(const LpProblem& p, std::uint64_t begin, std::uint64_t end) {
  return RowCursor(p, begin, end);
}
inline RowCursor enumerate_rows(const LpProblem& p) { return RowCursor(p, 0, p.rows_total()); }

// ---------------------------------------------------------------------------
// Separation
// ---------------------------------------------------------------------------

struct SeparationCandidate {
  double value = 0.0;  ///< |row_s . x|
  Selector selector;
};

struct SeparationResult {
  double value = 0.0;
  ConstraintRow row;
  std::uint64_t evaluations = 0;
};

namespace detail {

inline bool better(const SeparationCandidate& a, const SeparationCandidate& b) {
  return a.value > b.value || (a.value == b.value && a.selector < b.selector);
}

/// Spectral norm bound of a d x R row-major unfolding; an upper bound on the
/// injective norm of the tensor it flattens.
inline double unfolding_norm_bound(const double* data, std::size_t d, std::size_t R) {
  if (d == 1 || R == 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < d * R; ++i) s += data[i] * data[i];
    return std::sqrt(s);
  }
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> M(
      data, static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(R));
  const Eigen::MatrixXd gram = M * M.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double top = std::max(0.0, eig.eigenvalues()(static_cast<Eigen::Index>(d) - 1));
  // Eigenvalue error is bounded by a small multiple of eps * trace.
  const double err = 1e-13 * gram.trace();
  return std::sqrt(top + err);
}

/// Exact branch-and-bound over the product of cone trees.
///
/// Keeps the `count` best selectors (value descending, selector ascending on
/// ties) with value strictly above `threshold`. A subtree is skipped only when
/// a rigorous upper bound on every row value inside it is below the current
/// cut, so the result equals what full enumeration would return.
class BranchAndBound {
 public:
  BranchAndBound(const LpProblem& p, std::vector<double> full, std::size_t count, double threshold,
                 std::uint64_t budget, std::size_t threads)
      : p_(p),
        full_(std::move(full)),
        count_(std::max<std::size_t>(count, 1)),
        threshold_(threshold),
        budget_(budget),
        threads_(std::max<std::size_t>(threads, 1)) {
    const auto k = p_.order();
    dims_ = p_.full_dims();
    rest_.assign(k + 1, 1);
    for (std::size_t j = k; j-- > 0;) rest_[j] = rest_[j + 1] * dims_[j];
    cut_.store(threshold_);
  }

  std::vector<SeparationCandidate> run() {
    Workspace root = make_workspace();
    std::copy(full_.begin(), full_.end(), root.level[0].begin());
    pending_ = 0;
    if (p_.order() == 1 || threads_ == 1) {
      descend(root, 0);
    } else {
      run_parallel(root);
    }
    flush();
    return best_;
  }

  std::uint64_t evaluations() const noexcept { return evals_.load(); }

 private:
  struct Workspace {
    std::vector<std::vector<double>> level;  // level[j] holds the contracted tensor at depth j
    std::vector<double> norm;                // injective-norm bound of level[j]
    std::vector<std::vector<double>> scratch;
    Selector prefix;
  };

  Workspace make_workspace() const {
    Workspace w;
    const auto k = p_.order();
    w.level.resize(k + 1);
    w.scratch.resize(k + 1);
    for (std::size_t j = 0; j <= k; ++j) {
      w.level[j].assign(rest_[j], 0.0);
      w.scratch[j].assign(rest_[j], 0.0);
    }
    w.norm.assign(k + 1, 0.0);
    w.prefix.assign(k, 0);
    return w;
  }

  void charge(std::uint64_t n) {
    pending_ += n;
    if (pending_ >= 65536) flush();
  }

  void flush() {
    const auto total = evals_.fetch_add(pending_) + pending_;
    pending_ = 0;
    if (total > budget_) throw BudgetExceeded("exact separation", total, budget_);
  }

  /// out = L(b, .) for L at depth j.
  void contract(const std::vector<double>& L, std::size_t j, std::span<const double> b,
                std::vector<double>& out) {
    const std::size_t d = dims_[j], R = rest_[j + 1];
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(R), 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      const double bi = b[i];
      if (bi == 0.0) continue;
      const double* row = L.data() + i * R;
      for (std::size_t r = 0; r < R; ++r) out[r] += bi * row[r];
    }
    charge(d * R);
  }

  double norm_bound(const std::vector<double>& L, std::size_t j) {
    const std::size_t R = rest_[j];
    if (j + 1 >= p_.order()) {
      double s = 0.0;
      for (std::size_t r = 0; r < R; ++r) s += L[r] * L[r];
      charge(R);
      return std::sqrt(s) * (1.0 + 1e-12);
    }
    charge(dims_[j] * R);
    return unfolding_norm_bound(L.data(), dims_[j], rest_[j + 1]) * (1.0 + 1e-10);
  }

  double current_cut() const { return cut_.load(std::memory_order_relaxed); }

  void offer(double value, const Selector& s) {
    if (!(value > threshold_)) return;
    std::lock_guard lock(mutex_);
    SeparationCandidate cand{value, s};
    if (best_.size() == count_ && !better(cand, best_.back())) return;
    auto pos = std::upper_bound(best_.begin(), best_.end(), cand, better);
    best_.insert(pos, std::move(cand));
    if (best_.size() > count_) best_.pop_back();
    if (best_.size() == count_) cut_.store(best_.back().value);
  }

  void descend(Workspace& w, std::size_t j) {
    w.norm[j] = norm_bound(w.level[j], j);
    if (w.norm[j] < current_cut()) return;
    visit(w, j, 0);
  }

  /// Upper bound of the row values reachable below `node` at depth j.
  double node_bound(Workspace& w, std::size_t j, std::size_t node_id) {
    const auto& tree = p_.coverings()[j]->tree();
    const auto& node = tree.nodes()[node_id];
    const auto c = tree.center(node_id);
    if (j + 1 == p_.order()) {
      const auto& v = w.level[j];
      double vc = 0.0;
      for (std::size_t i = 0; i < dims_[j]; ++i) vc += v[i] * c[i];
      charge(dims_[j]);
      return cone_correlation_bound(std::abs(vc), w.norm[j], node);
    }
    contract(w.level[j], j, c, w.scratch[j + 1]);
    const double at_center = norm_bound(w.scratch[j + 1], j + 1);
    return (at_center + node.radius * w.norm[j]) * (1.0 + 1e-10);
  }

  void visit(Workspace& w, std::size_t j, std::size_t node_id) {
    const auto& cov = *p_.coverings()[j];
    const auto& tree = cov.tree();
    const auto& node = tree.nodes()[node_id];
    if (node.leaf()) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t s = tree.order()[t];
        const auto b = cov.direction(s);
        w.prefix[j] = s;
        if (j + 1 == p_.order()) {
          double val = 0.0;
          for (std::size_t i = 0; i < dims_[j]; ++i) val += w.level[j][i] * b[i];
          charge(dims_[j]);
          val = std::abs(val);
          if (val >= current_cut()) offer(val, w.prefix);
        } else {
          contract(w.level[j], j, b, w.level[j + 1]);
          descend(w, j + 1);
        }
      }
      return;
    }
    const std::size_t kids[2] = {static_cast<std::size_t>(node.left),
                                 static_cast<std::size_t>(node.right)};
    const double bounds[2] = {node_bound(w, j, kids[0]), node_bound(w, j, kids[1])};
    const int first = bounds[1] > bounds[0] ? 1 : 0;
    for (int c : {first, 1 - first}) {
      if (bounds[c] >= current_cut()) visit(w, j, kids[c]);
    }
  }

  void run_parallel(Workspace& root) {
    root.norm[0] = norm_bound(root.level[0], 0);
    const auto& tree = p_.coverings()[0]->tree();
    // Frontier of top-level subtrees handed out to workers.
    std::vector<std::size_t> frontier{0};
    while (frontier.size() < 8 * threads_) {
      std::vector<std::size_t> next;
      bool split = false;
      for (auto id : frontier) {
        const auto& n = tree.nodes()[id];
        if (n.leaf()) {
          next.push_back(id);
        } else {
          next.push_back(static_cast<std::size_t>(n.left));
          next.push_back(static_cast<std::size_t>(n.right));
          split = true;
        }
      }
      frontier = std::move(next);
      if (!split) break;
    }
    std::atomic<std::size_t> cursor{0};
    std::mutex err_mutex;
    std::exception_ptr error;
    auto worker = [&] {
      pending_ = 0;
      Workspace w = make_workspace();
      w.level[0] = root.level[0];
      w.norm[0] = root.norm[0];
      try {
        for (;;) {
          const auto i = cursor.fetch_add(1);
          if (i >= frontier.size()) break;
          if (node_bound(w, 0, frontier[i]) >= current_cut()) visit(w, 0, frontier[i]);
        }
        flush();
      } catch (...) {
        std::lock_guard lock(err_mutex);
        if (!error) error = std::current_exception();
        cursor.store(frontier.size());
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads_; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  const LpProblem& p_;
  std::vector<double> full_;
  std::size_t count_;
  double threshold_;
  std::uint64_t budget_;
  std::size_t threads_;
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> rest_;
  std::atomic<double> cut_{0.0};
  std::atomic<std::uint64_t> evals_{0};
  static inline thread_local std::uint64_t pending_ = 0;
  std::mutex mutex_;
  std::vector<SeparationCandidate> best_;
};

}  // namespace detail

struct SeparationOptions {
  std::uint64_t budget = default_separation_budget;
  std::size_t threads = 1;
};

/// Up to `count` rows with |row . x| > threshold, most violated first.
inline std::vector<SeparationCandidate> separate_top(const LpProblem& p, const Eigen::VectorXd& x,
                                                     std::size_t count, double threshold,
                                                     const SeparationOptions& opt = {},
                                                     std::uint64_t* evaluations = nullptr) {
  detail::BranchAndBound bnb(p, p.full_tensor(x), count, threshold, opt.budget, opt.threads);
  auto out = bnb.run();
  if (evaluations) *evaluations = bnb.evaluations();
  return out;
}

/// max_s |row_s . x| over the full row universe, never approximated.
inline SeparationResult separate_exact(const LpProblem& p, const Eigen::VectorXd& x,
                                       const SeparationOptions& opt = {}) {
  std::uint64_t evals = 0;
  auto top = separate_top(p, x, 1, -1.0, opt, &evals);
  const auto& best = top.front();
  return {best.value, p.row(best.selector), evals};
}

/// Value of row s at the realified tensor `full`.
inline double row_value_full(const LpProblem& p, std::span<const double> full, const Selector& s) {
  const auto outer = p.outer_product(s);
  double acc = 0.0;
  for (std::size_t i = 0; i < outer.size(); ++i) acc += outer[i] * full[i];
  return acc;
}

/// Alternating coordinate ascent over the factors from `starts` random
/// selectors; returns a lower bound on the exact separation value.
inline SeparationResult separate_heuristic(const LpProblem& p, const Eigen::VectorXd& x,
                                           std::size_t starts = 16, std::uint64_t seed = 0) {
  const auto full = p.full_tensor(x);
  const auto k = p.order();
  const auto& dims = p.full_dims();
  const auto& strides = p.full_shape().strides();
  std::mt19937_64 rng(seed);

  // Contract `full` with every factor's direction except factor j.
  auto partial = [&](const Selector& s, std::size_t j) {
    std::vector<double> v(dims[j], 0.0);
    std::vector<double> weight{1.0};
    for (std::size_t flat = 0; flat < full.size(); ++flat) {
      double w = full[flat];
      if (w == 0.0) continue;
      std::size_t rem = flat;
      std::size_t ij = 0;
      for (std::size_t l = 0; l < k; ++l) {
        const std::size_t il = rem / strides[l];
        rem %= strides[l];
        if (l == j) {
          ij = il;
        } else {
          w *= p.coverings()[l]->direction(s[l])[il];
        }
      }
      v[ij] += w;
    }
    return v;
  };

  SeparationCandidate best{-1.0, Selector(k, 0)};
  for (std::size_t start = 0; start < std::max<std::size_t>(starts, 1); ++start) {
    Selector s(k);
    for (std::size_t j = 0; j < k; ++j) s[j] = static_cast<std::size_t>(rng() % p.coverings()[j]->size());
    for (int sweep = 0; sweep < 100; ++sweep) {
      bool changed = false;
      for (std::size_t j = 0; j < k; ++j) {
        const auto v = partial(s, j);
        const auto pick = p.coverings()[j]->max_abs_correlation(v);
        const double cur = std::abs(row_value_full(p, full, s));
        if (pick.index != s[j] && pick.value > cur) {
          s[j] = pick.index;
          changed = true;
        }
      }
      if (!changed) break;
    }
    SeparationCandidate cand{std::abs(row_value_full(p, full, s)), s};
    if (detail::better(cand, best)) best = std::move(cand);
  }
  return {best.value, p.row(best.selector), 0};
}

}  // namespace projnorm
