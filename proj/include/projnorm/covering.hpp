#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "projnorm/errors.hpp"

namespace projnorm {

enum class Construction { paper_grid, uniform_circle };
enum class GuaranteeMode { paper, tight };

inline const char* to_string(Construction c) {
  return c == Construction::paper_grid ? "paper_grid" : "uniform_circle";
}
inline const char* to_string(GuaranteeMode g) { return g == GuaranteeMode::paper ? "paper" : "tight"; }

/// Lower constant of the embedding sandwich gamma1 * |x| <= |I(x)|_inf <= |x|.
///
/// paper: 1 - delta. tight: 1 - delta^2 / 2, from <x,b> = 1 - |x-b|^2/2 on the sphere.
struct EmbeddingGuarantee {
  double lower;
  GuaranteeMode mode;

  static EmbeddingGuarantee for_radius(double delta, GuaranteeMode mode) {
    const double g = mode == GuaranteeMode::paper ? 1.0 - delta : 1.0 - 0.5 * delta * delta;
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("covering radius must lie in (0, 1)");
    return {g, mode};
  }
};

/// Binary cone tree over unit directions, used for exact branch-and-bound
/// maximisation of |<v, b>| and of multilinear forms over coverings.
///
/// Every node stores a unit center c and a chord radius r such that each
/// member b satisfies min(|b - c|, |b + c|) <= r.
class ConeTree {
 public:
  struct Node {
    std::size_t begin = 0, end = 0;  // range into order()
    std::int32_t left = -1, right = -1;
    double radius = 0.0;
    double cos_half_angle = 1.0;  // cos and sin of the angular radius 2 asin(r/2)
    double sin_half_angle = 0.0;
    bool leaf() const noexcept { return left < 0; }
  };

  static constexpr std::size_t leaf_size = 8;

  ConeTree() = default;

  ConeTree(std::span<const double> directions, std::size_t dim) : dim_(dim) {
    const std::size_t count = dim == 0 ? 0 : directions.size() / dim;
    order_.resize(count);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (count == 0) return;
    nodes_.reserve(2 * count / leaf_size + 2);
    build(directions, 0, count);
  }

  std::size_t dim() const noexcept { return dim_; }
  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  std::span<const double> center(std::size_t node) const {
    return {centers_.data() + node * dim_, dim_};
  }
  /// Direction indices in tree order; a node owns order()[begin, end).
  const std::vector<std::size_t>& order() const noexcept { return order_; }
  bool empty() const noexcept { return nodes_.empty(); }

 private:
  std::int32_t build(std::span<const double> dirs, std::size_t begin, std::size_t end) {
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({begin, end, -1, -1, 0.0, 1.0, 0.0});
    centers_.resize(nodes_.size() * dim_, 0.0);

    const auto n = static_cast<Eigen::Index>(dim_);
    auto member = [&](std::size_t t) {
      return Eigen::Map<const Eigen::VectorXd>(dirs.data() + order_[t] * dim_, n);
    };

    // Sign-invariant reference axis: top eigenvector of sum b b^T.
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t t = begin; t < end; ++t) second.noalias() += member(t) * member(t).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(second);
    const Eigen::VectorXd axis = eig.eigenvectors().col(n - 1);

    Eigen::VectorXd mean = Eigen::VectorXd::Zero(n);
    for (std::size_t t = begin; t < end; ++t) {
      const double s = member(t).dot(axis) >= 0.0 ? 1.0 : -1.0;
      mean += s * member(t);
    }
    Eigen::VectorXd c = mean.norm() > 0.0 ? Eigen::VectorXd(mean.normalized()) : axis;
    double radius = 0.0;
    for (std::size_t t = begin; t < end; ++t) {
      const double r = std::min((member(t) - c).norm(), (member(t) + c).norm());
      radius = std::max(radius, r);
    }
    std::copy(c.data(), c.data() + n, centers_.begin() + static_cast<std::ptrdiff_t>(id * dim_));
    {
      auto& nd = nodes_[static_cast<std::size_t>(id)];
      nd.radius = radius;
      const double alpha = 2.0 * std::asin(std::min(1.0, 0.5 * radius));
      nd.cos_half_angle = std::cos(alpha);
      nd.sin_half_angle = std::sin(alpha);
    }

    if (end - begin <= leaf_size) return id;

    // Split the sign-aligned members along their principal axis of spread.
    std::vector<Eigen::VectorXd> aligned;
    aligned.reserve(end - begin);
    Eigen::VectorXd amean = Eigen::VectorXd::Zero(n);
    for (std::size_t t = begin; t < end; ++t) {
      const double s = member(t).dot(c) >= 0.0 ? 1.0 : -1.0;
      aligned.emplace_back(s * member(t));
      amean += aligned.back();
    }
    amean /= static_cast<double>(end - begin);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
    for (const auto& a : aligned) cov.noalias() += (a - amean) * (a - amean).transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ceig(cov);
    const Eigen::VectorXd split_axis = ceig.eigenvectors().col(n - 1);

    std::vector<std::pair<double, std::size_t>> keyed;
    keyed.reserve(end - begin);
    for (std::size_t t = begin; t < end; ++t) {
      keyed.emplace_back(aligned[t - begin].dot(split_axis), order_[t]);
    }
    const std::size_t half = (end - begin) / 2;
    std::nth_element(keyed.begin(), keyed.begin() + static_cast<std::ptrdiff_t>(half), keyed.end());
    for (std::size_t t = begin; t < end; ++t) order_[t] = keyed[t - begin].second;

    const auto mid = begin + half;
    const auto l = build(dirs, begin, mid);
    const auto r = build(dirs, mid, end);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  std::size_t dim_ = 0;
  std::vector<Node> nodes_;
  std::vector<double> centers_;
  std::vector<std::size_t> order_;
};

/// Upper bound of max |<v, b>| over a cone whose members lie within angle
/// alpha of +-c, given |<v, c>|, |v| and (cos alpha, sin alpha).
inline double cone_correlation_bound(double abs_vc, double vnorm, double cos_a, double sin_a) {
  if (vnorm == 0.0) return 0.0;
  const double cos_phi = std::min(1.0, abs_vc / vnorm);
  const double slack = 1e-12 * vnorm;
  if (cos_phi >= cos_a) return vnorm + slack;
  const double sin_phi = std::sqrt(std::max(0.0, 1.0 - cos_phi * cos_phi));
  // cos(phi - alpha) for phi > alpha.
  return vnorm * (cos_phi * cos_a + sin_phi * sin_a) + slack;
}

inline double cone_correlation_bound(double abs_vc, double vnorm, const ConeTree::Node& node) {
  return cone_correlation_bound(abs_vc, vnorm, node.cos_half_angle, node.sin_half_angle);
}

/// Finite set of unit directions on S^{n-1}, one representative per antipodal
/// pair, certified to be a radius-(1/m) chord covering up to sign.
class Covering {
 public:
  std::size_t dim() const noexcept { return dim_; }
  int m() const noexcept { return m_; }
  /// Nominal covering radius delta = 1/m used in every guarantee.
  double radius() const noexcept { return 1.0 / m_; }
  /// Best proven chord covering radius of this construction (<= radius()).
  double certified_radius() const noexcept { return certified_radius_; }
  Construction construction() const noexcept { return construction_; }
  std::size_t size() const noexcept { return size_; }
  /// Size of the point set before normalisation and deduplication.
  std::uint64_t raw_points() const noexcept { return raw_points_; }

  std::span<const double> direction(std::size_t s) const {
    if (s >= size_) throw IndexOutOfRange("covering direction index out of range");
    return {dirs_.data() + s * dim_, dim_};
  }
  std::span<const double> data() const noexcept { return dirs_; }
  const ConeTree& tree() const noexcept { return tree_; }

  EmbeddingGuarantee guarantee(GuaranteeMode mode) const {
    return EmbeddingGuarantee::for_radius(radius(), mode);
  }

  struct Best {
    double value = 0.0;
    std::size_t index = 0;
  };

  /// Exact max_s |<v, b_s>|; ties go to the lowest direction index.
  Best max_abs_correlation(std::span<const double> v) const {
    if (v.size() != dim_) throw ShapeMismatch("correlation query has wrong dimension");
    double vnorm = 0.0;
    for (double x : v) vnorm += x * x;
    vnorm = std::sqrt(vnorm);
    Best best{-1.0, 0};
    if (size_ == 0) return {0.0, 0};
    search(0, v, vnorm, best);
    return best;
  }

  /// Builds the covering from raw unit directions; used by the constructions below.
  Covering(std::size_t dim, int m, Construction construction, double certified_radius,
           std::uint64_t raw_points, std::vector<double> dirs)
      : dim_(dim),
        m_(m),
        construction_(construction),
        certified_radius_(certified_radius),
        raw_points_(raw_points),
        size_(dim == 0 ? 0 : dirs.size() / dim),
        dirs_(std::move(dirs)),
        tree_(dirs_, dim) {}

 private:
  double dot(std::span<const double> v, std::size_t s) const {
    const double* b = dirs_.data() + s * dim_;
    double acc = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) acc += v[i] * b[i];
    return acc;
  }

  void search(std::size_t node_id, std::span<const double> v, double vnorm, Best& best) const {
    const auto& node = tree_.nodes()[node_id];
    if (node.leaf()) {
      for (std::size_t t = node.begin; t < node.end; ++t) {
        const std::size_t s = tree_.order()[t];
        const double val = std::abs(dot(v, s));
        if (val > best.value || (val == best.value && s < best.index)) best = {val, s};
      }
      return;
    }
    const std::size_t kids[2] = {static_cast<std::size_t>(node.left),
                                 static_cast<std::size_t>(node.right)};
    double bounds[2];
    for (int c = 0; c < 2; ++c) {
      const auto ctr = tree_.center(kids[c]);
      double vc = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) vc += v[i] * ctr[i];
      bounds[c] = cone_correlation_bound(std::abs(vc), vnorm, tree_.nodes()[kids[c]]);
    }
    const int first = bounds[1] > bounds[0] ? 1 : 0;
    for (int c : {first, 1 - first}) {
      if (bounds[c] >= best.value) search(kids[c], v, vnorm, best);
    }
  }

  std::size_t dim_;
  int m_;
  Construction construction_;
  double certified_radius_;
  std::uint64_t raw_points_;
  std::size_t size_;
  std::vector<double> dirs_;
  ConeTree tree_;
};

inline constexpr std::uint64_t default_grid_budget = 100'000'000;

namespace detail {

/// base^exp, saturating at UINT64_MAX.
inline std::uint64_t saturating_pow(std::uint64_t base, std::size_t exp) {
  std::uint64_t r = 1;
  for (std::size_t i = 0; i < exp; ++i) {
    if (base != 0 && r > std::numeric_limits<std::uint64_t>::max() / base) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    r *= base;
  }
  return r;
}

}  // namespace detail

/// Size (2nm+1)^n of the grid A = {h/(nm) : h in [-nm, nm]^n}, saturating.
inline std::uint64_t grid_cardinality(std::size_t n, int m) {
  return detail::saturating_pow(2 * static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(m) + 1, n);
}

/// Normalised grid covering: every nonzero a in A scaled to the sphere.
///
/// Normalised points coincide exactly when their integer vectors h are
/// positive multiples of each other, and are antipodal when negative
/// multiples, so the stored set is the primitive h (gcd 1) whose first nonzero
/// entry is positive, in lexicographic order of h.
inline Covering grid_covering(std::size_t n, int m, std::uint64_t budget = default_grid_budget) {
  if (n < 1) throw std::invalid_argument("grid_covering: dimension must be >= 1");
  if (m < 2) throw std::invalid_argument("grid_covering: m must be >= 2");
  const std::uint64_t total = grid_cardinality(n, m);
  if (total > budget) throw BudgetExceeded("grid covering enumeration", total, budget);

  const long long h_max = static_cast<long long>(n) * m;
  std::vector<long long> h(n, -h_max);
  std::vector<double> dirs;
  for (std::uint64_t count = 0; count < total; ++count) {
    std::size_t first = 0;
    while (first < n && h[first] == 0) ++first;
    if (first < n && h[first] > 0) {
      long long g = 0;
      for (auto x : h) g = std::gcd(g, x);
      if (g == 1) {
        double norm = 0.0;
        for (auto x : h) norm += static_cast<double>(x) * static_cast<double>(x);
        norm = std::sqrt(norm);
        for (auto x : h) dirs.push_back(static_cast<double>(x) / norm);
      }
    }
    for (std::size_t j = n; j-- > 0;) {
      if (h[j] < h_max) {
        ++h[j];
        break;
      }
      h[j] = -h_max;
    }
  }
  return Covering(n, m, Construction::paper_grid, 1.0 / m, total, std::move(dirs));
}

/// Number of equally spaced circle points needed for chord radius 1/m,
/// rounded up to an even count so antipodal reduction halves it exactly.
inline std::size_t circle_point_count(int m) {
  const double step = 4.0 * std::asin(1.0 / (2.0 * m));
  auto count = static_cast<std::size_t>(std::ceil(2.0 * std::numbers::pi / step));
  if (count % 2 == 1) ++count;
  return count;
}

/// M equally spaced unit vectors on S^1, antipodal-reduced to the M/2 with
/// angle in [0, pi). Exact chord covering radius 2 sin(pi / (2M)).
inline Covering circle_covering(int m) {
  if (m < 2) throw std::invalid_argument("circle_covering: m must be >= 2");
  const std::size_t count = circle_point_count(m);
  std::vector<double> dirs;
  dirs.reserve(count);
  for (std::size_t t = 0; t < count / 2; ++t) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(count);
    dirs.push_back(std::cos(theta));
    dirs.push_back(std::sin(theta));
  }
  const double chord = 2.0 * std::sin(std::numbers::pi / (2.0 * static_cast<double>(count)));
  return Covering(2, m, Construction::uniform_circle, chord, count, std::move(dirs));
}

/// I(x) = (<x, b>)_b over the stored directions.
inline std::vector<double> embed(std::span<const double> x, const Covering& c) {
  if (x.size() != c.dim()) throw ShapeMismatch("embed: vector dimension does not match covering");
  std::vector<double> out(c.size());
  const auto data = c.data();
  for (std::size_t s = 0; s < c.size(); ++s) {
    double acc = 0.0;
    for (std::size_t i = 0; i < c.dim(); ++i) acc += x[i] * data[s * c.dim() + i];
    out[s] = acc;
  }
  return out;
}

/// c_i(s) = <e_i, b_s>.
inline double coefficient(const Covering& c, std::size_t basis_index, std::size_t direction_index) {
  if (basis_index >= c.dim()) throw IndexOutOfRange("coefficient: basis index out of range");
  return c.direction(direction_index)[basis_index];
}

}  // namespace projnorm
