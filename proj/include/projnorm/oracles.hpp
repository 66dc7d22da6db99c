#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "projnorm/certify.hpp"
#include "projnorm/errors.hpp"
#include "projnorm/tensor.hpp"

// Independent ground truth for tests: the k = 2 projective norm is the sum of
// singular values, the injective norm is approached from below by alternating
// maximisation, and high-resolution brackets refine low-resolution ones.
namespace projnorm::oracles {

struct OracleReport {
  std::string method;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<std::pair<std::string, double>> parameters;

  double value() const { return lower; }
};

template <class Derived>
double nuclear_norm(const Eigen::MatrixBase<Derived>& m) {
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  return svd.singularValues().sum();
}

template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  Eigen::JacobiSVD<typename Derived::PlainObject> svd(m);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline Eigen::MatrixXd as_matrix(const RealTensor& t) {
  if (t.order() != 2) throw ShapeMismatch("matrix view needs an order-2 tensor");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.dims()[0]), static_cast<Eigen::Index>(t.dims()[1]));
  for (std::size_t i = 0; i < t.dims()[0]; ++i)
    for (std::size_t j = 0; j < t.dims()[1]; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at({i, j});
  return m;
}

inline Eigen::MatrixXcd as_matrix(const ComplexTensor& t) {
  if (t.order() != 2) throw ShapeMismatch("matrix view needs an order-2 tensor");
  Eigen::MatrixXcd m(static_cast<Eigen::Index>(t.dims()[0]), static_cast<Eigen::Index>(t.dims()[1]));
  for (std::size_t i = 0; i < t.dims()[0]; ++i)
    for (std::size_t j = 0; j < t.dims()[1]; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t.at({i, j});
  return m;
}

/// Sum of singular values of an order-2 tensor.
template <class Scalar>
double nuclear_norm(const Tensor<Scalar>& t) {
  return nuclear_norm(as_matrix(t));
}

namespace detail {

inline double conj_if(double x) { return x; }
inline Complex conj_if(const Complex& z) { return std::conj(z); }

inline void random_unit(std::vector<double>& v, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double n = 0.0;
  for (auto& x : v) {
    x = g(rng);
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= n;
}

inline void random_unit(std::vector<Complex>& v, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  double n = 0.0;
  for (auto& z : v) {
    z = {g(rng), g(rng)};
    n += std::norm(z);
  }
  n = std::sqrt(n);
  for (auto& z : v) z /= n;
}

/// Contracts every factor except `skip` with `vecs` (bilinearly).
template <class Scalar>
std::vector<Scalar> contract_except(const Tensor<Scalar>& t, const std::vector<std::vector<Scalar>>& vecs,
                                    std::size_t skip) {
  const auto& strides = t.shape().strides();
  const auto k = t.order();
  std::vector<Scalar> out(t.dims()[skip], Scalar{});
  for (std::size_t flat = 0; flat < t.size(); ++flat) {
    Scalar w = t[flat];
    if (w == Scalar{}) continue;
    std::size_t rem = flat, target = 0;
    for (std::size_t l = 0; l < k; ++l) {
      const std::size_t il = rem / strides[l];
      rem %= strides[l];
      if (l == skip) {
        target = il;
      } else {
        w *= vecs[l][il];
      }
    }
    out[target] += w;
  }
  return out;
}

}  // namespace detail

/// Alternating maximisation of |lambda(x_1, ..., x_k)| over unit vectors.
/// Every value it returns is attained, so it is a lower bound on the
/// injective norm; exact up to convergence for k = 2.
template <class Scalar>
OracleReport injective_norm_bruteforce(const Tensor<Scalar>& lambda, std::size_t restarts = 64,
                                       std::size_t iterations = 200, std::uint64_t seed = 0,
                                       double threshold = 1e-12) {
  if (lambda.size() > 4096) throw std::invalid_argument("brute-force injective norm limited to 4096 coordinates");
  const auto k = lambda.order();
  std::mt19937_64 rng(seed);
  double best = 0.0;
  for (std::size_t start = 0; start < std::max<std::size_t>(restarts, 1); ++start) {
    std::vector<std::vector<Scalar>> vecs(k);
    for (std::size_t j = 0; j < k; ++j) {
      vecs[j].resize(lambda.dims()[j]);
      detail::random_unit(vecs[j], rng);
    }
    double value = 0.0;
    for (std::size_t it = 0; it < iterations; ++it) {
      double prev = value;
      for (std::size_t j = 0; j < k; ++j) {
        auto v = detail::contract_except(lambda, vecs, j);
        double n = 0.0;
        for (const auto& x : v) n += std::norm(x);
        n = std::sqrt(n);
        if (n == 0.0) continue;
        for (std::size_t i = 0; i < v.size(); ++i) vecs[j][i] = detail::conj_if(v[i]) / n;
        value = n;
      }
      if (std::abs(value - prev) <= threshold) break;
    }
    best = std::max(best, value);
  }
  return {"alternating_maximization", best, std::numeric_limits<double>::infinity(),
          {{"restarts", static_cast<double>(restarts)}, {"iterations", static_cast<double>(iterations)}}};
}

/// Bracket of pi(rho) at a high covering resolution, tight guarantee mode.
template <class Scalar>
OracleReport reference_bracket(const Tensor<Scalar>& rho, int high_m, EstimateOptions opt = {}) {
  opt.m = {high_m};
  opt.guarantee = GuaranteeMode::tight;
  if (rho.frobenius_norm() == 0.0) {
    return {"reference_bracket", 0.0, 0.0, {{"m", static_cast<double>(high_m)}}};
  }
  const auto est = estimate_pi_norm(rho, opt);
  if (!est.certified) {
    throw BudgetExceeded("reference bracket did not certify", est.solution.telemetry.rows_generated,
                         opt.solver.max_rows);
  }
  return {"reference_bracket", est.lower, est.upper, {{"m", static_cast<double>(high_m)}}};
}

}  // namespace projnorm::oracles
