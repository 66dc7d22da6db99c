#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "projnorm/errors.hpp"

namespace projnorm {

using Complex = std::complex<double>;

enum class Field { real, complex };

inline const char* to_string(Field f) { return f == Field::real ? "real" : "complex"; }

/// Factor dimensions (n_1, ..., n_k) plus the scalar field.
///
/// Coordinates are laid out row-major with the last index fastest. Indices
/// are 0-based in code.
class Shape {
 public:
  Shape() = default;

  Shape(std::vector<std::size_t> dims, Field field) : dims_(std::move(dims)), field_(field) {
    if (dims_.empty()) throw ShapeMismatch("shape must have at least one factor");
    for (auto d : dims_) {
      if (d == 0) throw ShapeMismatch("factor dimensions must be positive");
    }
    strides_.assign(dims_.size(), 1);
    for (std::size_t j = dims_.size() - 1; j-- > 0;) strides_[j] = strides_[j + 1] * dims_[j + 1];
    size_ = strides_[0] * dims_[0];
  }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  std::size_t dim(std::size_t j) const { return dims_.at(j); }
  std::size_t order() const noexcept { return dims_.size(); }
  Field field() const noexcept { return field_; }
  std::size_t size() const noexcept { return size_; }
  std::size_t max_dim() const { return *std::max_element(dims_.begin(), dims_.end()); }
  const std::vector<std::size_t>& strides() const noexcept { return strides_; }

  std::size_t flat_index(std::span<const std::size_t> index) const {
    if (index.size() != dims_.size()) throw ShapeMismatch("index has wrong number of components");
    std::size_t flat = 0;
    for (std::size_t j = 0; j < dims_.size(); ++j) {
      if (index[j] >= dims_[j]) throw IndexOutOfRange("tensor index out of range");
      flat += index[j] * strides_[j];
    }
    return flat;
  }

  std::vector<std::size_t> unravel(std::size_t flat) const {
    if (flat >= size_) throw IndexOutOfRange("flat index out of range");
    std::vector<std::size_t> index(dims_.size());
    for (std::size_t j = 0; j < dims_.size(); ++j) {
      index[j] = flat / strides_[j];
      flat %= strides_[j];
    }
    return index;
  }

  bool same_dims(const Shape& other) const noexcept { return dims_ == other.dims_; }

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.dims_ == b.dims_ && a.field_ == b.field_;
  }

 private:
  std::vector<std::size_t> dims_;
  std::vector<std::size_t> strides_;
  std::size_t size_ = 0;
  Field field_ = Field::real;
};

namespace detail {

template <class T>
inline constexpr bool is_complex_v = false;
template <class T>
inline constexpr bool is_complex_v<std::complex<T>> = true;

inline bool finite(double x) { return std::isfinite(x); }
inline bool finite(const Complex& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace detail

/// Dense immutable order-k tensor over the reals or the complex numbers.
template <class Scalar>
class Tensor {
  static_assert(std::is_same_v<Scalar, double> || std::is_same_v<Scalar, Complex>);

 public:
  using value_type = Scalar;
  static constexpr Field field_tag = detail::is_complex_v<Scalar> ? Field::complex : Field::real;

  Tensor(std::vector<std::size_t> dims, std::vector<Scalar> coords)
      : shape_(std::move(dims), field_tag), coords_(std::move(coords)) {
    if (coords_.size() != shape_.size()) {
      throw ShapeMismatch("coordinate count " + std::to_string(coords_.size()) +
                          " does not match shape size " + std::to_string(shape_.size()));
    }
    for (const auto& c : coords_) {
      if (!detail::finite(c)) throw ShapeMismatch("tensor coordinates must be finite");
    }
  }

  static Tensor zeros(std::vector<std::size_t> dims) {
    Shape s(dims, field_tag);
    return Tensor(std::move(dims), std::vector<Scalar>(s.size(), Scalar{}));
  }

  const Shape& shape() const noexcept { return shape_; }
  const std::vector<std::size_t>& dims() const noexcept { return shape_.dims(); }
  std::size_t order() const noexcept { return shape_.order(); }
  std::size_t size() const noexcept { return coords_.size(); }
  std::span<const Scalar> coords() const noexcept { return coords_; }

  const Scalar& operator[](std::size_t flat) const { return coords_[flat]; }
  const Scalar& at(std::span<const std::size_t> index) const {
    return coords_[shape_.flat_index(index)];
  }
  const Scalar& at(std::initializer_list<std::size_t> index) const {
    return at(std::span<const std::size_t>(index.begin(), index.size()));
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& c : coords_) s += std::norm(c);
    return std::sqrt(s);
  }

  Tensor scaled(double alpha) const {
    std::vector<Scalar> out(coords_);
    for (auto& c : out) c *= alpha;
    return Tensor(dims(), std::move(out));
  }

  /// Reorders the factors: factor j of the result is factor perm[j] of *this.
  Tensor permuted(std::span<const std::size_t> perm) const {
    const auto k = order();
    if (perm.size() != k) throw ShapeMismatch("permutation has wrong length");
    std::vector<bool> seen(k, false);
    std::vector<std::size_t> new_dims(k);
    for (std::size_t j = 0; j < k; ++j) {
      if (perm[j] >= k || seen[perm[j]]) throw ShapeMismatch("not a permutation");
      seen[perm[j]] = true;
      new_dims[j] = dims()[perm[j]];
    }
    Shape out_shape(new_dims, field_tag);
    std::vector<Scalar> out(size());
    std::vector<std::size_t> src(k);
    for (std::size_t flat = 0; flat < size(); ++flat) {
      auto idx = out_shape.unravel(flat);
      for (std::size_t j = 0; j < k; ++j) src[perm[j]] = idx[j];
      out[flat] = coords_[shape_.flat_index(src)];
    }
    return Tensor(std::move(new_dims), std::move(out));
  }

 private:
  Shape shape_;
  std::vector<Scalar> coords_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

/// Multipartite density matrix: party dimensions (d_1, ..., d_p) and the
/// (prod d_j) x (prod d_j) complex matrix. Construction validates the state.
class DensityMatrix {
 public:
  static constexpr double tol_herm = 1e-9;
  static constexpr double tol_trace = 1e-9;
  static constexpr double tol_psd = 1e-9;

  DensityMatrix(std::vector<std::size_t> party_dims, Eigen::MatrixXcd entries)
      : party_dims_(std::move(party_dims)), entries_(std::move(entries)) {
    if (party_dims_.empty()) throw InvalidState("state needs at least one party");
    std::size_t total = 1;
    for (auto d : party_dims_) {
      if (d == 0) throw InvalidState("party dimensions must be positive");
      total *= d;
    }
    if (entries_.rows() != entries_.cols()) throw InvalidState("density matrix must be square");
    if (static_cast<std::size_t>(entries_.rows()) != total) {
      throw InvalidState("matrix size " + std::to_string(entries_.rows()) +
                         " does not match product of party dimensions " + std::to_string(total));
    }
    if (!entries_.allFinite()) throw InvalidState("matrix entries must be finite");
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    const double herm_err = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (herm_err > tol_herm * scale) {
      throw InvalidState("matrix is not Hermitian (max deviation " + std::to_string(herm_err) + ")");
    }
    const Complex tr = entries_.trace();
    if (std::abs(tr - Complex(1.0, 0.0)) > tol_trace) {
      throw InvalidState("trace is " + std::to_string(tr.real()) + ", expected 1");
    }
    const Eigen::MatrixXcd herm = 0.5 * (entries_ + entries_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(herm, Eigen::EigenvaluesOnly);
    const double min_eig = eig.eigenvalues().minCoeff();
    if (min_eig < -tol_psd) {
      throw InvalidState("matrix is not positive semidefinite (min eigenvalue " +
                         std::to_string(min_eig) + ")");
    }
  }

  const std::vector<std::size_t>& party_dims() const noexcept { return party_dims_; }
  const Eigen::MatrixXcd& entries() const noexcept { return entries_; }
  std::size_t parties() const noexcept { return party_dims_.size(); }

  bool is_real(double tol = 0.0) const { return entries_.imag().cwiseAbs().maxCoeff() <= tol; }

 private:
  std::vector<std::size_t> party_dims_;
  Eigen::MatrixXcd entries_;
};

/// Flattens a p-party state into the order-2p tensor with factor pair
/// (2j, 2j+1) holding the row and column index of party j.
inline ComplexTensor state_to_tensor(const DensityMatrix& rho) {
  const auto& pd = rho.party_dims();
  const std::size_t p = pd.size();
  std::vector<std::size_t> dims;
  dims.reserve(2 * p);
  for (auto d : pd) {
    dims.push_back(d);
    dims.push_back(d);
  }
  Shape shape(dims, Field::complex);
  std::vector<Complex> coords(shape.size());
  for (std::size_t flat = 0; flat < shape.size(); ++flat) {
    const auto idx = shape.unravel(flat);
    std::size_t row = 0, col = 0;
    for (std::size_t j = 0; j < p; ++j) {
      row = row * pd[j] + idx[2 * j];
      col = col * pd[j] + idx[2 * j + 1];
    }
    coords[flat] = rho.entries()(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col));
  }
  return ComplexTensor(std::move(dims), std::move(coords));
}

/// Real part of a tensor whose imaginary part is (numerically) zero.
inline RealTensor real_part(const ComplexTensor& t, double tol = 0.0) {
  std::vector<double> out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i].imag()) > tol) throw InvalidField("tensor has a nonzero imaginary part");
    out[i] = t[i].real();
  }
  return RealTensor(t.dims(), std::move(out));
}

// ---------------------------------------------------------------------------
// Realification of C-multilinear forms.
//
// The real basis of C^n is (e_1, ..., e_n, i e_1, ..., i e_n). For a complex
// tensor lambda with dims (n_1..n_k) the realified tensor has dims (2n_j).
// At a full index, p counts the factors j < k whose index lies in the upper
// (imaginary-unit) half and the reduced index takes every component mod n_j;
// the coordinate is Re(i^p lambda) when the last index is low and Im(i^p lambda)
// when it is high. The free LP variables are the coordinates with every
// factor but the last low: layout (n_1, ..., n_{k-1}, 2 n_k), row-major.
// ---------------------------------------------------------------------------

enum class ComplexPart { re, im };

/// Where a realified coordinate comes from.
struct RealifiedIndexMap {
  std::vector<std::size_t> reduced;  ///< index into the complex tensor
  unsigned shift = 0;                ///< p, number of i-multiplications
  ComplexPart output = ComplexPart::re;  ///< Re(i^p z) or Im(i^p z)
  ComplexPart component = ComplexPart::re;  ///< which part of z it equals
  int sign = 1;
};

/// Component and sign of Re(i^p z) / Im(i^p z) in terms of Re z, Im z.
/// Re: (Re, -Im, -Re, Im); Im: (Im, Re, -Im, -Re) for p = 0..3.
inline std::pair<ComplexPart, int> shift_selector(ComplexPart output, unsigned p) {
  static constexpr ComplexPart re_comp[4] = {ComplexPart::re, ComplexPart::im, ComplexPart::re,
                                             ComplexPart::im};
  static constexpr int re_sign[4] = {1, -1, -1, 1};
  static constexpr ComplexPart im_comp[4] = {ComplexPart::im, ComplexPart::re, ComplexPart::im,
                                             ComplexPart::re};
  static constexpr int im_sign[4] = {1, 1, -1, -1};
  p %= 4;
  return output == ComplexPart::re ? std::pair{re_comp[p], re_sign[p]}
                                   : std::pair{im_comp[p], im_sign[p]};
}

/// Maps an index of the realified tensor (dims 2 n_j) back to the complex tensor.
inline RealifiedIndexMap realified_index(const std::vector<std::size_t>& complex_dims,
                                         std::span<const std::size_t> full_index) {
  const std::size_t k = complex_dims.size();
  if (full_index.size() != k) throw ShapeMismatch("realified index has wrong length");
  RealifiedIndexMap m;
  m.reduced.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto n = complex_dims[j];
    if (full_index[j] >= 2 * n) throw IndexOutOfRange("realified index out of range");
    const bool high = full_index[j] >= n;
    m.reduced[j] = high ? full_index[j] - n : full_index[j];
    if (j + 1 < k) {
      if (high) ++m.shift;
    } else {
      m.output = high ? ComplexPart::im : ComplexPart::re;
    }
  }
  std::tie(m.component, m.sign) = shift_selector(m.output, m.shift);
  return m;
}

/// Layout of the free variables of the complex LP.
inline Shape free_variable_shape(const std::vector<std::size_t>& complex_dims) {
  std::vector<std::size_t> dims(complex_dims);
  dims.back() *= 2;
  return Shape(std::move(dims), Field::real);
}

/// Index of the free variable holding Re (r) or Im (q) of lambda at `reduced`.
inline std::size_t free_variable_index(const std::vector<std::size_t>& complex_dims,
                                       std::span<const std::size_t> reduced, ComplexPart part) {
  const auto shape = free_variable_shape(complex_dims);
  std::vector<std::size_t> idx(reduced.begin(), reduced.end());
  if (part == ComplexPart::im) idx.back() += complex_dims.back();
  return shape.flat_index(idx);
}

inline RealTensor realify_tensor(const ComplexTensor& lambda) {
  const auto& cd = lambda.dims();
  std::vector<std::size_t> rd(cd);
  for (auto& d : rd) d *= 2;
  Shape rs(rd, Field::real);
  std::vector<double> out(rs.size());
  for (std::size_t flat = 0; flat < rs.size(); ++flat) {
    const auto full = rs.unravel(flat);
    const auto m = realified_index(cd, full);
    const Complex z = lambda.at(m.reduced);
    out[flat] = m.sign * (m.component == ComplexPart::re ? z.real() : z.imag());
  }
  return RealTensor(std::move(rd), std::move(out));
}

/// Real-field guard used by the real-only operations.
inline RealTensor realify_tensor(const RealTensor&) {
  throw InvalidField("realify_tensor requires a complex tensor");
}

/// Objective of the complex LP in free-variable layout: +Re(rho) on r, -Im(rho) on q.
inline std::vector<double> realify_objective(const ComplexTensor& rho) {
  const auto& cd = rho.dims();
  std::vector<double> c(2 * rho.size(), 0.0);
  for (std::size_t flat = 0; flat < rho.size(); ++flat) {
    const auto idx = rho.shape().unravel(flat);
    c[free_variable_index(cd, idx, ComplexPart::re)] = rho[flat].real();
    c[free_variable_index(cd, idx, ComplexPart::im)] = -rho[flat].imag();
  }
  return c;
}

inline std::vector<double> realify_objective(const RealTensor&) {
  throw InvalidField("realify_objective requires a complex tensor");
}

/// Complex tensor with coordinates r + i q read from a free-variable vector.
inline ComplexTensor complex_from_free_variables(const std::vector<std::size_t>& complex_dims,
                                                 std::span<const double> vars) {
  Shape cs(complex_dims, Field::complex);
  if (vars.size() != 2 * cs.size()) throw ShapeMismatch("free variable vector has wrong length");
  std::vector<Complex> coords(cs.size());
  for (std::size_t flat = 0; flat < cs.size(); ++flat) {
    const auto idx = cs.unravel(flat);
    coords[flat] = {vars[free_variable_index(complex_dims, idx, ComplexPart::re)],
                    vars[free_variable_index(complex_dims, idx, ComplexPart::im)]};
  }
  return ComplexTensor(complex_dims, std::move(coords));
}

/// Duality pairing sum_i rho_i lambda_i (bilinear, no conjugation).
template <class Scalar>
Scalar pairing(const Tensor<Scalar>& rho, const Tensor<Scalar>& lambda) {
  if (!rho.shape().same_dims(lambda.shape())) throw ShapeMismatch("pairing: shapes differ");
  Scalar s{};
  for (std::size_t i = 0; i < rho.size(); ++i) s += rho[i] * lambda[i];
  return s;
}

}  // namespace projnorm
