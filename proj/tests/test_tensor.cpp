#include <gtest/gtest.h>

#include <numeric>

#include "test_support.hpp"

using namespace projnorm;
using testing_support::random_complex;
using testing_support::random_real;

namespace {

const Complex I(0.0, 1.0);

TEST(Shape, RowMajorLastIndexFastest) {
  Shape s({2, 3, 4}, Field::real);
  EXPECT_EQ(s.size(), 24u);
  EXPECT_EQ(s.strides(), (std::vector<std::size_t>{12, 4, 1}));
  const std::vector<std::size_t> idx{1, 2, 3};
  EXPECT_EQ(s.flat_index(idx), 23u);
  EXPECT_EQ(s.unravel(23), idx);
}

TEST(Shape, RejectsEmptyAndZeroDims) {
  EXPECT_THROW(Shape({}, Field::real), ShapeMismatch);
  EXPECT_THROW(Shape({2, 0}, Field::real), ShapeMismatch);
}

TEST(Tensor, CoordinateCountMustMatch) {
  EXPECT_THROW(RealTensor({2, 2}, {1.0, 2.0, 3.0}), ShapeMismatch);
  EXPECT_THROW(RealTensor({1}, {std::nan("")}), ShapeMismatch);
  EXPECT_NO_THROW(RealTensor({1}, {3.0}));
}

TEST(Tensor, IndexOutOfRange) {
  RealTensor t({2, 2}, {1, 2, 3, 4});
  EXPECT_THROW(t.at({2, 0}), IndexOutOfRange);
  EXPECT_DOUBLE_EQ(t.at({1, 0}), 3.0);
}

TEST(Tensor, PermutationMovesFactors) {
  std::mt19937_64 rng(1);
  const auto t = random_real({2, 3, 4}, rng);
  const std::vector<std::size_t> perm{2, 0, 1};
  const auto p = t.permuted(perm);
  EXPECT_EQ(p.dims(), (std::vector<std::size_t>{4, 2, 3}));
  for (std::size_t a = 0; a < 2; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(p.at({c, a, b}), t.at({a, b, c}));
  const std::vector<std::size_t> bad{0, 0, 1};
  EXPECT_THROW(t.permuted(bad), ShapeMismatch);
}

TEST(DensityMatrix, AcceptsValidStates) {
  EXPECT_NO_THROW(DensityMatrix({2, 2}, testing_support::bell_real()));
  std::mt19937_64 rng(3);
  EXPECT_NO_THROW(DensityMatrix({2, 3}, testing_support::random_density(6, rng)));
}

TEST(DensityMatrix, RejectsMalformedStates) {
  Eigen::MatrixXcd nonsquare = Eigen::MatrixXcd::Zero(4, 3);
  EXPECT_THROW(DensityMatrix({2, 2}, nonsquare), InvalidState);

  EXPECT_THROW(DensityMatrix({2, 3}, testing_support::bell_real()), InvalidState);

  Eigen::MatrixXcd trace09 = testing_support::product00() * 0.9;
  EXPECT_THROW(DensityMatrix({2, 2}, trace09), InvalidState);

  Eigen::MatrixXcd nonherm = testing_support::bell_real();
  nonherm(0, 3) = 0.4;
  EXPECT_THROW(DensityMatrix({2, 2}, nonherm), InvalidState);

  // Hermitian with trace 1 but eigenvalues (1.5, -0.5).
  Eigen::MatrixXcd indefinite = Eigen::MatrixXcd::Zero(2, 2);
  indefinite(0, 0) = 0.5;
  indefinite(1, 1) = 0.5;
  indefinite(0, 1) = indefinite(1, 0) = 1.0;
  EXPECT_THROW(DensityMatrix({2}, indefinite), InvalidState);
}

TEST(StateToTensor, ProductBasisState) {
  const auto t = state_to_tensor(DensityMatrix({2, 2}, testing_support::product00()));
  EXPECT_EQ(t.dims(), (std::vector<std::size_t>{2, 2, 2, 2}));
  for (std::size_t f = 0; f < t.size(); ++f) EXPECT_EQ(t[f], Complex(f == 0 ? 1.0 : 0.0, 0.0));
}

TEST(StateToTensor, BellStateIsHalfDeltaDelta) {
  const auto t = state_to_tensor(DensityMatrix({2, 2}, testing_support::bell_real()));
  // Factor order (row_A, col_A, row_B, col_B): rho_{ij,i'j'} sits at (i, i', j, j').
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t ip = 0; ip < 2; ++ip)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t jp = 0; jp < 2; ++jp) {
          const double expect = (i == j && ip == jp) ? 0.5 : 0.0;
          EXPECT_EQ(t.at({i, ip, j, jp}), Complex(expect, 0.0));
        }
}

TEST(StateToTensor, PreservesHilbertSchmidtProduct) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXcd a = testing_support::random_density(6, rng);
    const Eigen::MatrixXcd b = testing_support::random_density(6, rng);
    const Complex hs = (a.adjoint() * b).trace();
    const auto ta = state_to_tensor(DensityMatrix({2, 3}, a));
    const auto tb = state_to_tensor(DensityMatrix({2, 3}, b));
    Complex flat{};
    for (std::size_t f = 0; f < ta.size(); ++f) flat += std::conj(ta[f]) * tb[f];
    EXPECT_NEAR(std::abs(flat - hs), 0.0, 1e-12);
  }
}

TEST(Realify, ShiftSelectorCycles) {
  const ComplexPart re = ComplexPart::re, im = ComplexPart::im;
  const std::pair<ComplexPart, int> re_cycle[4] = {{re, 1}, {im, -1}, {re, -1}, {im, 1}};
  const std::pair<ComplexPart, int> im_cycle[4] = {{im, 1}, {re, 1}, {im, -1}, {re, -1}};
  for (unsigned p = 0; p < 4; ++p) {
    EXPECT_EQ(shift_selector(re, p), re_cycle[p]);
    EXPECT_EQ(shift_selector(im, p), im_cycle[p]);
  }
}

TEST(Realify, OneByOneExamples) {
  const auto one = realify_tensor(ComplexTensor({1, 1}, {Complex(1.0, 0.0)}));
  EXPECT_EQ(std::vector<double>(one.coords().begin(), one.coords().end()), (std::vector<double>{1, 0, 0, 1}));
  const auto imag = realify_tensor(ComplexTensor({1, 1}, {I}));
  EXPECT_EQ(std::vector<double>(imag.coords().begin(), imag.coords().end()), (std::vector<double>{0, 1, -1, 0}));
}

TEST(Realify, RealTensorIsRejected) {
  EXPECT_THROW(realify_tensor(RealTensor({1}, {1.0})), InvalidField);
  EXPECT_THROW(realify_objective(RealTensor({1}, {1.0})), InvalidField);
}

TEST(Realify, GeneralRuleMatchesFactorwiseRecursion) {
  std::mt19937_64 rng(5);
  for (const auto& dims : std::vector<std::vector<std::size_t>>{{2, 2}, {1, 3, 2}, {2, 1, 2, 2}}) {
    const auto lambda = random_complex(dims, rng);
    const auto r = realify_tensor(lambda);
    for (std::size_t f = 0; f < r.size(); ++f) {
      const auto full = r.shape().unravel(f);
      EXPECT_EQ(r[f], testing_support::realified_by_recursion(lambda, full));
    }
  }
}

TEST(Realify, IsRealLinear) {
  std::mt19937_64 rng(6);
  const auto a = random_complex({2, 3}, rng);
  const auto b = random_complex({2, 3}, rng);
  std::vector<Complex> mix(a.size());
  for (std::size_t f = 0; f < a.size(); ++f) mix[f] = 1.5 * a[f] - 0.25 * b[f];
  const auto rm = realify_tensor(ComplexTensor({2, 3}, mix));
  const auto ra = realify_tensor(a);
  const auto rb = realify_tensor(b);
  for (std::size_t f = 0; f < rm.size(); ++f) EXPECT_NEAR(rm[f], 1.5 * ra[f] - 0.25 * rb[f], 1e-14);
}

TEST(Realify, CommutesWithPermutingLeadingFactors) {
  // Factors before the last enter symmetrically, so swapping two of them
  // commutes with realification.
  std::mt19937_64 rng(7);
  const auto lambda = random_complex({2, 3, 2}, rng);
  const std::vector<std::size_t> swap01{1, 0, 2};
  const auto lhs = realify_tensor(lambda.permuted(swap01));
  const auto rhs = realify_tensor(lambda).permuted(swap01);
  ASSERT_EQ(lhs.dims(), rhs.dims());
  for (std::size_t f = 0; f < lhs.size(); ++f) EXPECT_EQ(lhs[f], rhs[f]);
}

TEST(Realify, FreeVariablesRoundTrip) {
  std::mt19937_64 rng(8);
  const auto lambda = random_complex({2, 3}, rng);
  std::vector<double> vars(2 * lambda.size());
  for (std::size_t f = 0; f < lambda.size(); ++f) {
    const auto idx = lambda.shape().unravel(f);
    vars[free_variable_index(lambda.dims(), idx, ComplexPart::re)] = lambda[f].real();
    vars[free_variable_index(lambda.dims(), idx, ComplexPart::im)] = lambda[f].imag();
  }
  const auto back = complex_from_free_variables(lambda.dims(), vars);
  for (std::size_t f = 0; f < lambda.size(); ++f) EXPECT_EQ(back[f], lambda[f]);
}

TEST(RealifyObjective, Examples) {
  auto obj = realify_objective(ComplexTensor({1, 1}, {Complex(1.0, 0.0)}));
  EXPECT_EQ(obj, (std::vector<double>{1.0, 0.0}));
  obj = realify_objective(ComplexTensor({1, 1}, {I}));
  EXPECT_EQ(obj, (std::vector<double>{0.0, -1.0}));

  const double h = 1.0 / std::sqrt(2.0);
  obj = realify_objective(ComplexTensor({2, 2}, {h, h * I, 0.0, 0.0}));
  // Free layout (2, 4): row i holds (r_i0, r_i1, q_i0, q_i1).
  const std::vector<double> r{obj[0], obj[1], obj[4], obj[5]};
  const std::vector<double> q{obj[2], obj[3], obj[6], obj[7]};
  EXPECT_EQ(r, (std::vector<double>{h, 0, 0, 0}));
  EXPECT_EQ(q, (std::vector<double>{0, -h, 0, 0}));
}

TEST(RealifyObjective, MatchesRealPartOfPairing) {
  std::mt19937_64 rng(9);
  const auto rho = random_complex({2, 2}, rng);
  const auto lambda = random_complex({2, 2}, rng);
  const auto c = realify_objective(rho);
  std::vector<double> vars(c.size());
  for (std::size_t f = 0; f < lambda.size(); ++f) {
    const auto idx = lambda.shape().unravel(f);
    vars[free_variable_index(lambda.dims(), idx, ComplexPart::re)] = lambda[f].real();
    vars[free_variable_index(lambda.dims(), idx, ComplexPart::im)] = lambda[f].imag();
  }
  const double lin = std::inner_product(c.begin(), c.end(), vars.begin(), 0.0);
  EXPECT_NEAR(lin, pairing(rho, lambda).real(), 1e-12);
}

TEST(Pairing, Examples) {
  const RealTensor e11({2, 2}, {1, 0, 0, 0});
  EXPECT_EQ(pairing(e11, e11), 1.0);
  EXPECT_EQ(pairing(e11, RealTensor::zeros({2, 2})), 0.0);
  EXPECT_THROW(pairing(e11, RealTensor::zeros({2, 3})), ShapeMismatch);

  const auto bell = real_part(state_to_tensor(DensityMatrix({2, 2}, testing_support::bell_real())));
  // Witness delta_{ii'} delta_{jj'} in the (i, i', j, j') factor order.
  std::vector<double> w(16, 0.0);
  Shape s({2, 2, 2, 2}, Field::real);
  for (std::size_t f = 0; f < 16; ++f) {
    const auto idx = s.unravel(f);
    w[f] = (idx[0] == idx[2] && idx[1] == idx[3]) ? 1.0 : 0.0;
  }
  EXPECT_DOUBLE_EQ(pairing(bell, RealTensor({2, 2, 2, 2}, w)), 2.0);
}

}  // namespace
