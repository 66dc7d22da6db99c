#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace projnorm;
using testing_support::random_complex;
using testing_support::random_real;

namespace {

TEST(NuclearNorm, Examples) {
  EXPECT_NEAR(oracles::nuclear_norm(RealTensor({2, 2}, {1, 0, 0, 1})), 2.0, 1e-15);
  EXPECT_NEAR(oracles::nuclear_norm(RealTensor({2, 2}, {1, 0, 0, 0})), 1.0, 1e-15);
  const double h = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(oracles::nuclear_norm(ComplexTensor({2, 2}, {h, Complex(0.0, h), 0.0, 0.0})), 1.0, 1e-15);
  EXPECT_THROW(oracles::nuclear_norm(RealTensor::zeros({2, 2, 2})), ShapeMismatch);
}

TEST(NuclearNorm, UnitaryInvariance) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    const auto a = oracles::as_matrix(random_complex({3, 4}, rng));
    const auto u = testing_support::random_unitary(3, rng);
    const auto v = testing_support::random_unitary(4, rng);
    EXPECT_NEAR(oracles::nuclear_norm(Eigen::MatrixXcd(u * a * v)), oracles::nuclear_norm(a), 1e-12);

    const auto r = oracles::as_matrix(random_real({3, 3}, rng));
    const auto o = testing_support::random_orthogonal(3, rng);
    EXPECT_NEAR(oracles::nuclear_norm(Eigen::MatrixXd(o * r)), oracles::nuclear_norm(r), 1e-12);
  }
}

TEST(InjectiveBruteforce, Examples) {
  EXPECT_NEAR(oracles::injective_norm_bruteforce(RealTensor({2, 2}, {1, 0, 0, 1})).lower, 1.0, 1e-12);
  std::vector<double> e111(8, 0.0);
  e111[0] = 1.0;
  EXPECT_NEAR(oracles::injective_norm_bruteforce(RealTensor({2, 2, 2}, e111)).lower, 1.0, 1e-12);

  std::vector<double> w(16, 0.0);
  Shape s({2, 2, 2, 2}, Field::real);
  for (std::size_t f = 0; f < 16; ++f) {
    const auto idx = s.unravel(f);
    w[f] = (idx[0] == idx[2] && idx[1] == idx[3]) ? 1.0 : 0.0;
  }
  EXPECT_NEAR(oracles::injective_norm_bruteforce(RealTensor({2, 2, 2, 2}, w)).lower, 1.0, 1e-9);
}

TEST(InjectiveBruteforce, MatchesLargestSingularValue) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto a = random_real({3, 4}, rng);
    const double sigma = oracles::spectral_norm(oracles::as_matrix(a));
    const double found = oracles::injective_norm_bruteforce(a, 64, 200, static_cast<std::uint64_t>(t)).lower;
    EXPECT_GE(found, sigma - 1e-8);
    EXPECT_LE(found, sigma + 1e-12);

    const auto c = random_complex({3, 3}, rng);
    const double csigma = oracles::spectral_norm(oracles::as_matrix(c));
    const double cfound = oracles::injective_norm_bruteforce(c, 64, 200, static_cast<std::uint64_t>(t)).lower;
    EXPECT_GE(cfound, csigma - 1e-8);
    EXPECT_LE(cfound, csigma + 1e-12);
  }
}

TEST(InjectiveBruteforce, RealificationPreservesNorm) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto lambda = random_complex({2, 2}, rng);
    const double a = oracles::injective_norm_bruteforce(lambda).lower;
    const double b = oracles::injective_norm_bruteforce(realify_tensor(lambda)).lower;
    EXPECT_NEAR(a, b, 1e-6);
  }
  const auto lambda3 = random_complex({2, 2, 2}, rng);
  EXPECT_NEAR(oracles::injective_norm_bruteforce(lambda3, 128).lower,
              oracles::injective_norm_bruteforce(realify_tensor(lambda3), 128).lower, 1e-6);
}

TEST(InjectiveBruteforce, SizeLimit) {
  EXPECT_THROW(oracles::injective_norm_bruteforce(RealTensor::zeros({65, 65})), std::invalid_argument);
}

TEST(ReferenceBracket, ZeroTensor) {
  const auto r = oracles::reference_bracket(RealTensor::zeros({2, 2}), 16);
  EXPECT_EQ(r.lower, 0.0);
  EXPECT_EQ(r.upper, 0.0);
}

TEST(ReferenceBracket, CloseToNuclearNormAtHighM) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 3; ++t) {
    const auto rho = random_real({2, 2}, rng);
    const double nuc = oracles::nuclear_norm(rho);
    EstimateOptions eo;
    eo.covering = CoveringKind::circle;
    const auto r = oracles::reference_bracket(rho, 64, eo);
    EXPECT_LE(r.lower, nuc * (1 + 1e-12));
    EXPECT_GE(r.upper, nuc * (1 - 1e-12));
    EXPECT_LE(std::abs(r.lower - nuc), 1e-3 * nuc);
    EXPECT_LE(std::abs(r.upper - nuc), 1e-3 * nuc);
  }
}

TEST(ReferenceBracket, CoarseBracketContainsRefinedMidpoint) {
  std::mt19937_64 rng(5);
  const auto rho = random_real({2, 2}, rng);
  const auto fine = oracles::reference_bracket(rho, 16);
  const double mid = 0.5 * (fine.lower + fine.upper);
  EstimateOptions eo;
  eo.m = {4};
  const auto coarse = estimate_pi_norm(rho, eo);
  EXPECT_LE(coarse.lower, mid);
  EXPECT_GE(coarse.upper, mid);
}

}  // namespace
