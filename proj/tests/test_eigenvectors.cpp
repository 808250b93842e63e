#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/triangular.hpp"

using namespace overlap_lab;

namespace {

TriangularModel random_t(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 0.7);
  std::vector<cplx> e(packed_size(n));
  for (auto& z : e) z = {g(rng), g(rng)};
  return TriangularModel(n, std::move(e));
}

}  // namespace

TEST(BackSubstitute, DiagonalMatrixGivesUnitVectors) {
  const std::vector<cplx> d{0.1, cplx(0.3, 0.2), -0.5, cplx(0, -0.4)};
  const auto t = TriangularModel::diagonal(d);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto s = back_substitute(t, i);
    ASSERT_EQ(s.components.size(), i + 1);
    for (std::size_t l = 0; l < i; ++l) EXPECT_EQ(s.components[l], cplx{});
    EXPECT_EQ(s.components[i], cplx(1.0));
    EXPECT_EQ(s.norm, 1.0);
  }
  for (const auto& m : magnitude_diagnostics(t, std::vector<std::size_t>{0, 1, 2, 3})) {
    EXPECT_EQ(m.max_scaled_component, 0.0);
    EXPECT_EQ(m.norm_excess, 0.0);
  }
  EXPECT_EQ(overlap(t, 1, 3), cplx{});
}

TEST(BackSubstitute, TwoByTwoClosedForm) {
  const TriangularModel t(2, {cplx(0.2, 0.1), cplx(-0.4, 0.7), cplx(0.9, -0.3)});
  const auto s = back_substitute(t, 1);
  const cplx want = t(0, 1) / (t(1, 1) - t(0, 0));
  EXPECT_NEAR(std::abs(s.components[0] - want), 0.0, 1e-15);
  EXPECT_EQ(s.components[1], cplx(1.0));
  const double closed = std::abs(t(0, 1)) / std::sqrt(std::norm(t(0, 1)) + std::norm(t(1, 1) - t(0, 0)));
  EXPECT_NEAR(std::abs(overlap(t, 0, 1)), closed, 1e-15);

  const auto z = back_substitute(t.with(0, 1, 0.0), 1);
  EXPECT_EQ(z.components[0], cplx{});
  EXPECT_EQ(z.norm, 1.0);
}

TEST(BackSubstitute, ResidualIsSmallOnRandomMatrices) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 1 + static_cast<std::size_t>(rep % 12);
    const auto t = random_t(n, rng);
    for (const auto& s : all_eigenvectors(t)) {
      EXPECT_EQ(s.components.back(), cplx(1.0));
      EXPECT_LE(eigen_residual(t, s), 1e-10 * s.norm);
    }
  }
}

TEST(BackSubstitute, DegenerateGapThrows) {
  const TriangularModel t(2, {0.5, 1.0, 0.5 + 1e-13});
  EXPECT_THROW(back_substitute(t, 1), DegenerateEigenvalueError);
  EXPECT_NO_THROW(back_substitute(t, 0));
}

TEST(Overlap, MatchesInverseIterationOnConjugatedMatrix) {
  std::mt19937_64 rng(32);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 2 + static_cast<std::size_t>(rep % 7);
    const auto t = random_t(n, rng);
    const std::size_t i = static_cast<std::size_t>(rep) % (n - 1), j = n - 1;
    const double got = std::abs(overlap(t, i, j));
    const double want = oracles::overlap_modulus_via_conjugation(n, t.packed(), i, j, rng);
    EXPECT_NEAR(got, want, 1e-8 * std::max(want, 1e-3)) << "n=" << n << " (" << i << "," << j << ")";
  }
  // The 6x6 case with (i, j) = (3, 5) in one-based indexing.
  const auto t6 = random_t(6, rng);
  EXPECT_NEAR(std::abs(overlap(t6, 2, 4)), oracles::overlap_modulus_via_conjugation(6, t6.packed(), 2, 4, rng),
              1e-8);
}

TEST(Overlap, PhaseCovarianceAndSymmetry) {
  std::mt19937_64 rng(33);
  const auto t = random_t(6, rng);
  const cplx base = overlap(t, 1, 4);
  const cplx rotated = overlap(t, 1, 4, 0.3, 1.7);
  EXPECT_NEAR(std::abs(rotated - std::polar(1.0, 1.4) * base), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(overlap(t, 4, 1) - std::conj(base)), 0.0, 1e-15);
  EXPECT_LE(std::abs(base), 1.0);
  EXPECT_THROW(overlap(t, 2, 2), Error);
}

TEST(Overlap, ModulusInvariantUnderPhaseMap) {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 6.28);
  for (int rep = 0; rep < 20; ++rep) {
    const auto t = random_t(5, rng);
    std::vector<double> theta(5);
    for (double& th : theta) th = u(rng);
    const auto tp = apply_phase_map(t, theta);
    EXPECT_NEAR(std::abs(overlap(t, 0, 3)), std::abs(overlap(tp, 0, 3)), 1e-12);
    EXPECT_NEAR(std::abs(overlap(t, 2, 4)), std::abs(overlap(tp, 2, 4)), 1e-12);
  }
}

TEST(YStatistic, Examples) {
  const std::size_t n = 9;
  const cplx l(0.1, 0.2), lp = l + cplx(0.0, 1.0 / 3.0);
  EXPECT_NEAR(y_statistic(l, lp, 1.0 / std::sqrt(2.0), n).y, 1.0, 1e-12);
  EXPECT_EQ(y_statistic(l, lp, 0.0, n).y, 0.0);
  EXPECT_TRUE(std::isinf(y_statistic(l, lp, 1.0, n).y));
  EXPECT_THROW(y_statistic(l, l, 0.5, n), DegenerateEigenvalueError);
}

TEST(YStatistic, EqualsScaledOffDiagonalForTwoByTwo) {
  std::mt19937_64 rng(35);
  for (int rep = 0; rep < 100; ++rep) {
    const auto t = random_t(2, rng);
    const double want = 2.0 * std::norm(t(0, 1));
    EXPECT_NEAR(overlap_record(t, 0, 1).y, want, 1e-12 * std::max(1.0, want));
  }
}

TEST(YStatistic, AlgebraicConsistencyIdentity) {
  std::mt19937_64 rng(36);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = 3 + static_cast<std::size_t>(rep % 6);
    const auto t = random_t(n, rng);
    const auto r = overlap_record(t, 0, n - 1);
    const double d2 = static_cast<double>(n) * std::norm(r.lambda_prime - r.lambda);
    const double lhs = d2 * std::norm(r.overlap);
    const double rhs = r.y / (r.y / d2 + 1.0);
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, lhs));
    EXPECT_LE(std::abs(r.overlap), 1.0 + 1e-15);
  }
}
