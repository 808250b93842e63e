#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "overlap_lab/run.hpp"
#include "overlap_lab/validators.hpp"

using namespace overlap_lab;

namespace {

TriangularModel random_t(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> e(packed_size(n));
  for (auto& z : e) z = {g(rng), g(rng)};
  return TriangularModel(n, std::move(e));
}

}  // namespace

TEST(Jacobian, BasisOrdering) {
  const auto pos = lower_positions_reverse_lex(3);
  const std::vector<std::pair<std::size_t, std::size_t>> want{{2, 0}, {2, 1}, {1, 0}};
  EXPECT_EQ(pos, want);
}

TEST(Jacobian, TwoByTwoDiagonalExamples) {
  // In the orthonormal bases each diagonal block is (t_jj - t_ii)/sqrt2 acting
  // on C, so |det| carries a factor 1/2 per pair relative to prod |t_jj - t_ii|^2.
  const auto a = jacobian_check(TriangularModel::diagonal(std::vector<cplx>{0.0, 1.0}));
  EXPECT_DOUBLE_EQ(a.predicted, 1.0);
  EXPECT_NEAR(a.det_abs, 0.5, 1e-15);
  EXPECT_NEAR(a.rel_error_scaled, 0.0, 1e-15);
  const auto b = jacobian_check(TriangularModel::diagonal(std::vector<cplx>{0.0, cplx(0, 2)}));
  EXPECT_DOUBLE_EQ(b.predicted, 4.0);
  EXPECT_NEAR(b.det_abs, 2.0, 1e-14);
  EXPECT_TRUE(b.block_structure_ok);
}

TEST(Jacobian, BlockTriangularWithHalfPerPairDeterminant) {
  std::mt19937_64 rng(61);
  for (std::size_t n = 2; n <= 6; ++n)
    for (int rep = 0; rep < 50; ++rep) {
      const auto r = jacobian_check(random_t(n, rng));
      EXPECT_TRUE(r.block_structure_ok) << "n=" << n;
      EXPECT_LE(r.rel_error_scaled, 1e-10) << "n=" << n;
      EXPECT_DOUBLE_EQ(r.basis_factor, std::ldexp(1.0, -static_cast<int>(n * (n - 1) / 2)));
    }
}

TEST(Jacobian, MatrixEntriesFollowTheCommutatorFormula) {
  // Column for (E_ij - E_ji)/sqrt2 at the top-left block must hold
  // (t_jj - t_ii)/sqrt2 in the (i, j) row pair.
  std::mt19937_64 rng(62);
  const auto t = random_t(3, rng);
  const auto m = commutator_projection_matrix(t);
  const cplx d = (t(0, 0) - t(2, 2)) / std::sqrt(2.0);
  EXPECT_NEAR(m(0, 0), d.real(), 1e-14);
  EXPECT_NEAR(m(1, 0), d.imag(), 1e-14);
  // i(E_ij + E_ji)/sqrt2 gives i (t_jj - t_ii)/sqrt2.
  EXPECT_NEAR(m(0, 1), -d.imag(), 1e-14);
  EXPECT_NEAR(m(1, 1), d.real(), 1e-14);
  EXPECT_THROW(jacobian_check(random_t(9, rng)), Error);
}

TEST(CnConstant, ValuesAndRecursion) {
  EXPECT_NEAR(cn_constant(1), 1.0 / std::numbers::pi, 1e-15);
  EXPECT_NEAR(cn_constant(2), std::pow(std::numbers::pi, -5.0), 1e-16);
  for (std::size_t n = 1; n <= 8; ++n) {
    double prod = 1.0;
    for (std::size_t k = 1; k < n; ++k) prod *= oracles::factorial(k);
    const double nn = static_cast<double>(n);
    const double want = -0.5 * (3 * nn * nn - nn) * std::log(std::numbers::pi) - std::log(prod);
    EXPECT_NEAR(log_cn_constant(n), want, 1e-12 * std::abs(want));
    const double step = log_cn_constant(n) - log_cn_constant(n + 1);
    EXPECT_NEAR(step, (3 * nn + 1) * std::log(std::numbers::pi) + std::log(oracles::factorial(n)), 1e-10);
  }
  EXPECT_TRUE(std::isfinite(log_cn_constant(200)));
}

TEST(CnConstant, OneByOneNormalization) {
  const double radial = oracles::simpson([](double r) { return 2 * std::numbers::pi * r * std::exp(-r * r); }, 0.0, 10.0);
  EXPECT_NEAR(cn_constant(1) * radial, 1.0, 1e-9);
  EXPECT_NEAR(detail::cn_unit_normalization(), 1.0, 1e-6);
}

TEST(Kostlan, CheckOnSyntheticAndSampledData) {
  Engine rng = make_engine(63, StreamKind::synthetic, 0);
  std::vector<cplx> pts(10000);
  for (auto& z : pts) z = standard_complex_normal(rng);
  EXPECT_LT(kostlan_radial_check(pts, 1).ks, 0.02);
  std::vector<cplx> scaled(pts);
  for (auto& z : scaled) z *= 1.3;
  EXPECT_GT(kostlan_radial_check(scaled, 1).ks, 0.1);
}

TEST(RejectionOracle, GinibreTwoByTwoLaw) {
  RejectionSamplerN2 rs(PotentialSpec::ginibre());
  Engine rng = make_engine(64, StreamKind::rejection, 0);
  std::vector<double> y;
  for (int k = 0; k < 5000; ++k) y.push_back(2.0 * std::norm(rs.draw(rng)(0, 1)));
  EXPECT_EQ(rs.envelope_violations(), 0u);
  EXPECT_GT(rs.acceptance_rate(), 1e-4);
  EXPECT_LT(stats::ks_distance(y, stats::exp1_cdf), 0.03);
  EXPECT_THROW(RejectionSamplerN2(PotentialSpec{{1.0, -0.1}, 1.0}), Error);
}

TEST(SmallNOracle, AgreesForThreePotentials) {
  const auto cfg = ChainConfig::for_samples(3000, 1000, 10, 1, 65);
  for (const auto& p : {PotentialSpec::ginibre(), PotentialSpec{{0.0, 1.0}, 1.0}, PotentialSpec::quartic_quintic()}) {
    const auto rep = small_n_oracle_compare(p, cfg, 6000);
    for (const auto& c : rep.comparisons)
      EXPECT_TRUE(c.ok) << c.name << " mala " << c.mala << " +- " << c.mala_se << " oracle " << c.oracle;
    EXPECT_LT(rep.gap_ks, rep.gap_ks_critical);
    EXPECT_FALSE(rep.efficiency_warning);
  }
}

TEST(CrossSampler, GinibreAndMalaAgreeAtSmallN) {
  const auto rep = cross_sampler_compare(8, ChainConfig::for_samples(400, 800, 20, 2, 66));
  ASSERT_EQ(rep.comparisons.size(), 3u);
  for (const auto& c : rep.comparisons) EXPECT_TRUE(c.ok) << c.name << " " << c.mala << " vs " << c.oracle;
}
