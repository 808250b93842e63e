#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/statistics.hpp"

using namespace overlap_lab;

namespace {

std::vector<TriangularModel> draw(SamplerKind kind, std::size_t n, const PotentialSpec& p, const ChainConfig& cfg,
                                  std::vector<ChainDiagnostics>* diags = nullptr) {
  auto [out, d] = collect_samples<TriangularModel>(
      kind, n, p, cfg,
      [](std::vector<TriangularModel>& v, std::size_t, std::uint64_t, const TriangularModel& t) { v.push_back(t); });
  if (diags) *diags = d;
  return out;
}

// CDF of |z| for one eigenvalue of the n = 2 gas |z1 - z2|^2 e^{-2(|z1|^2 + |z2|^2)}:
// the z2 integral is done on a 2D trapezoid grid, the radial one by the trapezoid rule.
struct TwoPointRadialCdf {
  std::vector<double> r, cdf;

  TwoPointRadialCdf() {
    const int m = 161;
    const double half = 5.0, h = 2 * half / (m - 1);
    auto inner = [&](double x1) {
      double acc = 0.0;
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) {
          const double x = -half + h * a, y = -half + h * b;
          const double w = (a == 0 || a == m - 1 ? 0.5 : 1.0) * (b == 0 || b == m - 1 ? 0.5 : 1.0);
          acc += w * ((x1 - x) * (x1 - x) + y * y) * std::exp(-2.0 * (x * x + y * y));
        }
      return acc * h * h;
    };
    const int pts = 401;
    const double rmax = 4.0, dr = rmax / (pts - 1);
    std::vector<double> f(pts);
    for (int k = 0; k < pts; ++k) {
      const double rr = dr * k;
      f[k] = inner(rr) * std::exp(-2.0 * rr * rr) * rr;
    }
    r.resize(pts);
    cdf.assign(pts, 0.0);
    for (int k = 1; k < pts; ++k) {
      r[k] = dr * k;
      cdf[k] = cdf[k - 1] + 0.5 * dr * (f[k] + f[k - 1]);
    }
    for (double& c : cdf) c /= cdf.back();
  }

  double operator()(double x) const {
    if (x <= 0.0) return 0.0;
    if (x >= r.back()) return 1.0;
    const auto it = std::upper_bound(r.begin(), r.end(), x);
    const std::size_t k = static_cast<std::size_t>(it - r.begin());
    const double t = (x - r[k - 1]) / (r[k] - r[k - 1]);
    return cdf[k - 1] + t * (cdf[k] - cdf[k - 1]);
  }
};

}  // namespace

TEST(ChainConfig, ValidationNamesField) {
  ChainConfig c;
  c.n_steps = 100;
  c.burn_in = 100;
  try {
    c.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "chain.burn_in");
  }
  c.burn_in = 10;
  c.thinning = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.thinning = 1;
  c.step_size = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ChainConfig, ForSamplesAndJson) {
  const auto c = ChainConfig::for_samples(100, 50, 7, 3, 9);
  EXPECT_GE(c.total_emissions(), 100u);
  EXPECT_EQ(c.emissions_per_chain(), 34u);
  EXPECT_EQ(nlohmann::json(c).get<ChainConfig>(), c);
  auto d = c;
  d.step_size = 0.013;
  EXPECT_EQ(nlohmann::json(d).get<ChainConfig>(), d);
  EXPECT_FALSE(nlohmann::json(c).contains("step_size"));
}

TEST(Rng, SubstreamsAreDistinctAndStable) {
  EXPECT_EQ(substream_seed(1, StreamKind::chain, 0), substream_seed(1, StreamKind::chain, 0));
  EXPECT_NE(substream_seed(1, StreamKind::chain, 0), substream_seed(1, StreamKind::chain, 1));
  EXPECT_NE(substream_seed(1, StreamKind::chain, 0), substream_seed(1, StreamKind::phases, 0));
  EXPECT_NE(substream_seed(1, StreamKind::chain, 0), substream_seed(2, StreamKind::chain, 0));
  Engine rng = make_engine(3, StreamKind::synthetic, 0);
  std::vector<cplx> z(20000);
  for (auto& v : z) v = standard_complex_normal(rng);
  const auto m = stats::complex_moments(z);
  EXPECT_NEAR(m.second, 1.0, 0.05);
  EXPECT_LT(std::abs(m.pseudo_variance), 0.05);
}

TEST(SunflowerLattice, FillsUnitDisk) {
  const auto pts = sunflower_lattice(200);
  for (const auto& z : pts) EXPECT_LE(std::abs(z), 1.0);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) EXPECT_GT(std::abs(pts[i] - pts[j]), 1e-3);
}

TEST(Mala, AcceptRatioMatchesDirectRecomputation) {
  // Frozen segment: recompute the MH ratio from the oracle log density and an
  // independently written Gaussian proposal density.
  std::mt19937_64 gen(21);
  std::normal_distribution<double> g(0.0, 0.5);
  const auto p = PotentialSpec::quartic_quintic();
  const std::size_t n = 3;
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<cplx> x(packed_size(n)), y(packed_size(n));
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = {g(gen), g(gen)};
      y[k] = x[k] + 0.1 * cplx(g(gen), g(gen));
    }
    const double h = 0.2;
    const auto ex = evaluate_log_density(n, x, p, true), ey = evaluate_log_density(n, y, p, true);
    auto log_q = [&](const std::vector<cplx>& to, const std::vector<cplx>& from) {
      const auto fd = oracles::conjugate_gradient_fd(
          [&](const std::vector<cplx>& v) { return oracles::log_density(n, v, p.coefficients); }, from);
      double s = 0.0;
      for (std::size_t k = 0; k < to.size(); ++k) {
        const cplx mean = from[k] + 0.5 * h * h * 2.0 * fd[k];
        s += std::norm(to[k] - mean);
      }
      return -s / (2 * h * h);
    };
    const double want = oracles::log_density(n, y, p.coefficients) - oracles::log_density(n, x, p.coefficients) +
                        log_q(x, y) - log_q(y, x);
    EXPECT_NEAR(mala_log_accept_ratio(x, ex, y, ey, h), want, 1e-6 * (1.0 + std::abs(want)));
  }
}

TEST(Mala, CollisionProposalIsRejected) {
  const std::vector<cplx> x{0.0, 0.0, 1.0};
  const auto ex = evaluate_log_density(2, x, PotentialSpec::ginibre(), true);
  const std::vector<cplx> y{0.5, 0.0, 0.5};
  const auto ey = evaluate_log_density(2, y, PotentialSpec::ginibre(), true);
  EXPECT_EQ(mala_log_accept_ratio(x, ex, y, ey, 0.1), kLogZero);
}

TEST(GinibreSampler, OneByOneIsStandardComplexGaussian) {
  const auto ts = draw(SamplerKind::ginibre, 1, PotentialSpec::ginibre(), ChainConfig::for_samples(10000, 500, 5, 1, 1));
  std::vector<double> sq;
  for (const auto& t : ts) sq.push_back(std::norm(t(0, 0)));
  const double m = stats::mean(sq);
  EXPECT_GE(m, 0.95);
  EXPECT_LE(m, 1.05);
}

TEST(GinibreSampler, OffDiagonalLawAndIndependence) {
  const auto ts = draw(SamplerKind::ginibre, 2, PotentialSpec::ginibre(), ChainConfig::for_samples(10000, 500, 3, 1, 2));
  std::vector<double> e, d;
  for (const auto& t : ts) {
    e.push_back(2.0 * std::norm(t(0, 1)));
    d.push_back(std::norm(t(0, 0)));
  }
  EXPECT_LT(stats::ks_distance(e, stats::exp1_cdf), 0.02);
  EXPECT_LT(std::abs(stats::correlation(e, d)), 3.0 / std::sqrt(static_cast<double>(e.size())));
  // Y = n |t_12|^2 in the 2x2 frame.
  for (std::size_t k = 0; k < 20; ++k) EXPECT_NEAR(overlap_record(ts[k], 0, 1).y, e[k], 1e-12 * (1.0 + e[k]));
}

TEST(GinibreSampler, KostlanRadialLaw) {
  const auto ts = draw(SamplerKind::ginibre, 60, PotentialSpec::ginibre(), ChainConfig::for_samples(60, 1500, 100, 1, 3));
  std::vector<double> r;
  for (const auto& t : ts)
    for (const cplx& z : t.diag()) r.push_back(60.0 * std::norm(z));
  EXPECT_LT(stats::ks_distance(r, [](double x) { return stats::kostlan_mixture_cdf(60, x); }), 0.03);
}

TEST(GeneralSampler, TwoByTwoGasMarginal) {
  const TwoPointRadialCdf cdf;
  // Closed form 1 - (u + 2) e^{-u} / 2 with u = 2 r^2.
  for (double r : {0.2, 0.5, 0.9, 1.4}) {
    const double u = 2 * r * r;
    EXPECT_NEAR(cdf(r), 1.0 - 0.5 * (u + 2.0) * std::exp(-u), 1e-4);
  }
  const auto ts = draw(SamplerKind::mala, 2, PotentialSpec::ginibre(), ChainConfig::for_samples(12000, 1000, 10, 1, 4));
  std::vector<double> r;
  for (const auto& t : ts) r.push_back(std::abs(t(0, 0)));
  EXPECT_LT(stats::ks_distance(r, cdf), 0.03);
}

TEST(GeneralSampler, OneByOneSquarePotentialMatchesQuadrature) {
  const PotentialSpec p{{0.0, 1.0}, 1.0};
  const double want = oracles::one_by_one_second_moment([](double x) { return x * x; });
  EXPECT_NEAR(want, 1.0 / std::sqrt(std::numbers::pi), 1e-8);
  const auto ts = draw(SamplerKind::mala, 1, p, ChainConfig::for_samples(8000, 1000, 10, 1, 5));
  std::vector<double> sq;
  for (const auto& t : ts) sq.push_back(std::norm(t(0, 0)));
  const auto ms = stats::batch_mean_se(sq);
  EXPECT_LE(std::abs(ms.mean - want), 3.0 * ms.se);
}

TEST(GeneralSampler, TunedAcceptanceForQuarticQuintic) {
  std::vector<ChainDiagnostics> d;
  draw(SamplerKind::mala, 2, PotentialSpec::quartic_quintic(), ChainConfig::for_samples(500, 2000, 10, 1, 6), &d);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_GE(d[0].acceptance_rate, 0.3);
  EXPECT_LE(d[0].acceptance_rate, 0.8);
  EXPECT_GT(d[0].tuned_step_size, 0.0);
  EXPECT_DOUBLE_EQ(d[0].initial_step_size, default_step_size(2));
}

TEST(Samplers, DeterministicForEqualInputs) {
  const auto cfg = ChainConfig::for_samples(20, 100, 5, 2, 7);
  for (auto kind : {SamplerKind::ginibre, SamplerKind::mala}) {
    const auto a = draw(kind, 6, PotentialSpec::ginibre(), cfg), b = draw(kind, 6, PotentialSpec::ginibre(), cfg);
    EXPECT_EQ(a, b);
  }
}

TEST(Samplers, ChainsAreIndependentOfEachOther) {
  const auto cfg = ChainConfig::for_samples(30, 100, 5, 3, 8);
  const auto p = PotentialSpec::quartic_quintic();
  std::vector<std::vector<TriangularModel>> solo(3);
  for (std::size_t c = 0; c < 3; ++c)
    sample_chain(SamplerKind::mala, 5, p, cfg, c, [&](std::uint64_t, const TriangularModel& t) { solo[c].push_back(t); });
  for (std::size_t c = 3; c-- > 0;) {
    std::vector<TriangularModel> again;
    sample_chain(SamplerKind::mala, 5, p, cfg, c, [&](std::uint64_t, const TriangularModel& t) { again.push_back(t); });
    EXPECT_EQ(again, solo[c]);
  }
  EXPECT_NE(solo[0], solo[1]);
  std::vector<TriangularModel> merged;
  for (auto& v : solo) merged.insert(merged.end(), v.begin(), v.end());
  EXPECT_EQ(draw(SamplerKind::mala, 5, p, cfg), merged);
}

TEST(Samplers, DivergenceIsReported) {
  ChainConfig cfg = ChainConfig::for_samples(10, 200, 1, 1, 9);
  cfg.step_size = 50.0;
  cfg.tune = false;
  EXPECT_THROW(draw(SamplerKind::mala, 4, PotentialSpec::quartic_quintic(), cfg), DivergenceError);
}

TEST(Samplers, ResolveKinds) {
  EXPECT_EQ(resolve(SamplerKind::automatic, PotentialSpec::ginibre()), SamplerKind::ginibre);
  EXPECT_EQ(resolve(SamplerKind::automatic, PotentialSpec::quartic_quintic()), SamplerKind::mala);
  EXPECT_EQ(resolve(SamplerKind::mala, PotentialSpec::ginibre()), SamplerKind::mala);
}
