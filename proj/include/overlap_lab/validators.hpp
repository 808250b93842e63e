#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/errors.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/rng.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/statistics.hpp"
#include "overlap_lab/triangular.hpp"

namespace overlap_lab {

// ---------------------------------------------------------------------------
// Jacobian of M -> pi(MT - TM) from skew-Hermitian zero-diagonal matrices onto
// strictly lower-triangular ones.
// ---------------------------------------------------------------------------

struct JacobianReport {
  std::size_t n = 0;
  double det_abs = 0.0;
  double predicted = 0.0;  // prod_{i<j} |t_jj - t_ii|^2
  double rel_error = 0.0;
  bool block_structure_ok = false;
  double max_above_block = 0.0;
  // Each diagonal 2x2 block of the matrix in the orthonormal bases is
  // (t_jj - t_ii)/sqrt2, so |det| = 2^{-n(n-1)/2} * predicted.
  double basis_factor = 1.0;
  double rel_error_scaled = 0.0;
};

inline constexpr std::size_t kJacobianMaxN = 8;

/// Strictly lower positions (i, j), j < i, sorted by i descending then j ascending.
inline std::vector<std::pair<std::size_t, std::size_t>> lower_positions_reverse_lex(std::size_t n) {
  std::vector<std::pair<std::size_t, std::size_t>> pos;
  for (std::size_t i = n; i-- > 0;)
    for (std::size_t j = 0; j < i; ++j) pos.emplace_back(i, j);
  return pos;
}

/// Real matrix of the map in the ordered orthonormal bases
/// (E_ij - E_ji)/sqrt2, i(E_ij + E_ji)/sqrt2 and E_ij, iE_ij, j < i.
inline Eigen::MatrixXd commutator_projection_matrix(const TriangularModel& t) {
  const std::size_t n = t.n();
  const auto pos = lower_positions_reverse_lex(n);
  const auto dim = static_cast<Eigen::Index>(2 * pos.size());
  Eigen::MatrixXcd tt = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) tt(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t(i, j);

  Eigen::MatrixXd out(dim, dim);
  const double r = 1.0 / std::numbers::sqrt2;
  Eigen::MatrixXcd m(tt.rows(), tt.cols());
  for (std::size_t b = 0; b < pos.size(); ++b) {
    const auto [bi, bj] = pos[b];
    for (int part = 0; part < 2; ++part) {
      m.setZero();
      const auto ii = static_cast<Eigen::Index>(bi), jj = static_cast<Eigen::Index>(bj);
      if (part == 0) {
        m(ii, jj) = r;
        m(jj, ii) = -r;
      } else {
        m(ii, jj) = cplx(0.0, r);
        m(jj, ii) = cplx(0.0, r);
      }
      const Eigen::MatrixXcd v = m * tt - tt * m;
      const auto col = static_cast<Eigen::Index>(2 * b + static_cast<std::size_t>(part));
      for (std::size_t a = 0; a < pos.size(); ++a) {
        const auto [ai, aj] = pos[a];
        const cplx vij = v(static_cast<Eigen::Index>(ai), static_cast<Eigen::Index>(aj));
        out(static_cast<Eigen::Index>(2 * a), col) = vij.real();
        out(static_cast<Eigen::Index>(2 * a + 1), col) = vij.imag();
      }
    }
  }
  return out;
}

inline JacobianReport jacobian_check(const TriangularModel& t) {
  if (t.n() > kJacobianMaxN) throw Error("jacobian_check: n is capped at 8");
  JacobianReport rep;
  rep.n = t.n();
  rep.predicted = 1.0;
  for (std::size_t i = 0; i < t.n(); ++i)
    for (std::size_t j = i + 1; j < t.n(); ++j) rep.predicted *= std::norm(t(j, j) - t(i, i));
  if (t.n() < 2) {
    rep.det_abs = 1.0;
    rep.block_structure_ok = true;
    return rep;
  }
  const Eigen::MatrixXd mat = commutator_projection_matrix(t);
  rep.det_abs = std::abs(Eigen::PartialPivLU<Eigen::MatrixXd>(mat).determinant());
  rep.rel_error = std::abs(rep.det_abs - rep.predicted) / rep.predicted;
  rep.basis_factor = std::ldexp(1.0, -static_cast<int>(t.n() * (t.n() - 1) / 2));
  const double scaled = rep.basis_factor * rep.predicted;
  rep.rel_error_scaled = std::abs(rep.det_abs - scaled) / scaled;

  // Lower-triangular by 2x2 blocks: everything right of each diagonal block vanishes.
  double scale = mat.cwiseAbs().maxCoeff();
  const Eigen::Index blocks = mat.rows() / 2;
  for (Eigen::Index br = 0; br < blocks; ++br)
    for (Eigen::Index c = 2 * (br + 1); c < mat.cols(); ++c)
      for (Eigen::Index rr = 2 * br; rr < 2 * br + 2; ++rr)
        rep.max_above_block = std::max(rep.max_above_block, std::abs(mat(rr, c)));
  rep.block_structure_ok = rep.max_above_block <= 1e-14 * std::max(1.0, scale);
  return rep;
}

// ---------------------------------------------------------------------------
// Normalization constant of the Schur-form change of variables.
// ---------------------------------------------------------------------------

/// log C_n = -((3n^2 - n)/2) log(pi) - sum_{k=1}^{n-1} log k!.
inline double log_cn_constant(std::size_t n) {
  if (n < 1) throw Error("cn_constant: n must be positive");
  const double nn = static_cast<double>(n);
  double acc = -0.5 * (3.0 * nn * nn - nn) * std::log(std::numbers::pi);
  for (std::size_t k = 1; k < n; ++k) acc -= std::lgamma(static_cast<double>(k) + 1.0);
  return acc;
}

/// C_n itself; underflows to 0 for large n, use log_cn_constant there.
inline double cn_constant(std::size_t n) { return std::exp(log_cn_constant(n)); }

// ---------------------------------------------------------------------------
// Radial law of the Ginibre eigenvalue gas.
// ---------------------------------------------------------------------------

struct KostlanReport {
  std::size_t n = 0;
  std::size_t points = 0;
  double ks = 0.0;
};

/// KS distance between pooled n|lambda|^2 and the Kostlan mixture CDF.
inline KostlanReport kostlan_radial_check(std::span<const cplx> pooled_diag, std::size_t n) {
  KostlanReport r;
  r.n = n;
  r.points = pooled_diag.size();
  std::vector<double> x(pooled_diag.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = static_cast<double>(n) * std::norm(pooled_diag[k]);
  r.ks = stats::ks_distance(x, [n](double v) { return stats::kostlan_mixture_cdf(n, v); });
  return r;
}

// ---------------------------------------------------------------------------
// n = 2 rejection oracle for the general sampler.
// ---------------------------------------------------------------------------

/// Rejection sampler for the n = 2 density |t22 - t11|^2 exp(-2 Tr V(T*T)) over
/// three complex coordinates. Proposal: iid N(0, sigma^2) per real coordinate.
/// The envelope uses |Delta|^2 <= 2R^2 and, for nonnegative coefficients,
/// Tr A^m >= 2^{1-m} (Tr A)^m with R^2 = Tr A.
class RejectionSamplerN2 {
 public:
  static constexpr std::size_t n = 2;

  explicit RejectionSamplerN2(PotentialSpec p, double sigma = 0.6) : p_(std::move(p)), sigma_(sigma) {
    for (double c : p_.coefficients)
      if (c < 0.0) throw Error("rejection oracle: requires nonnegative coefficients");
    bool any = false;
    for (double c : p_.coefficients) any = any || c > 0.0;
    if (!any) throw Error("rejection oracle: potential is identically zero");
    log_envelope_ = envelope();
  }

  /// Draws one accepted T.
  TriangularModel draw(Engine& rng) {
    std::normal_distribution<double> normal(0.0, sigma_);
    for (;;) {
      ++proposals_;
      std::vector<cplx> e(3);
      double r2 = 0.0;
      for (auto& z : e) {
        const double re = normal(rng);
        const double im = normal(rng);
        z = {re, im};
        r2 += re * re + im * im;
      }
      TriangularModel t(n, std::move(e));
      const double lt = log_density(t, p_);
      if (lt == kLogZero) continue;
      const double lq = -r2 / (2.0 * sigma_ * sigma_);
      const double log_acc = lt - lq - log_envelope_;
      if (log_acc > 1e-9) envelope_violations_++;
      if (std::log(uniform01(rng)) < log_acc) {
        ++accepted_;
        return t;
      }
    }
  }

  double acceptance_rate() const {
    return proposals_ ? static_cast<double>(accepted_) / static_cast<double>(proposals_) : 0.0;
  }
  std::uint64_t envelope_violations() const noexcept { return envelope_violations_; }

 private:
  double phi(double r2) const {
    // lower bound on Tr V(T*T) given Tr(T*T) = r2 for n = 2
    double acc = 0.0;
    for (std::size_t m = 1; m <= p_.coefficients.size(); ++m)
      acc += p_.coefficients[m - 1] * std::pow(2.0, 1.0 - static_cast<double>(m)) *
             std::pow(r2, static_cast<double>(m));
    return acc;
  }

  double envelope() const {
    // sup_R log(2R^2) - 2 phi(R^2) + R^2 / (2 sigma^2) on a fine grid, plus margin.
    const double inv = 1.0 / (2.0 * sigma_ * sigma_);
    double best = -std::numeric_limits<double>::infinity();
    double last = 0.0;
    const std::size_t steps = 200000;
    const double rmax = 20.0;
    for (std::size_t k = 1; k <= steps; ++k) {
      const double r = rmax * static_cast<double>(k) / static_cast<double>(steps);
      const double r2 = r * r;
      last = std::log(2.0 * r2) - 2.0 * phi(r2) + r2 * inv;
      best = std::max(best, last);
    }
    if (last >= best - 1.0) throw Error("rejection oracle: proposal tails lighter than target");
    return best + 0.05;
  }

  PotentialSpec p_;
  double sigma_;
  double log_envelope_ = 0.0;
  std::uint64_t proposals_ = 0, accepted_ = 0, envelope_violations_ = 0;
};

struct StatisticComparison {
  std::string name;
  double mala = 0.0, mala_se = 0.0;
  double oracle = 0.0, oracle_se = 0.0;
  bool ok = false;
};

struct SmallNOracleReport {
  std::vector<StatisticComparison> comparisons;
  double gap_ks = 0.0;
  double gap_ks_critical = 0.0;
  bool gap_ok = false;
  double rejection_acceptance = 0.0;
  bool efficiency_warning = false;
  std::uint64_t envelope_violations = 0;
  std::vector<ChainDiagnostics> diagnostics;

  bool all_pass() const {
    for (const auto& c : comparisons)
      if (!c.ok) return false;
    return gap_ok && envelope_violations == 0;
  }
};

/// Compares sample_general_T at n = 2 with the rejection oracle on mean Y,
/// E|t_12|^2 and the law of |t_22 - t_11|. MALA standard errors use batch means;
/// the gap KS critical value uses the batch-means effective sample size.
inline SmallNOracleReport small_n_oracle_compare(const PotentialSpec& p, const ChainConfig& cfg,
                                                 std::size_t oracle_draws) {
  constexpr std::size_t n = 2;
  struct Obs {
    double y, t12sq, gap;
  };
  auto observe = [](const TriangularModel& t) {
    const auto rec = overlap_record(t, 0, 1);
    return Obs{rec.y, std::norm(t(0, 1)), std::abs(t(1, 1) - t(0, 0))};
  };
  auto [mala, diags] = collect_samples<Obs>(
      SamplerKind::mala, n, p, cfg,
      [&](std::vector<Obs>& out, std::size_t, std::uint64_t, const TriangularModel& t) {
        out.push_back(observe(t));
      });

  RejectionSamplerN2 rs(p);
  Engine rng = make_engine(cfg.seed, StreamKind::rejection, 0);
  std::vector<Obs> oracle;
  oracle.reserve(oracle_draws);
  for (std::size_t k = 0; k < oracle_draws; ++k) oracle.push_back(observe(rs.draw(rng)));

  SmallNOracleReport rep;
  rep.diagnostics = std::move(diags);
  rep.rejection_acceptance = rs.acceptance_rate();
  rep.efficiency_warning = rep.rejection_acceptance < 1e-4;
  rep.envelope_violations = rs.envelope_violations();

  auto column = [](const std::vector<Obs>& v, double Obs::*f) {
    std::vector<double> c;
    c.reserve(v.size());
    for (const auto& o : v) c.push_back(o.*f);
    return c;
  };
  auto compare = [&](const std::string& name, double Obs::*f) {
    const auto a = column(mala, f), b = column(oracle, f);
    const auto ma = stats::batch_mean_se(a), mb = stats::mean_se(b);
    StatisticComparison c{name, ma.mean, ma.se, mb.mean, mb.se, false};
    c.ok = std::abs(ma.mean - mb.mean) <= 3.0 * std::hypot(ma.se, mb.se);
    rep.comparisons.push_back(c);
    return a;
  };
  compare("mean_y", &Obs::y);
  compare("mean_abs_t12_sq", &Obs::t12sq);
  const auto gm = column(mala, &Obs::gap), go = column(oracle, &Obs::gap);
  rep.gap_ks = stats::ks_two_sample(gm, go);
  const auto iid = stats::mean_se(gm), bm = stats::batch_mean_se(gm);
  double ess = static_cast<double>(gm.size());
  if (bm.se > 0.0) ess *= (iid.se / bm.se) * (iid.se / bm.se);
  rep.gap_ks_critical = stats::ks_two_sample_critical(static_cast<std::size_t>(std::max(ess, 2.0)), go.size());
  rep.gap_ok = rep.gap_ks < rep.gap_ks_critical;

  if (p.is_ginibre()) {
    // Closed form: Y ~ Exp(1).
    const auto a = column(mala, &Obs::y);
    const auto ma = stats::batch_mean_se(a);
    StatisticComparison c{"mean_y_vs_exp1", ma.mean, ma.se, 1.0, 0.0, false};
    c.ok = std::abs(ma.mean - 1.0) <= 3.0 * ma.se;
    rep.comparisons.push_back(c);
  }
  return rep;
}

struct CrossSamplerReport {
  std::vector<StatisticComparison> comparisons;
  std::vector<ChainDiagnostics> ginibre_diagnostics;
  std::vector<ChainDiagnostics> mala_diagnostics;

  bool all_pass() const {
    for (const auto& c : comparisons)
      if (!c.ok) return false;
    return !comparisons.empty();
  }
};

/// Runs the dedicated Ginibre sampler and the general MALA sampler with V(x) = x
/// on the same n and compares per-sample means of |t_ii|^2, n|t_ij|^2 (i < j)
/// and the all-pairs Y statistic at 3 sigma (batch-means standard errors on both
/// sides, since both diagonals come from Markov chains). The "oracle" fields
/// hold the Ginibre-sampler side.
inline CrossSamplerReport cross_sampler_compare(std::size_t n, const ChainConfig& cfg) {
  if (n < 2) throw Error("cross_sampler_compare: n must be at least 2");
  struct Obs {
    double diag_sq, off_sq, y;
  };
  auto observe = [n](std::vector<Obs>& out, std::size_t, std::uint64_t, const TriangularModel& t) {
    double d = 0.0, o = 0.0, y = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      d += std::norm(t(i, i));
      for (std::size_t j = i + 1; j < n; ++j) {
        o += std::norm(t(i, j));
        y += overlap_record(t, i, j).y;
        ++pairs;
      }
    }
    const double nn = static_cast<double>(n), pp = static_cast<double>(pairs);
    out.push_back({d / nn, nn * o / pp, y / pp});
  };
  const auto p = PotentialSpec::ginibre();
  auto [gin, gd] = collect_samples<Obs>(SamplerKind::ginibre, n, p, cfg, observe);
  auto [mal, md] = collect_samples<Obs>(SamplerKind::mala, n, p, cfg, observe);

  CrossSamplerReport rep;
  rep.ginibre_diagnostics = std::move(gd);
  rep.mala_diagnostics = std::move(md);
  auto compare = [&](const std::string& name, double Obs::*f) {
    std::vector<double> a, b;
    for (const auto& o : mal) a.push_back(o.*f);
    for (const auto& o : gin) b.push_back(o.*f);
    const auto ma = stats::batch_mean_se(a), mb = stats::batch_mean_se(b);
    StatisticComparison c{name, ma.mean, ma.se, mb.mean, mb.se, false};
    c.ok = std::abs(ma.mean - mb.mean) <= 3.0 * std::hypot(ma.se, mb.se);
    rep.comparisons.push_back(c);
  };
  compare("mean_abs_diag_sq", &Obs::diag_sq);
  compare("mean_n_abs_offdiag_sq", &Obs::off_sq);
  compare("mean_all_pairs_y", &Obs::y);
  return rep;
}

}  // namespace overlap_lab
