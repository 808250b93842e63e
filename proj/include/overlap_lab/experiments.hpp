#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/rng.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/statistics.hpp"
#include "overlap_lab/triangular.hpp"

namespace overlap_lab {

/// Where experiment samples come from.
struct SampleSource {
  SamplerKind kind = SamplerKind::automatic;
  std::size_t n = 20;
  PotentialSpec potential = PotentialSpec::ginibre();
  ChainConfig chain;
};

/// Overlap record tagged with the global sample index it came from.
struct TaggedRecord {
  OverlapRecord record;
  std::uint64_t sample_id = 0;
};

struct SurvivalCurve {
  std::vector<double> deltas;
  std::vector<double> empirical;
  std::vector<double> bound;
  std::vector<double> standard_error;
  std::vector<bool> pass;
  std::size_t n_samples = 0;

  bool all_pass() const {
    for (bool b : pass)
      if (!b) return false;
    return !pass.empty();
  }
};

/// 40 log-spaced points in [0.05, 8].
inline std::vector<double> default_delta_grid() { return stats::log_grid(0.05, 8.0, 40); }

/// Empirical tail of Y against 2 exp(-alpha delta / 2); a delta passes when the
/// empirical value is at most the bound plus three binomial standard errors.
inline SurvivalCurve survival_curve(std::span<const double> ys, double alpha,
                                    std::span<const double> deltas) {
  SurvivalCurve c;
  c.deltas.assign(deltas.begin(), deltas.end());
  c.n_samples = ys.size();
  c.empirical = stats::survival(ys, deltas);
  const double n = static_cast<double>(ys.size());
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double p = c.empirical[k];
    const double b = 2.0 * std::exp(-0.5 * alpha * deltas[k]);
    const double se = std::sqrt(p * (1.0 - p) / n);
    c.bound.push_back(b);
    c.standard_error.push_back(se);
    c.pass.push_back(p <= b + 3.0 * se);
  }
  return c;
}

namespace detail {

inline std::uint64_t global_sample_id(const ChainConfig& cfg, std::uint64_t chain, std::uint64_t idx) {
  return chain * cfg.emissions_per_chain() + idx;
}

}  // namespace detail

/// Y for the probe pair (z, z') of every sample, with the exclusion rule for
/// lambda'. Samples whose eigenvectors cannot be formed are counted, not used.
struct ProbePairRun {
  std::vector<TaggedRecord> records;
  std::size_t skipped = 0;
  std::vector<ChainDiagnostics> diagnostics;

  std::vector<double> ys() const {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(r.record.y);
    return v;
  }
};

inline std::optional<OverlapRecord> probe_pair_record(const TriangularModel& t, cplx z, cplx zp) {
  try {
    const auto diag = t.diag();
    const auto [a, b] = select_probe_pair(z, zp, diag);
    return y_statistic(t(a, a), t(b, b), overlap(t, a, b), t.n());
  } catch (const DegenerateEigenvalueError&) {
    return std::nullopt;
  } catch (const TieError&) {
    return std::nullopt;
  }
}

inline ProbePairRun run_probe_pair(const SampleSource& src, cplx z, cplx zp) {
  struct Item {
    std::optional<OverlapRecord> rec;
    std::uint64_t id;
  };
  auto [items, diags] = collect_samples<Item>(
      src.kind, src.n, src.potential, src.chain,
      [&](std::vector<Item>& out, std::size_t c, std::uint64_t idx, const TriangularModel& t) {
        out.push_back({probe_pair_record(t, z, zp), detail::global_sample_id(src.chain, c, idx)});
      });
  ProbePairRun run;
  run.diagnostics = std::move(diags);
  for (auto& it : items) {
    if (it.rec)
      run.records.push_back({*it.rec, it.id});
    else
      ++run.skipped;
  }
  return run;
}

struct TailResult {
  SurvivalCurve curve;
  ProbePairRun run;
  double alpha = 0.0;
};

/// Tail bound check P(Y >= delta) <= 2 exp(-alpha delta / 2) for the probe pair.
inline TailResult tail_experiment(const SampleSource& src, cplx z, cplx zp, double alpha,
                                  std::span<const double> deltas) {
  TailResult r;
  r.alpha = alpha;
  r.run = run_probe_pair(src, z, zp);
  const auto ys = r.run.ys();
  if (ys.empty()) throw Error("tail_experiment: no usable samples");
  r.curve = survival_curve(ys, alpha, deltas);
  return r;
}

enum class Pairing { probe_pair, all_pairs };

inline std::string to_string(Pairing p) { return p == Pairing::all_pairs ? "all-pairs" : "probe-pair"; }

/// 2x exp(-x^2), the density of the modulus of a standard complex Gaussian.
inline double rayleigh_density(double x) { return x <= 0.0 ? 0.0 : 2.0 * x * std::exp(-x * x); }
inline double rayleigh_cdf(double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x * x); }

struct HistogramOptions {
  double lo = 0.0;
  double hi = 3.5;
  std::size_t bins = 70;
};

struct YLawResult {
  Pairing pairing = Pairing::probe_pair;
  std::vector<double> ys;              // raw Y values (pooled)
  std::vector<TaggedRecord> records;   // probe-pair mode only
  stats::MeanSe mean_y;
  std::optional<double> ks;            // probe-pair mode only
  double rescale = 1.0;                // sqrt(Y) is divided by this before binning
  stats::Histogram histogram;
  double discrepancy = 0.0;            // integrated |histogram density - 2x e^{-x^2}|
  std::size_t samples = 0;
  std::size_t skipped = 0;
  std::vector<ChainDiagnostics> diagnostics;
};

/// All-pairs Y values of one sample (every pair i < j of eigenvalues).
inline std::vector<double> all_pairs_y(const TriangularModel& t) {
  const auto ev = all_eigenvectors(t);
  std::vector<double> ys;
  ys.reserve(t.n() * (t.n() - 1) / 2);
  for (std::size_t i = 0; i < t.n(); ++i)
    for (std::size_t j = i + 1; j < t.n(); ++j)
      ys.push_back(y_value(t(i, i), t(j, j), std::abs(overlap(ev[i], ev[j])), t.n()));
  return ys;
}

/// Law of Y. Probe-pair mode attaches a KS test against Exp(1); all-pairs mode
/// pools correlated pairs and reports only the histogram of sqrt(Y). With
/// `rescale_second_moment`, sqrt(Y) is scaled so its empirical second moment is 1.
inline YLawResult y_law_experiment(const SampleSource& src, Pairing pairing, cplx z, cplx zp,
                                   bool rescale_second_moment, const HistogramOptions& hopt = {}) {
  YLawResult r;
  r.pairing = pairing;
  if (pairing == Pairing::probe_pair) {
    auto run = run_probe_pair(src, z, zp);
    r.ys = run.ys();
    r.records = std::move(run.records);
    r.skipped = run.skipped;
    r.samples = r.ys.size();
    r.diagnostics = std::move(run.diagnostics);
  } else {
    struct Item {
      std::vector<double> ys;
      bool ok;
    };
    auto [items, diags] = collect_samples<Item>(
        src.kind, src.n, src.potential, src.chain,
        [](std::vector<Item>& out, std::size_t, std::uint64_t, const TriangularModel& t) {
          try {
            out.push_back({all_pairs_y(t), true});
          } catch (const DegenerateEigenvalueError&) {
            out.push_back({{}, false});
          }
        });
    r.diagnostics = std::move(diags);
    for (auto& it : items) {
      if (!it.ok) {
        ++r.skipped;
        continue;
      }
      ++r.samples;
      r.ys.insert(r.ys.end(), it.ys.begin(), it.ys.end());
    }
  }
  if (r.ys.empty()) throw Error("y_law_experiment: no usable samples");

  r.mean_y = stats::mean_se(r.ys);
  if (pairing == Pairing::probe_pair) r.ks = stats::ks_distance(r.ys, stats::exp1_cdf);

  if (rescale_second_moment) r.rescale = std::sqrt(r.mean_y.mean);
  std::vector<double> roots(r.ys.size());
  for (std::size_t k = 0; k < r.ys.size(); ++k) roots[k] = std::sqrt(r.ys[k]) / r.rescale;
  r.histogram = stats::histogram(roots, hopt.lo, hopt.hi, hopt.bins);
  r.discrepancy = stats::integrated_abs_discrepancy(r.histogram, rayleigh_density, rayleigh_cdf);
  return r;
}

/// One repetition of the Gaussian-array experiment: the k(k-1)/2 values
/// sqrt(n)(lambda_j - lambda_i) <e^{i theta_i} v_i, e^{i theta_j} v_j>, i < j.
struct GaussianArraySample {
  std::size_t k = 0;
  std::vector<cplx> entries;
  std::uint64_t sample_id = 0;
};

/// Array entries for T given probe-selected indices and phases.
inline std::vector<cplx> gaussian_array_entries(const TriangularModel& t,
                                                std::span<const std::size_t> idx,
                                                std::span<const double> theta) {
  std::vector<EigenvectorSlice> ev;
  for (std::size_t i : idx) ev.push_back(back_substitute(t, i));
  const double rn = std::sqrt(static_cast<double>(t.n()));
  std::vector<cplx> out;
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = a + 1; b < idx.size(); ++b)
      out.push_back(rn * (t(idx[b], idx[b]) - t(idx[a], idx[a])) *
                    overlap(ev[a], ev[b], theta[a], theta[b]));
  return out;
}

struct MomentCheck {
  stats::ComplexMoments moments;
  bool mean_ok = false;
  bool pseudo_variance_ok = false;
  bool second_ok = false;
  bool fourth_ok = false;
  bool all() const { return mean_ok && pseudo_variance_ok && second_ok && fourth_ok; }
};

/// 3-sigma checks of a sample against a standard complex Gaussian.
inline MomentCheck check_standard_complex_gaussian(std::span<const cplx> z) {
  MomentCheck c;
  c.moments = stats::complex_moments(z);
  const double r = static_cast<double>(z.size());
  c.mean_ok = std::abs(c.moments.mean) < 3.0 / std::sqrt(r);
  c.pseudo_variance_ok = std::abs(c.moments.pseudo_variance) < 3.0 * std::sqrt(2.0 / r);
  c.second_ok = std::abs(c.moments.second - 1.0) < 3.0 * std::sqrt(1.0 / r);
  c.fourth_ok = std::abs(c.moments.fourth - 2.0) < 3.0 * std::sqrt(20.0 / r);
  return c;
}

struct CrossCorrelation {
  std::size_t a = 0, b = 0;
  double hermitian = 0.0;  // |E Z_a conj(Z_b)| / sqrt(E|Z_a|^2 E|Z_b|^2)
  double pseudo = 0.0;     // |E Z_a Z_b| / sqrt(E|Z_a|^2 E|Z_b|^2)
  bool ok = false;
};

inline std::vector<CrossCorrelation> cross_correlations(const std::vector<std::vector<cplx>>& cols) {
  std::vector<CrossCorrelation> out;
  if (cols.empty()) return out;
  const double r = static_cast<double>(cols[0].size());
  for (std::size_t a = 0; a < cols.size(); ++a) {
    for (std::size_t b = a + 1; b < cols.size(); ++b) {
      cplx h{}, p{};
      double sa = 0.0, sb = 0.0;
      for (std::size_t s = 0; s < cols[a].size(); ++s) {
        h += cols[a][s] * std::conj(cols[b][s]);
        p += cols[a][s] * cols[b][s];
        sa += std::norm(cols[a][s]);
        sb += std::norm(cols[b][s]);
      }
      const double scale = std::sqrt(sa * sb);
      CrossCorrelation cc{a, b, std::abs(h) / scale, std::abs(p) / scale, false};
      cc.ok = cc.hermitian < 3.0 / std::sqrt(r) && cc.pseudo < 3.0 / std::sqrt(r);
      out.push_back(cc);
    }
  }
  return out;
}

struct GaussianArrayReport {
  std::vector<GaussianArraySample> samples;
  std::vector<MomentCheck> entry_checks;
  std::vector<CrossCorrelation> correlations;
  std::size_t skipped = 0;
  std::vector<ChainDiagnostics> diagnostics;

  bool all_pass() const {
    if (samples.empty()) return false;
    for (const auto& c : entry_checks)
      if (!c.all()) return false;
    for (const auto& c : correlations)
      if (!c.ok) return false;
    return true;
  }
};

/// Moment and correlation report for GaussianArraySample columns.
inline void summarize_gaussian_array(GaussianArrayReport& rep, std::size_t k) {
  const std::size_t m = k * (k - 1) / 2;
  std::vector<std::vector<cplx>> cols(m);
  for (const auto& s : rep.samples)
    for (std::size_t e = 0; e < m; ++e) cols[e].push_back(s.entries[e]);
  rep.entry_checks.clear();
  for (const auto& c : cols) rep.entry_checks.push_back(check_standard_complex_gaussian(c));
  rep.correlations = cross_correlations(cols);
}

/// Repetitions of the Gaussian-array statistic under the Ginibre sampler. Each
/// repetition draws fresh phases theta_i ~ U[0, 2pi) from its own substream.
/// A repetition where two probes select the same eigenvalue is skipped.
inline GaussianArrayReport gaussian_array_experiment(const SampleSource& src, const ProbeSet& probes) {
  const std::size_t k = probes.probes.size();
  if (k < 2) throw Error("gaussian_array_experiment: need at least two probes");
  struct Item {
    std::optional<GaussianArraySample> s;
  };
  auto [items, diags] = collect_samples<Item>(
      src.kind, src.n, src.potential, src.chain,
      [&](std::vector<Item>& out, std::size_t c, std::uint64_t idx, const TriangularModel& t) {
        const std::uint64_t id = detail::global_sample_id(src.chain, c, idx);
        Engine rng = make_engine(src.chain.seed, StreamKind::phases, id);
        std::vector<double> theta(k);
        for (double& th : theta) th = 2.0 * std::numbers::pi * uniform01(rng);
        try {
          const auto diag = t.diag();
          std::vector<std::size_t> sel;
          for (const cplx& z : probes.probes) {
            const std::size_t i = select_nearest(z, diag);
            if (std::find(sel.begin(), sel.end(), i) != sel.end()) {
              out.push_back({std::nullopt});
              return;
            }
            sel.push_back(i);
          }
          out.push_back({GaussianArraySample{k, gaussian_array_entries(t, sel, theta), id}});
        } catch (const DegenerateEigenvalueError&) {
          out.push_back({std::nullopt});
        } catch (const TieError&) {
          out.push_back({std::nullopt});
        }
      });
  GaussianArrayReport rep;
  rep.diagnostics = std::move(diags);
  for (auto& it : items) {
    if (it.s)
      rep.samples.push_back(std::move(*it.s));
    else
      ++rep.skipped;
  }
  summarize_gaussian_array(rep, k);
  return rep;
}

/// Disk count around z0 and, optionally, the mesoscopic spacing of a probe pair.
struct LocalLawReport {
  std::size_t count = 0;   // #{i : |t_ii - z0| <= n^{-s}}
  double threshold = 0.0;  // n^{1-2s} / 5
  bool count_ok = false;
  std::optional<double> scaled_gap;      // sqrt(n) |lambda' - lambda|
  std::optional<double> gap_threshold;   // n^delta
  std::optional<bool> spacing_ok;
};

struct SpacingProbe {
  cplx z;
  cplx zp;
  double delta = 0.1;
};

inline LocalLawReport local_law_check(std::span<const cplx> diag, cplx z0, double s,
                                      std::optional<SpacingProbe> spacing = std::nullopt) {
  LocalLawReport r;
  const double n = static_cast<double>(diag.size());
  const double radius = std::pow(n, -s);
  for (const cplx& d : diag)
    if (std::abs(d - z0) <= radius) ++r.count;
  r.threshold = std::pow(n, 1.0 - 2.0 * s) / 5.0;
  r.count_ok = static_cast<double>(r.count) >= r.threshold;
  if (spacing) {
    const auto [a, b] = select_probe_pair(spacing->z, spacing->zp, diag);
    r.scaled_gap = std::sqrt(n) * std::abs(diag[b] - diag[a]);
    r.gap_threshold = std::pow(n, spacing->delta);
    r.spacing_ok = *r.scaled_gap >= *r.gap_threshold;
  }
  return r;
}

struct LocalLawSummary {
  std::vector<LocalLawReport> reports;
  double count_pass_fraction = 0.0;
  std::optional<double> spacing_pass_fraction;
  std::vector<ChainDiagnostics> diagnostics;
};

inline LocalLawSummary local_law_experiment(const SampleSource& src, cplx z0, double s,
                                            std::optional<SpacingProbe> spacing = std::nullopt) {
  auto [reports, diags] = collect_samples<LocalLawReport>(
      src.kind, src.n, src.potential, src.chain,
      [&](std::vector<LocalLawReport>& out, std::size_t, std::uint64_t, const TriangularModel& t) {
        out.push_back(local_law_check(t.diag(), z0, s, spacing));
      });
  LocalLawSummary sum;
  sum.reports = std::move(reports);
  sum.diagnostics = std::move(diags);
  std::size_t ok = 0, sok = 0;
  for (const auto& r : sum.reports) {
    ok += r.count_ok ? 1 : 0;
    if (r.spacing_ok && *r.spacing_ok) ++sok;
  }
  const double m = static_cast<double>(sum.reports.size());
  sum.count_pass_fraction = static_cast<double>(ok) / m;
  if (spacing) sum.spacing_pass_fraction = static_cast<double>(sok) / m;
  return sum;
}

}  // namespace overlap_lab
