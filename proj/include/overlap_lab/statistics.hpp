#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "overlap_lab/errors.hpp"

namespace overlap_lab::stats {

/// Two-sided one-sample Kolmogorov-Smirnov distance sup |F_emp - F|.
template <class Cdf>
double ks_distance(std::span<const double> samples, Cdf&& cdf) {
  if (samples.empty()) throw Error("ks_distance: empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double di = static_cast<double>(i);
    d = std::max({d, (di + 1.0) / n - f, f - di / n});
  }
  return d;
}

/// Two-sample Kolmogorov-Smirnov distance.
inline double ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size()), ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] <= v) ++i;
    while (j < y.size() && y[j] <= v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  return d;
}

/// Asymptotic two-sample KS critical value at level 0.001: 1.949 sqrt((n+m)/(nm)).
inline double ks_two_sample_critical(std::size_t n, std::size_t m) {
  const double a = static_cast<double>(n), b = static_cast<double>(m);
  return 1.949 * std::sqrt((a + b) / (a * b));
}

inline double exp1_cdf(double y) { return y <= 0.0 ? 0.0 : -std::expm1(-y); }

/// P(Gamma(k, 1) <= x) for integer k >= 1: 1 - e^{-x} sum_{j<k} x^j / j!.
inline double gamma_cdf_integer(std::size_t k, double x) {
  if (x <= 0.0) return 0.0;
  double term = std::exp(-x);  // e^{-x} x^j / j!, updated in place
  double tail = 0.0;
  if (term == 0.0) {
    // Underflow for large x: accumulate in log space.
    for (std::size_t j = 0; j < k; ++j)
      tail += std::exp(-x + static_cast<double>(j) * std::log(x) - std::lgamma(static_cast<double>(j) + 1.0));
    return std::clamp(1.0 - tail, 0.0, 1.0);
  }
  for (std::size_t j = 0; j < k; ++j) {
    tail += term;
    term *= x / static_cast<double>(j + 1);
  }
  return std::clamp(1.0 - tail, 0.0, 1.0);
}

/// CDF of n|lambda|^2 for a uniformly chosen Ginibre eigenvalue:
/// (1/n) sum_{k=1..n} P(Gamma(k,1) <= x) = 1 - (1/n) sum_{j<n} (n - j) e^{-x} x^j / j!.
inline double kostlan_mixture_cdf(std::size_t n, double x) {
  if (x <= 0.0) return 0.0;
  const double lx = std::log(x);
  double acc = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lt = -x + static_cast<double>(j) * lx - std::lgamma(static_cast<double>(j) + 1.0);
    acc += static_cast<double>(n - j) * std::exp(lt);
  }
  return std::clamp(1.0 - acc / static_cast<double>(n), 0.0, 1.0);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline double mean(std::span<const double> v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Sample mean with the iid standard error.
inline MeanSe mean_se(std::span<const double> v) {
  MeanSe r;
  if (v.empty()) return r;
  r.mean = mean(v);
  if (v.size() < 2) return r;
  double ss = 0.0;
  for (double x : v) ss += (x - r.mean) * (x - r.mean);
  r.se = std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
  return r;
}

/// Sample mean with a batch-means standard error (for autocorrelated chains).
/// Falls back to the iid estimate when there are too few values, and never
/// reports less than it.
inline MeanSe batch_mean_se(std::span<const double> v, std::size_t batches = 20) {
  MeanSe iid = mean_se(v);
  if (v.size() < 2 * batches) return iid;
  const std::size_t b = v.size() / batches;
  std::vector<double> means(batches);
  for (std::size_t k = 0; k < batches; ++k)
    means[k] = mean(v.subspan(k * b, b));
  MeanSe bm = mean_se(means);
  return {iid.mean, std::max(iid.se, bm.se)};
}

/// Complex moments reported by the Gaussian-array experiment.
struct ComplexMoments {
  std::complex<double> mean;
  std::complex<double> pseudo_variance;  // E Z^2
  double second = 0.0;                   // E|Z|^2
  double fourth = 0.0;                   // E|Z|^4
  std::size_t count = 0;
};

inline ComplexMoments complex_moments(std::span<const std::complex<double>> z) {
  ComplexMoments m;
  m.count = z.size();
  if (z.empty()) return m;
  for (const auto& v : z) {
    m.mean += v;
    m.pseudo_variance += v * v;
    const double a = std::norm(v);
    m.second += a;
    m.fourth += a * a;
  }
  const double n = static_cast<double>(z.size());
  m.mean /= n;
  m.pseudo_variance /= n;
  m.second /= n;
  m.fourth /= n;
  return m;
}

struct Histogram {
  std::vector<double> edges;  // size bins + 1
  std::vector<std::size_t> counts;
  std::size_t total = 0;      // includes values outside the edges
  std::size_t below = 0;
  std::size_t above = 0;
};

inline Histogram histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw Error("histogram: need bins > 0 and hi > lo");
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k)
    h.edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  const double w = (hi - lo) / static_cast<double>(bins);
  for (double v : values) {
    ++h.total;
    if (v < lo) {
      ++h.below;
    } else if (v >= hi) {
      ++h.above;
    } else {
      auto k = static_cast<std::size_t>((v - lo) / w);
      h.counts[std::min(k, bins - 1)]++;
    }
  }
  return h;
}

/// integral |h(x) - f(x)| dx where h is the histogram normalized to a density
/// over all values, f a density with CDF `cdf`. Within each bin the integral is
/// evaluated by the composite midpoint rule; mass outside the edges counts as
/// |P_emp(outside) - P_f(outside)|.
template <class Density, class Cdf>
double integrated_abs_discrepancy(const Histogram& h, Density&& f, Cdf&& cdf,
                                  std::size_t sub = 64) {
  const double total = static_cast<double>(h.total);
  if (total == 0) throw Error("integrated_abs_discrepancy: empty histogram");
  double acc = 0.0;
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double a = h.edges[k], b = h.edges[k + 1];
    const double w = b - a;
    const double hk = static_cast<double>(h.counts[k]) / (total * w);
    const double dx = w / static_cast<double>(sub);
    for (std::size_t s = 0; s < sub; ++s) acc += std::abs(hk - f(a + (static_cast<double>(s) + 0.5) * dx)) * dx;
  }
  acc += std::abs(static_cast<double>(h.below) / total - cdf(h.edges.front()));
  acc += std::abs(static_cast<double>(h.above) / total - (1.0 - cdf(h.edges.back())));
  return acc;
}

/// Empirical P(Y >= delta) for each delta.
inline std::vector<double> survival(std::span<const double> values, std::span<const double> deltas) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> out;
  out.reserve(deltas.size());
  const double n = static_cast<double>(sorted.size());
  for (double d : deltas) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), d);
    out.push_back(static_cast<double>(sorted.end() - it) / n);
  }
  return out;
}

/// `count` logarithmically spaced points in [lo, hi].
inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  if (count == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t k = 0; k < count; ++k)
    g[k] = std::exp(a + (b - a) * static_cast<double>(k) / static_cast<double>(count - 1));
  g.back() = hi;
  return g;
}

/// Pearson correlation.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace overlap_lab::stats
