#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "overlap_lab/errors.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/triangular_storage.hpp"

namespace overlap_lab {

/// |t_jj - t_ii| below this counts as a collision of the Vandermonde factor.
inline constexpr double kCollisionCutoff = 1e-300;
/// Distance differences below this are treated as ties by the ordering ops.
inline constexpr double kTieTolerance = 1e-14;

inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// Probe points z_1..z_k in the closed unit disk with separation exponent epsilon.
struct ProbeSet {
  std::vector<cplx> probes;
  double epsilon = 0.25;

  void validate() const {
    if (probes.empty()) throw ConfigError("probes", "at least one probe is required");
    for (std::size_t i = 0; i < probes.size(); ++i)
      if (!(std::abs(probes[i]) <= 1.0))
        throw ConfigError("probes[" + std::to_string(i) + "]", "must lie in the closed unit disk");
    if (!(epsilon > 0.0 && epsilon < 0.5))
      throw ConfigError("probes.epsilon", "must lie in (0, 1/2)");
  }

  /// sqrt(n) min_{i<j} |z_i - z_j| >= n^epsilon.
  bool separated_for(std::size_t n) const {
    const double nn = static_cast<double>(n);
    for (std::size_t i = 0; i < probes.size(); ++i)
      for (std::size_t j = i + 1; j < probes.size(); ++j)
        if (std::sqrt(nn) * std::abs(probes[i] - probes[j]) < std::pow(nn, epsilon)) return false;
    return true;
  }

  friend bool operator==(const ProbeSet&, const ProbeSet&) = default;
};

inline void to_json(nlohmann::json& j, const ProbeSet& p) {
  std::vector<double> re, im;
  for (const cplx& z : p.probes) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  j = nlohmann::json{{"re", re}, {"im", im}, {"epsilon", p.epsilon}};
}

inline void from_json(const nlohmann::json& j, ProbeSet& p) {
  if (!j.is_object() || !j.contains("re") || !j.contains("im"))
    throw ConfigError("probes", "expected {\"re\": [...], \"im\": [...], \"epsilon\": e}");
  const auto re = j.at("re").get<std::vector<double>>();
  const auto im = j.at("im").get<std::vector<double>>();
  if (re.size() != im.size()) throw ConfigError("probes.im", "length differs from probes.re");
  p.probes.clear();
  for (std::size_t k = 0; k < re.size(); ++k) p.probes.emplace_back(re[k], im[k]);
  p.epsilon = j.value("epsilon", 0.25);
}

/// 2 sum_{i<j} ln|t_jj - t_ii|, or -inf on a collision.
inline double log_vandermonde(std::span<const cplx> diag) {
  double acc = 0.0;
  for (std::size_t j = 1; j < diag.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const double d = std::abs(diag[j] - diag[i]);
      if (d < kCollisionCutoff) return kLogZero;
      acc += std::log(d);
    }
  }
  return 2.0 * acc;
}

/// Adds the conjugate-coordinate gradient of log|Delta|^2 to `grad[i]`.
/// Returns false on a collision.
inline bool add_vandermonde_gradient(std::span<const cplx> diag, std::span<cplx> grad) {
  for (std::size_t a = 0; a < diag.size(); ++a) {
    for (std::size_t b = a + 1; b < diag.size(); ++b) {
      const cplx gap = diag[b] - diag[a];
      if (std::abs(gap) < kCollisionCutoff) return false;
      const cplx inv = 1.0 / std::conj(gap);
      grad[b] += inv;
      grad[a] -= inv;
    }
  }
  return true;
}

struct LogDensityEvaluation {
  double value = kLogZero;
  std::vector<cplx> gradient;  // packed; empty on collision or when not requested
};

/// Unnormalized log density log|Delta|^2 - n Tr V(T*T), no ordering indicator.
inline LogDensityEvaluation evaluate_log_density(std::size_t n, std::span<const cplx> packed,
                                                 const PotentialSpec& p, bool with_gradient) {
  LogDensityEvaluation out;
  std::vector<cplx> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = packed[packed_index(n, i, i)];
  const double lv = log_vandermonde(diag);
  if (lv == kLogZero) return out;

  auto tr = detail::evaluate_trace(p, n, packed, with_gradient);
  const double nn = static_cast<double>(n);
  out.value = lv - nn * tr.value;
  if (!with_gradient) return out;

  out.gradient = std::move(tr.gradient);
  for (cplx& g : out.gradient) g *= -nn;
  std::vector<cplx> vg(n);
  add_vandermonde_gradient(diag, vg);
  for (std::size_t i = 0; i < n; ++i) out.gradient[packed_index(n, i, i)] += vg[i];
  return out;
}

inline double log_density(const TriangularModel& t, const PotentialSpec& p) {
  return evaluate_log_density(t.n(), t.entries(), p, false).value;
}

/// Conjugate-coordinate gradient of log_density. Throws on a diagonal collision.
inline TriangularModel grad_log_density(const TriangularModel& t, const PotentialSpec& p) {
  auto ev = evaluate_log_density(t.n(), t.entries(), p, true);
  if (ev.gradient.empty())
    throw DegenerateEigenvalueError("grad_log_density: diagonal collision");
  return TriangularModel(t.n(), std::move(ev.gradient));
}

/// t_ij -> exp(i(theta_i - theta_j)) t_ij, i.e. T -> D T D^* with D = diag(e^{i theta}).
inline TriangularModel apply_phase_map(const TriangularModel& t, std::span<const double> theta) {
  const std::size_t n = t.n();
  std::vector<cplx> e(t.packed());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) e[packed_index(n, i, j)] *= std::polar(1.0, theta[i] - theta[j]);
  return TriangularModel(n, std::move(e));
}

/// Index of the entry of `diag` closest to z, skipping `exclude`.
inline std::size_t select_nearest(cplx z, std::span<const cplx> diag,
                                  std::optional<std::size_t> exclude = std::nullopt) {
  const std::size_t usable = diag.size() - (exclude && *exclude < diag.size() ? 1 : 0);
  if (usable == 0) throw Error("select_nearest: no candidate entries");
  std::size_t best = diag.size();
  double best_d = std::numeric_limits<double>::infinity();
  double second_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < diag.size(); ++i) {
    if (exclude && i == *exclude) continue;
    const double d = std::abs(diag[i] - z);
    if (d < best_d) {
      second_d = best_d;
      best_d = d;
      best = i;
    } else if (d < second_d) {
      second_d = d;
    }
  }
  if (second_d - best_d < kTieTolerance)
    throw TieError("select_nearest: two entries equidistant from the probe");
  return best;
}

/// Pair (lambda, lambda') for probes (z, z'): lambda is nearest to z; lambda' is
/// nearest to z' unless that is lambda itself (or z == z'), in which case it is the
/// second nearest to z'.
inline std::pair<std::size_t, std::size_t> select_probe_pair(cplx z, cplx zp,
                                                             std::span<const cplx> diag) {
  const std::size_t a = select_nearest(z, diag);
  if (z == zp) return {a, select_nearest(zp, diag, a)};
  std::size_t b = select_nearest(zp, diag);
  if (b == a) b = select_nearest(zp, diag, a);
  return {a, b};
}

/// Permutation sigma with (diag[sigma[0]], ..., diag[sigma[n-1]]) in O_{z_1..z_n}:
/// position i receives the remaining entry strictly closest to probes[i].
inline std::vector<std::size_t> admissible_order(std::span<const cplx> probes,
                                                 std::span<const cplx> diag) {
  if (probes.size() != diag.size())
    throw Error("admissible_order: probes and diagonal differ in length");
  std::vector<std::size_t> remaining(diag.size());
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  std::vector<std::size_t> sigma;
  sigma.reserve(diag.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::size_t best_pos = 0;
    double best_d = std::numeric_limits<double>::infinity();
    double second_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      const double d = std::abs(probes[i] - diag[remaining[r]]);
      if (d < best_d) {
        second_d = best_d;
        best_d = d;
        best_pos = r;
      } else if (d < second_d) {
        second_d = d;
      }
    }
    if (remaining.size() > 1 && second_d - best_d < kTieTolerance)
      throw TieError("admissible_order: tie at probe " + std::to_string(i));
    sigma.push_back(remaining[best_pos]);
    remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_pos));
  }
  return sigma;
}

/// Membership in O_{z_1..z_n}: for all i < j, |z_i - t_i| < |z_i - t_j|.
inline bool in_admissible_set(std::span<const cplx> probes, std::span<const cplx> tuple) {
  for (std::size_t i = 0; i < tuple.size(); ++i)
    for (std::size_t j = i + 1; j < tuple.size(); ++j)
      if (!(std::abs(probes[i] - tuple[i]) < std::abs(probes[i] - tuple[j]))) return false;
  return true;
}

}  // namespace overlap_lab
