#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "overlap_lab/errors.hpp"
#include "overlap_lab/triangular_storage.hpp"

namespace overlap_lab {

/// Gap below which back-substitution refuses to divide.
inline constexpr double kDegenerateGap = 1e-12;

/// Right eigenvector of T for eigenvalue t_ii, supported on coordinates 0..i,
/// normalized so that its last component is exactly 1.
struct EigenvectorSlice {
  std::size_t index = 0;
  std::vector<cplx> components;
  double norm = 0.0;
};

/// Solves (T - t_ii) x = 0 with x(i) = 1 by descending back-substitution:
/// x(l) = (t_ii - t_ll)^{-1} sum_{m=l+1}^{i} t_lm x(m).
inline EigenvectorSlice back_substitute(const TriangularModel& t, std::size_t i) {
  if (i >= t.n()) throw Error("back_substitute: index out of range");
  EigenvectorSlice s;
  s.index = i;
  s.components.assign(i + 1, cplx{});
  s.components[i] = 1.0;
  const cplx lambda = t(i, i);
  for (std::size_t l = i; l-- > 0;) {
    const cplx gap = lambda - t(l, l);
    if (std::abs(gap) < kDegenerateGap)
      throw DegenerateEigenvalueError("back_substitute: |t_" + std::to_string(i) + "," +
                                      std::to_string(i) + " - t_" + std::to_string(l) + "," +
                                      std::to_string(l) + "| below guard");
    cplx acc{};
    for (std::size_t m = l + 1; m <= i; ++m) acc += t(l, m) * s.components[m];
    s.components[l] = acc / gap;
  }
  double sq = 0.0;
  for (const cplx& c : s.components) sq += std::norm(c);
  s.norm = std::sqrt(sq);
  return s;
}

/// ||T x - t_ii x|| with x padded by zeros above its index.
inline double eigen_residual(const TriangularModel& t, const EigenvectorSlice& s) {
  const cplx lambda = t(s.index, s.index);
  double sq = 0.0;
  for (std::size_t r = 0; r <= s.index; ++r) {
    cplx acc = -lambda * s.components[r];
    for (std::size_t m = r; m <= s.index; ++m) acc += t(r, m) * s.components[m];
    sq += std::norm(acc);
  }
  return std::sqrt(sq);
}

/// <w_i, w_j> = e^{i(theta_j - theta_i)} (||x_i|| ||x_j||)^{-1} sum_l conj(x_i(l)) x_j(l)
/// for precomputed slices. Works for either index order; the sum runs over the
/// common support.
inline cplx overlap(const EigenvectorSlice& xi, const EigenvectorSlice& xj, double theta_i = 0.0,
                    double theta_j = 0.0) {
  const std::size_t common = std::min(xi.index, xj.index) + 1;
  cplx acc{};
  for (std::size_t l = 0; l < common; ++l) acc += std::conj(xi.components[l]) * xj.components[l];
  return std::polar(1.0, theta_j - theta_i) * acc / (xi.norm * xj.norm);
}

inline cplx overlap(const TriangularModel& t, std::size_t i, std::size_t j, double theta_i = 0.0,
                    double theta_j = 0.0) {
  if (i == j) throw Error("overlap: indices must differ");
  return overlap(back_substitute(t, i), back_substitute(t, j), theta_i, theta_j);
}

/// One (lambda, lambda', <v, v'>, Y) observation.
struct OverlapRecord {
  cplx lambda;
  cplx lambda_prime;
  cplx overlap;
  double y = 0.0;
  std::size_t n = 0;
};

/// Y = n |lambda' - lambda|^2 / (|<v,v'>|^{-2} - 1) from the overlap modulus.
/// A zero overlap gives Y = 0 and a unit overlap gives +inf.
inline double y_value(cplx lambda, cplx lambda_prime, double overlap_abs, std::size_t n) {
  if (lambda == lambda_prime) throw DegenerateEigenvalueError("y_statistic: lambda == lambda'");
  if (!(overlap_abs >= 0.0 && overlap_abs <= 1.0 + 1e-12))
    throw Error("y_statistic: overlap modulus outside [0, 1]");
  if (overlap_abs == 0.0) return 0.0;
  const double c2 = std::min(overlap_abs * overlap_abs, 1.0);
  const double s2 = 1.0 - c2;
  if (s2 <= 0.0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(n) * std::norm(lambda_prime - lambda) * c2 / s2;
}

inline OverlapRecord y_statistic(cplx lambda, cplx lambda_prime, cplx overlap_value, std::size_t n) {
  return {lambda, lambda_prime, overlap_value, y_value(lambda, lambda_prime, std::abs(overlap_value), n), n};
}

inline OverlapRecord y_statistic(cplx lambda, cplx lambda_prime, double overlap_abs, std::size_t n) {
  return y_statistic(lambda, lambda_prime, cplx(overlap_abs, 0.0), n);
}

/// Record for the eigenpair (i, j) of T.
inline OverlapRecord overlap_record(const TriangularModel& t, std::size_t i, std::size_t j) {
  return y_statistic(t(i, i), t(j, j), overlap(t, i, j), t.n());
}

/// Quantities bounded in the proof of the Gaussian-array limit:
/// max_{l<i} |x_i(l)| sqrt(n) |t_ii - t_ll| and ||x_i|| - 1.
struct MagnitudeDiagnostic {
  std::size_t index = 0;
  double max_scaled_component = 0.0;
  double norm_excess = 0.0;
};

inline std::vector<MagnitudeDiagnostic> magnitude_diagnostics(const TriangularModel& t,
                                                              std::span<const std::size_t> indices) {
  std::vector<MagnitudeDiagnostic> out;
  const double rn = std::sqrt(static_cast<double>(t.n()));
  for (std::size_t i : indices) {
    const auto s = back_substitute(t, i);
    MagnitudeDiagnostic d;
    d.index = i;
    for (std::size_t l = 0; l < i; ++l)
      d.max_scaled_component = std::max(d.max_scaled_component,
                                        std::abs(s.components[l]) * rn * std::abs(t(i, i) - t(l, l)));
    d.norm_excess = s.norm - 1.0;
    out.push_back(d);
  }
  return out;
}

/// All eigenvectors of T.
inline std::vector<EigenvectorSlice> all_eigenvectors(const TriangularModel& t) {
  std::vector<EigenvectorSlice> v;
  v.reserve(t.n());
  for (std::size_t i = 0; i < t.n(); ++i) v.push_back(back_substitute(t, i));
  return v;
}

}  // namespace overlap_lab
