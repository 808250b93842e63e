#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "overlap_lab/errors.hpp"
#include "overlap_lab/triangular_storage.hpp"

namespace overlap_lab {

/// Polynomial potential V(x) = sum_m c_m x^m (m starting at 1) together with
/// the convexity parameter alpha for which V(x^2) - (alpha/2) x^2 is convex.
struct PotentialSpec {
  std::vector<double> coefficients;
  double alpha = 1.0;

  static PotentialSpec ginibre() { return {{1.0}, 2.0}; }
  /// V(x) = x + x^4/4 + x^5/5.
  static PotentialSpec quartic_quintic() { return {{1.0, 0.0, 0.0, 0.25, 0.2}, 2.0}; }

  std::size_t degree() const noexcept { return coefficients.size(); }

  bool is_ginibre() const noexcept {
    return coefficients.size() == 1 && coefficients[0] == 1.0;
  }

  void validate() const {
    if (coefficients.empty()) throw ConfigError("coefficients", "must be non-empty");
    for (double c : coefficients)
      if (!std::isfinite(c)) throw ConfigError("coefficients", "must be finite");
    if (!(alpha > 0.0) || !std::isfinite(alpha))
      throw ConfigError("alpha", "must be a positive real");
  }

  friend bool operator==(const PotentialSpec&, const PotentialSpec&) = default;
};

inline void to_json(nlohmann::json& j, const PotentialSpec& p) {
  j = nlohmann::json{{"coefficients", p.coefficients}, {"alpha", p.alpha}};
}

inline void from_json(const nlohmann::json& j, PotentialSpec& p) {
  if (!j.is_object()) throw ConfigError("potential", "expected an object");
  if (!j.contains("coefficients") || !j.at("coefficients").is_array())
    throw ConfigError("potential.coefficients", "expected an array of numbers");
  if (!j.contains("alpha") || !j.at("alpha").is_number())
    throw ConfigError("potential.alpha", "expected a number");
  p.coefficients = j.at("coefficients").get<std::vector<double>>();
  p.alpha = j.at("alpha").get<double>();
}

/// V(x) by Horner's rule.
inline double eval_scalar(const PotentialSpec& p, double x) {
  double acc = 0.0;
  for (std::size_t m = p.coefficients.size(); m-- > 0;) acc = (acc + p.coefficients[m]) * x;
  return acc;
}

/// V'(x).
inline double eval_scalar_derivative(const PotentialSpec& p, double x) {
  double acc = 0.0;
  for (std::size_t m = p.coefficients.size(); m-- > 0;)
    acc = acc * x + static_cast<double>(m + 1) * p.coefficients[m];
  return acc;
}

/// Value of Tr V(T*T) and the conjugate-coordinate (Wirtinger) derivative
/// d/d(conj t_ab) = [T V'(T*T)]_ab restricted to a <= b.
struct TraceEvaluation {
  double value = 0.0;
  std::vector<std::complex<double>> gradient;  // packed upper triangle
};

namespace detail {

/// Dense upper-triangular matrix from the packed layout.
inline Eigen::MatrixXcd unpack_upper(std::size_t n, std::span<const std::complex<double>> packed) {
  Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = packed[k++];
  return t;
}

inline double trace_of_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  // Tr(AB) = sum_ij A_ij B_ji; both Hermitian here so the result is real.
  return a.cwiseProduct(b.transpose()).sum().real();
}

inline TraceEvaluation evaluate_trace(const PotentialSpec& p, std::size_t n,
                                      std::span<const std::complex<double>> packed,
                                      bool with_gradient) {
  TraceEvaluation out;
  const std::size_t d = p.degree();
  const auto nn = static_cast<Eigen::Index>(n);
  const Eigen::MatrixXcd t = unpack_upper(n, packed);

  Eigen::MatrixXcd a(nn, nn);
  a.noalias() = t.triangularView<Eigen::Upper>().adjoint() * t;

  // powers[k] = A^(k+1) for k + 1 <= max(d - 1, 1)
  std::vector<Eigen::MatrixXcd> powers;
  powers.reserve(std::max<std::size_t>(d, 1));
  powers.push_back(a);
  const std::size_t top = d > 1 ? d - 1 : 1;
  while (powers.size() < top) {
    Eigen::MatrixXcd next(nn, nn);
    next.noalias() = powers.back() * a;
    powers.push_back(std::move(next));
  }

  for (std::size_t m = 1; m <= d; ++m) {
    const double c = p.coefficients[m - 1];
    if (c == 0.0) continue;
    double tr;
    if (m <= powers.size())
      tr = powers[m - 1].trace().real();
    else
      tr = trace_of_product(powers.back(), a);  // m == d == top + 1
    out.value += c * tr;
  }

  if (!with_gradient) return out;

  // V'(A) = sum_m m c_m A^(m-1)
  Eigen::MatrixXcd vprime = Eigen::MatrixXcd::Zero(nn, nn);
  for (std::size_t m = 1; m <= d; ++m) {
    const double c = p.coefficients[m - 1];
    if (c == 0.0) continue;
    const double w = static_cast<double>(m) * c;
    if (m == 1)
      vprime.diagonal().array() += w;
    else
      vprime += w * powers[m - 2];
  }
  Eigen::MatrixXcd g(nn, nn);
  g.noalias() = t.triangularView<Eigen::Upper>() * vprime;

  out.gradient.resize(packed_size(n));
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
      out.gradient[k++] = g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  return out;
}

}  // namespace detail

/// Tr V(T*T).
inline double trace_V(const TriangularModel& t, const PotentialSpec& p) {
  return detail::evaluate_trace(p, t.n(), t.entries(), false).value;
}

/// Upper-triangular part of T V'(T*T): the derivative of Tr V(T*T) with respect
/// to conj(t_ab). The real gradient in (Re t, Im t) is twice this value.
inline TriangularModel grad_trace_V(const TriangularModel& t, const PotentialSpec& p) {
  auto ev = detail::evaluate_trace(p, t.n(), t.entries(), true);
  return TriangularModel(t.n(), std::move(ev.gradient));
}

struct ConvexityReport {
  bool pass = true;
  std::size_t pairs_checked = 0;
  // First violating pair (x, y) and the amount by which the midpoint exceeded
  // the chord.
  std::optional<std::pair<double, double>> violation;
  double excess = 0.0;
};

inline constexpr double kConvexitySlack = 1e-10;

/// Midpoint-convexity probe of g(x) = V(x^2) - (alpha/2) x^2 over all pairs of
/// grid points.
inline ConvexityReport convexity_probe(const PotentialSpec& p, std::span<const double> grid,
                                       double slack = kConvexitySlack) {
  auto g = [&](double x) { return eval_scalar(p, x * x) - 0.5 * p.alpha * x * x; };
  std::vector<double> gv(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) gv[i] = g(grid[i]);

  ConvexityReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (std::size_t j = i + 1; j < grid.size(); ++j) {
      ++rep.pairs_checked;
      const double mid = g(0.5 * (grid[i] + grid[j]));
      const double chord = 0.5 * (gv[i] + gv[j]);
      if (mid > chord + slack) {
        rep.pass = false;
        rep.violation = {grid[i], grid[j]};
        rep.excess = mid - chord;
        return rep;
      }
    }
  }
  return rep;
}

/// Evenly spaced grid [lo, hi] with the given step, inclusive of hi up to rounding.
inline std::vector<double> uniform_grid(double lo, double hi, double step) {
  std::vector<double> g;
  const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + 1e-9)) + 1;
  g.reserve(count);
  for (std::size_t i = 0; i < count; ++i) g.push_back(lo + step * static_cast<double>(i));
  return g;
}

}  // namespace overlap_lab
