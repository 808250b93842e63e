#pragma once

// Independent reference computations used only by the tests. Nothing here
// calls into the library's numerical kernels.

#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using cplx = std::complex<double>;
using Dense = std::vector<std::vector<cplx>>;

inline Dense zeros(std::size_t n) { return Dense(n, std::vector<cplx>(n)); }

inline Dense multiply(const Dense& a, const Dense& b) {
  const std::size_t n = a.size();
  Dense c = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Dense adjoint(const Dense& a) {
  const std::size_t n = a.size();
  Dense c = zeros(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c[i][j] = std::conj(a[j][i]);
  return c;
}

// Upper-triangular dense matrix from a row-major list of the entries i <= j.
inline Dense upper_from_rows(std::size_t n, const std::vector<cplx>& packed) {
  Dense t = zeros(n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) t[i][j] = packed[k++];
  return t;
}

// Tr V(T* T) with V(x) = sum_m c[m-1] x^m, by repeated naive products.
inline double trace_potential(const Dense& t, const std::vector<double>& c) {
  const Dense a = multiply(adjoint(t), t);
  Dense power = a;
  double total = 0.0;
  for (std::size_t m = 0; m < c.size(); ++m) {
    double tr = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) tr += power[i][i].real();
    total += c[m] * tr;
    power = multiply(power, a);
  }
  return total;
}

// log prod_{i<j} |d_j - d_i|^2 - n Tr V(T* T).
inline double log_density(std::size_t n, const std::vector<cplx>& packed, const std::vector<double>& c) {
  const Dense t = upper_from_rows(n, packed);
  double lv = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) lv += std::log(std::norm(t[j][j] - t[i][i]));
  return lv - static_cast<double>(n) * trace_potential(t, c);
}

// Central differences of f along the real and imaginary part of every
// coordinate, returned as (df/dx + i df/dy) / 2.
inline std::vector<cplx> conjugate_gradient_fd(const std::function<double(const std::vector<cplx>&)>& f,
                                               std::vector<cplx> x, double h = 1e-5) {
  std::vector<cplx> g(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const cplx saved = x[k];
    x[k] = saved + h;
    const double fxp = f(x);
    x[k] = saved - h;
    const double fxm = f(x);
    x[k] = saved + cplx(0.0, h);
    const double fyp = f(x);
    x[k] = saved - cplx(0.0, h);
    const double fym = f(x);
    x[k] = saved;
    g[k] = 0.5 * cplx((fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h));
  }
  return g;
}

// Haar-ish unitary from the QR factorization of a complex Gaussian matrix.
inline Eigen::MatrixXcd random_unitary(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::MatrixXcd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(z);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(z.rows(), z.cols());
}

// Unit eigenvector of m for the eigenvalue closest to `shift` by inverse iteration.
inline Eigen::VectorXcd inverse_iteration(const Eigen::MatrixXcd& m, cplx shift, int iterations = 8) {
  const Eigen::Index n = m.rows();
  Eigen::MatrixXcd a = m - shift * Eigen::MatrixXcd::Identity(n, n);
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(a);
  Eigen::VectorXcd v = Eigen::VectorXcd::Ones(n);
  v.normalize();
  for (int k = 0; k < iterations; ++k) {
    v = lu.solve(v);
    v.normalize();
  }
  return v;
}

// |<v_i, v_j>| for the eigenvectors of M = Q T Q* at eigenvalues t_ii and t_jj.
inline double overlap_modulus_via_conjugation(std::size_t n, const std::vector<cplx>& packed, std::size_t i,
                                              std::size_t j, std::mt19937_64& rng) {
  const Dense t = upper_from_rows(n, packed);
  Eigen::MatrixXcd te = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) te(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t[r][c];
  const Eigen::MatrixXcd q = random_unitary(n, rng);
  const Eigen::MatrixXcd m = q * te * q.adjoint();
  const cplx bump(1e-9, -7e-10);
  const auto vi = inverse_iteration(m, t[i][i] + bump);
  const auto vj = inverse_iteration(m, t[j][j] + bump);
  return std::abs(vi.dot(vj));
}

// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, std::size_t panels = 4000) {
  if (panels % 2) ++panels;
  const double h = (b - a) / static_cast<double>(panels);
  double s = f(a) + f(b);
  for (std::size_t k = 1; k < panels; ++k) s += (k % 2 ? 4.0 : 2.0) * f(a + h * static_cast<double>(k));
  return s * h / 3.0;
}

// P(n|lambda|^2 <= x) for a uniformly chosen Ginibre eigenvalue: the average of
// Gamma(k, 1) CDFs for k = 1..n, each obtained by integrating its density.
inline double kostlan_cdf_by_quadrature(std::size_t n, double x) {
  double total = 0.0;
  for (std::size_t k = 1; k <= n; ++k) {
    const double lg = std::lgamma(static_cast<double>(k));
    auto density = [&](double u) {
      return u <= 0.0 ? (k == 1 ? 1.0 : 0.0) : std::exp((static_cast<double>(k) - 1.0) * std::log(u) - u - lg);
    };
    total += simpson(density, 0.0, x, 2000);
  }
  return total / static_cast<double>(n);
}

// n! by direct product, for small n.
inline double factorial(std::size_t n) {
  double f = 1.0;
  for (std::size_t k = 2; k <= n; ++k) f *= static_cast<double>(k);
  return f;
}

// E|t|^2 over the plane density proportional to exp(-V(|t|^2)), by radial
// quadrature of r^3 e^{-V(r^2)} against r e^{-V(r^2)}.
inline double one_by_one_second_moment(const std::function<double(double)>& v, double r_max = 6.0) {
  const double num = simpson([&](double r) { return r * r * r * std::exp(-v(r * r)); }, 0.0, r_max);
  const double den = simpson([&](double r) { return r * std::exp(-v(r * r)); }, 0.0, r_max);
  return num / den;
}

}  // namespace oracles
