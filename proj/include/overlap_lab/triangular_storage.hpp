#pragma once

#include <cassert>
#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overlap_lab/errors.hpp"

namespace overlap_lab {

using cplx = std::complex<double>;

/// Number of entries of an n x n upper triangle (diagonal included).
constexpr std::size_t packed_size(std::size_t n) noexcept { return n * (n + 1) / 2; }

/// Offset of entry (i, j), i <= j, in row-major packed upper-triangular order.
constexpr std::size_t packed_index(std::size_t n, std::size_t i, std::size_t j) noexcept {
  return i * n - i * (i - 1) / 2 + (j - i);
}

/// Upper-triangular complex matrix T = [t_ij] in packed row-major storage.
/// Indices are zero-based. The diagonal carries the eigenvalues.
class TriangularModel {
 public:
  TriangularModel() = default;

  explicit TriangularModel(std::size_t n) : n_(n), entries_(packed_size(n)) {}

  TriangularModel(std::size_t n, std::vector<cplx> entries) : n_(n), entries_(std::move(entries)) {
    if (entries_.size() != packed_size(n_))
      throw Error("TriangularModel: packed length " + std::to_string(entries_.size()) +
                  " does not match n(n+1)/2 = " + std::to_string(packed_size(n_)));
  }

  /// Builds from the diagonal alone; off-diagonal entries are zero.
  static TriangularModel diagonal(std::span<const cplx> diag) {
    TriangularModel t(diag.size());
    for (std::size_t i = 0; i < diag.size(); ++i) t.entries_[packed_index(t.n_, i, i)] = diag[i];
    return t;
  }

  std::size_t n() const noexcept { return n_; }
  std::span<const cplx> entries() const noexcept { return entries_; }
  const std::vector<cplx>& packed() const noexcept { return entries_; }

  cplx operator()(std::size_t i, std::size_t j) const noexcept {
    assert(i <= j && j < n_);
    return entries_[packed_index(n_, i, j)];
  }

  /// Entry (i, j) of the full matrix, zero below the diagonal.
  cplx dense(std::size_t i, std::size_t j) const noexcept {
    return i <= j ? entries_[packed_index(n_, i, j)] : cplx{};
  }

  std::vector<cplx> diag() const {
    std::vector<cplx> d(n_);
    for (std::size_t i = 0; i < n_; ++i) d[i] = entries_[packed_index(n_, i, i)];
    return d;
  }

  /// Copy with entry (i, j) replaced.
  TriangularModel with(std::size_t i, std::size_t j, cplx value) const {
    TriangularModel t = *this;
    t.entries_[packed_index(n_, i, j)] = value;
    return t;
  }

  friend bool operator==(const TriangularModel&, const TriangularModel&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<cplx> entries_;
};

inline void to_json(nlohmann::json& j, const TriangularModel& t) {
  std::vector<double> re, im;
  re.reserve(t.packed().size());
  im.reserve(t.packed().size());
  for (const cplx& z : t.packed()) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  j = nlohmann::json{{"n", t.n()}, {"entries_re", re}, {"entries_im", im}};
}

inline void from_json(const nlohmann::json& j, TriangularModel& t) {
  const auto n = j.at("n").get<std::size_t>();
  const auto re = j.at("entries_re").get<std::vector<double>>();
  const auto im = j.at("entries_im").get<std::vector<double>>();
  if (re.size() != im.size()) throw Error("TriangularModel: entries_re/entries_im length mismatch");
  std::vector<cplx> e(re.size());
  for (std::size_t k = 0; k < re.size(); ++k) e[k] = {re[k], im[k]};
  t = TriangularModel(n, std::move(e));
}

}  // namespace overlap_lab
