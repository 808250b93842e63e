#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "overlap_lab/errors.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/rng.hpp"
#include "overlap_lab/triangular.hpp"
#include "overlap_lab/triangular_storage.hpp"

namespace overlap_lab {

/// MALA acceptance rate targeted by the burn-in step-size adaptation.
inline constexpr double kTargetAcceptance = 0.57;
/// Burn-in acceptance below this aborts the chain.
inline constexpr double kMinBurnInAcceptance = 0.01;

/// h = 0.7 n^{-3/4}.
inline double default_step_size(std::size_t n) {
  return 0.7 * std::pow(static_cast<double>(n), -0.75);
}

struct ChainConfig {
  std::optional<double> step_size;  // unset: default_step_size(n)
  std::uint64_t n_steps = 2000;
  std::uint64_t burn_in = 1000;
  std::uint64_t thinning = 10;
  std::uint64_t seed = 0;
  std::uint64_t n_chains = 1;
  bool tune = true;

  void validate(const std::string& prefix = "chain") const {
    if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size)))
      throw ConfigError(prefix + ".step_size", "must be positive");
    if (thinning < 1) throw ConfigError(prefix + ".thinning", "must be at least 1");
    if (burn_in >= n_steps) throw ConfigError(prefix + ".burn_in", "must be smaller than n_steps");
    if (n_chains < 1) throw ConfigError(prefix + ".n_chains", "must be at least 1");
  }

  std::uint64_t emissions_per_chain() const { return (n_steps - burn_in) / thinning; }
  std::uint64_t total_emissions() const { return emissions_per_chain() * n_chains; }

  /// Chain length such that n_chains chains emit at least `samples` states.
  static ChainConfig for_samples(std::uint64_t samples, std::uint64_t burn_in,
                                 std::uint64_t thinning, std::uint64_t n_chains,
                                 std::uint64_t seed) {
    ChainConfig c;
    c.burn_in = burn_in;
    c.thinning = thinning;
    c.n_chains = n_chains;
    c.seed = seed;
    const std::uint64_t per_chain = (samples + n_chains - 1) / n_chains;
    c.n_steps = burn_in + per_chain * thinning;
    return c;
  }

  friend bool operator==(const ChainConfig&, const ChainConfig&) = default;
};

inline void to_json(nlohmann::json& j, const ChainConfig& c) {
  j = nlohmann::json{{"n_steps", c.n_steps}, {"burn_in", c.burn_in}, {"thinning", c.thinning},
                     {"seed", c.seed},       {"n_chains", c.n_chains}, {"tune", c.tune}};
  if (c.step_size) j["step_size"] = *c.step_size;
}

inline void from_json(const nlohmann::json& j, ChainConfig& c) {
  if (!j.is_object()) throw ConfigError("chain", "expected an object");
  auto get_u64 = [&](const char* key, std::uint64_t fallback) -> std::uint64_t {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(std::string("chain.") + key, "expected a non-negative integer");
    return v.get<std::uint64_t>();
  };
  ChainConfig d;
  c.n_steps = get_u64("n_steps", d.n_steps);
  c.burn_in = get_u64("burn_in", d.burn_in);
  c.thinning = get_u64("thinning", d.thinning);
  c.seed = get_u64("seed", d.seed);
  c.n_chains = get_u64("n_chains", d.n_chains);
  c.tune = j.value("tune", d.tune);
  if (j.contains("step_size")) {
    if (!j.at("step_size").is_number()) throw ConfigError("chain.step_size", "expected a number");
    c.step_size = j.at("step_size").get<double>();
  } else {
    c.step_size.reset();
  }
}

/// Per-chain record of what the sampler did.
struct ChainDiagnostics {
  std::uint64_t chain = 0;
  double initial_step_size = 0.0;
  double tuned_step_size = 0.0;
  double burn_in_acceptance = 0.0;
  double acceptance_rate = 0.0;  // after burn-in
  std::uint64_t emitted = 0;
};

inline void to_json(nlohmann::json& j, const ChainDiagnostics& d) {
  j = nlohmann::json{{"chain", d.chain},
                     {"initial_step_size", d.initial_step_size},
                     {"tuned_step_size", d.tuned_step_size},
                     {"burn_in_acceptance", d.burn_in_acceptance},
                     {"acceptance_rate", d.acceptance_rate},
                     {"emitted", d.emitted}};
}

/// Sunflower (Fibonacci-angle) lattice of n points filling the unit disk.
inline std::vector<cplx> sunflower_lattice(std::size_t n) {
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<cplx> pts(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double r = std::sqrt((static_cast<double>(k) + 0.5) / static_cast<double>(n));
    pts[k] = std::polar(r, golden * static_cast<double>(k));
  }
  return pts;
}

/// Log-density target for MALA over a vector of complex coordinates. `evaluate`
/// returns the value and the conjugate-coordinate gradient (empty with value
/// -inf outside the support).
using TargetFn = std::function<LogDensityEvaluation(std::span<const cplx>)>;

/// log q(to | from) for the Langevin proposal to = from + h^2 g(from) + h xi, up to
/// the constant shared by both directions. `grad_from` is the conjugate-coordinate
/// gradient, so the real drift (h^2/2) * 2 g equals h^2 g.
inline double mala_log_proposal(std::span<const cplx> to, std::span<const cplx> from,
                                std::span<const cplx> grad_from, double h) {
  const double h2 = h * h;
  double acc = 0.0;
  for (std::size_t k = 0; k < to.size(); ++k) acc += std::norm(to[k] - from[k] - h2 * grad_from[k]);
  return -acc / (2.0 * h2);
}

/// Metropolis-Hastings log acceptance ratio for a MALA move x -> y.
inline double mala_log_accept_ratio(std::span<const cplx> x, const LogDensityEvaluation& ex,
                                    std::span<const cplx> y, const LogDensityEvaluation& ey,
                                    double h) {
  if (ey.value == kLogZero) return kLogZero;
  return ey.value - ex.value + mala_log_proposal(x, y, ey.gradient, h) -
         mala_log_proposal(y, x, ex.gradient, h);
}

/// Metropolis-adjusted Langevin chain over complex coordinates treated as pairs
/// of reals. The step size adapts toward kTargetAcceptance while `adapting` is on.
class MalaChain {
 public:
  MalaChain(TargetFn target, std::vector<cplx> start, double step_size)
      : target_(std::move(target)), x_(std::move(start)), h_(step_size), log_h_(std::log(step_size)) {
    ex_ = target_(x_);
    if (ex_.value == kLogZero) throw Error("MalaChain: starting point outside the support");
  }

  /// One proposal; returns true if accepted.
  bool step(Engine& rng, bool adapting) {
    std::normal_distribution<double> normal;
    const double h2 = h_ * h_;
    y_.resize(x_.size());
    for (std::size_t k = 0; k < x_.size(); ++k) {
      const double re = normal(rng);
      const double im = normal(rng);
      y_[k] = x_[k] + h2 * ex_.gradient[k] + h_ * cplx(re, im);
    }
    LogDensityEvaluation ey = target_(y_);
    const double log_ratio = mala_log_accept_ratio(x_, ex_, y_, ey, h_);
    const double u = uniform01(rng);
    const bool accept = log_ratio >= 0.0 || std::log(u) < log_ratio;
    if (adapting) {
      const double a = log_ratio >= 0.0 ? 1.0 : std::exp(log_ratio);
      ++adapt_steps_;
      const double rate = 0.5 / std::pow(1.0 + static_cast<double>(adapt_steps_) / 10.0, 0.6);
      log_h_ += rate * (a - kTargetAcceptance);
    }
    if (accept) {
      std::swap(x_, y_);
      ex_ = std::move(ey);
    }
    if (adapting) h_ = std::exp(log_h_);
    return accept;
  }

  std::span<const cplx> state() const noexcept { return x_; }
  double log_density() const noexcept { return ex_.value; }
  double step_size() const noexcept { return h_; }

 private:
  TargetFn target_;
  std::vector<cplx> x_, y_;
  LogDensityEvaluation ex_;
  double h_;
  double log_h_;
  std::uint64_t adapt_steps_ = 0;
};

/// Receives each emitted sample: (emission index within chain, T).
using SampleSink = std::function<void(std::uint64_t, const TriangularModel&)>;

namespace detail {

/// Burn-in with adaptation, then emission every `thinning` steps.
/// `emit(rng, state)` builds and forwards a sample.
template <class Emit>
ChainDiagnostics drive_chain(MalaChain& chain, const ChainConfig& cfg, std::uint64_t chain_index,
                             Engine& rng, Emit&& emit) {
  ChainDiagnostics d;
  d.chain = chain_index;
  d.initial_step_size = chain.step_size();
  std::uint64_t accepted = 0;
  for (std::uint64_t s = 0; s < cfg.burn_in; ++s) accepted += chain.step(rng, cfg.tune) ? 1 : 0;
  if (cfg.burn_in > 0) {
    d.burn_in_acceptance = static_cast<double>(accepted) / static_cast<double>(cfg.burn_in);
    if (d.burn_in_acceptance < kMinBurnInAcceptance)
      throw DivergenceError("MALA acceptance " + std::to_string(d.burn_in_acceptance) +
                            " over burn-in (chain " + std::to_string(chain_index) +
                            ", step size " + std::to_string(chain.step_size()) + ")");
  }
  d.tuned_step_size = chain.step_size();
  accepted = 0;
  const std::uint64_t sampling_steps = cfg.emissions_per_chain() * cfg.thinning;
  for (std::uint64_t s = 1; s <= sampling_steps; ++s) {
    accepted += chain.step(rng, false) ? 1 : 0;
    if (s % cfg.thinning == 0) emit(d.emitted++, chain.state());
  }
  if (sampling_steps > 0)
    d.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(sampling_steps);
  return d;
}

}  // namespace detail

/// Log density of the two-dimensional Coulomb gas
/// 2 sum_{i<j} ln|d_j - d_i| - n sum_i |d_i|^2 (the diagonal of T in the Ginibre case).
inline LogDensityEvaluation ginibre_gas_log_density(std::span<const cplx> diag) {
  LogDensityEvaluation out;
  const double lv = log_vandermonde(diag);
  if (lv == kLogZero) return out;
  const double n = static_cast<double>(diag.size());
  double sq = 0.0;
  for (const cplx& d : diag) sq += std::norm(d);
  out.value = lv - n * sq;
  out.gradient.assign(diag.size(), cplx{});
  add_vandermonde_gradient(diag, out.gradient);
  for (std::size_t i = 0; i < diag.size(); ++i) out.gradient[i] -= n * diag[i];
  return out;
}

/// One chain of the Ginibre sampler: the diagonal follows the Coulomb gas via
/// MALA, and every emission carries fresh off-diagonal entries drawn exactly as
/// iid complex Gaussians with E|t_ij|^2 = 1/n.
inline ChainDiagnostics sample_ginibre_chain(std::size_t n, const ChainConfig& cfg,
                                             std::uint64_t chain_index, const SampleSink& sink) {
  if (n < 1) throw Error("sample_ginibre_T: n must be positive");
  Engine rng = make_engine(cfg.seed, StreamKind::chain, chain_index);
  MalaChain chain(ginibre_gas_log_density, sunflower_lattice(n),
                  cfg.step_size.value_or(default_step_size(n)));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  return detail::drive_chain(chain, cfg, chain_index, rng,
                             [&](std::uint64_t idx, std::span<const cplx> diag) {
                               std::vector<cplx> e(packed_size(n));
                               for (std::size_t i = 0; i < n; ++i) {
                                 e[packed_index(n, i, i)] = diag[i];
                                 for (std::size_t j = i + 1; j < n; ++j)
                                   e[packed_index(n, i, j)] = scale * standard_complex_normal(rng);
                               }
                               sink(idx, TriangularModel(n, std::move(e)));
                             });
}

/// Starting point for the general sampler: sunflower diagonal, Ginibre off-diagonals.
inline std::vector<cplx> general_initial_state(std::size_t n, Engine& rng) {
  std::vector<cplx> e(packed_size(n));
  const auto diag = sunflower_lattice(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    e[packed_index(n, i, i)] = diag[i];
    for (std::size_t j = i + 1; j < n; ++j) e[packed_index(n, i, j)] = scale * standard_complex_normal(rng);
  }
  return e;
}

/// One chain of MALA over all n(n+1)/2 complex entries of T for the density
/// |Delta|^2 exp(-n Tr V(T*T)).
inline ChainDiagnostics sample_general_chain(std::size_t n, const PotentialSpec& p,
                                             const ChainConfig& cfg, std::uint64_t chain_index,
                                             const SampleSink& sink) {
  if (n < 1) throw Error("sample_general_T: n must be positive");
  Engine rng = make_engine(cfg.seed, StreamKind::chain, chain_index);
  TargetFn target = [n, &p](std::span<const cplx> x) { return evaluate_log_density(n, x, p, true); };
  MalaChain chain(target, general_initial_state(n, rng), cfg.step_size.value_or(default_step_size(n)));
  return detail::drive_chain(chain, cfg, chain_index, rng,
                             [&](std::uint64_t idx, std::span<const cplx> x) {
                               sink(idx, TriangularModel(n, std::vector<cplx>(x.begin(), x.end())));
                             });
}

enum class SamplerKind { automatic, ginibre, mala };

inline std::string to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::ginibre: return "ginibre";
    case SamplerKind::mala: return "mala";
    default: return "auto";
  }
}

inline SamplerKind resolve(SamplerKind k, const PotentialSpec& p) {
  if (k != SamplerKind::automatic) return k;
  return p.is_ginibre() ? SamplerKind::ginibre : SamplerKind::mala;
}

inline ChainDiagnostics sample_chain(SamplerKind kind, std::size_t n, const PotentialSpec& p,
                                     const ChainConfig& cfg, std::uint64_t chain_index,
                                     const SampleSink& sink) {
  if (resolve(kind, p) == SamplerKind::ginibre) {
    if (!p.is_ginibre()) throw Error("Ginibre sampler requires V(x) = x");
    return sample_ginibre_chain(n, cfg, chain_index, sink);
  }
  return sample_general_chain(n, p, cfg, chain_index, sink);
}

/// Worker count: OVERLAP_LAB_THREADS if set, else hardware concurrency.
inline std::size_t worker_count() {
  std::size_t hw = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("OVERLAP_LAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return static_cast<std::size_t>(v);
  }
  return hw;
}

/// Runs fn(c) for c in [0, count) on up to `workers` threads. Exceptions are
/// rethrown (first by chain index) after all workers finish.
inline void parallel_for_chains(std::size_t count, std::size_t workers,
                                const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::vector<std::exception_ptr> errors(count);
  if (workers == 1) {
    for (std::size_t c = 0; c < count; ++c) {
      try {
        fn(c);
      } catch (...) {
        errors[c] = std::current_exception();
      }
    }
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t c = w; c < count; c += workers) {
          try {
            fn(c);
          } catch (...) {
            errors[c] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Samples from all chains, mapped through `per_sample` and concatenated in chain
/// order. The result does not depend on the worker count.
template <class Record, class PerSample>
std::pair<std::vector<Record>, std::vector<ChainDiagnostics>> collect_samples(
    SamplerKind kind, std::size_t n, const PotentialSpec& p, const ChainConfig& cfg,
    PerSample&& per_sample, std::size_t workers = worker_count()) {
  cfg.validate();
  std::vector<std::vector<Record>> per_chain(cfg.n_chains);
  std::vector<ChainDiagnostics> diags(cfg.n_chains);
  parallel_for_chains(cfg.n_chains, workers, [&](std::size_t c) {
    auto& out = per_chain[c];
    diags[c] = sample_chain(kind, n, p, cfg, c, [&](std::uint64_t idx, const TriangularModel& t) {
      per_sample(out, c, idx, t);
    });
  });
  std::vector<Record> merged;
  for (auto& v : per_chain) merged.insert(merged.end(), std::make_move_iterator(v.begin()),
                                          std::make_move_iterator(v.end()));
  return {std::move(merged), std::move(diags)};
}

}  // namespace overlap_lab
