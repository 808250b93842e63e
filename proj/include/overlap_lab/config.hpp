#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <openssl/evp.h>

#include <json.hpp>

#include "overlap_lab/errors.hpp"
#include "overlap_lab/experiments.hpp"
#include "overlap_lab/potential.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/validators.hpp"
#include "overlap_lab/triangular.hpp"

namespace overlap_lab {

enum class ExperimentKind {
  sample,
  tail,
  exp1,
  gaussian_array,
  figure1,
  local_law,
  validate_jacobian,
  validate_cn,
  validate_kostlan,
  validate_oracle2,
};

NLOHMANN_JSON_SERIALIZE_ENUM(ExperimentKind, {
                                                 {ExperimentKind::sample, "sample"},
                                                 {ExperimentKind::tail, "tail"},
                                                 {ExperimentKind::exp1, "exp1"},
                                                 {ExperimentKind::gaussian_array, "gaussian_array"},
                                                 {ExperimentKind::figure1, "figure1"},
                                                 {ExperimentKind::local_law, "local_law"},
                                                 {ExperimentKind::validate_jacobian, "validate_jacobian"},
                                                 {ExperimentKind::validate_cn, "validate_cn"},
                                                 {ExperimentKind::validate_kostlan, "validate_kostlan"},
                                                 {ExperimentKind::validate_oracle2, "validate_oracle2"},
                                             })

inline std::string to_string(ExperimentKind k) { return nlohmann::json(k).get<std::string>(); }

/// Parses "tail", "gaussian-array", "validate_cn", ...; hyphens and underscores
/// are interchangeable.
inline ExperimentKind parse_kind(std::string s) {
  for (char& c : s)
    if (c == '-') c = '_';
  static const std::array<ExperimentKind, 10> all{
      ExperimentKind::sample,           ExperimentKind::tail,
      ExperimentKind::exp1,             ExperimentKind::gaussian_array,
      ExperimentKind::figure1,          ExperimentKind::local_law,
      ExperimentKind::validate_jacobian, ExperimentKind::validate_cn,
      ExperimentKind::validate_kostlan, ExperimentKind::validate_oracle2};
  for (auto k : all)
    if (to_string(k) == s) return k;
  throw ConfigError("kind", "unknown experiment kind '" + s + "'");
}

/// Full description of one run. Fields not used by `kind` are carried along
/// unchanged so configurations round-trip exactly.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::exp1;
  std::size_t n = 20;
  PotentialSpec potential = PotentialSpec::ginibre();
  ProbeSet probes{{cplx(0.0, 0.0), cplx(0.3, 0.0)}, 0.25};
  ChainConfig chain;
  SamplerKind sampler = SamplerKind::automatic;
  std::string output_dir = "out";

  Pairing pairing = Pairing::probe_pair;
  std::vector<double> deltas;  // empty: default_delta_grid()
  HistogramOptions histogram;
  double local_s = 0.3;
  cplx z0{0.0, 0.0};
  double spacing_delta = 0.1;
  std::uint64_t oracle_draws = 20000;
  std::uint64_t jacobian_trials = 50;
  bool summary_only = false;

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    return a.kind == b.kind && a.n == b.n && a.potential == b.potential && a.probes == b.probes &&
           a.chain == b.chain && a.sampler == b.sampler && a.output_dir == b.output_dir &&
           a.pairing == b.pairing && a.deltas == b.deltas && a.histogram.lo == b.histogram.lo &&
           a.histogram.hi == b.histogram.hi && a.histogram.bins == b.histogram.bins &&
           a.local_s == b.local_s && a.z0 == b.z0 && a.spacing_delta == b.spacing_delta &&
           a.oracle_draws == b.oracle_draws && a.jacobian_trials == b.jacobian_trials &&
           a.summary_only == b.summary_only;
  }

  SampleSource source() const { return {sampler, n, potential, chain}; }

  std::vector<double> delta_grid() const { return deltas.empty() ? default_delta_grid() : deltas; }

  bool uses_sampler() const {
    switch (kind) {
      case ExperimentKind::validate_jacobian:
      case ExperimentKind::validate_cn:
        return false;
      default:
        return true;
    }
  }

  /// Throws ConfigError naming the first invalid field.
  void validate() const {
    if (n < 1) throw ConfigError("n", "must be positive");
    try {
      potential.validate();
    } catch (const ConfigError& e) {
      throw ConfigError("potential." + e.field(), e.what());
    }
    if (uses_sampler()) chain.validate("chain");
    if (!(histogram.hi > histogram.lo) || histogram.bins == 0)
      throw ConfigError("histogram", "need hi > lo and bins > 0");
    const bool ginibre_sampler = resolve(sampler, potential) == SamplerKind::ginibre;
    if (ginibre_sampler && !potential.is_ginibre())
      throw ConfigError("sampler", "the ginibre sampler requires coefficients [1]");
    // The n = 2 oracle only needs a normalizable density, so V(x) = x^2 and
    // other potentials outside the convexity hypothesis are allowed there.
    if (uses_sampler() && kind != ExperimentKind::validate_oracle2) {
      const auto grid = uniform_grid(0.0, 3.0, 0.05);
      if (!convexity_probe(potential, grid).pass)
        throw ConfigError("potential.alpha", "V(x^2) - (alpha/2) x^2 fails the convexity probe");
    }
    switch (kind) {
      case ExperimentKind::tail:
      case ExperimentKind::exp1:
      case ExperimentKind::figure1:
        if (n < 2) throw ConfigError("n", "need n >= 2 for a pair of eigenvalues");
        if ((kind == ExperimentKind::tail || pairing == Pairing::probe_pair) && probes.probes.size() < 2)
          throw ConfigError("probes", "need two probes z, z'");
        if (kind == ExperimentKind::tail && chain.total_emissions() < 100)
          throw ConfigError("chain.n_steps", "tail experiment needs at least 100 samples");
        if (kind == ExperimentKind::exp1 && !potential.is_ginibre())
          throw ConfigError("potential", "exp1 requires the Ginibre potential");
        for (double d : deltas)
          if (!(d >= 0.0)) throw ConfigError("deltas", "must be nonnegative");
        break;
      case ExperimentKind::gaussian_array:
        if (!potential.is_ginibre()) throw ConfigError("potential", "gaussian-array requires V(x) = x");
        probes.validate();
        if (probes.probes.size() < 2) throw ConfigError("probes", "need at least two probes");
        if (n < probes.probes.size()) throw ConfigError("n", "must be at least the number of probes");
        if (!probes.separated_for(n))
          throw ConfigError("probes", "sqrt(n) min |z_i - z_j| >= n^epsilon fails for this n");
        break;
      case ExperimentKind::local_law:
        if (!(local_s > 0.0 && local_s < 0.5)) throw ConfigError("local_s", "must lie in (0, 1/2)");
        if (!(std::abs(z0) <= 1.0)) throw ConfigError("z0", "must lie in the closed unit disk");
        break;
      case ExperimentKind::validate_jacobian:
        if (n < 2 || n > kJacobianMaxN) throw ConfigError("n", "jacobian check needs 2 <= n <= 8");
        if (jacobian_trials < 1) throw ConfigError("jacobian_trials", "must be positive");
        break;
      case ExperimentKind::validate_kostlan:
        if (!potential.is_ginibre()) throw ConfigError("potential", "kostlan check requires V(x) = x");
        break;
      case ExperimentKind::validate_oracle2:
        if (n != 2) throw ConfigError("n", "the rejection oracle is defined for n = 2");
        if (oracle_draws < 100) throw ConfigError("oracle_draws", "need at least 100 draws");
        for (double c : potential.coefficients)
          if (c < 0.0) throw ConfigError("potential.coefficients", "the rejection envelope needs c_m >= 0");
        break;
      default:
        break;
    }
  }
};

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  j = nlohmann::json{
      {"kind", c.kind},
      {"n", c.n},
      {"potential", c.potential},
      {"probes", c.probes},
      {"chain", c.chain},
      {"sampler", to_string(c.sampler)},
      {"output_dir", c.output_dir},
      {"pairing", to_string(c.pairing)},
      {"deltas", c.deltas},
      {"histogram", {{"lo", c.histogram.lo}, {"hi", c.histogram.hi}, {"bins", c.histogram.bins}}},
      {"local_s", c.local_s},
      {"z0", {c.z0.real(), c.z0.imag()}},
      {"spacing_delta", c.spacing_delta},
      {"oracle_draws", c.oracle_draws},
      {"jacobian_trials", c.jacobian_trials},
      {"summary_only", c.summary_only},
  };
}

namespace detail {

template <class T>
T config_field(const nlohmann::json& j, const char* key, const T& fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace detail

inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  if (!j.is_object()) throw ConfigError("config", "expected a JSON object");
  const ExperimentConfig d;
  if (j.contains("kind")) {
    if (!j.at("kind").is_string()) throw ConfigError("kind", "expected a string");
    c.kind = parse_kind(j.at("kind").get<std::string>());
  }
  c.n = detail::config_field<std::size_t>(j, "n", d.n);
  if (j.contains("potential")) c.potential = j.at("potential").get<PotentialSpec>();
  if (j.contains("probes")) c.probes = j.at("probes").get<ProbeSet>();
  if (j.contains("chain")) c.chain = j.at("chain").get<ChainConfig>();
  const auto sampler = detail::config_field<std::string>(j, "sampler", "auto");
  if (sampler == "auto")
    c.sampler = SamplerKind::automatic;
  else if (sampler == "ginibre")
    c.sampler = SamplerKind::ginibre;
  else if (sampler == "mala")
    c.sampler = SamplerKind::mala;
  else
    throw ConfigError("sampler", "expected auto, ginibre or mala");
  c.output_dir = detail::config_field<std::string>(j, "output_dir", d.output_dir);
  const auto pairing = detail::config_field<std::string>(j, "pairing", to_string(d.pairing));
  if (pairing == "all-pairs" || pairing == "all_pairs")
    c.pairing = Pairing::all_pairs;
  else if (pairing == "probe-pair" || pairing == "probe_pair")
    c.pairing = Pairing::probe_pair;
  else
    throw ConfigError("pairing", "expected probe-pair or all-pairs");
  c.deltas = detail::config_field<std::vector<double>>(j, "deltas", d.deltas);
  if (j.contains("histogram")) {
    const auto& h = j.at("histogram");
    c.histogram.lo = detail::config_field<double>(h, "lo", d.histogram.lo);
    c.histogram.hi = detail::config_field<double>(h, "hi", d.histogram.hi);
    c.histogram.bins = detail::config_field<std::size_t>(h, "bins", d.histogram.bins);
  }
  c.local_s = detail::config_field<double>(j, "local_s", d.local_s);
  if (j.contains("z0")) {
    const auto z = detail::config_field<std::vector<double>>(j, "z0", {});
    if (z.size() != 2) throw ConfigError("z0", "expected [re, im]");
    c.z0 = {z[0], z[1]};
  }
  c.spacing_delta = detail::config_field<double>(j, "spacing_delta", d.spacing_delta);
  c.oracle_draws = detail::config_field<std::uint64_t>(j, "oracle_draws", d.oracle_draws);
  c.jacobian_trials = detail::config_field<std::uint64_t>(j, "jacobian_trials", d.jacobian_trials);
  c.summary_only = detail::config_field<bool>(j, "summary_only", d.summary_only);
}

/// Git blob hash (SHA-1 of "blob <len>\0" + content), lowercase hex.
inline std::string git_blob_hash(const std::string& content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw Error("git_blob_hash: EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, md, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw Error("git_blob_hash: digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", md[k]);
    hex += buf;
  }
  return hex;
}

/// Hash of the inputs that determine a run (output_dir excluded).
inline std::string config_content_hash(const ExperimentConfig& c) {
  nlohmann::json j = c;
  j.erase("output_dir");
  return git_blob_hash(j.dump());
}

}  // namespace overlap_lab
