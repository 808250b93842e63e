#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "overlap_lab/config.hpp"
#include "overlap_lab/csv.hpp"
#include "overlap_lab/eigenvectors.hpp"
#include "overlap_lab/experiments.hpp"
#include "overlap_lab/rng.hpp"
#include "overlap_lab/samplers.hpp"
#include "overlap_lab/statistics.hpp"
#include "overlap_lab/validators.hpp"

namespace overlap_lab {

/// One asserted comparison in summary.json.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  std::string relation;  // how value is compared with threshold, e.g. "<", ">="
  bool pass = false;
};

inline void to_json(nlohmann::json& j, const Check& c) {
  j = nlohmann::json{{"name", c.name}, {"value", c.value}, {"threshold", c.threshold},
                     {"relation", c.relation}, {"pass", c.pass}};
}

struct RunOutcome {
  int exit_code = 0;
  nlohmann::json summary;
  nlohmann::json manifest;
};

namespace detail {

inline Check less_than(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<", value < threshold};
}

inline Check at_most(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, "<=", value <= threshold};
}

inline Check at_least(std::string name, double value, double threshold) {
  return {std::move(name), value, threshold, ">=", value >= threshold};
}

inline nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

inline void write_json(const std::filesystem::path& p, const nlohmann::json& j) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + p.string() + " for writing");
  out << j.dump(2) << '\n';
}

inline void write_overlaps_csv(const std::filesystem::path& p, const std::vector<TaggedRecord>& recs) {
  CsvWriter w(p.string());
  w.header({"lambda_re", "lambda_im", "lambdap_re", "lambdap_im", "overlap_re", "overlap_im", "y", "n",
            "sample_id"});
  for (const auto& tr : recs) {
    const auto& r = tr.record;
    w << r.lambda.real() << r.lambda.imag() << r.lambda_prime.real() << r.lambda_prime.imag()
      << r.overlap.real() << r.overlap.imag() << r.y << static_cast<std::uint64_t>(r.n) << tr.sample_id;
    w.end_row();
  }
}

inline void write_histogram_csv(const std::filesystem::path& p, const stats::Histogram& h) {
  CsvWriter w(p.string());
  w.header({"bin_left", "bin_right", "count", "overlay_density"});
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    const double mid = 0.5 * (h.edges[k] + h.edges[k + 1]);
    w << h.edges[k] << h.edges[k + 1] << static_cast<std::uint64_t>(h.counts[k]) << rayleigh_density(mid);
    w.end_row();
  }
}

inline void write_survival_csv(const std::filesystem::path& p, const SurvivalCurve& c) {
  CsvWriter w(p.string());
  w.header({"delta", "empirical", "bound", "standard_error", "pass"});
  for (std::size_t k = 0; k < c.deltas.size(); ++k) {
    w << c.deltas[k] << c.empirical[k] << c.bound[k] << c.standard_error[k]
      << static_cast<std::uint64_t>(c.pass[k] ? 1 : 0);
    w.end_row();
  }
}

inline std::vector<std::string> triangular_columns(std::size_t n) {
  std::vector<std::string> cols{"sample_id"};
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = i; j <= n; ++j) {
      cols.push_back("t_re_" + std::to_string(i) + "_" + std::to_string(j));
      cols.push_back("t_im_" + std::to_string(i) + "_" + std::to_string(j));
    }
  return cols;
}

inline nlohmann::json diagnostics_json(const std::vector<ChainDiagnostics>& d) {
  return nlohmann::json(d);
}

/// C_1 e^{-|t|^2} integrated over the plane by the trapezoid rule on [-L, L]^2.
inline double cn_unit_normalization(std::size_t points = 801, double half_width = 9.0) {
  const double h = 2.0 * half_width / static_cast<double>(points - 1);
  const double c1 = cn_constant(1);
  double acc = 0.0;
  for (std::size_t a = 0; a < points; ++a) {
    const double x = -half_width + h * static_cast<double>(a);
    const double wx = (a == 0 || a + 1 == points) ? 0.5 : 1.0;
    for (std::size_t b = 0; b < points; ++b) {
      const double y = -half_width + h * static_cast<double>(b);
      const double wy = (b == 0 || b + 1 == points) ? 0.5 : 1.0;
      acc += wx * wy * std::exp(-(x * x + y * y));
    }
  }
  return c1 * acc * h * h;
}

/// Random T with standard complex Gaussian entries.
inline TriangularModel random_triangular(std::size_t n, Engine& rng) {
  std::vector<cplx> e(packed_size(n));
  for (auto& z : e) z = standard_complex_normal(rng);
  return TriangularModel(n, std::move(e));
}

}  // namespace detail

/// Executes one configured run, writing manifest.json, summary.json and CSV
/// data under config.output_dir. exit_code is 0 iff every asserted check passes.
inline RunOutcome run(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  fs::create_directories(dir);

  std::vector<Check> checks;
  nlohmann::json stats_json = nlohmann::json::object();
  std::vector<ChainDiagnostics> diags;
  const SampleSource src = cfg.source();

  switch (cfg.kind) {
    case ExperimentKind::sample: {
      std::unique_ptr<CsvWriter> csv;
      if (!cfg.summary_only) {
        csv = std::make_unique<CsvWriter>((dir / "samples.csv").string());
        csv->header(detail::triangular_columns(cfg.n));
      }
      auto [items, d] = collect_samples<std::pair<std::uint64_t, TriangularModel>>(
          src.kind, src.n, src.potential, src.chain,
          [&](auto& out, std::size_t c, std::uint64_t idx, const TriangularModel& t) {
            out.emplace_back(detail::global_sample_id(src.chain, c, idx), t);
          });
      diags = std::move(d);
      std::vector<double> dsq, osq;
      for (const auto& [id, t] : items) {
        double a = 0.0, b = 0.0;
        for (std::size_t i = 0; i < t.n(); ++i) {
          a += std::norm(t(i, i));
          for (std::size_t j = i + 1; j < t.n(); ++j) b += std::norm(t(i, j));
        }
        dsq.push_back(a / static_cast<double>(t.n()));
        if (t.n() > 1) osq.push_back(b * static_cast<double>(t.n()) / (0.5 * static_cast<double>(t.n() * (t.n() - 1))));
        if (csv) {
          *csv << id;
          for (const cplx& z : t.packed()) *csv << z.real() << z.imag();
          csv->end_row();
        }
      }
      stats_json["samples"] = items.size();
      stats_json["mean_abs_diag_sq"] = stats::mean(dsq);
      if (!osq.empty()) stats_json["mean_n_abs_offdiag_sq"] = stats::mean(osq);
      break;
    }

    case ExperimentKind::tail: {
      if (cfg.probes.probes.size() < 2) throw ConfigError("probes", "need two probes");
      const auto grid = cfg.delta_grid();
      auto r = tail_experiment(src, cfg.probes.probes[0], cfg.probes.probes[1], cfg.potential.alpha, grid);
      diags = r.run.diagnostics;
      detail::write_survival_csv(dir / "survival.csv", r.curve);
      detail::write_overlaps_csv(dir / "overlaps.csv", r.run.records);
      stats_json["samples"] = r.curve.n_samples;
      stats_json["skipped"] = r.run.skipped;
      stats_json["alpha"] = r.alpha;
      stats_json["mean_y"] = stats::mean(r.run.ys());
      std::size_t failing = 0;
      for (bool b : r.curve.pass) failing += b ? 0 : 1;
      checks.push_back(detail::at_most("tail_bound_failing_deltas", static_cast<double>(failing), 0.0));
      break;
    }

    case ExperimentKind::exp1:
    case ExperimentKind::figure1: {
      const bool figure = cfg.kind == ExperimentKind::figure1;
      const Pairing pairing = figure ? Pairing::all_pairs : cfg.pairing;
      const bool rescale = figure && !cfg.potential.is_ginibre();
      const cplx z = cfg.probes.probes.size() > 0 ? cfg.probes.probes[0] : cplx{};
      const cplx zp = cfg.probes.probes.size() > 1 ? cfg.probes.probes[1] : cplx{};
      auto r = y_law_experiment(src, pairing, z, zp, rescale, cfg.histogram);
      diags = r.diagnostics;
      detail::write_histogram_csv(dir / "histogram.csv", r.histogram);
      if (pairing == Pairing::probe_pair) detail::write_overlaps_csv(dir / "overlaps.csv", r.records);
      stats_json["pairing"] = to_string(pairing);
      stats_json["samples"] = r.samples;
      stats_json["values"] = r.ys.size();
      stats_json["skipped"] = r.skipped;
      stats_json["mean_y"] = r.mean_y.mean;
      stats_json["mean_y_se"] = r.mean_y.se;
      stats_json["rescale_factor"] = r.rescale;
      stats_json["discrepancy"] = r.discrepancy;
      if (pairing == Pairing::probe_pair) {
        const double m = static_cast<double>(r.ys.size());
        stats_json["ks"] = *r.ks;
        checks.push_back(detail::at_most("mean_y_within_3sigma_of_1", std::abs(r.mean_y.mean - 1.0),
                                         3.0 / std::sqrt(m)));
        checks.push_back(detail::less_than("ks_exp1", *r.ks, 1.63 / std::sqrt(m)));
      } else {
        checks.push_back(detail::less_than("histogram_discrepancy", r.discrepancy, 0.15));
      }
      break;
    }

    case ExperimentKind::gaussian_array: {
      auto rep = gaussian_array_experiment(src, cfg.probes);
      diags = rep.diagnostics;
      const std::size_t k = cfg.probes.probes.size();
      CsvWriter w((dir / "array_samples.csv").string());
      std::vector<std::string> cols{"sample_id"};
      for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = i + 1; j <= k; ++j) {
          cols.push_back("z_re_" + std::to_string(i) + "_" + std::to_string(j));
          cols.push_back("z_im_" + std::to_string(i) + "_" + std::to_string(j));
        }
      w.header(cols);
      for (const auto& s : rep.samples) {
        w << s.sample_id;
        for (const cplx& z : s.entries) w << z.real() << z.imag();
        w.end_row();
      }
      const double reps = static_cast<double>(rep.samples.size());
      stats_json["repetitions"] = rep.samples.size();
      stats_json["skipped"] = rep.skipped;
      nlohmann::json entries = nlohmann::json::array();
      std::size_t e = 0;
      for (std::size_t i = 1; i <= k; ++i)
        for (std::size_t j = i + 1; j <= k; ++j, ++e) {
          const auto& mc = rep.entry_checks[e];
          const std::string tag = "entry_" + std::to_string(i) + "_" + std::to_string(j);
          entries.push_back({{"entry", tag},
                             {"mean", detail::cplx_json(mc.moments.mean)},
                             {"pseudo_variance", detail::cplx_json(mc.moments.pseudo_variance)},
                             {"second_moment", mc.moments.second},
                             {"fourth_moment", mc.moments.fourth}});
          checks.push_back(detail::less_than(tag + ".abs_mean", std::abs(mc.moments.mean), 3.0 / std::sqrt(reps)));
          checks.push_back(detail::less_than(tag + ".abs_pseudo_variance", std::abs(mc.moments.pseudo_variance),
                                             3.0 * std::sqrt(2.0 / reps)));
          checks.push_back(detail::less_than(tag + ".second_moment_deviation", std::abs(mc.moments.second - 1.0),
                                             3.0 * std::sqrt(1.0 / reps)));
          checks.push_back(detail::less_than(tag + ".fourth_moment_deviation", std::abs(mc.moments.fourth - 2.0),
                                             3.0 * std::sqrt(20.0 / reps)));
        }
      stats_json["entries"] = entries;
      for (const auto& cc : rep.correlations) {
        const std::string tag = "corr_" + std::to_string(cc.a) + "_" + std::to_string(cc.b);
        checks.push_back(detail::less_than(tag + ".hermitian", cc.hermitian, 3.0 / std::sqrt(reps)));
        checks.push_back(detail::less_than(tag + ".pseudo", cc.pseudo, 3.0 / std::sqrt(reps)));
      }
      break;
    }

    case ExperimentKind::local_law: {
      std::optional<SpacingProbe> spacing;
      if (cfg.probes.probes.size() >= 2)
        spacing = SpacingProbe{cfg.probes.probes[0], cfg.probes.probes[1], cfg.spacing_delta};
      auto sum = local_law_experiment(src, cfg.z0, cfg.local_s, spacing);
      diags = sum.diagnostics;
      CsvWriter w((dir / "local_law.csv").string());
      w.header({"count", "threshold", "count_ok", "scaled_gap", "gap_threshold", "spacing_ok"});
      for (const auto& r : sum.reports) {
        w << static_cast<std::uint64_t>(r.count) << r.threshold << static_cast<std::uint64_t>(r.count_ok);
        w << r.scaled_gap.value_or(std::nan("")) << r.gap_threshold.value_or(std::nan(""))
          << static_cast<std::uint64_t>(r.spacing_ok.value_or(false));
        w.end_row();
      }
      stats_json["samples"] = sum.reports.size();
      stats_json["count_pass_fraction"] = sum.count_pass_fraction;
      if (sum.spacing_pass_fraction) stats_json["spacing_pass_fraction"] = *sum.spacing_pass_fraction;
      checks.push_back(detail::at_least("count_pass_fraction", sum.count_pass_fraction, 0.95));
      break;
    }

    case ExperimentKind::validate_jacobian: {
      Engine rng = make_engine(cfg.chain.seed, StreamKind::synthetic, 0);
      nlohmann::json per_n = nlohmann::json::array();
      for (std::size_t m = 2; m <= cfg.n; ++m) {
        double worst = 0.0, worst_scaled = 0.0;
        bool structure = true;
        for (std::uint64_t trial = 0; trial < cfg.jacobian_trials; ++trial) {
          const auto rep = jacobian_check(detail::random_triangular(m, rng));
          worst = std::max(worst, rep.rel_error);
          worst_scaled = std::max(worst_scaled, rep.rel_error_scaled);
          structure = structure && rep.block_structure_ok;
        }
        per_n.push_back({{"n", m},
                         {"max_rel_error", worst},
                         {"max_rel_error_vs_half_per_pair", worst_scaled},
                         {"block_structure_ok", structure}});
        checks.push_back(detail::at_most("n" + std::to_string(m) + ".max_rel_error", worst, 1e-10));
        checks.push_back({"n" + std::to_string(m) + ".block_structure", structure ? 1.0 : 0.0, 1.0, "==",
                          structure});
      }
      stats_json["per_n"] = per_n;
      stats_json["trials"] = cfg.jacobian_trials;
      break;
    }

    case ExperimentKind::validate_cn: {
      nlohmann::json values = nlohmann::json::array();
      for (std::size_t m = 1; m <= cfg.n; ++m) {
        nlohmann::json v{{"n", m}, {"log_cn", log_cn_constant(m)}};
        if (m <= 20) v["cn"] = cn_constant(m);
        values.push_back(v);
        const double lhs = log_cn_constant(m) - log_cn_constant(m + 1);
        const double rhs = (3.0 * static_cast<double>(m) + 1.0) * std::log(std::numbers::pi) +
                           std::lgamma(static_cast<double>(m) + 1.0);
        checks.push_back(detail::at_most("recursion_n" + std::to_string(m), std::abs(lhs - rhs),
                                         1e-9 * std::max(1.0, std::abs(rhs))));
      }
      stats_json["values"] = values;
      const double norm1 = detail::cn_unit_normalization();
      stats_json["n1_normalization"] = norm1;
      checks.push_back(detail::at_most("n1_normalization_deviation", std::abs(norm1 - 1.0), 1e-6));
      break;
    }

    case ExperimentKind::validate_kostlan: {
      auto [diag, d] = collect_samples<cplx>(
          src.kind, src.n, src.potential, src.chain,
          [](std::vector<cplx>& out, std::size_t, std::uint64_t, const TriangularModel& t) {
            const auto dg = t.diag();
            out.insert(out.end(), dg.begin(), dg.end());
          });
      diags = std::move(d);
      const auto rep = kostlan_radial_check(diag, cfg.n);
      stats_json["points"] = rep.points;
      stats_json["ks"] = rep.ks;
      checks.push_back(detail::less_than("kostlan_ks", rep.ks, 0.03));
      break;
    }

    case ExperimentKind::validate_oracle2: {
      const auto rep = small_n_oracle_compare(cfg.potential, cfg.chain, cfg.oracle_draws);
      diags = rep.diagnostics;
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& c : rep.comparisons) {
        comps.push_back({{"statistic", c.name}, {"mala", c.mala}, {"mala_se", c.mala_se},
                         {"oracle", c.oracle}, {"oracle_se", c.oracle_se}});
        checks.push_back(detail::at_most(c.name + ".difference", std::abs(c.mala - c.oracle),
                                         3.0 * std::hypot(c.mala_se, c.oracle_se)));
      }
      stats_json["comparisons"] = comps;
      stats_json["rejection_acceptance"] = rep.rejection_acceptance;
      stats_json["efficiency_warning"] = rep.efficiency_warning;
      checks.push_back(detail::less_than("gap_ks", rep.gap_ks, rep.gap_ks_critical));
      checks.push_back(detail::at_most("envelope_violations", static_cast<double>(rep.envelope_violations), 0.0));
      break;
    }
  }

  bool all = true;
  for (const auto& c : checks) all = all && c.pass;

  RunOutcome out;
  const std::string hash = config_content_hash(cfg);
  out.summary = {{"kind", to_string(cfg.kind)},
                 {"n", cfg.n},
                 {"content_hash", hash},
                 {"statistics", stats_json},
                 {"checks", checks},
                 {"all_pass", all}};
  out.manifest = {{"config", cfg}, {"content_hash", hash}};
  if (cfg.uses_sampler()) {
    const auto kind = cfg.kind == ExperimentKind::validate_oracle2 ? SamplerKind::mala
                                                                   : resolve(cfg.sampler, cfg.potential);
    out.manifest["sampler"] = {{"kind", to_string(kind)},
                               {"default_step_size", default_step_size(cfg.n)},
                               {"chains", detail::diagnostics_json(diags)}};
  }
  detail::write_json(dir / "summary.json", out.summary);
  detail::write_json(dir / "manifest.json", out.manifest);
  out.exit_code = all ? 0 : 1;
  return out;
}

}  // namespace overlap_lab
