// Command-line front end: overlap_lab sample | experiment <kind> | validate <kind>

#include <complex>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "overlap_lab.hpp"

namespace {

using overlap_lab::ConfigError;
using overlap_lab::cplx;
using nlohmann::json;

struct Flags {
  std::size_t n = 20;
  std::string potential;
  std::optional<double> alpha;
  std::string probes;
  std::optional<double> epsilon;
  std::uint64_t reps = 200;
  std::uint64_t seed = 0;
  std::string out = "out";
  std::string config;
  std::uint64_t burn_in = 1000;
  std::uint64_t thinning = 10;
  std::uint64_t chains = 1;
  std::optional<double> step_size;
  bool no_tune = false;
  std::string pairing = "probe-pair";
  double s = 0.3;
  std::string z0 = "0:0";
  double spacing_delta = 0.1;
  std::uint64_t oracle_draws = 20000;
  std::string sampler = "auto";
  bool summary_only = false;
};

cplx parse_complex(const std::string& text, const char* field) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) return {std::stod(text), 0.0};
    return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
  } catch (const std::exception&) {
    throw ConfigError(field, "cannot parse '" + text + "' as re:im");
  }
}

std::vector<cplx> parse_probe_list(const std::string& text) {
  std::vector<cplx> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(parse_complex(item, "probes"));
  return out;
}

// Inline JSON if the argument starts with '{' or '[', otherwise a file name.
json load_json_arg(const std::string& arg, const char* field) {
  try {
    if (!arg.empty() && (arg.front() == '{' || arg.front() == '[')) return json::parse(arg);
    std::ifstream in(arg);
    if (!in) throw ConfigError(field, "cannot open '" + arg + "'");
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, e.what());
  }
}

overlap_lab::ExperimentConfig build_config(overlap_lab::ExperimentKind kind, const Flags& f) {
  overlap_lab::ExperimentConfig cfg;
  cfg.kind = kind;
  cfg.n = f.n;
  if (!f.potential.empty()) {
    const json p = load_json_arg(f.potential, "potential");
    if (p.is_array())
      cfg.potential = {p.get<std::vector<double>>(), 2.0};
    else
      cfg.potential = p.get<overlap_lab::PotentialSpec>();
  }
  if (f.alpha) cfg.potential.alpha = *f.alpha;
  if (!f.probes.empty()) cfg.probes.probes = parse_probe_list(f.probes);
  if (f.epsilon) cfg.probes.epsilon = *f.epsilon;
  cfg.chain = overlap_lab::ChainConfig::for_samples(f.reps, f.burn_in, f.thinning, f.chains, f.seed);
  cfg.chain.step_size = f.step_size;
  cfg.chain.tune = !f.no_tune;
  cfg.output_dir = f.out;
  cfg.local_s = f.s;
  cfg.z0 = parse_complex(f.z0, "z0");
  cfg.spacing_delta = f.spacing_delta;
  cfg.oracle_draws = f.oracle_draws;
  cfg.jacobian_trials = f.reps;
  cfg.summary_only = f.summary_only;

  json j = cfg;
  j["sampler"] = f.sampler;
  j["pairing"] = f.pairing;
  if (!f.config.empty()) {
    // Values present in the config file take precedence over flags.
    const json file = load_json_arg(f.config, "config");
    if (!file.is_object()) throw ConfigError("config", "expected a JSON object");
    j.merge_patch(file);
    j["kind"] = cfg.kind;
  }
  return j.get<overlap_lab::ExperimentConfig>();
}

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--n", f.n, "Matrix size");
  app->add_option("--potential", f.potential,
                  "Potential as JSON ({\"coefficients\":[...],\"alpha\":a} or [a1,a2,...]) or a file");
  app->add_option("--alpha", f.alpha, "Convexity constant alpha");
  app->add_option("--probes", f.probes, "Probe points, e.g. 0:0,0.3:0");
  app->add_option("--epsilon", f.epsilon, "Probe separation epsilon");
  app->add_option("--reps", f.reps, "Number of samples (trials per n for validate jacobian)");
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--config", f.config, "JSON config file; its values override flags");
  app->add_option("--burn-in", f.burn_in, "Burn-in steps per chain");
  app->add_option("--thinning", f.thinning, "Steps between emitted samples");
  app->add_option("--chains", f.chains, "Independent chains");
  app->add_option("--step-size", f.step_size, "Initial MALA step size");
  app->add_flag("--no-tune", f.no_tune, "Keep the step size fixed during burn-in");
  app->add_option("--pairing", f.pairing, "probe-pair or all-pairs");
  app->add_option("--s", f.s, "Local-law scale exponent");
  app->add_option("--z0", f.z0, "Local-law centre re:im");
  app->add_option("--spacing-delta", f.spacing_delta, "Local-law spacing exponent");
  app->add_option("--oracle-draws", f.oracle_draws, "Rejection-oracle draws (validate oracle2)");
  app->add_option("--sampler", f.sampler, "auto, ginibre or mala");
  app->add_flag("--summary-only", f.summary_only, "Do not write samples.csv");
}

int execute(overlap_lab::ExperimentKind kind, const Flags& f) {
  try {
    const auto cfg = build_config(kind, f);
    const auto outcome = overlap_lab::run(cfg);
    std::cout << outcome.summary.dump(2) << '\n';
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const overlap_lab::DivergenceError& e) {
    std::cerr << "sampler diverged: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eigenvector overlaps of non-Hermitian random matrices"};
  app.require_subcommand(1);
  Flags f;

  auto* sample = app.add_subcommand("sample", "Draw Schur forms and write samples.csv");
  add_common(sample, f);

  std::string experiment_kind;
  auto* experiment = app.add_subcommand("experiment", "Run an overlap experiment");
  experiment->add_option("kind", experiment_kind, "tail, exp1, gaussian-array, figure1 or local-law")
      ->required()
      ->check(CLI::IsMember({"tail", "exp1", "gaussian-array", "figure1", "local-law"}));
  add_common(experiment, f);

  std::string validate_kind;
  auto* validate = app.add_subcommand("validate", "Run an internal consistency check");
  validate->add_option("kind", validate_kind, "jacobian, cn, kostlan or oracle2")
      ->required()
      ->check(CLI::IsMember({"jacobian", "cn", "kostlan", "oracle2"}));
  add_common(validate, f);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sample->parsed()) return execute(overlap_lab::ExperimentKind::sample, f);
    if (experiment->parsed()) return execute(overlap_lab::parse_kind(experiment_kind), f);
    return execute(overlap_lab::parse_kind("validate_" + validate_kind), f);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
}
