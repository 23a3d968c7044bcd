#include "dynolearn/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "dynolearn/config.hpp"
#include "dynolearn/csv.hpp"
#include "dynolearn/errors.hpp"
#include "dynolearn/learnability.hpp"
#include "dynolearn/rng.hpp"
#include "dynolearn/spectral.hpp"

namespace dynolearn::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string out_dir;
  std::size_t threads = 0;
  std::vector<std::string> overrides;
  // filters
  std::size_t window = 100;
  std::size_t m = 15;
  bool sign_augmented = false;
  // burnin
  std::string curve_path;
  std::vector<double> epsilons;
  // simulate
  std::size_t horizon = 0;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write '" + path.string() + "'");
  return os;
}

std::size_t resolve_threads(std::size_t flag) {
  if (flag > 0) return flag;
  if (const char* env = std::getenv("DYNOLEARN_THREADS")) {
    try {
      const auto v = parse_config_value(env).as_count();
      if (v > 0) return v;
    } catch (const ConfigError&) {
      throw ConfigError("DYNOLEARN_THREADS must be a positive integer");
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentConfig load_config(const Options& opt) {
  ConfigDocument doc = opt.config_path.empty() ? ConfigDocument{} : ConfigDocument::parse(read_file(opt.config_path));
  for (const auto& o : opt.overrides) doc.apply_override(o);
  ExperimentConfig cfg = build_config(doc);
  if (!opt.out_dir.empty()) cfg.output_dir = opt.out_dir;
  cfg.harness.threads = resolve_threads(opt.threads);
  return cfg;
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_manifest(const fs::path& dir, const std::string& subcommand, const ExperimentConfig& cfg,
                    const std::vector<std::string>& artifacts) {
  {
    auto os = open_output(dir / "config.ini");
    os << render_config(cfg);
  }
  auto os = open_output(dir / "manifest.txt");
  std::ostringstream digest;
  digest << std::hex << config_digest(cfg);
  os << "version=" << kVersion << '\n'
     << "subcommand=" << subcommand << '\n'
     << "seed=" << cfg.seed << '\n'
     << "config_digest=" << digest.str() << '\n'
     << "config=config.ini\n"
     << "rerun=dynolearn " << subcommand << " --config config.ini\n";
  for (const auto& a : artifacts) os << "artifact=" << a << '\n';
}

// Signal power used to turn relative epsilons into absolute ones.
double signal_power(const ExperimentConfig& cfg) {
  if (const auto* lds = std::get_if<LdsSpec>(&cfg.system)) return stationary_signal_power(*lds);
  const auto conds = initial_conditions(init_policy(cfg.system), state_dim(cfg.system));
  const std::uint64_t seed = SeededRng(cfg.seed).child_seed(0);
  const Trajectory traj = simulate(cfg.system, cfg.harness.horizon(), resolve_initial_state(cfg.system, conds.front(), seed), seed, false);
  double s = 0.0;
  for (const auto& y : traj.ys) s += dot(y, y) / static_cast<double>(y.size());
  return s / static_cast<double>(traj.ys.size());
}

std::vector<double> absolute_epsilons(const ExperimentConfig& cfg) {
  std::vector<double> eps = cfg.epsilons;
  if (cfg.epsilon_relative) {
    const double power = signal_power(cfg);
    for (double& e : eps) e *= power;
  }
  return eps;
}

HarnessConfig cli_harness(const ExperimentConfig& cfg) {
  HarnessConfig h = cfg.harness;
  h.master_seed = cfg.seed;
  // Incompatible oracles are an error on the command line; raw risk must be
  // requested with oracle.kind = "zero".
  h.allow_raw_fallback = false;
  return h;
}

int cmd_simulate(const Options& opt, std::ostream& out) {
  ExperimentConfig cfg = load_config(opt);
  std::size_t horizon = opt.horizon ? opt.horizon : cfg.simulate_horizon ? cfg.simulate_horizon : cfg.harness.horizon();
  const auto conds = initial_conditions(init_policy(cfg.system), state_dim(cfg.system));
  const Vector x0 = resolve_initial_state(cfg.system, conds.front(), cfg.seed);
  const Trajectory traj = simulate(cfg.system, horizon, x0, cfg.seed, cfg.record_latent);
  const fs::path dir = prepare_output(cfg);
  {
    auto os = open_output(dir / "trajectory.csv");
    write_trajectory_csv(os, traj);
  }
  cfg.simulate_horizon = horizon;
  write_manifest(dir, "simulate", cfg, {"trajectory.csv"});
  out << "rows=" << traj.horizon() << " seed=" << cfg.seed << '\n';
  return kOk;
}

int cmd_filters(const Options& opt, std::ostream& out) {
  const FilterBank bank = build_filter_bank(opt.window, opt.m, opt.sign_augmented);
  fs::path dir(opt.out_dir.empty() ? "out" : opt.out_dir);
  fs::create_directories(dir);
  {
    auto os = open_output(dir / "spectrum.csv");
    write_spectrum_csv(os, bank);
  }
  {
    auto os = open_output(dir / "filters.csv");
    write_filters_csv(os, bank);
  }
  out << "window=" << bank.window << " m=" << bank.m << " reliable_cap=" << bank.reliable_cap << '\n';
  return kOk;
}

int cmd_risk(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt);
  const RiskCurve curve = estimate_excess_risk(cfg.system, cfg.predictor, cfg.oracle, cli_harness(cfg));
  const fs::path dir = prepare_output(cfg);
  {
    auto os = open_output(dir / "risk.csv");
    write_risk_curve_csv(os, curve);
  }
  write_manifest(dir, "risk", cfg, {"risk.csv"});
  out << "mode=" << curve.mode << " points=" << curve.t_grid.size()
      << " terminal_excess=" << format_double(curve.excess_mean.back()) << '\n';
  return kOk;
}

int cmd_burnin(const Options& opt, std::ostream& out) {
  RiskCurve curve;
  std::vector<double> eps;
  fs::path dir;
  std::optional<ExperimentConfig> cfg;
  if (!opt.curve_path.empty()) {
    std::ifstream in(opt.curve_path);
    if (!in) throw ConfigError("cannot open curve '" + opt.curve_path + "'");
    curve = read_risk_curve_csv(in);
    eps = opt.epsilons;
    if (eps.empty()) throw ConfigError("burnin --curve needs at least one --epsilon");
    dir = opt.out_dir.empty() ? fs::path("out") : fs::path(opt.out_dir);
    fs::create_directories(dir);
  } else {
    cfg = load_config(opt);
    curve = estimate_excess_risk(cfg->system, cfg->predictor, cfg->oracle, cli_harness(*cfg));
    eps = opt.epsilons.empty() ? absolute_epsilons(*cfg) : opt.epsilons;
    dir = prepare_output(*cfg);
    auto os = open_output(dir / "risk.csv");
    write_risk_curve_csv(os, curve);
  }
  for (double e : eps)
    if (!(e > 0.0)) throw InvariantViolation("epsilon must be > 0");
  std::vector<BurnInReport> reports;
  for (double e : eps) reports.push_back(burn_in_time(curve, e));
  {
    auto os = open_output(dir / "burnin.csv");
    write_burn_in_csv(os, reports);
  }
  if (cfg) write_manifest(dir, "burnin", *cfg, {"risk.csv", "burnin.csv"});
  for (const auto& r : reports)
    out << "epsilon=" << format_double(r.epsilon) << " t_star=" << (r.t_star ? std::to_string(*r.t_star) : "inf")
        << " uniform_checked_to=" << r.uniform_checked_to << '\n';
  return kOk;
}

int cmd_mstar(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt);
  const double eps = absolute_epsilons(cfg).front();
  const FilterCountReport report =
      minimal_filter_count(cfg.system, eps, cfg.m_values, cfg.predictor, cfg.oracle, cli_harness(cfg));
  const fs::path dir = prepare_output(cfg);
  {
    auto os = open_output(dir / "mstar.csv");
    write_filter_count_csv(os, report);
  }
  write_manifest(dir, "mstar", cfg, {"mstar.csv"});
  out << "epsilon=" << format_double(eps) << " m_star=" << (report.m_star ? std::to_string(*report.m_star) : "none")
      << '\n';
  return kOk;
}

int cmd_agnostic(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt);
  const RiskCurve curve = agnostic_gap(cfg.system, cfg.predictor, cfg.baselines, cli_harness(cfg));
  const fs::path dir = prepare_output(cfg);
  {
    auto os = open_output(dir / "agnostic.csv");
    write_risk_curve_csv(os, curve);
  }
  write_manifest(dir, "agnostic", cfg, {"agnostic.csv"});
  out << "terminal_gap=" << format_double(curve.excess_mean.back()) << " ci=" << format_double(curve.excess_ci_half.back())
      << '\n';
  return kOk;
}

int cmd_biasvar(const Options& opt, std::ostream& out) {
  const ExperimentConfig cfg = load_config(opt);
  if (cfg.predictor.kind != PredictorKind::spectral) throw ConfigError("biasvar needs predictor.kind = spectral");
  const BiasVarianceReport report = bias_variance_split(cfg.system, cfg.predictor, cli_harness(cfg), cfg.reference_multiplier);
  const fs::path dir = prepare_output(cfg);
  {
    auto os = open_output(dir / "biasvar.csv");
    write_bias_variance_csv(os, report);
  }
  write_manifest(dir, "biasvar", cfg, {"biasvar.csv"});
  out << "terminal_bias=" << format_double(report.bias.excess_mean.back())
      << " terminal_variance=" << format_double(report.variance.excess_mean.back()) << '\n';
  return kOk;
}

int report_error(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  nlohmann::json j;
  j["error"] = kind;
  j["exit_code"] = code;
  j["message"] = message;
  err << j.dump() << '\n';
  return code;
}

bool is_override(const std::string& arg) {
  if (arg.rfind("--", 0) != 0) return false;
  const auto eq = arg.find('=');
  const auto dot = arg.find('.');
  return eq != std::string::npos && dot != std::string::npos && dot < eq;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options opt;
  std::vector<std::string> rest;
  for (const auto& a : args) {
    if (is_override(a)) opt.overrides.push_back(a.substr(2));
    else rest.push_back(a);
  }

  CLI::App app{"Spectral filtering and dynamic learnability experiments", "dynolearn"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", opt.config_path, "Experiment config file");
    sub->add_option("-o,--out", opt.out_dir, "Output directory (overrides experiment.output)");
    sub->add_option("--threads", opt.threads, "Worker threads (default: DYNOLEARN_THREADS or all cores)");
  };
  auto* simulate_cmd = app.add_subcommand("simulate", "Write one trajectory as CSV");
  add_common(simulate_cmd);
  simulate_cmd->add_option("--horizon", opt.horizon, "Number of steps");
  auto* filters_cmd = app.add_subcommand("filters", "Dump Hilbert spectrum and filters");
  filters_cmd->add_option("-o,--out", opt.out_dir, "Output directory");
  filters_cmd->add_option("--window", opt.window, "Filter window T_w")->check(CLI::PositiveNumber);
  filters_cmd->add_option("--m", opt.m, "Number of filters")->check(CLI::PositiveNumber);
  filters_cmd->add_flag("--sign-augmented", opt.sign_augmented, "Add alternating-sign twins");
  auto* risk_cmd = app.add_subcommand("risk", "Excess risk curve");
  add_common(risk_cmd);
  auto* burnin_cmd = app.add_subcommand("burnin", "Burn-in time T(eps)");
  add_common(burnin_cmd);
  burnin_cmd->add_option("--curve", opt.curve_path, "Existing risk curve CSV instead of running the harness");
  burnin_cmd->add_option("--epsilon", opt.epsilons, "Absolute epsilon (repeatable)");
  auto* mstar_cmd = app.add_subcommand("mstar", "Minimal filter count sweep");
  add_common(mstar_cmd);
  auto* agnostic_cmd = app.add_subcommand("agnostic", "Gap to the best baseline");
  add_common(agnostic_cmd);
  auto* biasvar_cmd = app.add_subcommand("biasvar", "Bias/variance split");
  add_common(biasvar_cmd);

  std::vector<std::string> reversed(rest.rbegin(), rest.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kOk;
  } catch (const CLI::ParseError& e) {
    return report_error(err, kConfigError, "usage", e.what());
  }

  try {
    if (simulate_cmd->parsed()) return cmd_simulate(opt, out);
    if (filters_cmd->parsed()) return cmd_filters(opt, out);
    if (risk_cmd->parsed()) return cmd_risk(opt, out);
    if (burnin_cmd->parsed()) return cmd_burnin(opt, out);
    if (mstar_cmd->parsed()) return cmd_mstar(opt, out);
    if (agnostic_cmd->parsed()) return cmd_agnostic(opt, out);
    if (biasvar_cmd->parsed()) return cmd_biasvar(opt, out);
  } catch (const ConfigError& e) {
    return report_error(err, kConfigError, "config", e.what());
  } catch (const IncompatiblePairing& e) {
    return report_error(err, kIncompatiblePairing, "incompatible_pairing", e.what());
  } catch (const NumericalFailure& e) {
    return report_error(err, kNumericalFailure, "numerical_failure", e.what());
  } catch (const InvariantViolation& e) {
    return report_error(err, kInvariantViolation, "invariant_violation", e.what());
  } catch (const ContractViolation& e) {
    return report_error(err, kInvariantViolation, "contract_violation", e.what());
  } catch (const fs::filesystem_error& e) {
    return report_error(err, kConfigError, "io", e.what());
  }
  return report_error(err, kConfigError, "usage", "no subcommand");
}

}  // namespace dynolearn::cli
