// raft: rank-based regression for censored accelerated-failure-time data.
//
// Subcommands: fit, test, km, psi, simulate. Machine-readable JSON/CSV
// output; exit codes 0 ok, 1 input error, 2 not converged, 3 singular
// matrix.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "raft/errors.hpp"
#include "raft/fit.hpp"
#include "raft/sim_lab.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitSingular = 3;

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text << '\n';
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw raft::InputError("cannot_write", "cannot open " + out_path);
  out << text << '\n';
}

int emit_error(const raft::Error& err, int code) {
  json j = {{"error", err.code()}, {"message", err.what()}};
  std::cout << j.dump() << std::endl;
  return code;
}

Eigen::VectorXd parse_vector(const std::string& text, int expected) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    try {
      values.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw raft::BadConfig("bad vector component '" + item + "'");
    }
  if (expected >= 0 && static_cast<int>(values.size()) != expected)
    throw raft::BadConfig("expected " + std::to_string(expected) + " components, got " +
                          std::to_string(values.size()));
  return Eigen::Map<const Eigen::VectorXd>(values.data(), values.size());
}

std::uint64_t resolve_seed(bool seed_given, std::uint64_t seed) {
  if (seed_given) return seed;
  std::random_device rd;
  const std::uint64_t chosen = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << chosen << '\n';
  return chosen;
}

struct SolverFlags {
  double tol = -1.0;
  int max_sweeps = -1;
  double bracket_init = -1.0;
  double bracket_grow = -1.0;
  std::string init = "zero";

  void apply(raft::SolverConfig& config) const {
    if (tol > 0.0) config.tol_psi = tol;
    if (max_sweeps > 0) config.max_sweeps = max_sweeps;
    if (bracket_init > 0.0) config.bracket_init = bracket_init;
    if (bracket_grow > 1.0) config.bracket_grow = bracket_grow;
    if (init == "zero") {
      config.init = raft::SolverInit::Zero;
    } else if (init == "gehan") {
      config.init = raft::SolverInit::Gehan;
    } else {
      config.init = raft::SolverInit::Vector;
      config.beta0 = parse_vector(init, -1);
    }
  }
};

int run_fit(const std::string& input, const std::string& score_spec,
            const std::string& variance, int mc_reps, const std::string& dz,
            double level, const SolverFlags& solver_flags, bool seed_given,
            std::uint64_t seed, const std::string& null_spec, const std::string& out) {
  const raft::CensoredSample sample = raft::load_csv(input);
  const raft::Method method = raft::Method::from_label(score_spec, sample.n());

  raft::FitOptions options;
  solver_flags.apply(options.solver);
  options.variance = variance == "mc" ? raft::OmegaMethod::MonteCarlo : raft::OmegaMethod::Huang;
  options.mc_reps = mc_reps;
  options.dz_scale_by_huang = dz != "identity";
  options.seed = resolve_seed(seed_given, seed);
  options.ci_levels = {level};
  if (!null_spec.empty()) options.test_nulls.push_back(parse_vector(null_spec, sample.p()));

  const raft::FitResult result = raft::fit(sample, method, options);
  emit(raft::fit_report_json(result, sample.n()), out);
  return result.solve.converged ? kExitOk : kExitNotConverged;
}

int run_test(const std::string& input, const std::string& score_spec,
             const std::string& null_spec, bool with_wald, const SolverFlags& solver_flags,
             bool seed_given, std::uint64_t seed, const std::string& out) {
  const raft::CensoredSample sample = raft::load_csv(input);
  const raft::Method method = raft::Method::from_label(score_spec, sample.n());
  const Eigen::VectorXd null_value = parse_vector(null_spec, sample.p());

  json report;
  const raft::TestResult qs = method.quasi_score(sample, null_value);
  report["tests"] = json::array();
  report["tests"].push_back({{"kind", qs.kind},
                             {"statistic", qs.statistic},
                             {"df", qs.df},
                             {"p_value", qs.p_value}});
  bool converged = true;
  if (with_wald) {
    raft::FitOptions options;
    solver_flags.apply(options.solver);
    options.seed = resolve_seed(seed_given, seed);
    options.test_nulls = {null_value};
    options.ci_levels = {};
    const raft::FitResult fr = raft::fit(sample, method, options);
    converged = fr.solve.converged;
    for (const auto& t : fr.tests) {
      if (t.result.kind == "wald")
        report["tests"].push_back({{"kind", t.result.kind},
                                   {"statistic", t.result.statistic},
                                   {"df", t.result.df},
                                   {"p_value", t.result.p_value}});
    }
    report["beta_hat"] = std::vector<double>(fr.solve.beta_hat.data(),
                                             fr.solve.beta_hat.data() + sample.p());
  }
  report["null"] = std::vector<double>(null_value.data(), null_value.data() + sample.p());
  emit(report.dump(2), out);
  return converged ? kExitOk : kExitNotConverged;
}

int run_km(const std::string& input, const std::string& beta_spec, const std::string& out) {
  const raft::CensoredSample sample = raft::load_csv(input);
  const Eigen::VectorXd beta = beta_spec.empty()
                                   ? Eigen::VectorXd::Zero(sample.p()).eval()
                                   : parse_vector(beta_spec, sample.p());
  const raft::ResidualView view = raft::residuals(sample, beta);
  const raft::StepCdf cdf = raft::self_consistent(view);

  std::ostringstream os;
  os.precision(17);
  os << "t,F_minus,F,mid";
  for (int k = 0; k < cdf.jump_count(); ++k) {
    const raft::MidCdfValue v = cdf.eval(cdf.points()[k]);
    os << '\n' << cdf.points()[k] << ',' << v.f_minus << ',' << v.f << ',' << v.mid;
  }
  emit(os.str(), out);
  return kExitOk;
}

int run_psi(const std::string& input, const std::string& score_spec,
            const std::string& beta_spec, const std::string& out) {
  const raft::CensoredSample sample = raft::load_csv(input);
  const raft::Method method = raft::Method::from_label(score_spec, sample.n());
  const Eigen::VectorXd beta = beta_spec.empty()
                                   ? Eigen::VectorXd::Zero(sample.p()).eval()
                                   : parse_vector(beta_spec, sample.p());
  json report;
  report["beta"] = std::vector<double>(beta.data(), beta.data() + sample.p());
  const Eigen::VectorXd psi = method.psi(sample, beta);
  report["psi"] = std::vector<double>(psi.data(), psi.data() + sample.p());
  if (!method.gehan) {
    const raft::EstimatingContext ctx = raft::make_context(sample, beta, *method.score);
    const Eigen::VectorXd rank_form = raft::psi_rank_form(ctx);
    report["psi_rank_form"] =
        std::vector<double>(rank_form.data(), rank_form.data() + sample.p());
  }
  emit(report.dump(2), out);
  return kExitOk;
}

int run_simulate(const std::string& config_path, const std::string& out_dir,
                 bool seed_given, std::uint64_t seed_override) {
  std::ifstream in(config_path);
  if (!in) throw raft::InputError("no_such_file", "cannot open " + config_path);
  raft::SimConfig config = raft::parse_sim_config(in);
  if (seed_given) {
    config.design.seed = seed_override;
  } else if (!config.seed_set) {
    config.design.seed = resolve_seed(false, 0);
  }

  std::filesystem::create_directories(out_dir);
  const auto path = [&](const std::string& name) {
    return (std::filesystem::path(out_dir) / name).string();
  };

  raft::write_manifest(config.design, config.mode, path("manifest.json"));
  if (config.mode == "table1") {
    const raft::SimReport report = raft::run_campaign(config.design);
    raft::write_table1_csv(report, path("table1.csv"));
  } else if (config.mode == "power") {
    raft::write_power_csv(raft::power_curve(config.design), path("power.csv"));
  } else if (config.mode == "coverage") {
    raft::write_coverage_csv(raft::coverage_curve(config.design), path("coverage.csv"));
  } else if (config.mode == "decomp") {
    Eigen::VectorXd beta0 = config.decomp_beta0;
    if (beta0.size() == 0) beta0 = Eigen::VectorXd::Zero(2);
    raft::write_decomp_json(
        raft::sigma_decomposition_check(config.design, beta0, config.mc_draws),
        path("decomp.json"));
  }
  std::cout << "wrote " << out_dir << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rank-based AFT regression with right-censored data"};
  app.require_subcommand(1);

  std::string input, out, score_spec = "wilcoxon", null_spec, beta_spec;
  std::string variance = "huang", dz = "scale";
  std::string config_path, out_dir = ".";
  double level = 0.95;
  int mc_reps = 500;
  bool with_wald = false;
  std::uint64_t seed = 0;
  bool seed_given = false;
  SolverFlags solver_flags;

  auto add_common = [&](CLI::App* cmd, bool needs_input) {
    if (needs_input)
      cmd->add_option("--input,-i", input, "input CSV (time,status,x1,...,xp)")->required();
    cmd->add_option("--out,-o", out, "output path (default: stdout)");
    cmd->add_option("--seed", seed, "RNG seed")->each([&](const std::string&) {
      seed_given = true;
    });
  };
  auto add_solver = [&](CLI::App* cmd) {
    cmd->add_option("--solver-tol", solver_flags.tol, "acceptance tolerance factor");
    cmd->add_option("--solver-max-sweeps", solver_flags.max_sweeps, "max coordinate sweeps");
    cmd->add_option("--solver-bracket-init", solver_flags.bracket_init,
                    "initial bracket half-width");
    cmd->add_option("--solver-bracket-grow", solver_flags.bracket_grow,
                    "bracket growth factor");
    cmd->add_option("--init", solver_flags.init, "zero | gehan | comma-separated vector");
  };

  auto* fit_cmd = app.add_subcommand("fit", "fit the rank-based AFT model");
  add_common(fit_cmd, true);
  add_solver(fit_cmd);
  fit_cmd->add_option("--score", score_spec,
                      "wilcoxon | logrank | normal:alpha=<a> | genf:m1=<v>,m2=<v> | gehan");
  fit_cmd->add_option("--variance", variance, "huang | mc")
      ->check(CLI::IsMember({"huang", "mc"}));
  fit_cmd->add_option("--mc-reps", mc_reps, "Monte Carlo variance replicates");
  fit_cmd->add_option("--dz", dz, "scale | identity")->check(CLI::IsMember({"scale", "identity"}));
  fit_cmd->add_option("--level", level, "confidence level");
  fit_cmd->add_option("--null", null_spec, "null vector for tests");

  auto* test_cmd = app.add_subcommand("test", "quasi-score test at a null vector");
  add_common(test_cmd, true);
  add_solver(test_cmd);
  test_cmd->add_option("--score", score_spec, "score spec");
  test_cmd->add_option("--null", null_spec, "null vector")->required();
  test_cmd->add_flag("--wald", with_wald, "also fit and run the Wald test");

  auto* km_cmd = app.add_subcommand("km", "dump the self-consistent residual CDF");
  add_common(km_cmd, true);
  km_cmd->add_option("--beta", beta_spec, "beta at which residuals are formed (default 0)");

  auto* psi_cmd = app.add_subcommand("psi", "evaluate the estimating function (debug)");
  add_common(psi_cmd, true);
  psi_cmd->add_option("--score", score_spec, "score spec");
  psi_cmd->add_option("--beta", beta_spec, "evaluation point (default 0)");

  auto* sim_cmd = app.add_subcommand("simulate", "run a simulation campaign");
  sim_cmd->add_option("--config,-c", config_path, "campaign config file")->required();
  sim_cmd->add_option("--out-dir,-d", out_dir, "output directory");
  sim_cmd->add_option("--seed", seed, "seed override")->each([&](const std::string&) {
    seed_given = true;
  });

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(fit_cmd))
      return run_fit(input, score_spec, variance, mc_reps, dz, level, solver_flags,
                     seed_given, seed, null_spec, out);
    if (app.got_subcommand(test_cmd))
      return run_test(input, score_spec, null_spec, with_wald, solver_flags, seed_given,
                      seed, out);
    if (app.got_subcommand(km_cmd)) return run_km(input, beta_spec, out);
    if (app.got_subcommand(psi_cmd)) return run_psi(input, score_spec, beta_spec, out);
    if (app.got_subcommand(sim_cmd))
      return run_simulate(config_path, out_dir, seed_given, seed);
  } catch (const raft::SingularSigma& err) {
    return emit_error(err, kExitSingular);
  } catch (const raft::SingularXi& err) {
    return emit_error(err, kExitSingular);
  } catch (const raft::SingularOmega& err) {
    return emit_error(err, kExitSingular);
  } catch (const raft::Error& err) {
    return emit_error(err, kExitInput);
  } catch (const std::exception& err) {
    json j = {{"error", "internal"}, {"message", err.what()}};
    std::cout << j.dump() << std::endl;
    return kExitInput;
  }
  return kExitOk;
}
