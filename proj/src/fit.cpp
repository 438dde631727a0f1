#include "raft/fit.hpp"

#include <json.hpp>

#include "raft/errors.hpp"

namespace raft {

Method Method::from_label(const std::string& label, int n) {
  Method m;
  m.label = label;
  if (label == "fraft" || label == "gehan") {
    m.gehan = true;
    return m;
  }
  if (label == "raft.NoW") {
    m.score = ScoreFunction::wilcoxon();
  } else if (label == "raft.WW") {
    m.score = ScoreFunction::shifted_logrank(n);
  } else if (label == "raft.WF1") {
    m.score = ScoreFunction::generalized_f(1.0, 10.0);
  } else if (label == "raft.WF2") {
    m.score = ScoreFunction::generalized_f(10.0, 1.0);
  } else if (label == "raft.WF3") {
    m.score = ScoreFunction::generalized_f(3.0, 3.0);
  } else {
    m.score = ScoreFunction::parse(label, n);
  }
  return m;
}

EstimatingFn Method::estimating_fn(const CensoredSample& sample) const {
  if (gehan) {
    return [&sample](const Eigen::VectorXd& beta) {
      return psi_gehan(make_context(sample, beta, ScoreFunction::wilcoxon()));
    };
  }
  const ScoreFunction s = *score;
  return [&sample, s](const Eigen::VectorXd& beta) {
    return psi_wlr_form(make_context(sample, beta, s));
  };
}

Eigen::VectorXd Method::psi(const CensoredSample& sample, const Eigen::VectorXd& beta) const {
  return estimating_fn(sample)(beta);
}

SigmaHat Method::sigma(const CensoredSample& sample, const Eigen::VectorXd& beta) const {
  const EstimatingContext ctx =
      make_context(sample, beta, gehan ? ScoreFunction::wilcoxon() : *score);
  return gehan ? sigma_hat_gehan(ctx) : sigma_hat(ctx);
}

TestResult Method::quasi_score(const CensoredSample& sample,
                               const Eigen::VectorXd& beta_null) const {
  return gehan ? quasi_score_test_gehan(sample, beta_null)
               : quasi_score_test(sample, *score, beta_null);
}

FitResult fit(const CensoredSample& sample, const Method& method, const FitOptions& options) {
  FitResult result;
  result.method = method;
  result.variance_method = options.variance == OmegaMethod::Huang ? "huang" : "monte_carlo";

  const EstimatingFn psi = method.estimating_fn(sample);
  result.solve = find_zero_crossing(psi, sample.n(), sample.p(), options.solver,
                                    [&] {
                                      SolverConfig c = options.solver;
                                      if (c.init == SolverInit::Gehan)
                                        return solve_gehan(sample, c).beta_hat;
                                      if (c.init == SolverInit::Vector && c.beta0.size() > 0)
                                        return Eigen::VectorXd(c.beta0);
                                      return Eigen::VectorXd(Eigen::VectorXd::Zero(sample.p()));
                                    }(),
                                    Eigen::VectorXd::Zero(sample.p()),
                                    default_bracket_scales(sample));

  result.sigma = method.sigma(sample, result.solve.beta_hat);

  if (options.compute_omega) {
    if (options.variance == OmegaMethod::Huang) {
      result.omega = omega_huang(psi, sample.n(), result.solve, result.sigma, options.solver);
    } else {
      Eigen::MatrixXd dz = Eigen::MatrixXd::Identity(sample.p(), sample.p());
      if (options.dz_scale_by_huang) {
        const OmegaHat pilot =
            omega_huang(psi, sample.n(), result.solve, result.sigma, options.solver);
        dz = pilot.matrix.diagonal().asDiagonal();
      }
      result.omega = omega_monte_carlo(psi, sample.n(), result.solve, result.sigma,
                                       options.mc_reps, dz, options.seed);
    }

    for (const auto& null_value : options.test_nulls) {
      result.tests.push_back(NamedTest{method.quasi_score(sample, null_value), null_value});
      result.tests.push_back(
          NamedTest{wald(result.solve, *result.omega, null_value, sample.n()), null_value});
    }
    for (double level : options.ci_levels) {
      result.cis.push_back(
          CiSet{level, confidence_intervals(result.solve, *result.omega, level, sample.n())});
    }
  } else {
    for (const auto& null_value : options.test_nulls)
      result.tests.push_back(NamedTest{method.quasi_score(sample, null_value), null_value});
  }
  return result;
}

std::string fit_report_json(const FitResult& result, int n_obs) {
  using nlohmann::json;
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  auto mat = [&](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      std::vector<double> r;
      for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
      rows.push_back(std::move(r));
    }
    return rows;
  };

  json tests = json::array();
  for (const auto& t : result.tests) {
    tests.push_back({{"kind", t.result.kind},
                     {"null", vec(t.null_value)},
                     {"statistic", t.result.statistic},
                     {"df", t.result.df},
                     {"p_value", t.result.p_value}});
  }

  json cis = json::array();
  for (const auto& set : result.cis) {
    json lower = json::array(), upper = json::array();
    for (const auto& iv : set.intervals) {
      lower.push_back(iv.lower);
      upper.push_back(iv.upper);
    }
    cis.push_back({{"level", set.level}, {"lower", lower}, {"upper", upper}});
  }

  json solver = {
      {"converged", result.solve.converged},
      {"sweeps_used", result.solve.sweeps_used},
      {"psi_at_solution", vec(result.solve.psi_at_solution)},
      {"crossing_widths", result.solve.crossing_widths},
      {"threshold", result.solve.threshold},
  };
  if (result.solve.failure == SolveFailure::NoBracket)
    solver["failure"] = "no_bracket:" + result.solve.failure_detail;
  else if (result.solve.failure == SolveFailure::NotConverged)
    solver["failure"] = "not_converged:" + result.solve.failure_detail;

  json score;
  score["label"] = result.method.label;
  score["spec"] = result.method.gehan ? "gehan" : result.method.score->spec();

  json report = {
      {"beta_hat", vec(result.solve.beta_hat)},
      {"sigma_hat", mat(result.sigma.matrix)},
      {"method", result.variance_method},
      {"tests", tests},
      {"ci", cis},
      {"solver", solver},
      {"score", score},
      {"n", n_obs},
  };
  if (result.omega) {
    report["omega_hat"] = mat(result.omega->matrix);
    if (result.omega->method == OmegaMethod::Huang)
      report["omega_diagnostics"] = {{"fallback_columns", result.omega->fallback_columns}};
    else
      report["omega_diagnostics"] = {{"regression_r2", result.omega->regression_r2}};
  } else {
    report["omega_hat"] = nullptr;
  }
  return report.dump(2);
}

}  // namespace raft
