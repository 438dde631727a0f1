#ifndef RAFT_FIT_HPP_
#define RAFT_FIT_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "raft/variance.hpp"

namespace raft {

// An estimation method: either a score-driven rank estimator or the Gehan
// comparator. Simulation labels: raft.NoW (Wilcoxon), raft.WW (shifted
// logrank), raft.WF1/WF2/WF3 (generalized F (1,10)/(10,1)/(3,3)), fraft
// (Gehan).
struct Method {
  std::string label;
  bool gehan = false;
  std::optional<ScoreFunction> score;

  static Method from_label(const std::string& label, int n);

  EstimatingFn estimating_fn(const CensoredSample& sample) const;
  Eigen::VectorXd psi(const CensoredSample& sample, const Eigen::VectorXd& beta) const;
  SigmaHat sigma(const CensoredSample& sample, const Eigen::VectorXd& beta) const;
  TestResult quasi_score(const CensoredSample& sample, const Eigen::VectorXd& beta_null) const;
};

struct NamedTest {
  TestResult result;
  Eigen::VectorXd null_value;
};

struct CiSet {
  double level;
  std::vector<Interval> intervals;
};

struct FitOptions {
  SolverConfig solver;
  OmegaMethod variance = OmegaMethod::Huang;
  int mc_reps = 500;
  // Monte Carlo perturbation covariance: identity, or identity scaled by the
  // diagonal of a first Huang sandwich.
  bool dz_scale_by_huang = true;
  std::uint64_t seed = 1;
  std::vector<double> ci_levels = {0.95};
  std::vector<Eigen::VectorXd> test_nulls;  // quasi-score + Wald at each
  bool compute_omega = true;
};

struct FitResult {
  Method method;
  std::string variance_method;  // "huang" | "monte_carlo"
  SolveOutcome solve;
  SigmaHat sigma;
  std::optional<OmegaHat> omega;
  std::vector<NamedTest> tests;
  std::vector<CiSet> cis;
};

FitResult fit(const CensoredSample& sample, const Method& method, const FitOptions& options);

// The machine-readable fit report (fields: beta_hat, sigma_hat, omega_hat,
// method, tests, ci, solver, score).
std::string fit_report_json(const FitResult& result, int n_obs);

}  // namespace raft

#endif  // RAFT_FIT_HPP_
