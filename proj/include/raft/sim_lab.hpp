#ifndef RAFT_SIM_LAB_HPP_
#define RAFT_SIM_LAB_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "raft/fit.hpp"
#include "raft/rng.hpp"

namespace raft {

// The two-covariate simulation design: Weibull failure times (shape k, scale
// exp(xi/k + x'beta0)), equivalently residuals from a centered minimum
// extreme-value law with survivor exp(-exp(k u - xi)); log-normal censoring.
// Covariate column 1 is the Bernoulli(1/2) indicator and column 2 is
// N(0,1) + indicator/2, which is the component order the reference variance
// table uses.
struct SimDesign {
  int n = 200;
  int reps = 500;
  double weibull_shape = 0.5;
  double censor_mu = 1.5;
  double censor_sd = 2.0;  // standard deviation (pinned by the ~34% censoring rate)
  std::vector<std::string> methods = {"raft.NoW", "raft.WW", "raft.WF1", "fraft"};
  std::vector<Eigen::VectorXd> beta0_cells;
  std::vector<double> b_grid;  // maps to beta0 = b * (1, -1)
  std::vector<double> ci_levels = {0.80, 0.90, 0.95};
  double test_level = 0.05;
  std::uint64_t seed = 20240901;
  int threads = 0;  // 0: hardware concurrency
  SolverConfig solver;
};

CensoredSample generate(const SimDesign& design, const Eigen::VectorXd& beta0,
                        RngStream& rng);

// True residual law of the design (continuous).
double true_survival(const SimDesign& design, double u);
double euler_gamma();

// Population mean and covariance of the design's covariate vector.
Eigen::VectorXd design_mu_x();
Eigen::MatrixXd design_sigma_x();

// E S^3(E0) with E0 = log C - X' beta0, by nested adaptive quadrature.
double expected_s3_censoring(const SimDesign& design, const Eigen::VectorXd& beta0);

struct ReplicateRecord {
  bool ok = false;
  std::string error;
  bool converged = false;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd psi0_scaled;  // n^{-1/2} Psi(beta0)
  Eigen::VectorXd sigma_diag;   // diag Sigma_hat(beta_hat)
  Eigen::VectorXd omega_diag;
  double qs_p_at_zero = 1.0;
  double wald_p_at_zero = 1.0;
  double qs_p_at_truth = 1.0;
  double wald_p_at_truth = 1.0;
  // cover[level_index][coordinate]
  std::vector<std::vector<bool>> cover;
  double censor_frac = 0.0;
};

struct CellSummary {
  std::string beta0_label;
  Eigen::VectorXd beta0;
  std::string method;
  int reps = 0;
  int failures = 0;
  Eigen::MatrixXd sigma_emp;       // cov of n^{-1/2} Psi(beta0)
  Eigen::VectorXd mean_sigma_diag;
  Eigen::VectorXd bias;
  Eigen::MatrixXd omega_emp;       // n * cov of beta_hat
  Eigen::VectorXd mean_omega_diag;
  double reject_qs_at_zero = 0.0;
  double reject_wald_at_zero = 0.0;
  double reject_qs_at_truth = 0.0;
  double reject_wald_at_truth = 0.0;
  std::vector<std::vector<double>> coverage;  // [level][coordinate]
  double censor_rate = 0.0;
  std::vector<ReplicateRecord> records;
};

struct SimReport {
  SimDesign design;
  std::vector<CellSummary> cells;
};

// One simulation cell: `reps` datasets at beta0, each fitted by `method`,
// with tests at 0 and at beta0 and CIs at the design levels. Replicate
// failures are recorded and excluded, never silently dropped. Streams are
// keyed by (seed, cell id, replicate), so results are scheduling-independent.
CellSummary run_cell(const SimDesign& design, const Eigen::VectorXd& beta0,
                     const std::string& beta0_label, const std::string& method_label,
                     std::uint64_t cell_id);

SimReport run_campaign(const SimDesign& design);

struct PowerRow {
  double b;
  std::string method;
  std::string test;  // "quasi_score" | "wald"
  double rejection;
  double se;
  int reps_used;
};

std::vector<PowerRow> power_curve(const SimDesign& design);

struct CoverageRow {
  double b;
  std::string method;
  double level;
  int coordinate;
  double coverage;
  double se;
  int reps_used;
};

std::vector<CoverageRow> coverage_curve(const SimDesign& design);

// Monte Carlo estimates of the two terms of the variance decomposition
// (population integrals under the true laws) against the empirical variance
// of n^{-1/2} Psi(beta0) across replicate datasets. Batched for standard
// errors. Wilcoxon weights throughout.
struct DecompReport {
  Eigen::MatrixXd sigma_emp, sigma_emp_se;
  Eigen::MatrixXd sigma1, sigma1_se;
  Eigen::MatrixXd sigma2, sigma2_se;
  Eigen::MatrixXd sigma_x_over_12;
  double sigma2_min_eig = 0.0;
  double sigma2_min_eig_se = 0.0;
  bool decomposition_ok = false;  // |emp - (s1 - s2)| <= 3 combined SE
  bool sigma2_psd_ok = false;
};

DecompReport sigma_decomposition_check(const SimDesign& design, const Eigen::VectorXd& beta0,
                                       long mc_draws);

struct RankMomentCheck {
  double mean = 0.0, mean_se = 0.0;
  double variance = 0.0, variance_se = 0.0;
  double target_mean = 0.5;
  double target_variance = 0.0;
  bool mean_ok = false, variance_ok = false;
};

// Moments of the population rank under the true laws, against their closed
// forms (mean 1/2; variance (1 - E S^3)/12 for a continuous residual law).
RankMomentCheck population_rank_moments(const SimDesign& design, const Eigen::VectorXd& beta0,
                                        long draws);

// Campaign artifacts.
void write_table1_csv(const SimReport& report, const std::string& path);
void write_power_csv(const std::vector<PowerRow>& rows, const std::string& path);
void write_coverage_csv(const std::vector<CoverageRow>& rows, const std::string& path);
void write_decomp_json(const DecompReport& report, const std::string& path);
void write_manifest(const SimDesign& design, const std::string& mode, const std::string& path);

struct SimConfig {
  SimDesign design;
  std::string mode = "table1";  // table1 | power | coverage | decomp
  long mc_draws = 200000;
  Eigen::VectorXd decomp_beta0;
  bool seed_set = false;
};

// key = value configuration: mode, n, reps, seed, threads, methods, beta0,
// b_grid, levels, censor_mu, censor_sd, weibull_shape, test_level, mc_draws,
// decomp_beta0, solver.tol, solver.max_sweeps, solver.bracket_init,
// solver.bracket_grow, solver.init. Unknown keys are errors.
SimConfig parse_sim_config(std::istream& in);

// Runs replicated tasks on a small pool; results land by index.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace raft

#endif  // RAFT_SIM_LAB_HPP_
