#ifndef RAFT_VARIANCE_HPP_
#define RAFT_VARIANCE_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "raft/rank_estimator.hpp"
#include "raft/solver.hpp"

namespace raft {

// Plug-in estimate of the variance of n^{-1/2} Psi_n(beta):
// (1/n) sum over failures of w(e_i)^2 H(e_i), H the at-risk covariance.
struct SigmaHat {
  Eigen::MatrixXd matrix;   // symmetric, eigenvalues clamped at 0
  Eigen::VectorXd at_beta;
};

SigmaHat sigma_hat(const EstimatingContext& ctx);

// Dedicated Wilcoxon form (1/4n) sum of delta_i S(e_i-)^2 H(e_i); agrees
// with the general-weight path to roundoff and is kept as a cross-check.
SigmaHat sigma_hat_wilcoxon(const EstimatingContext& ctx);

// Variance of the Gehan estimating function (weight = at-risk fraction,
// raw failure indicators).
SigmaHat sigma_hat_gehan(const EstimatingContext& ctx);

enum class OmegaMethod { Huang, MonteCarlo };

struct OmegaHat {
  Eigen::MatrixXd matrix;
  OmegaMethod method = OmegaMethod::Huang;
  std::vector<int> fallback_columns;  // Huang: coordinates solved one-sided
  double regression_r2 = 0.0;         // Monte Carlo: fit quality diagnostic
};

struct TestResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
  std::string kind;  // "quasi_score" | "wald"
};

// n^{-1} Psi(beta_null)' Sigma^{-1} Psi(beta_null) against chi^2_p.
// Throws SingularSigma when cond(Sigma) > 1e12.
TestResult quasi_score_test(const CensoredSample& sample, const ScoreFunction& score,
                            const Eigen::VectorXd& beta_null);
TestResult quasi_score_test_gehan(const CensoredSample& sample,
                                  const Eigen::VectorXd& beta_null);

// Inverse numerical differentiation: solve n^{-1}Psi = +/- columns of the
// symmetric square root of n^{-1} Sigma, recover the slope implicitly.
// One-sided fallback when only one side admits a solution; throws
// NoSolutionEitherSide when neither does.
OmegaHat omega_huang(const EstimatingFn& psi, int n_obs, const SolveOutcome& fit,
                     const SigmaHat& sigma, const SolverConfig& config);
OmegaHat omega_huang(const CensoredSample& sample, const ScoreFunction& score,
                     const SolveOutcome& fit, const SigmaHat& sigma,
                     const SolverConfig& config);

// Monte Carlo slope recovery: perturb beta_hat by Z_b / sqrt(n), regress the
// centered n^{-1/2} Psi values on the centered Z_b, symmetrize, sandwich.
// Throws SingularXi (with the regression R^2) on a rank-deficient fit.
OmegaHat omega_monte_carlo(const EstimatingFn& psi, int n_obs, const SolveOutcome& fit,
                           const SigmaHat& sigma, int b_reps, const Eigen::MatrixXd& dz,
                           std::uint64_t seed);
OmegaHat omega_monte_carlo(const CensoredSample& sample, const ScoreFunction& score,
                           const SolveOutcome& fit, const SigmaHat& sigma, int b_reps,
                           const Eigen::MatrixXd& dz, std::uint64_t seed);

// n (beta_hat - beta_null)' Omega^{-1} (beta_hat - beta_null) against chi^2_p.
TestResult wald(const SolveOutcome& fit, const OmegaHat& omega,
                const Eigen::VectorXd& beta_null, int n_obs);

struct Interval {
  double lower;
  double upper;
};

// Marginal intervals beta_k +/- z_{1-a/2} sqrt(Omega_kk / n).
std::vector<Interval> confidence_intervals(const SolveOutcome& fit, const OmegaHat& omega,
                                           double level, int n_obs);

// Symmetric PSD square root (eigenvalues clamped at zero).
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m);

// Solves m x = rhs; throws the supplied error when cond(m) > 1e12.
Eigen::VectorXd solve_spd_checked(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                                  const char* singular_code);
Eigen::MatrixXd inverse_spd_checked(const Eigen::MatrixXd& m, const char* singular_code);

}  // namespace raft

#endif  // RAFT_VARIANCE_HPP_
