#ifndef RAFT_RANK_ESTIMATOR_HPP_
#define RAFT_RANK_ESTIMATOR_HPP_

#include <Eigen/Core>
#include <vector>

#include "raft/censored_sample.hpp"
#include "raft/score_function.hpp"
#include "raft/step_cdf.hpp"

namespace raft {

// Everything the estimating function needs at one beta: the residual view,
// the self-consistent CDF of those residuals, and the score. The CDF is tied
// to this exact beta; a new beta means a new context.
struct EstimatingContext {
  const CensoredSample* sample;
  ScoreFunction score;
  ResidualView view;
  StepCdf cdf;
  Eigen::VectorXd xbar;

  int n() const { return sample->n(); }
  int p() const { return sample->p(); }
};

EstimatingContext make_context(const CensoredSample& sample, const Eigen::VectorXd& beta,
                               const ScoreFunction& score);

// At-risk moments at a distinct failure residual: Theta_j = (1/n) sum_i
// X_i^{(j)} 1{e_i >= value}, accumulated from the largest residual downward.
struct RiskAverage {
  double value;
  double f;        // F(value)
  double f_minus;  // F(value-)
  int failures;    // pooled failure count (delta_mod)
  double theta0;
  Eigen::VectorXd theta1;
  Eigen::MatrixXd theta2;
  Eigen::VectorXd xbar_at;  // theta1 / theta0
};

std::vector<RiskAverage> risk_averages(const EstimatingContext& ctx);

// Imputed (generalized mid-)ranks: gamma_a at the observation's own jump for
// failures, the tail average Gamma_a for censored observations. Uses the
// modified failure indicators. Sums exactly to n (A(1) - A(0)) at any beta.
std::vector<double> imputed_ranks(const EstimatingContext& ctx);

// sum_i rank_i (x_i - xbar).
Eigen::VectorXd psi_rank_form(const EstimatingContext& ctx);

// sum_i (rank_i - (A(1) - A(0))) x_i; identical value by rank-sum
// conservation, exposed as a cross-check.
Eigen::VectorXd psi_rank_form_centered(const EstimatingContext& ctx);

// gamma_a(u) - Gamma_a(u): the weight under which the rank form becomes a
// weighted-logrank statistic. For the Wilcoxon score equals -S(u-)/2.
double exact_weight(const EstimatingContext& ctx, double u);

// Weighted-logrank evaluation of the same estimating function: one
// descending sweep maintaining at-risk suffix sums. Equal to psi_rank_form
// up to floating-point summation error. This is the form the solver uses.
Eigen::VectorXd psi_wlr_form(const EstimatingContext& ctx);

// Gehan comparator: weight is the at-risk fraction, raw failure indicators
// (no last-observation modification; the statistic is defined on the
// observed data). Censored observations tied with a failure count as at risk.
Eigen::VectorXd psi_gehan(const EstimatingContext& ctx);

// O(n^2) pairwise expansion (1/n) sum_i sum_j delta_i 1{e_j >= e_i}(x_i - x_j);
// the independent oracle for psi_gehan.
Eigen::VectorXd psi_gehan_pairwise(const EstimatingContext& ctx);

}  // namespace raft

#endif  // RAFT_RANK_ESTIMATOR_HPP_
