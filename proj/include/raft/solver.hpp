#ifndef RAFT_SOLVER_HPP_
#define RAFT_SOLVER_HPP_

#include <Eigen/Core>
#include <functional>
#include <string>
#include <vector>

#include "raft/censored_sample.hpp"
#include "raft/score_function.hpp"

namespace raft {

enum class SolverInit { Zero, Gehan, Vector };

struct SolverConfig {
  // Accept beta when ||n^{-1} Psi(beta)||_inf <= tol_psi * n^{-1/2} * scale,
  // where scale is the median |component| observed during the first sweep.
  double tol_psi = 1e-2;
  int max_sweeps = 50;
  // Initial bracket half-width per coordinate; <= 0 selects
  // 0.5 * robust_scale(y) / robust_scale(x_k) automatically.
  double bracket_init = 0.0;
  double bracket_grow = 2.0;
  // Bisection stops on bracket width, not |Psi|: Psi is a step function of
  // beta, so widths converge where values need not.
  double crossing_width = 1e-8;
  int max_expansions = 60;
  SolverInit init = SolverInit::Zero;
  Eigen::VectorXd beta0;  // used when init == Vector (empty means zero)
};

enum class SolveFailure { None, NoBracket, NotConverged };

struct SolveOutcome {
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd psi_at_solution;  // raw Psi_n(beta_hat)
  int sweeps_used = 0;
  bool converged = false;
  std::vector<double> crossing_widths;
  double threshold = 0.0;  // accepted ||n^{-1} Psi||_inf level
  SolveFailure failure = SolveFailure::None;
  int failed_coordinate = -1;
  std::string failure_detail;
};

// Any estimating function of beta; returns the raw (un-normalized) p-vector.
using EstimatingFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Cyclic coordinate sweeps: for each coordinate, expand a bracket
// geometrically until the corresponding component changes sign, bisect the
// sign change nearest the current iterate to width < crossing_width, move to
// the midpoint. Deterministic: fixed sweep order, fixed bracket schedule.
// `target` shifts the equation to n^{-1} psi(beta) = target.
SolveOutcome find_zero_crossing(const EstimatingFn& psi, int n_obs, int p,
                                const SolverConfig& config,
                                const Eigen::VectorXd& start,
                                const Eigen::VectorXd& target,
                                const std::vector<double>& bracket_scales);

// Solves Psi_n(beta; score) = 0 for the rank estimating function.
SolveOutcome solve(const CensoredSample& sample, const ScoreFunction& score,
                   const SolverConfig& config);

// Solves n^{-1} Psi_n(beta; score) = target (the offset equations of the
// inverse-numerical-differentiation variance procedure).
SolveOutcome solve_offset(const CensoredSample& sample, const ScoreFunction& score,
                          const SolverConfig& config, const Eigen::VectorXd& target);

// Gehan comparator estimate; also serves as the optional warm start.
SolveOutcome solve_gehan(const CensoredSample& sample, const SolverConfig& config);

// Per-coordinate default bracket half-widths for a dataset.
std::vector<double> default_bracket_scales(const CensoredSample& sample);

double robust_scale(const Eigen::VectorXd& v);

}  // namespace raft

#endif  // RAFT_SOLVER_HPP_
