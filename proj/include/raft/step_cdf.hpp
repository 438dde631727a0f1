#ifndef RAFT_STEP_CDF_HPP_
#define RAFT_STEP_CDF_HPP_

#include <vector>

#include "raft/censored_sample.hpp"
#include "raft/score_function.hpp"

namespace raft {

struct MidCdfValue {
  double f;        // F(t)
  double f_minus;  // F(t-)
  double mid;      // (F(t) + F(t-)) / 2
};

// A proper discrete CDF: sorted jump locations with cumulative masses.
// Cumulative masses (not increments) are stored so that F(t-) is a plain
// lookup and increments are recovered as adjacent differences without drift.
class StepCdf {
 public:
  StepCdf(std::vector<double> points, std::vector<double> cum);

  int jump_count() const { return static_cast<int>(points_.size()); }
  const std::vector<double>& points() const { return points_; }
  const std::vector<double>& cum() const { return cum_; }
  double total() const { return cum_.back(); }

  MidCdfValue eval(double t) const;
  double survivor(double t) const { return 1.0 - eval(t).f; }

  // Index of the rightmost jump <= t, or -1. O(log m).
  int index_at(double t) const;

 private:
  std::vector<double> points_;
  std::vector<double> cum_;
};

// Kaplan-Meier product-limit estimator on (e, delta_mod). Because the
// last-observation rule guarantees the largest residual carries failure
// status, the result is proper: total mass exactly 1. Censored observations
// tied with failures at the same value count as at risk there.
// Throws DegenerateSample if no failures are present.
StepCdf self_consistent(const ResidualView& view);

// Jump-aware score evaluation: across a jump of the CDF the chord of A, at a
// continuity point a(F(t)). For the Wilcoxon score this is the mid-CDF.
double gamma_a(const StepCdf& cdf, double t, const ScoreFunction& score);

// Tail average [A(1) - A(F(t))] / [1 - F(t)], converging to a(1) as F(t) -> 1.
double big_gamma_a(const StepCdf& cdf, double t, const ScoreFunction& score);

// Literal Stieltjes sum of gamma_a over jumps strictly above t; telescopes
// to A(1) - A(F(t)).
double stieltjes_gamma_integral(const StepCdf& cdf, double t, const ScoreFunction& score);

// The generalized mid-CDF level: the u in [0,1] with a(u) = gamma_a(t).
// Solved by bisection; meaningful for strictly monotone scores only and
// exposed for testing.
double generalized_mid_level(const StepCdf& cdf, double t, const ScoreFunction& score);

}  // namespace raft

#endif  // RAFT_STEP_CDF_HPP_
