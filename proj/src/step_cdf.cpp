#include "raft/step_cdf.hpp"

#include <algorithm>
#include <cmath>

#include "raft/errors.hpp"

namespace raft {

StepCdf::StepCdf(std::vector<double> points, std::vector<double> cum)
    : points_(std::move(points)), cum_(std::move(cum)) {
  if (points_.empty() || points_.size() != cum_.size())
    throw BadConfig("StepCdf needs matching nonempty point/mass vectors");
  for (std::size_t k = 0; k < points_.size(); ++k) {
    if (k > 0 && !(points_[k] > points_[k - 1]))
      throw BadConfig("StepCdf jump points must be strictly increasing");
    const double prev = k == 0 ? 0.0 : cum_[k - 1];
    if (!(cum_[k] > prev) || cum_[k] > 1.0)
      throw BadConfig("StepCdf cumulative masses must increase within (0, 1]");
  }
}

int StepCdf::index_at(double t) const {
  auto it = std::upper_bound(points_.begin(), points_.end(), t);
  return static_cast<int>(it - points_.begin()) - 1;
}

MidCdfValue StepCdf::eval(double t) const {
  const int k = index_at(t);
  const double f = k < 0 ? 0.0 : cum_[k];
  double f_minus = f;
  if (k >= 0 && points_[k] == t) f_minus = k == 0 ? 0.0 : cum_[k - 1];
  return MidCdfValue{f, f_minus, 0.5 * (f + f_minus)};
}

StepCdf self_consistent(const ResidualView& view) {
  const int n = static_cast<int>(view.e.size());
  std::vector<double> points;
  std::vector<double> survivors;  // S after each failure value

  double s = 1.0;
  int i = 0;
  bool any_failure = false;
  while (i < n) {
    const double value = view.e[view.order[i]];
    const int at_risk = n - i;
    int failures = 0;
    int j = i;
    while (j < n && view.e[view.order[j]] == value) {
      failures += view.delta_mod[view.order[j]];
      ++j;
    }
    if (failures > 0) {
      any_failure = true;
      s *= 1.0 - static_cast<double>(failures) / at_risk;
      s = std::max(s, 0.0);
      points.push_back(value);
      survivors.push_back(s);
    }
    i = j;
  }
  if (!any_failure)
    throw DegenerateSample("no failures: last-observation rule was not applied");

  std::vector<double> cum(survivors.size());
  for (std::size_t k = 0; k < survivors.size(); ++k) cum[k] = 1.0 - survivors[k];
  // All observations at the maximum are failures, so the final at-risk set
  // dies there and the mass telescopes to exactly 1.
  return StepCdf(std::move(points), std::move(cum));
}

double gamma_a(const StepCdf& cdf, double t, const ScoreFunction& score) {
  const MidCdfValue v = cdf.eval(t);
  return score.chord(v.f_minus, v.f);
}

double big_gamma_a(const StepCdf& cdf, double t, const ScoreFunction& score) {
  const double f = cdf.eval(t).f;
  if (f >= 1.0) return score.a(1.0);
  return score.chord(f, 1.0);
}

double stieltjes_gamma_integral(const StepCdf& cdf, double t, const ScoreFunction& score) {
  const auto& points = cdf.points();
  const auto& cum = cdf.cum();
  double sum = 0.0;
  for (int k = cdf.jump_count() - 1; k >= 0 && points[k] > t; --k) {
    const double lo = k == 0 ? 0.0 : cum[k - 1];
    sum += score.chord(lo, cum[k]) * (cum[k] - lo);
  }
  return sum;
}

double generalized_mid_level(const StepCdf& cdf, double t, const ScoreFunction& score) {
  const double target = gamma_a(cdf, t, score);
  double lo = 0.0, hi = 1.0;
  if (score.a(lo) >= target) return lo;
  if (score.a(hi) <= target) return hi;
  for (int iter = 0; iter < 200 && hi - lo > 1e-15; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (score.a(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace raft
