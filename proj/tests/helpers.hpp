#ifndef RAFT_TESTS_HELPERS_HPP_
#define RAFT_TESTS_HELPERS_HPP_

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <vector>

#include "raft/censored_sample.hpp"
#include "raft/rng.hpp"
#include "raft/score_function.hpp"
#include "raft/step_cdf.hpp"

namespace raft::test {

inline CensoredSample make_sample(const std::vector<double>& y, const std::vector<int>& delta,
                                  const std::vector<std::vector<double>>& x) {
  const int n = static_cast<int>(y.size());
  const int p = static_cast<int>(x[0].size());
  Eigen::VectorXd yv(n);
  Eigen::MatrixXd xm(n, p);
  for (int i = 0; i < n; ++i) {
    yv[i] = y[i];
    for (int j = 0; j < p; ++j) xm(i, j) = x[i][j];
  }
  return CensoredSample(yv, delta, xm);
}

struct RandomDataOptions {
  int n = 50;
  int p = 2;
  double censor_prob = 0.3;
  bool with_ties = true;
};

// Random right-censored datasets with optional exact ties (values snapped to
// a coarse grid so ties are bit-exact).
inline CensoredSample random_sample(RngStream& rng, const RandomDataOptions& opt) {
  Eigen::VectorXd y(opt.n);
  std::vector<int> delta(opt.n);
  Eigen::MatrixXd x(opt.n, opt.p);
  for (int i = 0; i < opt.n; ++i) {
    double value = 3.0 * rng.normal();
    if (opt.with_ties) value = std::round(value * 4.0) / 4.0;
    y[i] = value;
    delta[i] = rng.bernoulli(opt.censor_prob) ? 0 : 1;
    for (int j = 0; j < opt.p; ++j)
      x(i, j) = (j % 2 == 0) ? rng.normal() : (rng.bernoulli(0.5) ? 1.0 : 0.0);
  }
  // keep at least one failure so the raw data is not degenerate
  delta[0] = 1;
  return CensoredSample(y, delta, x);
}

inline Eigen::VectorXd random_beta(RngStream& rng, int p, double scale = 1.0) {
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta[j] = scale * rng.normal();
  return beta;
}

// Independent oracle for the jump-average score value: adaptive quadrature
// of a(s F(t) + (1-s) F(t-)) over s in [0,1].
inline double gamma_quadrature_oracle(const ScoreFunction& score, double f_minus, double f) {
  if (f == f_minus) return score.a(f);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double s) { return score.a(s * f + (1.0 - s) * f_minus); }, 0.0, 1.0, 12, 1e-12);
}

// Independent oracle for A-differences.
inline double a_integral_oracle(const ScoreFunction& score, double u1, double u2) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double s) { return score.a(s); }, u1, u2, 12, 1e-13);
}

inline std::vector<ScoreFunction> builtin_scores(int n) {
  return {ScoreFunction::wilcoxon(), ScoreFunction::shifted_logrank(n),
          ScoreFunction::winsorized_normal(0.05), ScoreFunction::generalized_f(1.0, 10.0),
          ScoreFunction::generalized_f(10.0, 1.0), ScoreFunction::generalized_f(3.0, 3.0)};
}

// Random proper step CDF with m jumps.
inline StepCdf random_step_cdf(RngStream& rng, int m) {
  std::vector<double> points(m), cum(m);
  double t = -3.0;
  for (int k = 0; k < m; ++k) {
    t += 0.1 + rng.uniform();
    points[k] = t;
  }
  std::vector<double> mass(m);
  double total = 0.0;
  for (int k = 0; k < m; ++k) {
    mass[k] = 0.05 + rng.uniform();
    total += mass[k];
  }
  double acc = 0.0;
  for (int k = 0; k < m; ++k) {
    acc += mass[k] / total;
    cum[k] = acc;
  }
  cum[m - 1] = 1.0;
  return StepCdf(points, cum);
}

}  // namespace raft::test

#endif  // RAFT_TESTS_HELPERS_HPP_
