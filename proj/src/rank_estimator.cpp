#include "raft/rank_estimator.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

namespace raft {

EstimatingContext make_context(const CensoredSample& sample, const Eigen::VectorXd& beta,
                               const ScoreFunction& score) {
  ResidualView view = residuals(sample, beta);
  StepCdf cdf = self_consistent(view);
  return EstimatingContext{&sample, score, std::move(view), std::move(cdf),
                           sample.covariate_means()};
}

namespace {

// Walks distinct residual values in descending order, maintaining the
// at-risk suffix count and covariate sum. Calls visit(first, last, s0, s1)
// for each tie group [first, last) of sort positions, after the group has
// been added to the at-risk set.
template <typename Visitor>
void sweep_descending(const EstimatingContext& ctx, Visitor&& visit) {
  const auto& order = ctx.view.order;
  const auto& e = ctx.view.e;
  const auto& x = ctx.sample->x();
  const int n = ctx.n();

  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(ctx.p());
  int hi = n;
  while (hi > 0) {
    int lo = hi;
    const double value = e[order[hi - 1]];
    while (lo > 0 && e[order[lo - 1]] == value) {
      s0 += 1.0;
      s1 += x.row(order[lo - 1]).transpose();
      --lo;
    }
    visit(lo, hi, value, s0, s1);
    hi = lo;
  }
}

}  // namespace

std::vector<RiskAverage> risk_averages(const EstimatingContext& ctx) {
  const auto& order = ctx.view.order;
  const auto& x = ctx.sample->x();
  const int n = ctx.n();
  const int p = ctx.p();

  std::vector<RiskAverage> table;
  double s0 = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(p);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(p, p);
  int hi = n;
  while (hi > 0) {
    int lo = hi;
    const double value = ctx.view.e[order[hi - 1]];
    int failures = 0;
    while (lo > 0 && ctx.view.e[order[lo - 1]] == value) {
      const int i = order[lo - 1];
      s0 += 1.0;
      s1 += x.row(i).transpose();
      s2 += x.row(i).transpose() * x.row(i);
      failures += ctx.view.delta_mod[i];
      --lo;
    }
    if (failures > 0) {
      const MidCdfValue v = ctx.cdf.eval(value);
      RiskAverage ra;
      ra.value = value;
      ra.f = v.f;
      ra.f_minus = v.f_minus;
      ra.failures = failures;
      ra.theta0 = s0 / n;
      ra.theta1 = s1 / n;
      ra.theta2 = s2 / n;
      ra.xbar_at = s1 / s0;
      table.push_back(std::move(ra));
    }
    hi = lo;
  }
  std::reverse(table.begin(), table.end());
  return table;
}

std::vector<double> imputed_ranks(const EstimatingContext& ctx) {
  const int n = ctx.n();
  std::vector<double> ranks(n);
  for (int i = 0; i < n; ++i) {
    const double t = ctx.view.e[i];
    ranks[i] = ctx.view.delta_mod[i] ? gamma_a(ctx.cdf, t, ctx.score)
                                     : big_gamma_a(ctx.cdf, t, ctx.score);
  }
  return ranks;
}

Eigen::VectorXd psi_rank_form(const EstimatingContext& ctx) {
  const auto ranks = imputed_ranks(ctx);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.p());
  for (int i = 0; i < ctx.n(); ++i)
    psi += ranks[i] * (ctx.sample->x().row(i).transpose() - ctx.xbar);
  return psi;
}

Eigen::VectorXd psi_rank_form_centered(const EstimatingContext& ctx) {
  const auto ranks = imputed_ranks(ctx);
  const double mean_rank = ctx.score.A(1.0) - ctx.score.A(0.0);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.p());
  for (int i = 0; i < ctx.n(); ++i)
    psi += (ranks[i] - mean_rank) * ctx.sample->x().row(i).transpose();
  return psi;
}

double exact_weight(const EstimatingContext& ctx, double u) {
  return gamma_a(ctx.cdf, u, ctx.score) - big_gamma_a(ctx.cdf, u, ctx.score);
}

Eigen::VectorXd psi_wlr_form(const EstimatingContext& ctx) {
  const auto& order = ctx.view.order;
  const auto& x = ctx.sample->x();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.p());

  sweep_descending(ctx, [&](int lo, int hi, double value, double s0, const Eigen::VectorXd& s1) {
    int failures = 0;
    for (int k = lo; k < hi; ++k) failures += ctx.view.delta_mod[order[k]];
    if (failures == 0) return;
    const double w = exact_weight(ctx, value);
    const Eigen::VectorXd xbar_at = s1 / s0;
    for (int k = lo; k < hi; ++k) {
      const int i = order[k];
      if (ctx.view.delta_mod[i])
        psi += w * (x.row(i).transpose() - xbar_at);
    }
  });

#ifndef NDEBUG
  {
    const auto ranks = imputed_ranks(ctx);
    const double sum = std::accumulate(ranks.begin(), ranks.end(), 0.0);
    const double expect = ctx.n() * (ctx.score.A(1.0) - ctx.score.A(0.0));
    assert(std::abs(sum - expect) <= 1e-8 * ctx.n() + 1e-8);
  }
#endif
  return psi;
}

Eigen::VectorXd psi_gehan(const EstimatingContext& ctx) {
  const auto& order = ctx.view.order;
  const auto& delta = ctx.sample->delta();
  const auto& x = ctx.sample->x();
  const int n = ctx.n();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.p());

  sweep_descending(ctx, [&](int lo, int hi, double /*value*/, double s0,
                            const Eigen::VectorXd& s1) {
    const double w = s0 / n;
    const Eigen::VectorXd xbar_at = s1 / s0;
    for (int k = lo; k < hi; ++k) {
      const int i = order[k];
      if (delta[i]) psi += w * (x.row(i).transpose() - xbar_at);
    }
  });
  return psi;
}

Eigen::VectorXd psi_gehan_pairwise(const EstimatingContext& ctx) {
  const auto& delta = ctx.sample->delta();
  const auto& e = ctx.view.e;
  const auto& x = ctx.sample->x();
  const int n = ctx.n();
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(ctx.p());
  for (int i = 0; i < n; ++i) {
    if (!delta[i]) continue;
    for (int j = 0; j < n; ++j) {
      if (e[j] >= e[i]) psi += (x.row(i) - x.row(j)).transpose();
    }
  }
  return psi / n;
}

}  // namespace raft
