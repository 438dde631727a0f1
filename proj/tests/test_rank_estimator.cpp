#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "raft/rank_estimator.hpp"

using namespace raft;
using test::make_sample;

namespace {

// The uncensored classical estimating function from integer ranks.
Eigen::VectorXd classical_rank_psi(const CensoredSample& s, const Eigen::VectorXd& beta,
                                   const ScoreFunction& score) {
  const auto v = residuals(s, beta);
  Eigen::VectorXd psi = Eigen::VectorXd::Zero(s.p());
  const Eigen::VectorXd xbar = s.covariate_means();
  for (int pos = 0; pos < s.n(); ++pos) {
    const int i = v.order[pos];
    psi += score.a((pos + 0.5) / s.n()) * (s.x().row(i).transpose() - xbar);
  }
  return psi;
}

}  // namespace

TEST_CASE("imputed ranks: uncensored, no ties -> (i - 1/2)/n") {
  const auto s = make_sample({0.4, 0.1, 0.3, 0.2}, {1, 1, 1, 1}, {{1}, {2}, {3}, {4}});
  const auto ctx = make_context(s, Eigen::VectorXd::Zero(1), ScoreFunction::wilcoxon());
  const auto ranks = imputed_ranks(ctx);
  CHECK(ranks[0] == doctest::Approx(3.5 / 4).epsilon(1e-14));
  CHECK(ranks[1] == doctest::Approx(0.5 / 4).epsilon(1e-14));
  CHECK(ranks[2] == doctest::Approx(2.5 / 4).epsilon(1e-14));
  CHECK(ranks[3] == doctest::Approx(1.5 / 4).epsilon(1e-14));
}

TEST_CASE("imputed ranks: hand-computed censored case") {
  // e = (1,2,3), delta = (1,0,1): R1 = F*(1) = 1/6, R2 = 1 - S(2)/2 = 2/3,
  // R3 = F*(3) = (1/3 + 1)/2 = 2/3
  const auto s = make_sample({1, 2, 3}, {1, 0, 1}, {{-1}, {0}, {1}});
  const auto ctx = make_context(s, Eigen::VectorXd::Zero(1), ScoreFunction::wilcoxon());
  const auto ranks = imputed_ranks(ctx);
  CHECK(ranks[0] == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK(ranks[1] == doctest::Approx(2.0 / 3).epsilon(1e-14));
  CHECK(ranks[2] == doctest::Approx(2.0 / 3).epsilon(1e-14));
}

TEST_CASE("rank-sum conservation at arbitrary beta, all scores") {
  RngStream rng(41);
  for (const auto& score : test::builtin_scores(40)) {
    const double expect_per_obs = score.A(1.0) - score.A(0.0);
    for (int trial = 0; trial < 10; ++trial) {
      const auto s = test::random_sample(rng, {.n = 40});
      const auto beta = test::random_beta(rng, s.p());
      const auto ranks = imputed_ranks(make_context(s, beta, score));
      const double sum = std::accumulate(ranks.begin(), ranks.end(), 0.0);
      CHECK(std::abs(sum - s.n() * expect_per_obs) <= 1e-10 * s.n());
    }
  }
}

TEST_CASE("rank form equals centered form") {
  RngStream rng(43);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = test::random_sample(rng, {});
    const auto beta = test::random_beta(rng, s.p());
    const auto ctx = make_context(s, beta, ScoreFunction::shifted_logrank(s.n()));
    const auto a = psi_rank_form(ctx);
    const auto b = psi_rank_form_centered(ctx);
    CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-10 * s.n());
  }
}

TEST_CASE("uncensored reduction to the classical rank estimating function") {
  RngStream rng(47);
  // single +/-1 contrast, continuous responses, no censoring
  const int n = 30;
  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, 1);
  std::vector<int> delta(n, 1);
  for (int i = 0; i < n; ++i) {
    y[i] = rng.normal();
    x(i, 0) = i % 2 == 0 ? 1.0 : -1.0;
  }
  const CensoredSample s(y, delta, x);
  for (const auto& score : test::builtin_scores(n)) {
    const Eigen::VectorXd beta = test::random_beta(rng, 1, 0.5);
    const auto ctx = make_context(s, beta, score);
    const auto modern = psi_rank_form(ctx);
    const auto classical = classical_rank_psi(s, beta, score);
    CHECK((modern - classical).lpNorm<Eigen::Infinity>() <= 1e-9 * n);
  }
}

TEST_CASE("exact weight: hand computation on an uncensored 3-sample") {
  const auto s = make_sample({1, 2, 3}, {1, 1, 1}, {{-1}, {0}, {1}});
  const auto ctx = make_context(s, Eigen::VectorXd::Zero(1), ScoreFunction::wilcoxon());
  // gamma = 1/6, Gamma = (1/2 - 1/18)/(2/3) = 2/3, w = -1/2 = -S(1-)/2
  CHECK(exact_weight(ctx, 1.0) == doctest::Approx(-0.5).epsilon(1e-14));
}

TEST_CASE("exact weight: Wilcoxon identity w(u) = -S(u-)/2 at failure residuals") {
  RngStream rng(53);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = test::random_sample(rng, {});
    const auto ctx = make_context(s, test::random_beta(rng, s.p()), ScoreFunction::wilcoxon());
    for (const auto& row : risk_averages(ctx)) {
      const double w = exact_weight(ctx, row.value);
      CHECK(std::abs(w - (-0.5) * (1.0 - row.f_minus)) <= 1e-15);
    }
  }
}

TEST_CASE("exact weight vanishes where the estimated CDF has reached 1") {
  const auto s = make_sample({1, 2, 3}, {1, 0, 1}, {{-1}, {0}, {1}});
  for (const auto& score : test::builtin_scores(3)) {
    const auto ctx = make_context(s, Eigen::VectorXd::Zero(1), score);
    CHECK(exact_weight(ctx, 5.0) == 0.0);
  }
}

TEST_CASE("dual-form equivalence on random censored data, all scores") {
  RngStream rng(59);
  for (const auto& score : test::builtin_scores(60)) {
    for (int trial = 0; trial < 8; ++trial) {
      const auto s = test::random_sample(rng, {.n = 60});
      const auto beta = test::random_beta(rng, s.p());
      const auto ctx = make_context(s, beta, score);
      const auto rank = psi_rank_form(ctx);
      const auto wlr = psi_wlr_form(ctx);
      CHECK((rank - wlr).lpNorm<Eigen::Infinity>() <= 1e-9 * s.n());
    }
  }
}

TEST_CASE("gehan: sweep equals the pairwise expansion, ties included") {
  RngStream rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const auto s = test::random_sample(rng, {.n = 40, .with_ties = true});
    const auto ctx = make_context(s, test::random_beta(rng, s.p()), ScoreFunction::wilcoxon());
    const auto sweep = psi_gehan(ctx);
    const auto pairwise = psi_gehan_pairwise(ctx);
    CHECK((sweep - pairwise).lpNorm<Eigen::Infinity>() <= 1e-10 * s.n());
  }
}

TEST_CASE("gehan: strict pairwise ordering form agrees on tie-free data") {
  RngStream rng(67);
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = test::random_sample(rng, {.n = 35, .with_ties = false});
    const auto beta = test::random_beta(rng, s.p());
    const auto ctx = make_context(s, beta, ScoreFunction::wilcoxon());
    const auto v = residuals(s, beta);
    // sum_i (D_{i,+} - D_{+,i}) (x_i - xbar) with D_{i,j} = delta_i 1{e_i < e_j}
    Eigen::VectorXd fr = Eigen::VectorXd::Zero(s.p());
    const Eigen::VectorXd xbar = s.covariate_means();
    for (int i = 0; i < s.n(); ++i) {
      double d_i_plus = 0.0, d_plus_i = 0.0;
      for (int j = 0; j < s.n(); ++j) {
        d_i_plus += s.delta()[i] * (v.e[i] < v.e[j] ? 1.0 : 0.0);
        d_plus_i += s.delta()[j] * (v.e[j] < v.e[i] ? 1.0 : 0.0);
      }
      fr += (d_i_plus - d_plus_i) * (s.x().row(i).transpose() - xbar);
    }
    const auto sweep = psi_gehan(ctx);
    CHECK((s.n() * sweep - fr).lpNorm<Eigen::Infinity>() <= 1e-10 * s.n() * s.n());
  }
}

TEST_CASE("gehan: uncensored tie-free case is -2x the Wilcoxon form") {
  RngStream rng(71);
  const auto s = test::random_sample(rng, {.n = 25, .censor_prob = 0.0, .with_ties = false});
  const auto beta = test::random_beta(rng, s.p());
  const auto ctx = make_context(s, beta, ScoreFunction::wilcoxon());
  const auto gehan = psi_gehan(ctx);
  const auto wilcoxon = psi_wlr_form(ctx);
  CHECK((gehan + 2.0 * wilcoxon).lpNorm<Eigen::Infinity>() <= 1e-12 * s.n());
}

TEST_CASE("affine score change scales the estimating function exactly") {
  RngStream rng(73);
  const auto base = ScoreFunction::wilcoxon();
  const double c1 = 3.0, c2 = -2.0;
  const auto affine = ScoreFunction::custom(
      "affine_wilcoxon", [=](double u) { return c1 * u + c2; },
      [=](double u) { return c1 * 0.5 * u * u + c2 * u; }, c2, c1 + c2);
  for (int trial = 0; trial < 15; ++trial) {
    const auto s = test::random_sample(rng, {});
    const auto beta = test::random_beta(rng, s.p());
    const auto psi_base = psi_rank_form(make_context(s, beta, base));
    const auto psi_affine = psi_rank_form(make_context(s, beta, affine));
    CHECK((psi_affine - c1 * psi_base).lpNorm<Eigen::Infinity>() <= 1e-10 * s.n());
  }
}

TEST_CASE("risk averages: positive at-risk mass and PSD spread at failures") {
  RngStream rng(79);
  const auto s = test::random_sample(rng, {});
  const auto ctx = make_context(s, test::random_beta(rng, s.p()), ScoreFunction::wilcoxon());
  for (const auto& row : risk_averages(ctx)) {
    CHECK(row.theta0 > 0.0);
    const Eigen::MatrixXd h = row.theta2 / row.theta0 - row.xbar_at * row.xbar_at.transpose();
    CHECK(std::abs(h(0, 1) - h(1, 0)) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
  }
}
