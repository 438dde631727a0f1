#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "helpers.hpp"
#include "raft/errors.hpp"

using namespace raft;
using test::make_sample;

namespace {

ResidualView view_of(const std::vector<double>& e, const std::vector<int>& delta_mod) {
  ResidualView v;
  const int n = static_cast<int>(e.size());
  v.e = Eigen::Map<const Eigen::VectorXd>(e.data(), n);
  v.order.resize(n);
  std::iota(v.order.begin(), v.order.end(), 0);
  std::stable_sort(v.order.begin(), v.order.end(),
                   [&](int a, int b) { return v.e[a] < v.e[b]; });
  v.delta_mod = delta_mod;
  v.beta = Eigen::VectorXd::Zero(1);
  return v;
}

}  // namespace

TEST_CASE("self_consistent: no censoring gives the empirical CDF") {
  const auto cdf = self_consistent(view_of({1, 2, 3}, {1, 1, 1}));
  REQUIRE(cdf.jump_count() == 3);
  CHECK(cdf.cum()[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(cdf.cum()[1] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(cdf.cum()[2] == 1.0);
}

TEST_CASE("self_consistent: censored middle observation (product-limit by hand)") {
  // S(1) = 2/3; censoring at 2 removes one at risk; S(3) = 2/3 * (1 - 1/1) = 0
  const auto cdf = self_consistent(view_of({1, 2, 3}, {1, 0, 1}));
  REQUIRE(cdf.jump_count() == 2);
  CHECK(cdf.points()[0] == 1.0);
  CHECK(cdf.points()[1] == 3.0);
  CHECK(cdf.cum()[0] == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(cdf.cum()[1] == 1.0);
}

TEST_CASE("self_consistent: tied failures pool their mass") {
  const auto cdf = self_consistent(view_of({1, 1, 2}, {1, 1, 1}));
  REQUIRE(cdf.jump_count() == 2);
  CHECK(cdf.cum()[0] == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(cdf.cum()[1] == 1.0);
}

TEST_CASE("self_consistent: total mass is exactly one across random views") {
  RngStream rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto s = test::random_sample(rng, {.n = 30});
    const auto v = residuals(s, test::random_beta(rng, s.p()));
    const auto cdf = self_consistent(v);
    CHECK(cdf.total() == 1.0);
  }
}

TEST_CASE("self_consistent: all-censored input is a data bug") {
  CHECK_THROWS_AS(self_consistent(view_of({1, 2}, {0, 0})), DegenerateSample);
}

TEST_CASE("eval: mid-CDF at, below, and above the jumps") {
  const auto cdf = self_consistent(view_of({1, 2, 3}, {1, 1, 1}));
  const auto at = cdf.eval(2.0);
  CHECK(at.f == doctest::Approx(2.0 / 3).epsilon(1e-15));
  CHECK(at.f_minus == doctest::Approx(1.0 / 3).epsilon(1e-15));
  CHECK(at.mid == doctest::Approx(0.5).epsilon(1e-15));

  const auto below = cdf.eval(0.0);
  CHECK(below.f == 0.0);
  CHECK(below.f_minus == 0.0);
  CHECK(below.mid == 0.0);

  const auto above = cdf.eval(10.0);
  CHECK(above.f == 1.0);
  CHECK(above.f_minus == 1.0);
  CHECK(above.mid == 1.0);

  //  right continuity: just off a jump
  CHECK(cdf.eval(2.0 + 1e-9).f_minus == at.f);
}

TEST_CASE("gamma_a: Wilcoxon reduces to the mid-CDF, including across jumps") {
  const StepCdf cdf({0.0, 1.0, 2.0}, {0.2, 0.6, 1.0});
  const auto w = ScoreFunction::wilcoxon();
  CHECK(gamma_a(cdf, 1.0, w) == 0.4);              // (0.18 - 0.02) / 0.4
  CHECK(gamma_a(cdf, 1.5, w) == 0.6);              // continuity point: a(F(t))
  RngStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto random_cdf = test::random_step_cdf(rng, 15);
    const double t = rng.uniform(-4.0, 20.0);
    CHECK(gamma_a(random_cdf, t, w) == random_cdf.eval(t).mid);
    for (double point : random_cdf.points())
      CHECK(gamma_a(random_cdf, point, w) == random_cdf.eval(point).mid);
  }
}

TEST_CASE("gamma_a: matches the quadrature oracle across jumps for all scores") {
  RngStream rng(13);
  for (const auto& score : test::builtin_scores(50)) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto cdf = test::random_step_cdf(rng, 10);
      for (double point : cdf.points()) {
        const auto v = cdf.eval(point);
        const double oracle = test::gamma_quadrature_oracle(score, v.f_minus, v.f);
        CHECK(gamma_a(cdf, point, score) == doctest::Approx(oracle).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("big_gamma_a: tail averages and the a(1) limit") {
  const auto w = ScoreFunction::wilcoxon();
  const StepCdf cdf({0.0, 1.0}, {0.5, 1.0});
  CHECK(big_gamma_a(cdf, -1.0, w) == 0.5);  // (1/2 - 0) / 1
  CHECK(big_gamma_a(cdf, 0.0, w) == 0.75);  // (1/2 - 1/8) / (1/2) = 1 - S/2
  for (const auto& score : test::builtin_scores(50))
    CHECK(big_gamma_a(cdf, 5.0, score) == score.a(1.0));
}

TEST_CASE("stieltjes integral telescopes to A(1) - A(F(t))") {
  RngStream rng(17);
  for (const auto& score : test::builtin_scores(50)) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto cdf = test::random_step_cdf(rng, 20);
      for (double t : {-10.0, cdf.points()[3], cdf.points()[3] + 0.01, 100.0}) {
        const double expect = score.A(1.0) - score.A(cdf.eval(t).f);
        CHECK(stieltjes_gamma_integral(cdf, t, score) ==
              doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }
  // trivial endpoints
  const auto cdf = test::random_step_cdf(rng, 5);
  const auto w = ScoreFunction::wilcoxon();
  CHECK(stieltjes_gamma_integral(cdf, 100.0, w) == 0.0);
  CHECK(stieltjes_gamma_integral(cdf, -100.0, w) ==
        doctest::Approx(w.A(1.0) - w.A(0.0)).epsilon(1e-14));
}

TEST_CASE("stieltjes integral: Wilcoxon closed form 0.5 (1 - F(t)^2)") {
  RngStream rng(19);
  const auto w = ScoreFunction::wilcoxon();
  for (int trial = 0; trial < 50; ++trial) {
    const auto cdf = test::random_step_cdf(rng, 20);
    const double t = rng.uniform(-4.0, 25.0);
    const double f = cdf.eval(t).f;
    CHECK(stieltjes_gamma_integral(cdf, t, w) ==
          doctest::Approx(0.5 * (1.0 - f * f)).epsilon(1e-12));
  }
}

TEST_CASE("mid-CDF integral identity over (a, b]") {
  RngStream rng(23);
  const auto w = ScoreFunction::wilcoxon();
  for (int trial = 0; trial < 50; ++trial) {
    const auto cdf = test::random_step_cdf(rng, 25);
    const double a = rng.uniform(-4.0, 10.0);
    const double b = a + rng.uniform(0.0, 15.0);
    double sum = 0.0;
    for (int k = 0; k < cdf.jump_count(); ++k) {
      const double point = cdf.points()[k];
      if (point <= a || point > b) continue;
      const double lo = k == 0 ? 0.0 : cdf.cum()[k - 1];
      sum += cdf.eval(point).mid * (cdf.cum()[k] - lo);
    }
    const double fa = cdf.eval(a).f, fb = cdf.eval(b).f;
    CHECK(sum == doctest::Approx(0.5 * (fb * fb - fa * fa)).epsilon(1e-12));
  }
}

TEST_CASE("survivor identity: tail mid-CDF mass over S(t) equals 1 - S(t)/2") {
  RngStream rng(29);
  const auto w = ScoreFunction::wilcoxon();
  for (int trial = 0; trial < 50; ++trial) {
    const auto cdf = test::random_step_cdf(rng, 25);
    const double t = cdf.points()[5] + 1e-3;
    const double f = cdf.eval(t).f;
    if (f >= 1.0) continue;
    double sum = 0.0;
    for (int k = 0; k < cdf.jump_count(); ++k) {
      if (cdf.points()[k] <= t) continue;
      const double lo = k == 0 ? 0.0 : cdf.cum()[k - 1];
      sum += cdf.eval(cdf.points()[k]).mid * (cdf.cum()[k] - lo);
    }
    CHECK(sum / (1.0 - f) == doctest::Approx(1.0 - (1.0 - f) / 2).epsilon(1e-12));
  }
}

TEST_CASE("generalized mid level inverts the score at the jump average") {
  RngStream rng(31);
  for (const auto& score : test::builtin_scores(50)) {
    if (score.kind() == ScoreKind::WinsorizedNormal) continue;  // flat tails
    const auto cdf = test::random_step_cdf(rng, 12);
    for (double point : cdf.points()) {
      const double level = generalized_mid_level(cdf, point, score);
      CHECK(score.a(level) == doctest::Approx(gamma_a(cdf, point, score)).epsilon(1e-9));
    }
  }
  // Wilcoxon: the generalized level is the mid-CDF itself
  const auto cdf = test::random_step_cdf(rng, 12);
  const auto w = ScoreFunction::wilcoxon();
  for (double point : cdf.points())
    CHECK(generalized_mid_level(cdf, point, w) ==
          doctest::Approx(cdf.eval(point).mid).epsilon(1e-12));
}
