#include "raft/variance.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

#include "raft/errors.hpp"
#include "raft/rng.hpp"
#include "raft/special_functions.hpp"

namespace raft {

namespace {

constexpr double kMaxCondition = 1e12;

Eigen::MatrixXd clamp_psd(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  if (es.eigenvalues().minCoeff() >= 0.0) return sym;
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

void check_condition(const Eigen::MatrixXd& m, const char* code, double extra = 0.0) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  const double hi = es.eigenvalues().cwiseAbs().maxCoeff();
  const double lo = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition) {
    const std::string msg = std::string(code) + ": condition number exceeds 1e12";
    if (std::string(code) == "singular_sigma") throw SingularSigma(msg);
    if (std::string(code) == "singular_xi") throw SingularXi(msg, extra);
    throw SingularOmega(msg);
  }
}

}  // namespace

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::VectorXd solve_spd_checked(const Eigen::MatrixXd& m, const Eigen::VectorXd& rhs,
                                  const char* code) {
  check_condition(m, code);
  return m.ldlt().solve(rhs);
}

Eigen::MatrixXd inverse_spd_checked(const Eigen::MatrixXd& m, const char* code) {
  check_condition(m, code);
  return m.ldlt().solve(Eigen::MatrixXd::Identity(m.rows(), m.cols()));
}

namespace {

SigmaHat sigma_from_table(const EstimatingContext& ctx, const std::vector<RiskAverage>& table,
                          const std::function<double(const RiskAverage&)>& weight) {
  const int p = ctx.p();
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(p, p);
  for (const auto& row : table) {
    const Eigen::MatrixXd h =
        row.theta2 / row.theta0 - row.xbar_at * row.xbar_at.transpose();
    const double w = weight(row);
    acc += row.failures * w * w * h;
  }
  SigmaHat out;
  out.matrix = clamp_psd(acc / ctx.n());
  out.at_beta = ctx.view.beta;
  return out;
}

// Failure table under the raw (unmodified) indicators, for the Gehan path.
std::vector<RiskAverage> risk_averages_raw(const EstimatingContext& ctx) {
  EstimatingContext raw = ctx;
  raw.view.delta_mod = ctx.sample->delta();
  return risk_averages(raw);
}

}  // namespace

SigmaHat sigma_hat(const EstimatingContext& ctx) {
  return sigma_from_table(ctx, risk_averages(ctx), [&](const RiskAverage& row) {
    return exact_weight(ctx, row.value);
  });
}

SigmaHat sigma_hat_wilcoxon(const EstimatingContext& ctx) {
  return sigma_from_table(ctx, risk_averages(ctx), [&](const RiskAverage& row) {
    return 0.5 * (1.0 - row.f_minus);
  });
}

SigmaHat sigma_hat_gehan(const EstimatingContext& ctx) {
  return sigma_from_table(ctx, risk_averages_raw(ctx),
                          [](const RiskAverage& row) { return row.theta0; });
}

namespace {

TestResult quasi_score_from(const Eigen::VectorXd& psi, const Eigen::MatrixXd& sigma,
                            int n_obs) {
  TestResult t;
  t.kind = "quasi_score";
  t.df = static_cast<int>(psi.size());
  if (psi.isZero(0.0)) {
    t.statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  const Eigen::VectorXd solved = solve_spd_checked(sigma, psi, "singular_sigma");
  t.statistic = psi.dot(solved) / n_obs;
  t.p_value = special::chi_squared_upper_tail(t.statistic, t.df);
  return t;
}

}  // namespace

TestResult quasi_score_test(const CensoredSample& sample, const ScoreFunction& score,
                            const Eigen::VectorXd& beta_null) {
  const EstimatingContext ctx = make_context(sample, beta_null, score);
  return quasi_score_from(psi_wlr_form(ctx), sigma_hat(ctx).matrix, sample.n());
}

TestResult quasi_score_test_gehan(const CensoredSample& sample,
                                  const Eigen::VectorXd& beta_null) {
  const EstimatingContext ctx = make_context(sample, beta_null, ScoreFunction::wilcoxon());
  return quasi_score_from(psi_gehan(ctx), sigma_hat_gehan(ctx).matrix, sample.n());
}

OmegaHat omega_huang(const EstimatingFn& psi, int n_obs, const SolveOutcome& fit,
                     const SigmaHat& sigma, const SolverConfig& config) {
  const int p = static_cast<int>(fit.beta_hat.size());
  const Eigen::MatrixXd c_hat = symmetric_sqrt(sigma.matrix / n_obs);

  SolverConfig offset_config = config;
  offset_config.init = SolverInit::Vector;
  offset_config.beta0 = fit.beta_hat;
  offset_config.bracket_init = 0.0;
  // The offset crossings feed a difference quotient, so run each solve to
  // bisection-resolution stagnation rather than the statistical acceptance
  // norm; only a missing bracket counts as failure here.
  offset_config.tol_psi = 1e-10;

  // Offset solutions sit within O(n^{-1/2}) of beta_hat; a unit bracket
  // start would waste bisection steps and can skip past the near crossing.
  std::vector<double> local_scales(p);
  for (int k = 0; k < p; ++k) {
    double s = c_hat.col(k).cwiseAbs().maxCoeff() * 16.0;
    local_scales[k] = s > 0.0 ? s : 1e-3;
  }

  OmegaHat out;
  out.method = OmegaMethod::Huang;
  Eigen::MatrixXd b_hat(p, p);
  for (int k = 0; k < p; ++k) {
    const Eigen::VectorXd target = c_hat.col(k);
    const SolveOutcome pos = find_zero_crossing(psi, n_obs, p, offset_config,
                                                fit.beta_hat, target, local_scales);
    const SolveOutcome neg = find_zero_crossing(psi, n_obs, p, offset_config,
                                                fit.beta_hat, -target, local_scales);
    const bool pos_ok = pos.failure != SolveFailure::NoBracket;
    const bool neg_ok = neg.failure != SolveFailure::NoBracket;
    if (pos_ok && neg_ok) {
      b_hat.col(k) = 0.5 * (pos.beta_hat - neg.beta_hat);
    } else if (neg_ok) {
      b_hat.col(k) = fit.beta_hat - neg.beta_hat;
      out.fallback_columns.push_back(k);
    } else if (pos_ok) {
      b_hat.col(k) = pos.beta_hat - fit.beta_hat;
      out.fallback_columns.push_back(k);
    } else {
      throw NoSolutionEitherSide(
          k, "offset equations unsolvable on both sides for coordinate " +
                 std::to_string(k));
    }
  }
  out.matrix = n_obs * (b_hat * b_hat.transpose());
  return out;
}

OmegaHat omega_huang(const CensoredSample& sample, const ScoreFunction& score,
                     const SolveOutcome& fit, const SigmaHat& sigma,
                     const SolverConfig& config) {
  const EstimatingFn psi = [&](const Eigen::VectorXd& beta) {
    return psi_wlr_form(make_context(sample, beta, score));
  };
  return omega_huang(psi, sample.n(), fit, sigma, config);
}

OmegaHat omega_monte_carlo(const EstimatingFn& psi, int n_obs, const SolveOutcome& fit,
                           const SigmaHat& sigma, int b_reps, const Eigen::MatrixXd& dz,
                           std::uint64_t seed) {
  const int p = static_cast<int>(fit.beta_hat.size());
  if (b_reps < 2) throw BadConfig("omega_monte_carlo needs at least 2 replicates");
  if (dz.rows() != p || dz.cols() != p) throw BadConfig("D_Z has wrong shape");
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (dz + dz.transpose()));
  if (llt.info() != Eigen::Success)
    throw BadConfig("D_Z must be symmetric positive definite");
  const Eigen::MatrixXd chol = llt.matrixL();

  const double sqrt_n = std::sqrt(static_cast<double>(n_obs));
  RngStream rng = RngStream::keyed(seed, 0x6f6d6567ULL);

  Eigen::MatrixXd z(p, b_reps);       // perturbations, sqrt(n)-scale
  Eigen::MatrixXd responses(p, b_reps);  // n^{-1/2} Psi at the perturbed points
  for (int b = 0; b < b_reps; ++b) {
    Eigen::VectorXd std_normal(p);
    for (int j = 0; j < p; ++j) std_normal[j] = rng.normal();
    z.col(b) = chol * std_normal;
    responses.col(b) = psi(fit.beta_hat + z.col(b) / sqrt_n) / sqrt_n;
  }

  const Eigen::VectorXd z_mean = z.rowwise().mean();
  const Eigen::VectorXd r_mean = responses.rowwise().mean();
  z.colwise() -= z_mean;
  responses.colwise() -= r_mean;

  const Eigen::MatrixXd ztz = z * z.transpose();
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ztz);
    const double hi = es.eigenvalues().maxCoeff();
    const double lo = es.eigenvalues().minCoeff();
    if (!(lo > 0.0) || hi / lo > kMaxCondition)
      throw SingularXi("perturbation design is rank deficient", 0.0);
  }
  const Eigen::MatrixXd slope = (responses * z.transpose()) * ztz.inverse();

  const double ss_res = (responses - slope * z).squaredNorm();
  const double ss_tot = responses.squaredNorm();
  const double r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 0.0;

  const Eigen::MatrixXd xi = 0.5 * (slope + slope.transpose());
  Eigen::MatrixXd xi_inv;
  try {
    xi_inv = inverse_spd_checked(xi, "singular_xi");
  } catch (const SingularXi&) {
    throw SingularXi("estimated slope matrix is ill conditioned", r2);
  }

  OmegaHat out;
  out.method = OmegaMethod::MonteCarlo;
  out.regression_r2 = r2;
  out.matrix = clamp_psd(xi_inv * sigma.matrix * xi_inv);
  return out;
}

OmegaHat omega_monte_carlo(const CensoredSample& sample, const ScoreFunction& score,
                           const SolveOutcome& fit, const SigmaHat& sigma, int b_reps,
                           const Eigen::MatrixXd& dz, std::uint64_t seed) {
  const EstimatingFn psi = [&](const Eigen::VectorXd& beta) {
    return psi_wlr_form(make_context(sample, beta, score));
  };
  return omega_monte_carlo(psi, sample.n(), fit, sigma, b_reps, dz, seed);
}

TestResult wald(const SolveOutcome& fit, const OmegaHat& omega,
                const Eigen::VectorXd& beta_null, int n_obs) {
  TestResult t;
  t.kind = "wald";
  t.df = static_cast<int>(fit.beta_hat.size());
  const Eigen::VectorXd diff = fit.beta_hat - beta_null;
  if (diff.isZero(0.0)) {
    t.statistic = 0.0;
    t.p_value = 1.0;
    return t;
  }
  const Eigen::VectorXd solved = solve_spd_checked(omega.matrix, diff, "singular_omega");
  t.statistic = n_obs * diff.dot(solved);
  t.p_value = special::chi_squared_upper_tail(t.statistic, t.df);
  return t;
}

std::vector<Interval> confidence_intervals(const SolveOutcome& fit, const OmegaHat& omega,
                                           double level, int n_obs) {
  if (!(level > 0.0) || !(level < 1.0)) throw BadConfig("level must lie in (0,1)");
  const double z = special::normal_quantile(0.5 + 0.5 * level);
  std::vector<Interval> out;
  for (Eigen::Index k = 0; k < fit.beta_hat.size(); ++k) {
    const double v = omega.matrix(k, k);
    if (!(v > 0.0))
      throw SingularOmega("omega diagonal entry " + std::to_string(k) + " not positive");
    const double half = z * std::sqrt(v / n_obs);
    out.push_back(Interval{fit.beta_hat[k] - half, fit.beta_hat[k] + half});
  }
  return out;
}

}  // namespace raft
