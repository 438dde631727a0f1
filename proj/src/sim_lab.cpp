#include "raft/sim_lab.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <atomic>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <thread>

#include "raft/errors.hpp"
#include "raft/special_functions.hpp"

namespace raft {

namespace {

constexpr double kEulerGamma = 0.5772156649015328606065121;

void validate_design(const SimDesign& design) {
  if (design.n < 20) throw BadConfig("design: n must be >= 20");
  if (design.reps < 1) throw BadConfig("design: reps must be >= 1");
  if (!(design.weibull_shape > 0.0)) throw BadConfig("design: weibull_shape must be > 0");
  if (!(design.censor_sd > 0.0)) throw BadConfig("design: censor_sd must be > 0");
}

Eigen::VectorXd beta_from_b(double b) {
  Eigen::VectorXd beta(2);
  beta << b, -b;
  return beta;
}

std::string label_of(const Eigen::VectorXd& beta) {
  std::ostringstream os;
  os << "(";
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    os << (k ? "," : "") << beta[k];
  os << ")";
  return os.str();
}

}  // namespace

double euler_gamma() { return kEulerGamma; }

double true_survival(const SimDesign& design, double u) {
  return std::exp(-std::exp(design.weibull_shape * u - kEulerGamma));
}

Eigen::VectorXd design_mu_x() {
  Eigen::VectorXd mu(2);
  mu << 0.5, 0.25;
  return mu;
}

Eigen::MatrixXd design_sigma_x() {
  Eigen::MatrixXd s(2, 2);
  s << 0.25, 0.125, 0.125, 1.0625;
  return s;
}

CensoredSample generate(const SimDesign& design, const Eigen::VectorXd& beta0,
                        RngStream& rng) {
  if (beta0.size() != 2) throw BadConfig("the simulation design has two covariates");
  const int n = design.n;
  const double k = design.weibull_shape;
  Eigen::VectorXd y(n);
  std::vector<int> delta(n);
  Eigen::MatrixXd x(n, 2);
  for (int i = 0; i < n; ++i) {
    const double x_b = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const double z = rng.normal();
    x(i, 0) = x_b;
    x(i, 1) = z + 0.5 * x_b;
    // residual from the centered minimum extreme-value law: mean zero,
    // survivor exp(-exp(k u - xi))
    const double eps = (std::log(rng.exponential()) + kEulerGamma) / k;
    const double log_c = rng.normal(design.censor_mu, design.censor_sd);
    const double y_star = x.row(i).dot(beta0) + eps;
    y[i] = std::min(y_star, log_c);
    delta[i] = y_star <= log_c ? 1 : 0;
  }
  return CensoredSample(std::move(y), std::move(delta), std::move(x));
}

double expected_s3_censoring(const SimDesign& design, const Eigen::VectorXd& beta0) {
  // E0 = log C - beta1 X1 - beta2 (Z + X1/2); conditional on X1 this is
  // normal, so the expectation reduces to two 1-D integrals.
  const double spread = std::sqrt(design.censor_sd * design.censor_sd +
                                  beta0[1] * beta0[1]);
  double total = 0.0;
  for (int xb = 0; xb <= 1; ++xb) {
    const double mean = design.censor_mu - beta0[0] * xb - 0.5 * beta0[1] * xb;
    auto integrand = [&](double u) {
      const double s = true_survival(design, u);
      return s * s * s * special::normal_pdf((u - mean) / spread) / spread;
    };
    total += 0.5 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                       integrand, -std::numeric_limits<double>::infinity(),
                       std::numeric_limits<double>::infinity(), 12, 1e-10);
  }
  return total;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

namespace {

Eigen::MatrixXd covariance_of(const std::vector<Eigen::VectorXd>& rows) {
  const int m = static_cast<int>(rows.size());
  const int p = m > 0 ? static_cast<int>(rows[0].size()) : 0;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(p, p);
  if (m < 2) return cov;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (const auto& r : rows) mean += r;
  mean /= m;
  for (const auto& r : rows) cov += (r - mean) * (r - mean).transpose();
  return cov / (m - 1);
}

}  // namespace

CellSummary run_cell(const SimDesign& design, const Eigen::VectorXd& beta0,
                     const std::string& beta0_label, const std::string& method_label,
                     std::uint64_t cell_id) {
  validate_design(design);
  const Method method = Method::from_label(method_label, design.n);
  const int p = 2;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p);
  const double sqrt_n = std::sqrt(static_cast<double>(design.n));

  std::vector<ReplicateRecord> records(design.reps);
  parallel_for(design.reps, design.threads, [&](int rep) {
    ReplicateRecord rec;
    RngStream rng = RngStream::keyed(design.seed, cell_id, static_cast<std::uint64_t>(rep));
    try {
      const CensoredSample sample = generate(design, beta0, rng);
      double censored = 0.0;
      for (int d : sample.delta()) censored += 1 - d;
      rec.censor_frac = censored / design.n;

      FitOptions opt;
      opt.solver = design.solver;
      opt.variance = OmegaMethod::Huang;
      opt.ci_levels = design.ci_levels;
      opt.test_nulls = {zero, beta0};
      opt.seed = design.seed ^ (cell_id << 20) ^ static_cast<std::uint64_t>(rep);

      const FitResult fr = fit(sample, method, opt);
      rec.converged = fr.solve.converged;
      rec.beta_hat = fr.solve.beta_hat;
      rec.psi0_scaled = method.psi(sample, beta0) / sqrt_n;
      rec.sigma_diag = fr.sigma.matrix.diagonal();
      rec.omega_diag = fr.omega->matrix.diagonal();
      rec.qs_p_at_zero = fr.tests[0].result.p_value;
      rec.wald_p_at_zero = fr.tests[1].result.p_value;
      rec.qs_p_at_truth = fr.tests[2].result.p_value;
      rec.wald_p_at_truth = fr.tests[3].result.p_value;
      rec.cover.resize(fr.cis.size());
      for (std::size_t l = 0; l < fr.cis.size(); ++l) {
        rec.cover[l].resize(p);
        for (int c = 0; c < p; ++c)
          rec.cover[l][c] = fr.cis[l].intervals[c].lower <= beta0[c] &&
                            beta0[c] <= fr.cis[l].intervals[c].upper;
      }
      rec.ok = true;
    } catch (const Error& err) {
      rec.ok = false;
      rec.error = err.code();
    } catch (const std::exception& err) {
      rec.ok = false;
      rec.error = std::string("unexpected: ") + err.what();
    }
    records[rep] = std::move(rec);
  });

  CellSummary cell;
  cell.beta0_label = beta0_label;
  cell.beta0 = beta0;
  cell.method = method_label;
  cell.reps = design.reps;

  std::vector<Eigen::VectorXd> psis, betas;
  Eigen::VectorXd sig_sum = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd omg_sum = Eigen::VectorXd::Zero(p);
  int qs0 = 0, wd0 = 0, qst = 0, wdt = 0;
  std::vector<std::vector<double>> cover_sum(design.ci_levels.size(),
                                             std::vector<double>(p, 0.0));
  double censor_sum = 0.0;
  int ok_count = 0;
  for (const auto& rec : records) {
    censor_sum += rec.censor_frac;
    if (!rec.ok) {
      ++cell.failures;
      continue;
    }
    ++ok_count;
    psis.push_back(rec.psi0_scaled);
    betas.push_back(rec.beta_hat);
    sig_sum += rec.sigma_diag;
    omg_sum += rec.omega_diag;
    qs0 += rec.qs_p_at_zero <= design.test_level;
    wd0 += rec.wald_p_at_zero <= design.test_level;
    qst += rec.qs_p_at_truth <= design.test_level;
    wdt += rec.wald_p_at_truth <= design.test_level;
    for (std::size_t l = 0; l < rec.cover.size(); ++l)
      for (int c = 0; c < p; ++c) cover_sum[l][c] += rec.cover[l][c] ? 1.0 : 0.0;
  }
  if (ok_count > 0) {
    cell.sigma_emp = covariance_of(psis);
    cell.omega_emp = design.n * covariance_of(betas);
    cell.mean_sigma_diag = sig_sum / ok_count;
    cell.mean_omega_diag = omg_sum / ok_count;
    Eigen::VectorXd beta_mean = Eigen::VectorXd::Zero(p);
    for (const auto& b : betas) beta_mean += b;
    cell.bias = beta_mean / ok_count - beta0;
    cell.reject_qs_at_zero = static_cast<double>(qs0) / ok_count;
    cell.reject_wald_at_zero = static_cast<double>(wd0) / ok_count;
    cell.reject_qs_at_truth = static_cast<double>(qst) / ok_count;
    cell.reject_wald_at_truth = static_cast<double>(wdt) / ok_count;
    cell.coverage.resize(design.ci_levels.size());
    for (std::size_t l = 0; l < design.ci_levels.size(); ++l) {
      cell.coverage[l].resize(p);
      for (int c = 0; c < p; ++c) cell.coverage[l][c] = cover_sum[l][c] / ok_count;
    }
  }
  cell.censor_rate = censor_sum / design.reps;
  cell.records = std::move(records);
  return cell;
}

SimReport run_campaign(const SimDesign& design) {
  validate_design(design);
  SimReport report;
  report.design = design;
  std::vector<Eigen::VectorXd> cells = design.beta0_cells;
  if (cells.empty())
    for (double b : design.b_grid) cells.push_back(beta_from_b(b));
  if (cells.empty()) throw BadConfig("design: no beta0 cells configured");

  std::uint64_t cell_id = 0;
  for (const auto& beta0 : cells)
    for (const auto& method : design.methods)
      report.cells.push_back(run_cell(design, beta0, label_of(beta0), method, cell_id++));
  return report;
}

std::vector<PowerRow> power_curve(const SimDesign& design) {
  validate_design(design);
  if (design.b_grid.empty()) throw BadConfig("power_curve needs a b_grid");
  std::vector<PowerRow> rows;
  std::uint64_t cell_id = 0;
  for (double b : design.b_grid) {
    for (const auto& method : design.methods) {
      const CellSummary cell =
          run_cell(design, beta_from_b(b), label_of(beta_from_b(b)), method, cell_id++);
      const int m = cell.reps - cell.failures;
      auto se = [m](double prob) {
        return m > 0 ? std::sqrt(prob * (1.0 - prob) / m) : 0.0;
      };
      rows.push_back(PowerRow{b, method, "quasi_score", cell.reject_qs_at_zero,
                              se(cell.reject_qs_at_zero), m});
      rows.push_back(PowerRow{b, method, "wald", cell.reject_wald_at_zero,
                              se(cell.reject_wald_at_zero), m});
    }
  }
  return rows;
}

std::vector<CoverageRow> coverage_curve(const SimDesign& design) {
  validate_design(design);
  if (design.b_grid.empty()) throw BadConfig("coverage_curve needs a b_grid");
  std::vector<CoverageRow> rows;
  std::uint64_t cell_id = 0x0C0FFEEULL;
  for (double b : design.b_grid) {
    for (const auto& method : design.methods) {
      const CellSummary cell =
          run_cell(design, beta_from_b(b), label_of(beta_from_b(b)), method, cell_id++);
      const int m = cell.reps - cell.failures;
      for (std::size_t l = 0; l < design.ci_levels.size(); ++l) {
        for (int c = 0; c < 2; ++c) {
          const double cov = cell.coverage.empty() ? 0.0 : cell.coverage[l][c];
          rows.push_back(CoverageRow{b, method, design.ci_levels[l], c + 1, cov,
                                     m > 0 ? std::sqrt(cov * (1.0 - cov) / m) : 0.0, m});
        }
      }
    }
  }
  return rows;
}

namespace {

struct BatchStats {
  Eigen::MatrixXd mean;
  Eigen::MatrixXd se;
};

BatchStats summarize_batches(const std::vector<Eigen::MatrixXd>& batches) {
  const int k = static_cast<int>(batches.size());
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(batches[0].rows(), batches[0].cols());
  for (const auto& b : batches) mean += b;
  mean /= k;
  Eigen::MatrixXd var = Eigen::MatrixXd::Zero(mean.rows(), mean.cols());
  for (const auto& b : batches) var += (b - mean).cwiseProduct(b - mean);
  var /= (k - 1);
  return BatchStats{mean, (var / k).cwiseSqrt()};
}

}  // namespace

DecompReport sigma_decomposition_check(const SimDesign& design, const Eigen::VectorXd& beta0,
                                       long mc_draws) {
  validate_design(design);
  const int kBatches = 20;
  const long per_batch = std::max<long>(mc_draws / kBatches, 100);
  const Eigen::VectorXd mu = design_mu_x();
  const double k_shape = design.weibull_shape;

  auto draw_x = [&](RngStream& rng) {
    Eigen::VectorXd x(2);
    const double xb = rng.bernoulli(0.5) ? 1.0 : 0.0;
    x << xb, rng.normal() + 0.5 * xb;
    return x;
  };
  auto draw_eps = [&](RngStream& rng) {
    return (std::log(rng.exponential()) + kEulerGamma) / k_shape;
  };

  // Sigma1 = Sigma_X/12 - E[(X-mu)(X-mu)' S^3(E0)]/12 with E0 the censoring
  // residual.
  std::vector<Eigen::MatrixXd> s1_batches, s2_batches;
  std::vector<double> s2_min_eigs;
  for (int batch = 0; batch < kBatches; ++batch) {
    RngStream rng = RngStream::keyed(design.seed, 0x51D1ULL, static_cast<std::uint64_t>(batch));
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(2, 2);
    for (long d = 0; d < per_batch; ++d) {
      const Eigen::VectorXd x = draw_x(rng);
      const double e0 = rng.normal(design.censor_mu, design.censor_sd) - x.dot(beta0);
      const double s = true_survival(design, e0);
      acc += (x - mu) * (x - mu).transpose() * (s * s * s);
    }
    s1_batches.push_back(design_sigma_x() / 12.0 - acc / (12.0 * per_batch));

    // Sigma2 = (1/4) E_{eps~F}[ (mu_{X|E0>=eps} - mu)^{x2} P(E0>=eps) S^2(eps) ],
    // with the inner conditional moments taken from an independent draw.
    RngStream rng2 = RngStream::keyed(design.seed, 0x51D2ULL, static_cast<std::uint64_t>(batch));
    std::vector<std::pair<double, Eigen::VectorXd>> pool(per_batch);
    for (long j = 0; j < per_batch; ++j) {
      const Eigen::VectorXd x = draw_x(rng2);
      const double e0 = rng2.normal(design.censor_mu, design.censor_sd) - x.dot(beta0);
      pool[j] = {e0, x};
    }
    std::sort(pool.begin(), pool.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Eigen::VectorXd> suffix_x(per_batch + 1, Eigen::VectorXd::Zero(2));
    for (long j = per_batch - 1; j >= 0; --j) suffix_x[j] = suffix_x[j + 1] + pool[j].second;

    Eigen::MatrixXd acc2 = Eigen::MatrixXd::Zero(2, 2);
    for (long d = 0; d < per_batch; ++d) {
      const double eps = draw_eps(rng2);
      const auto it = std::lower_bound(
          pool.begin(), pool.end(), eps,
          [](const std::pair<double, Eigen::VectorXd>& a, double v) { return a.first < v; });
      const long idx = it - pool.begin();
      const long at_risk = per_batch - idx;
      if (at_risk == 0) continue;
      const double den = static_cast<double>(at_risk) / per_batch;
      const Eigen::VectorXd cond_mean = suffix_x[idx] / at_risk;
      const double s = true_survival(design, eps);
      acc2 += 0.25 * den * s * s * (cond_mean - mu) * (cond_mean - mu).transpose();
    }
    const Eigen::MatrixXd s2 = acc2 / per_batch;
    s2_batches.push_back(s2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s2);
    s2_min_eigs.push_back(es.eigenvalues().minCoeff());
  }

  // Empirical Sigma: covariance of n^{-1/2} Psi(beta0) across replicate
  // datasets, Wilcoxon weights.
  const ScoreFunction wilcoxon = ScoreFunction::wilcoxon();
  const int reps = std::max(design.reps, 2 * kBatches);
  const int per_sigma_batch = reps / kBatches;
  std::vector<Eigen::MatrixXd> emp_batches(kBatches);
  parallel_for(kBatches, design.threads, [&](int batch) {
    std::vector<Eigen::VectorXd> psis;
    psis.reserve(per_sigma_batch);
    for (int r = 0; r < per_sigma_batch; ++r) {
      RngStream rng = RngStream::keyed(design.seed, 0x51D0ULL,
                                       static_cast<std::uint64_t>(batch * per_sigma_batch + r));
      const CensoredSample sample = generate(design, beta0, rng);
      psis.push_back(psi_wlr_form(make_context(sample, beta0, wilcoxon)) /
                     std::sqrt(static_cast<double>(design.n)));
    }
    emp_batches[batch] = covariance_of(psis);
  });

  const BatchStats emp = summarize_batches(emp_batches);
  const BatchStats s1 = summarize_batches(s1_batches);
  const BatchStats s2 = summarize_batches(s2_batches);

  DecompReport report;
  report.sigma_emp = emp.mean;
  report.sigma_emp_se = emp.se;
  report.sigma1 = s1.mean;
  report.sigma1_se = s1.se;
  report.sigma2 = s2.mean;
  report.sigma2_se = s2.se;
  report.sigma_x_over_12 = design_sigma_x() / 12.0;

  double mean_eig = 0.0, var_eig = 0.0;
  for (double v : s2_min_eigs) mean_eig += v;
  mean_eig /= kBatches;
  for (double v : s2_min_eigs) var_eig += (v - mean_eig) * (v - mean_eig);
  var_eig /= (kBatches - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(report.sigma2);
  report.sigma2_min_eig = es.eigenvalues().minCoeff();
  report.sigma2_min_eig_se = std::sqrt(var_eig / kBatches);

  report.decomposition_ok = true;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double gap = std::abs(report.sigma_emp(i, j) -
                                  (report.sigma1(i, j) - report.sigma2(i, j)));
      const double se = std::sqrt(emp.se(i, j) * emp.se(i, j) +
                                  s1.se(i, j) * s1.se(i, j) + s2.se(i, j) * s2.se(i, j));
      if (gap > 3.0 * se) report.decomposition_ok = false;
    }
  }
  report.sigma2_psd_ok =
      report.sigma2_min_eig >= -3.0 * std::max(report.sigma2_min_eig_se, 1e-12);
  return report;
}

RankMomentCheck population_rank_moments(const SimDesign& design, const Eigen::VectorXd& beta0,
                                        long draws) {
  validate_design(design);
  RankMomentCheck check;
  check.target_variance = (1.0 - expected_s3_censoring(design, beta0)) / 12.0;

  std::vector<double> values(draws);
  RngStream rng = RngStream::keyed(design.seed, 0x4A11ULL);
  for (long d = 0; d < draws; ++d) {
    Eigen::VectorXd x(2);
    const double xb = rng.bernoulli(0.5) ? 1.0 : 0.0;
    x << xb, rng.normal() + 0.5 * xb;
    const double eps = (std::log(rng.exponential()) + kEulerGamma) / design.weibull_shape;
    const double e0 = rng.normal(design.censor_mu, design.censor_sd) - x.dot(beta0);
    const double e_tilde = std::min(eps, e0);
    const double s = true_survival(design, e_tilde);
    // continuous residual law: the mid-survivor equals the survivor
    values[d] = eps <= e0 ? 1.0 - s : 1.0 - 0.5 * s;
  }

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= draws;
  double m2 = 0.0, m4 = 0.0;
  for (double v : values) {
    const double c = v - mean;
    m2 += c * c;
    m4 += c * c * c * c;
  }
  m2 /= draws;
  m4 /= draws;

  check.mean = mean;
  check.mean_se = std::sqrt(m2 / draws);
  check.variance = m2 * draws / (draws - 1);
  check.variance_se = std::sqrt(std::max(m4 - m2 * m2, 0.0) / draws);
  check.mean_ok = std::abs(check.mean - check.target_mean) <= 3.0 * check.mean_se;
  check.variance_ok =
      std::abs(check.variance - check.target_variance) <= 3.0 * check.variance_se;
  return check;
}

namespace {

std::string csv_num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void write_table1_csv(const SimReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot_write", "cannot open " + path);
  const int p = 2;
  out << "beta0,method,reps,failures";
  for (int k = 1; k <= p; ++k) out << ",emp_var_psi_" << k;
  for (int k = 1; k <= p; ++k) out << ",mean_est_var_psi_" << k;
  for (int k = 1; k <= p; ++k) out << ",bias_" << k;
  for (int k = 1; k <= p; ++k) out << ",emp_omega_" << k << k;
  for (int k = 1; k <= p; ++k) out << ",mean_omega_" << k << k;
  out << ",reject_qs_at_zero,reject_wald_at_zero,reject_qs_at_truth,"
         "reject_wald_at_truth,censor_rate\n";
  for (const auto& cell : report.cells) {
    out << '"' << cell.beta0_label << '"' << ',' << cell.method << ',' << cell.reps << ','
        << cell.failures;
    const double n = report.design.n;
    // emp/est Psi variances in the per-observation scale Var(n^{-1} Psi)
    for (int k = 0; k < p; ++k) out << ',' << csv_num(cell.sigma_emp(k, k) / n);
    for (int k = 0; k < p; ++k) out << ',' << csv_num(cell.mean_sigma_diag[k] / n);
    for (int k = 0; k < p; ++k) out << ',' << csv_num(cell.bias[k]);
    for (int k = 0; k < p; ++k) out << ',' << csv_num(cell.omega_emp(k, k));
    for (int k = 0; k < p; ++k) out << ',' << csv_num(cell.mean_omega_diag[k]);
    out << ',' << csv_num(cell.reject_qs_at_zero) << ',' << csv_num(cell.reject_wald_at_zero)
        << ',' << csv_num(cell.reject_qs_at_truth) << ','
        << csv_num(cell.reject_wald_at_truth) << ',' << csv_num(cell.censor_rate) << '\n';
  }
}

void write_power_csv(const std::vector<PowerRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot_write", "cannot open " + path);
  out << "b,method,test,rejection,se,reps_used\n";
  for (const auto& r : rows)
    out << csv_num(r.b) << ',' << r.method << ',' << r.test << ',' << csv_num(r.rejection)
        << ',' << csv_num(r.se) << ',' << r.reps_used << '\n';
}

void write_coverage_csv(const std::vector<CoverageRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot_write", "cannot open " + path);
  out << "b,method,level,coordinate,coverage,se,reps_used\n";
  for (const auto& r : rows)
    out << csv_num(r.b) << ',' << r.method << ',' << csv_num(r.level) << ',' << r.coordinate
        << ',' << csv_num(r.coverage) << ',' << csv_num(r.se) << ',' << r.reps_used << '\n';
}

namespace {

nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

void write_decomp_json(const DecompReport& report, const std::string& path) {
  nlohmann::json j = {
      {"sigma_emp", matrix_json(report.sigma_emp)},
      {"sigma_emp_se", matrix_json(report.sigma_emp_se)},
      {"sigma1", matrix_json(report.sigma1)},
      {"sigma1_se", matrix_json(report.sigma1_se)},
      {"sigma2", matrix_json(report.sigma2)},
      {"sigma2_se", matrix_json(report.sigma2_se)},
      {"sigma_x_over_12", matrix_json(report.sigma_x_over_12)},
      {"sigma2_min_eig", report.sigma2_min_eig},
      {"sigma2_min_eig_se", report.sigma2_min_eig_se},
      {"decomposition_ok", report.decomposition_ok},
      {"sigma2_psd_ok", report.sigma2_psd_ok},
  };
  std::ofstream out(path);
  if (!out) throw InputError("cannot_write", "cannot open " + path);
  out << j.dump(2) << '\n';
}

void write_manifest(const SimDesign& design, const std::string& mode,
                    const std::string& path) {
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : design.methods) methods.push_back(m);
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& b : design.beta0_cells)
    cells.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  nlohmann::json j = {
      {"mode", mode},
      {"n", design.n},
      {"reps", design.reps},
      {"seed", design.seed},
      {"threads", design.threads},
      {"weibull_shape", design.weibull_shape},
      {"censor_mu", design.censor_mu},
      {"censor_sd", design.censor_sd},
      {"censor_sd_interpretation", "standard deviation (validated by ~34% censoring rate)"},
      {"covariate_order", "column 1 Bernoulli(0.5), column 2 N(0,1)+col1/2"},
      {"methods", methods},
      {"beta0_cells", cells},
      {"b_grid", design.b_grid},
      {"ci_levels", design.ci_levels},
      {"test_level", design.test_level},
      {"solver",
       {{"tol", design.solver.tol_psi},
        {"max_sweeps", design.solver.max_sweeps},
        {"bracket_init", design.solver.bracket_init},
        {"bracket_grow", design.solver.bracket_grow},
        {"init", design.solver.init == SolverInit::Gehan ? "gehan" : "zero"}}},
  };
  std::ofstream out(path);
  if (!out) throw InputError("cannot_write", "cannot open " + path);
  out << j.dump(2) << '\n';
}

namespace {

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw BadConfig("config key '" + key + "': bad number '" + item + "'");
    }
  }
  return out;
}

}  // namespace

SimConfig parse_sim_config(std::istream& in) {
  SimConfig config;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    if (eq == std::string::npos)
      throw BadConfig("config line " + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "mode") {
        config.mode = value;
        if (value != "table1" && value != "power" && value != "coverage" && value != "decomp")
          throw BadConfig("mode must be table1|power|coverage|decomp");
      } else if (key == "n") {
        config.design.n = std::stoi(value);
      } else if (key == "reps") {
        config.design.reps = std::stoi(value);
      } else if (key == "seed") {
        config.design.seed = std::stoull(value);
        config.seed_set = true;
      } else if (key == "threads") {
        config.design.threads = std::stoi(value);
      } else if (key == "weibull_shape") {
        config.design.weibull_shape = std::stod(value);
      } else if (key == "censor_mu") {
        config.design.censor_mu = std::stod(value);
      } else if (key == "censor_sd") {
        config.design.censor_sd = std::stod(value);
      } else if (key == "test_level") {
        config.design.test_level = std::stod(value);
      } else if (key == "mc_draws") {
        config.mc_draws = std::stol(value);
      } else if (key == "methods") {
        config.design.methods.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) config.design.methods.push_back(item);
      } else if (key == "beta0") {
        const auto coords = parse_double_list(value, key);
        config.design.beta0_cells.push_back(
            Eigen::Map<const Eigen::VectorXd>(coords.data(), coords.size()));
      } else if (key == "decomp_beta0") {
        const auto coords = parse_double_list(value, key);
        config.decomp_beta0 =
            Eigen::Map<const Eigen::VectorXd>(coords.data(), coords.size());
      } else if (key == "b_grid") {
        const auto colon = value.find(':');
        if (colon != std::string::npos) {
          // start:stop:count
          const auto colon2 = value.find(':', colon + 1);
          if (colon2 == std::string::npos) throw BadConfig("b_grid wants start:stop:count");
          const double start = std::stod(value.substr(0, colon));
          const double stop = std::stod(value.substr(colon + 1, colon2 - colon - 1));
          const int count = std::stoi(value.substr(colon2 + 1));
          if (count < 1) throw BadConfig("b_grid count must be >= 1");
          config.design.b_grid.clear();
          for (int i = 0; i < count; ++i)
            config.design.b_grid.push_back(
                count == 1 ? start : start + (stop - start) * i / (count - 1));
        } else {
          config.design.b_grid = parse_double_list(value, key);
        }
      } else if (key == "levels") {
        config.design.ci_levels = parse_double_list(value, key);
      } else if (key == "solver.tol") {
        config.design.solver.tol_psi = std::stod(value);
      } else if (key == "solver.max_sweeps") {
        config.design.solver.max_sweeps = std::stoi(value);
      } else if (key == "solver.bracket_init") {
        config.design.solver.bracket_init = std::stod(value);
      } else if (key == "solver.bracket_grow") {
        config.design.solver.bracket_grow = std::stod(value);
      } else if (key == "solver.init") {
        if (value == "zero")
          config.design.solver.init = SolverInit::Zero;
        else if (value == "gehan")
          config.design.solver.init = SolverInit::Gehan;
        else
          throw BadConfig("solver.init must be zero or gehan");
      } else {
        throw BadConfig("unknown config key '" + key + "'");
      }
    } catch (const BadConfig&) {
      throw;
    } catch (const std::exception&) {
      throw BadConfig("config key '" + key + "': bad value '" + value + "'");
    }
  }
  return config;
}

}  // namespace raft
