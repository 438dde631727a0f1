#include "raft/solver.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "raft/errors.hpp"
#include "raft/rank_estimator.hpp"

namespace raft {

namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    const double lo = *std::max_element(v.begin(), v.begin() + mid);
    m = 0.5 * (lo + m);
  }
  return m;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

double robust_scale(const Eigen::VectorXd& v) {
  std::vector<double> tmp(v.data(), v.data() + v.size());
  const double med = median_of(tmp);
  for (auto& t : tmp) t = std::abs(t - med);
  double mad = 1.4826 * median_of(tmp);
  if (mad > 0.0) return mad;
  const double sd = std::sqrt((v.array() - v.mean()).square().sum() /
                              std::max<Eigen::Index>(1, v.size() - 1));
  return sd > 0.0 ? sd : 1.0;
}

std::vector<double> default_bracket_scales(const CensoredSample& sample) {
  const double sy = robust_scale(sample.y());
  std::vector<double> scales(sample.p());
  for (int k = 0; k < sample.p(); ++k)
    scales[k] = 0.5 * sy / robust_scale(sample.x().col(k));
  return scales;
}

namespace {

class CrossingSolver {
 public:
  CrossingSolver(const EstimatingFn& psi, int n_obs, int p, const SolverConfig& config,
                 const Eigen::VectorXd& target, const std::vector<double>& bracket_scales)
      : psi_(psi), n_obs_(n_obs), p_(p), config_(config), target_(target),
        scales_(bracket_scales) {}

  SolveOutcome run(const Eigen::VectorXd& start) {
    SolveOutcome out;
    out.crossing_widths.assign(p_, std::numeric_limits<double>::infinity());

    Eigen::VectorXd beta = start;
    Eigen::VectorXd h = evaluate(beta);

    for (int sweep = 1; sweep <= config_.max_sweeps; ++sweep) {
      const Eigen::VectorXd beta_prev = beta;
      for (int k = 0; k < p_; ++k) {
        if (!coordinate_step(k, beta, h, out)) {
          out.beta_hat = beta;
          out.psi_at_solution = (h + target_) * n_obs_;
          out.sweeps_used = sweep;
          finish_threshold(out);
          return out;
        }
      }
      if (sweep == 1) {
        in_first_sweep_ = false;
        std::vector<double> abs_vals;
        abs_vals.reserve(first_sweep_values_.size());
        for (double v : first_sweep_values_) abs_vals.push_back(std::abs(v));
        double scale = median_of(abs_vals);
        if (scale == 0.0 && !abs_vals.empty())
          scale = *std::max_element(abs_vals.begin(), abs_vals.end());
        threshold_ = config_.tol_psi * scale / std::sqrt(static_cast<double>(n_obs_));
      }
      out.sweeps_used = sweep;
      if (h.lpNorm<Eigen::Infinity>() <= threshold_) {
        out.converged = true;
        break;
      }
      // Fixpoint at bisection resolution: re-bisecting moves every
      // coordinate by less than the crossing width, so further sweeps
      // cannot improve the iterate.
      if ((beta - beta_prev).lpNorm<Eigen::Infinity>() <= config_.crossing_width) break;
    }

    out.beta_hat = beta;
    out.psi_at_solution = (h + target_) * n_obs_;
    if (!out.converged && out.failure == SolveFailure::None) {
      out.failure = SolveFailure::NotConverged;
      out.failure_detail = "acceptance norm not reached after " +
                           std::to_string(out.sweeps_used) + " sweeps";
    }
    finish_threshold(out);
    return out;
  }

 private:
  void finish_threshold(SolveOutcome& out) const { out.threshold = threshold_; }

  // n^{-1} Psi(beta) - target. During the first sweep, evaluations at the
  // sweep start and at expansion probes calibrate the acceptance scale;
  // bisection midpoints are excluded (they cluster near zero by
  // construction and would understate the natural scale).
  Eigen::VectorXd evaluate(const Eigen::VectorXd& beta) {
    Eigen::VectorXd h = psi_(beta) / static_cast<double>(n_obs_) - target_;
    if (in_first_sweep_ && record_scale_)
      for (int j = 0; j < p_; ++j) first_sweep_values_.push_back(h[j]);
    return h;
  }

  std::optional<Eigen::VectorXd> try_evaluate(Eigen::VectorXd& beta, int k, double value) {
    const double saved = beta[k];
    beta[k] = value;
    try {
      Eigen::VectorXd h = evaluate(beta);
      beta[k] = saved;
      return h;
    } catch (const NonFinite&) {
      beta[k] = saved;
      return std::nullopt;
    }
  }

  // Returns false on NoBracket (outcome filled in).
  bool coordinate_step(int k, Eigen::VectorXd& beta, Eigen::VectorXd& h, SolveOutcome& out) {
    const double c = beta[k];
    const double gc = h[k];
    if (gc == 0.0) {
      out.crossing_widths[k] = 0.0;
      return true;
    }

    const double h0 = config_.bracket_init > 0.0 ? config_.bracket_init : scales_[k];
    double lo = 0.0, hi = 0.0, g_lo = 0.0, g_hi = 0.0;
    bool found = false;

    // Geometric expansion. A crossing detected on the right at step j has
    // its near endpoint at distance h0*grow^{j-1}, the same as a left
    // crossing at step j and nearer than anything at later steps, so taking
    // the first detection (right probed before left) is the deterministic
    // nearest-crossing rule.
    double prev_r = c, prev_l = c, g_prev_r = gc, g_prev_l = gc;
    bool right_alive = true, left_alive = true;
    double width = h0;
    for (int step = 0; step <= config_.max_expansions && (right_alive || left_alive); ++step) {
      if (right_alive) {
        const double r = c + width;
        auto hr = try_evaluate(beta, k, r);
        if (!hr) {
          right_alive = false;
        } else {
          const double gr = (*hr)[k];
          if (gr == 0.0) {
            beta[k] = r;
            h = *hr;
            out.crossing_widths[k] = 0.0;
            return true;
          }
          if (sign_of(gr) != sign_of(g_prev_r)) {
            lo = prev_r; hi = r; g_lo = g_prev_r; g_hi = gr;
            found = true;
            break;
          }
          prev_r = r;
          g_prev_r = gr;
        }
      }
      if (left_alive) {
        const double l = c - width;
        auto hl = try_evaluate(beta, k, l);
        if (!hl) {
          left_alive = false;
        } else {
          const double gl = (*hl)[k];
          if (gl == 0.0) {
            beta[k] = l;
            h = *hl;
            out.crossing_widths[k] = 0.0;
            return true;
          }
          if (sign_of(gl) != sign_of(g_prev_l)) {
            lo = l; hi = prev_l; g_lo = gl; g_hi = g_prev_l;
            found = true;
            break;
          }
          prev_l = l;
          g_prev_l = gl;
        }
      }
      width *= config_.bracket_grow;
    }

    if (!found) {
      std::ostringstream msg;
      msg << "component " << k << " kept sign " << sign_of(gc) << " on ["
          << prev_l << ", " << prev_r << "]";
      out.failure = SolveFailure::NoBracket;
      out.failed_coordinate = k;
      out.failure_detail = msg.str();
      return false;
    }

    // Bisect to the configured width; |g| is not a stopping criterion
    // because g is a step function of beta[k].
    record_scale_ = false;
    while (hi - lo > config_.crossing_width) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;  // bracket at floating-point resolution
      auto hm = try_evaluate(beta, k, mid);
      if (!hm) break;
      const double gm = (*hm)[k];
      if (gm == 0.0) {
        lo = hi = mid;
        break;
      }
      if (sign_of(gm) == sign_of(g_lo)) {
        lo = mid;
        g_lo = gm;
      } else {
        hi = mid;
        g_hi = gm;
      }
    }

    const double root = 0.5 * (lo + hi);
    beta[k] = root;
    h = evaluate(beta);
    record_scale_ = true;
    out.crossing_widths[k] = hi - lo;
    return true;
  }

  const EstimatingFn& psi_;
  int n_obs_;
  int p_;
  const SolverConfig& config_;
  Eigen::VectorXd target_;
  std::vector<double> scales_;
  bool in_first_sweep_ = true;
  bool record_scale_ = true;
  std::vector<double> first_sweep_values_;
  double threshold_ = 0.0;
};

Eigen::VectorXd resolve_start(const CensoredSample& sample, const SolverConfig& config) {
  switch (config.init) {
    case SolverInit::Zero:
      return Eigen::VectorXd::Zero(sample.p());
    case SolverInit::Vector: {
      if (config.beta0.size() == 0) return Eigen::VectorXd::Zero(sample.p());
      if (config.beta0.size() != sample.p())
        throw BadConfig("beta0 has wrong length");
      return config.beta0;
    }
    case SolverInit::Gehan: {
      SolverConfig warm = config;
      warm.init = SolverInit::Zero;
      return solve_gehan(sample, warm).beta_hat;
    }
  }
  return Eigen::VectorXd::Zero(sample.p());
}

}  // namespace

SolveOutcome find_zero_crossing(const EstimatingFn& psi, int n_obs, int p,
                                const SolverConfig& config, const Eigen::VectorXd& start,
                                const Eigen::VectorXd& target,
                                const std::vector<double>& bracket_scales) {
  if (static_cast<int>(bracket_scales.size()) != p || start.size() != p ||
      target.size() != p)
    throw BadConfig("find_zero_crossing: dimension mismatch");
  if (!(config.tol_psi > 0.0) || config.max_sweeps < 1 || !(config.bracket_grow > 1.0))
    throw BadConfig("invalid solver configuration");
  CrossingSolver solver(psi, n_obs, p, config, target, bracket_scales);
  return solver.run(start);
}

SolveOutcome solve(const CensoredSample& sample, const ScoreFunction& score,
                   const SolverConfig& config) {
  const EstimatingFn psi = [&](const Eigen::VectorXd& beta) {
    return psi_wlr_form(make_context(sample, beta, score));
  };
  return find_zero_crossing(psi, sample.n(), sample.p(), config,
                            resolve_start(sample, config),
                            Eigen::VectorXd::Zero(sample.p()),
                            default_bracket_scales(sample));
}

SolveOutcome solve_offset(const CensoredSample& sample, const ScoreFunction& score,
                          const SolverConfig& config, const Eigen::VectorXd& target) {
  const EstimatingFn psi = [&](const Eigen::VectorXd& beta) {
    return psi_wlr_form(make_context(sample, beta, score));
  };
  return find_zero_crossing(psi, sample.n(), sample.p(), config,
                            resolve_start(sample, config), target,
                            default_bracket_scales(sample));
}

SolveOutcome solve_gehan(const CensoredSample& sample, const SolverConfig& config) {
  // The score is irrelevant for the Gehan equation; the context only
  // supplies residuals and at-risk sums.
  const ScoreFunction dummy = ScoreFunction::wilcoxon();
  const EstimatingFn psi = [&](const Eigen::VectorXd& beta) {
    return psi_gehan(make_context(sample, beta, dummy));
  };
  return find_zero_crossing(psi, sample.n(), sample.p(), config,
                            resolve_start(sample, config),
                            Eigen::VectorXd::Zero(sample.p()),
                            default_bracket_scales(sample));
}

}  // namespace raft
