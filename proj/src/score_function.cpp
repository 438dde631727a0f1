#include "raft/score_function.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>
#include <unordered_map>

#include "raft/errors.hpp"

namespace raft {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887;
constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

double normal_quantile(double u) { return -kSqrt2 * boost::math::erfc_inv(2.0 * u); }
double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

class ScoreFunction::Impl {
 public:
  virtual ~Impl() = default;
  virtual double a(double u) const = 0;
  virtual double A(double u) const = 0;
  virtual double chord(double u1, double u2) const {
    if (u1 == u2) return a(u1);
    return (A(u2) - A(u1)) / (u2 - u1);
  }
  virtual double a_min() const = 0;
  virtual double a_max() const = 0;
  virtual ScoreKind kind() const = 0;
  virtual std::string spec() const = 0;
};

double ScoreFunction::a(double u) const { return impl_->a(u); }
double ScoreFunction::A(double u) const { return impl_->A(u); }
double ScoreFunction::chord(double u1, double u2) const { return impl_->chord(u1, u2); }
double ScoreFunction::a_min() const { return impl_->a_min(); }
double ScoreFunction::a_max() const { return impl_->a_max(); }
ScoreKind ScoreFunction::kind() const { return impl_->kind(); }
std::string ScoreFunction::spec() const { return impl_->spec(); }

namespace {

class WilcoxonScore final : public ScoreFunction::Impl {
 public:
  double a(double u) const override { return u; }
  double A(double u) const override { return 0.5 * u * u; }
  // Chord of u^2/2 is the midpoint; computed exactly as eval()'s mid-CDF does.
  double chord(double u1, double u2) const override { return 0.5 * (u1 + u2); }
  double a_min() const override { return 0.0; }
  double a_max() const override { return 1.0; }
  ScoreKind kind() const override { return ScoreKind::Wilcoxon; }
  std::string spec() const override { return "wilcoxon"; }
};

class ShiftedLogrankScore final : public ScoreFunction::Impl {
 public:
  explicit ShiftedLogrankScore(int n) : n_(n), c_(static_cast<double>(n) / (n + 1.0)) {
    if (n < 1) throw BadConfig("shifted_logrank needs n >= 1");
  }
  double a(double u) const override { return -1.0 - std::log1p(-c_ * u); }
  double A(double u) const override {
    // antiderivative of -1 - log(1 - c u), normalized to A(0) = 0
    const double g = 1.0 - c_ * u;
    return -u + (g * (std::log(g) - 1.0) + 1.0) / c_;
  }
  double a_min() const override { return -1.0; }
  double a_max() const override { return -1.0 - std::log1p(-c_); }
  ScoreKind kind() const override { return ScoreKind::ShiftedLogrank; }
  std::string spec() const override { return "logrank:n=" + std::to_string(n_); }

 private:
  int n_;
  double c_;
};

class WinsorizedNormalScore final : public ScoreFunction::Impl {
 public:
  explicit WinsorizedNormalScore(double alpha) : alpha_(alpha) {
    if (!(alpha > 0.0) || alpha > 0.5) throw BadAlpha("alpha must lie in (0, 1/2]");
    q_lo_ = normal_quantile(alpha);
    phi_lo_ = normal_pdf(q_lo_);
  }
  double a(double u) const override {
    const double v = std::clamp(u, alpha_, 1.0 - alpha_);
    return normal_quantile(v);
  }
  double A(double u) const override {
    // flat tail, then -phi(Phi^{-1}(u)) in the interior, flat tail again
    if (u <= alpha_) return q_lo_ * u;
    const double interior_base = q_lo_ * alpha_ + phi_lo_;
    if (u >= 1.0 - alpha_) return q_lo_ * alpha_ - q_lo_ * (u - (1.0 - alpha_));
    return interior_base - normal_pdf(normal_quantile(u));
  }
  double a_min() const override { return q_lo_; }
  double a_max() const override { return -q_lo_; }
  ScoreKind kind() const override { return ScoreKind::WinsorizedNormal; }
  std::string spec() const override { return "normal:alpha=" + fmt(alpha_); }

 private:
  double alpha_;
  double q_lo_;
  double phi_lo_;
};

// Score family of the log-F(2 m1, 2 m2) distribution. With
// B(u) = I^{-1}_{m1,m2}(u) (inverse regularized incomplete beta), the
// quantile substitution collapses both formulas to
//   a(u) = (m1 + m2) B(u) - m1,
//   A(u) = -B(u)^{m1} (1 - B(u))^{m2} / Beta(m1, m2),
// algebraically identical to the F-quantile forms but free of overflow at
// the endpoints. One inverse-beta evaluation serves both a and A.
class GeneralizedFScore final : public ScoreFunction::Impl {
 public:
  GeneralizedFScore(double m1, double m2) : m1_(m1), m2_(m2) {
    if (!(m1 > 0.0) || !(m2 > 0.0) || !std::isfinite(m1) || !std::isfinite(m2))
      throw BadShape("generalized_f needs finite m1 > 0, m2 > 0");
    log_beta_ = std::lgamma(m1) + std::lgamma(m2) - std::lgamma(m1 + m2);
  }
  double a(double u) const override {
    if (u <= 0.0) return -m1_;
    if (u >= 1.0) return m2_;
    return (m1_ + m2_) * inv_beta(u) - m1_;
  }
  double A(double u) const override {
    if (u <= 0.0 || u >= 1.0) return 0.0;
    const double b = inv_beta(u);
    if (b <= 0.0 || b >= 1.0) return 0.0;
    return -std::exp(m1_ * std::log(b) + m2_ * std::log1p(-b) - log_beta_);
  }
  double a_min() const override { return -m1_; }
  double a_max() const override { return m2_; }
  ScoreKind kind() const override { return ScoreKind::GeneralizedF; }
  std::string spec() const override { return "genf:m1=" + fmt(m1_) + ",m2=" + fmt(m2_); }

 private:
  double inv_beta(double u) const {
    // The solver hammers the same KM levels thousands of times per fit;
    // ibeta_inv dominates the profile without this memo.
    struct Key {
      double m1, m2, u;
      bool operator==(const Key& o) const { return m1 == o.m1 && m2 == o.m2 && u == o.u; }
    };
    struct KeyHash {
      std::size_t operator()(const Key& k) const {
        auto h = std::hash<double>();
        std::size_t s = h(k.m1);
        s ^= h(k.m2) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        s ^= h(k.u) + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        return s;
      }
    };
    thread_local std::unordered_map<Key, double, KeyHash> cache;
    if (cache.size() > (1u << 20)) cache.clear();
    const Key key{m1_, m2_, u};
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const double b = boost::math::ibeta_inv(m1_, m2_, u);
    cache.emplace(key, b);
    return b;
  }

  double m1_;
  double m2_;
  double log_beta_;
};

class TruncatedScore final : public ScoreFunction::Impl {
 public:
  TruncatedScore(ScoreFunction base, int n, TruncationMode mode)
      : base_(std::move(base)), n_(n), mode_(mode) {
    if (n < 1) throw BadConfig("truncated needs n >= 1");
    slope_ = static_cast<double>(n) / (n + 1.0);
    offset_ = mode == TruncationMode::Normal ? 0.5 / (n + 1.0) : 0.0;
    A0_ = base_.A(offset_);
  }
  double a(double u) const override { return base_.a(map(u)); }
  double A(double u) const override {
    // change of variable through the affine map
    return (base_.A(map(u)) - A0_) / slope_;
  }
  double a_min() const override { return base_.a(map(0.0)); }
  double a_max() const override { return base_.a(map(1.0)); }
  ScoreKind kind() const override { return base_.kind(); }
  std::string spec() const override {
    return base_.spec() + (mode_ == TruncationMode::Normal ? "|trunc_normal:n=" : "|trunc_extreme:n=") +
           std::to_string(n_);
  }

 private:
  double map(double u) const { return slope_ * u + offset_; }

  ScoreFunction base_;
  int n_;
  TruncationMode mode_;
  double slope_;
  double offset_;
  double A0_;
};

class CustomScore final : public ScoreFunction::Impl {
 public:
  CustomScore(std::string name, std::function<double(double)> a,
              std::optional<std::function<double(double)>> A, double lo, double hi)
      : name_(std::move(name)), a_(std::move(a)), A_(std::move(A)), lo_(lo), hi_(hi) {}
  double a(double u) const override { return a_(u); }
  double A(double u) const override {
    if (A_) return (*A_)(u);
    if (u == 0.0) return 0.0;
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = quad_cache_.find(u);
    if (it != quad_cache_.end()) return it->second;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        a_, 0.0, u, 12, 1e-12);
    quad_cache_.emplace(u, v);
    return v;
  }
  double a_min() const override { return lo_; }
  double a_max() const override { return hi_; }
  ScoreKind kind() const override { return ScoreKind::Custom; }
  std::string spec() const override { return "custom:" + name_; }

 private:
  std::string name_;
  std::function<double(double)> a_;
  std::optional<std::function<double(double)>> A_;
  double lo_;
  double hi_;
  mutable std::mutex mutex_;
  mutable std::map<double, double> quad_cache_;
};

}  // namespace

ScoreFunction ScoreFunction::wilcoxon() {
  return ScoreFunction(std::make_shared<WilcoxonScore>());
}

ScoreFunction ScoreFunction::shifted_logrank(int n) {
  return ScoreFunction(std::make_shared<ShiftedLogrankScore>(n));
}

ScoreFunction ScoreFunction::winsorized_normal(double alpha) {
  return ScoreFunction(std::make_shared<WinsorizedNormalScore>(alpha));
}

ScoreFunction ScoreFunction::generalized_f(double m1, double m2) {
  return ScoreFunction(std::make_shared<GeneralizedFScore>(m1, m2));
}

ScoreFunction ScoreFunction::truncated(ScoreFunction base, int n, TruncationMode mode) {
  return ScoreFunction(std::make_shared<TruncatedScore>(std::move(base), n, mode));
}

ScoreFunction ScoreFunction::custom(std::string name, std::function<double(double)> a,
                                    std::optional<std::function<double(double)>> A,
                                    double a_min, double a_max) {
  return ScoreFunction(
      std::make_shared<CustomScore>(std::move(name), std::move(a), std::move(A), a_min, a_max));
}

ScoreFunction ScoreFunction::parse(const std::string& spec, int n) {
  if (spec == "wilcoxon") return wilcoxon();
  if (spec == "logrank") return shifted_logrank(n);
  auto parse_params = [&](const std::string& body) {
    std::unordered_map<std::string, double> params;
    std::stringstream ss(body);
    std::string item;
    while (std::getline(ss, item, ',')) {
      auto eq = item.find('=');
      if (eq == std::string::npos)
        throw BadConfig("bad score parameter '" + item + "' in " + spec);
      try {
        params[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
      } catch (const std::exception&) {
        throw BadConfig("bad score parameter value in " + spec);
      }
    }
    return params;
  };
  if (spec.rfind("normal:", 0) == 0) {
    auto params = parse_params(spec.substr(7));
    if (!params.count("alpha")) throw BadConfig("normal score needs alpha=<value>");
    return winsorized_normal(params["alpha"]);
  }
  if (spec.rfind("genf:", 0) == 0) {
    auto params = parse_params(spec.substr(5));
    if (!params.count("m1") || !params.count("m2"))
      throw BadConfig("genf score needs m1=<value>,m2=<value>");
    return generalized_f(params["m1"], params["m2"]);
  }
  throw BadConfig("unknown score spec '" + spec + "'");
}

}  // namespace raft
