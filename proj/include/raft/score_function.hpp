#ifndef RAFT_SCORE_FUNCTION_HPP_
#define RAFT_SCORE_FUNCTION_HPP_

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace raft {

enum class ScoreKind { Wilcoxon, ShiftedLogrank, WinsorizedNormal, GeneralizedF, Custom };

enum class TruncationMode { Normal, Extreme };

// A score function a: [0,1] -> R together with its antiderivative A.
// A is normalized so that A(0) = 0; every consumer uses only differences of
// A, so the constant is contract-free.
//
// chord(u1, u2) = (A(u2) - A(u1)) / (u2 - u1), with chord(u, u) = a(u).
// This is the quantity every jump of a step CDF feeds through; kinds with an
// algebraically simplified chord (Wilcoxon: the midpoint) override it, which
// avoids the cancellation a literal A-difference suffers across small jumps.
class ScoreFunction {
 public:
  class Impl;

  double a(double u) const;
  double A(double u) const;
  double chord(double u1, double u2) const;
  double a_min() const;
  double a_max() const;
  ScoreKind kind() const;
  // CLI-facing spec string, e.g. "wilcoxon", "genf:m1=1,m2=10".
  std::string spec() const;

  static ScoreFunction wilcoxon();
  // a(u) = -1 - log(1 - (n/(n+1)) u); the bounded logrank score at sample
  // size n.
  static ScoreFunction shifted_logrank(int n);
  // Normal scores Winsorized at the alpha and 1-alpha quantiles, 0 < alpha <= 1/2.
  static ScoreFunction winsorized_normal(double alpha);
  // Bounded scores from the log-F(2 m1, 2 m2) family; -m1 <= a(u) <= m2.
  static ScoreFunction generalized_f(double m1, double m2);
  // Pointwise re-mapping of the argument that keeps an unbounded base score
  // away from the endpoints: u -> (n u + 0.5)/(n + 1) (Normal mode) or
  // u -> n u/(n + 1) (Extreme mode).
  static ScoreFunction truncated(ScoreFunction base, int n, TruncationMode mode);
  // User-supplied score; if A is omitted it is computed by cached adaptive
  // quadrature of a (tolerance 1e-12).
  static ScoreFunction custom(std::string name, std::function<double(double)> a,
                              std::optional<std::function<double(double)>> A = std::nullopt,
                              double a_min = 0.0, double a_max = 0.0);

  // Parses a CLI spec: wilcoxon | logrank | normal:alpha=<a> | genf:m1=<v>,m2=<v>.
  // `logrank` needs the sample size n.
  static ScoreFunction parse(const std::string& spec, int n);

  explicit ScoreFunction(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}
  const Impl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const Impl> impl_;
};

}  // namespace raft

#endif  // RAFT_SCORE_FUNCTION_HPP_
