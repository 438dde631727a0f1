#ifndef RAFT_CENSORED_SAMPLE_HPP_
#define RAFT_CENSORED_SAMPLE_HPP_

#include <Eigen/Core>
#include <string>
#include <vector>

namespace raft {

// Right-censored regression data on the log-time scale.
//
// y[i]     log of the observed time min(T*, C*)
// delta[i] 1 if a failure was observed, 0 if censored
// x        n x p covariate matrix
//
// Construction validates: equal lengths, n >= 2, p >= 1, finite entries,
// delta in {0,1}, and no all-constant covariate column (such a column makes
// the centered estimating function identically zero in that coordinate).
class CensoredSample {
 public:
  CensoredSample(Eigen::VectorXd y, std::vector<int> delta, Eigen::MatrixXd x);

  int n() const { return static_cast<int>(y_.size()); }
  int p() const { return static_cast<int>(x_.cols()); }
  const Eigen::VectorXd& y() const { return y_; }
  const std::vector<int>& delta() const { return delta_; }
  const Eigen::MatrixXd& x() const { return x_; }
  Eigen::VectorXd covariate_means() const { return x_.colwise().mean(); }

 private:
  Eigen::VectorXd y_;
  std::vector<int> delta_;
  Eigen::MatrixXd x_;
};

// Residuals e_i = y_i - x_i' beta at a fixed beta, together with the sort
// permutation and the modified failure indicators: every observation whose
// residual ties the sample maximum is treated as a failure, which is what
// makes the estimated residual distribution proper.
struct ResidualView {
  Eigen::VectorXd beta;
  Eigen::VectorXd e;
  std::vector<int> order;      // stable ascending sort of e, ties contiguous
  std::vector<int> delta_mod;  // last-observation rule applied
};

// Throws NonFinite if any residual overflows. Tie detection at the maximum
// uses exact floating-point equality: residuals are evaluated in one fixed
// pass, so equal inputs produce bitwise-equal residuals.
ResidualView residuals(const CensoredSample& sample, const Eigen::VectorXd& beta);

// CSV ingestion. Header row must be `time,status,x1,...,xp`; times must be
// strictly positive (the log is taken at load) and status must be 0 or 1.
// Throws InputError with codes: bad_header, bad_row, nonpositive_time,
// bad_status, non_finite, constant_covariate, too_few_rows.
CensoredSample load_csv(const std::string& path);
CensoredSample parse_csv(std::istream& in);

}  // namespace raft

#endif  // RAFT_CENSORED_SAMPLE_HPP_
