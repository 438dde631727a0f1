#ifndef RAFT_SPECIAL_FUNCTIONS_HPP_
#define RAFT_SPECIAL_FUNCTIONS_HPP_

#include <boost/math/special_functions/erf.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>

namespace raft::special {

inline constexpr double kSqrt2 = 1.4142135623730950488016887;
inline constexpr double kInvSqrt2Pi = 0.3989422804014326779399461;

inline double normal_quantile(double u) {
  return -kSqrt2 * boost::math::erfc_inv(2.0 * u);
}

inline double normal_cdf(double z) {
  return 0.5 * std::erfc(-z / kSqrt2);
}

inline double normal_pdf(double z) { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

inline double chi_squared_upper_tail(double x, int df) {
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace raft::special

#endif  // RAFT_SPECIAL_FUNCTIONS_HPP_
