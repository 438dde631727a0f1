#ifndef RAFT_ERRORS_HPP_
#define RAFT_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace raft {

// All library errors derive from Error and carry a stable machine-readable
// code (used verbatim in the CLI's error JSON).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct InvalidSample : Error {
  InvalidSample(const std::string& code, const std::string& msg) : Error(code, msg) {}
};

struct NonFinite : Error {
  explicit NonFinite(const std::string& msg) : Error("non_finite", msg) {}
};

struct DegenerateSample : Error {
  explicit DegenerateSample(const std::string& msg) : Error("degenerate_sample", msg) {}
};

struct BadShape : Error {
  explicit BadShape(const std::string& msg) : Error("bad_shape", msg) {}
};

struct BadAlpha : Error {
  explicit BadAlpha(const std::string& msg) : Error("bad_alpha", msg) {}
};

struct BadConfig : Error {
  explicit BadConfig(const std::string& msg) : Error("bad_config", msg) {}
};

struct SingularSigma : Error {
  explicit SingularSigma(const std::string& msg) : Error("singular_sigma", msg) {}
};

struct SingularXi : Error {
  SingularXi(const std::string& msg, double r_squared)
      : Error("singular_xi", msg), r_squared(r_squared) {}
  double r_squared;
};

struct SingularOmega : Error {
  explicit SingularOmega(const std::string& msg) : Error("singular_omega", msg) {}
};

// Raised by omega_huang when the offset equations for some coordinate admit
// neither a positive- nor a negative-side crossing.
struct NoSolutionEitherSide : Error {
  NoSolutionEitherSide(int coordinate, const std::string& msg)
      : Error("no_solution_either_side", msg), coordinate(coordinate) {}
  int coordinate;
};

struct InputError : Error {
  InputError(const std::string& code, const std::string& msg) : Error(code, msg) {}
};

}  // namespace raft

#endif  // RAFT_ERRORS_HPP_
