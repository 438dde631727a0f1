#include "raft/censored_sample.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <sstream>

#include "raft/errors.hpp"

namespace raft {

CensoredSample::CensoredSample(Eigen::VectorXd y, std::vector<int> delta,
                               Eigen::MatrixXd x)
    : y_(std::move(y)), delta_(std::move(delta)), x_(std::move(x)) {
  const auto n = y_.size();
  if (n < 2) throw InvalidSample("too_few_rows", "need at least 2 observations");
  if (static_cast<Eigen::Index>(delta_.size()) != n || x_.rows() != n)
    throw InvalidSample("length_mismatch", "y, delta and x row counts differ");
  if (x_.cols() < 1) throw InvalidSample("no_covariates", "p must be >= 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!std::isfinite(y_[i]))
      throw InvalidSample("non_finite", "y[" + std::to_string(i) + "] is not finite");
    if (delta_[static_cast<std::size_t>(i)] != 0 && delta_[static_cast<std::size_t>(i)] != 1)
      throw InvalidSample("bad_status", "delta[" + std::to_string(i) + "] not in {0,1}");
  }
  for (Eigen::Index j = 0; j < x_.cols(); ++j) {
    double lo = x_(0, j), hi = x_(0, j);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!std::isfinite(x_(i, j)))
        throw InvalidSample("non_finite", "x(" + std::to_string(i) + "," +
                                              std::to_string(j) + ") is not finite");
      lo = std::min(lo, x_(i, j));
      hi = std::max(hi, x_(i, j));
    }
    if (lo == hi)
      throw InvalidSample("constant_covariate",
                          "covariate column " + std::to_string(j + 1) + " is constant");
  }
}

ResidualView residuals(const CensoredSample& sample, const Eigen::VectorXd& beta) {
  if (beta.size() != sample.p())
    throw BadConfig("beta has length " + std::to_string(beta.size()) +
                    ", expected " + std::to_string(sample.p()));
  for (Eigen::Index k = 0; k < beta.size(); ++k)
    if (!std::isfinite(beta[k])) throw NonFinite("beta is not finite");

  const int n = sample.n();
  ResidualView view;
  view.beta = beta;
  view.e.resize(n);
  for (int i = 0; i < n; ++i) {
    view.e[i] = sample.y()[i] - sample.x().row(i).dot(beta);
    if (!std::isfinite(view.e[i]))
      throw NonFinite("residual " + std::to_string(i) + " overflowed");
  }

  view.order.resize(n);
  std::iota(view.order.begin(), view.order.end(), 0);
  std::stable_sort(view.order.begin(), view.order.end(),
                   [&](int a, int b) { return view.e[a] < view.e[b]; });

  const double e_max = view.e[view.order.back()];
  view.delta_mod.resize(n);
  for (int i = 0; i < n; ++i)
    view.delta_mod[i] = (view.e[i] == e_max) ? 1 : sample.delta()[i];
  return view;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    // trim surrounding whitespace
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace

CensoredSample parse_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("bad_header", "empty input");
  auto header = split_csv_line(line);
  if (header.size() < 3 || header[0] != "time" || header[1] != "status")
    throw InputError("bad_header", "expected header time,status,x1,...,xp");
  for (std::size_t j = 2; j < header.size(); ++j) {
    if (header[j] != "x" + std::to_string(j - 1))
      throw InputError("bad_header", "expected covariate column x" +
                                         std::to_string(j - 1) + ", got " + header[j]);
  }
  const std::size_t p = header.size() - 2;

  std::vector<double> times;
  std::vector<int> delta;
  std::vector<double> xflat;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw InputError("bad_row", "row " + std::to_string(row) + " has " +
                                      std::to_string(fields.size()) + " fields, expected " +
                                      std::to_string(header.size()));
    double t;
    try {
      std::size_t pos = 0;
      t = std::stod(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw InputError("bad_row", "row " + std::to_string(row) + ": bad time value");
    }
    if (!(t > 0.0) || !std::isfinite(t))
      throw InputError("nonpositive_time",
                       "row " + std::to_string(row) + ": time must be > 0");
    if (fields[1] != "0" && fields[1] != "1")
      throw InputError("bad_status",
                       "row " + std::to_string(row) + ": status must be 0 or 1");
    times.push_back(std::log(t));
    delta.push_back(fields[1] == "1" ? 1 : 0);
    for (std::size_t j = 0; j < p; ++j) {
      double v;
      try {
        std::size_t pos = 0;
        v = std::stod(fields[2 + j], &pos);
        if (pos != fields[2 + j].size()) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw InputError("bad_row", "row " + std::to_string(row) + ": bad covariate value");
      }
      if (!std::isfinite(v))
        throw InputError("non_finite", "row " + std::to_string(row) + ": covariate not finite");
      xflat.push_back(v);
    }
  }
  const std::size_t n = times.size();
  if (n < 2) throw InputError("too_few_rows", "need at least 2 data rows");

  Eigen::VectorXd y(n);
  Eigen::MatrixXd x(n, p);
  for (std::size_t i = 0; i < n; ++i) {
    y[static_cast<Eigen::Index>(i)] = times[i];
    for (std::size_t j = 0; j < p; ++j)
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xflat[i * p + j];
  }
  try {
    return CensoredSample(std::move(y), std::move(delta), std::move(x));
  } catch (const InvalidSample& err) {
    throw InputError(err.code(), err.what());
  }
}

CensoredSample load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("no_such_file", "cannot open " + path);
  return parse_csv(in);
}

}  // namespace raft
