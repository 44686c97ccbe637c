#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace aopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Construction-time validation failures of a problem definition.
struct invalid_problem : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Inconsistent or out-of-range algorithm configuration.
struct config_error : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Malformed external input (IDX, CSV, JSON config).
struct format_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown inside a solver.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

inline void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw invalid_problem(std::string(what) + ": non-finite entries");
}

/// Spectral norm of a symmetric matrix (dense eigensolve; desk scale).
inline double sym_norm(const Matrix& H) {
  if (H.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("symmetric eigensolve failed");
  const auto& ev = es.eigenvalues();
  return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
}

inline double min_eigenvalue(const Matrix& H) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw numerical_error("symmetric eigensolve failed");
  return es.eigenvalues()(0);
}

}  // namespace aopt
