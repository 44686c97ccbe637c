#pragma once

#include <functional>
#include <optional>
#include <utility>

#include "aopt/common.hpp"

namespace aopt {

enum class Convexity { nonconvex, convex, strongly_convex };

/// A smooth objective with exact evaluators and optional metadata
/// (gradient Lipschitz constant, lower bound, convexity class).
/// Instances are immutable after construction and safe to evaluate
/// concurrently.
struct DeterministicProblem {
  int dim = 0;
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<Matrix(const Vector&)> hessian;  // empty if unavailable

  std::optional<double> lipschitz_grad;       // L with ||grad f(x)-grad f(y)|| <= L||x-y||
  std::optional<double> f_lower;              // f_* <= inf f
  Convexity convexity = Convexity::nonconvex;
  std::optional<double> strong_modulus;       // mu with hess >= mu I (when strongly convex)

  bool has_hessian() const { return static_cast<bool>(hessian); }

  double f(const Vector& x) const { return value(x); }
  Vector grad(const Vector& x) const { return gradient(x); }
  Matrix hess(const Vector& x) const {
    if (!hessian) throw config_error("problem provides no Hessian evaluator");
    return hessian(x);
  }
};

/// f(x) = 1/2 sum_i diag_i (x_i - shift_i)^2. Strongly convex with
/// modulus min(diag); L = max(diag); f_* = 0 at x = shift.
inline DeterministicProblem quadratic_problem(const Vector& diag, const Vector& shift) {
  if (diag.size() != shift.size() || diag.size() < 1)
    throw invalid_problem("quadratic_problem: dimension mismatch or empty");
  if ((diag.array() <= 0.0).any())
    throw invalid_problem("quadratic_problem: non-positive diagonal entry");
  require_finite(diag, "diag");
  require_finite(shift, "shift");

  DeterministicProblem p;
  p.dim = static_cast<int>(diag.size());
  p.value = [diag, shift](const Vector& x) {
    return 0.5 * (diag.array() * (x - shift).array().square()).sum();
  };
  p.gradient = [diag, shift](const Vector& x) -> Vector {
    return diag.array() * (x - shift).array();
  };
  p.hessian = [diag](const Vector&) -> Matrix { return diag.asDiagonal(); };
  p.lipschitz_grad = diag.maxCoeff();
  p.f_lower = 0.0;
  p.convexity = Convexity::strongly_convex;
  p.strong_modulus = diag.minCoeff();
  return p;
}

/// Chained Rosenbrock, f(1,...,1) = 0. Standard nonconvex benchmark.
inline DeterministicProblem rosenbrock_problem(int n) {
  if (n < 2) throw invalid_problem("rosenbrock_problem: n must be >= 2");

  DeterministicProblem p;
  p.dim = n;
  p.value = [n](const Vector& x) {
    double f = 0.0;
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      const double b = 1.0 - x(i);
      f += 100.0 * a * a + b * b;
    }
    return f;
  };
  p.gradient = [n](const Vector& x) -> Vector {
    Vector g = Vector::Zero(n);
    for (int i = 0; i + 1 < n; ++i) {
      const double a = x(i + 1) - x(i) * x(i);
      g(i) += -400.0 * a * x(i) - 2.0 * (1.0 - x(i));
      g(i + 1) += 200.0 * a;
    }
    return g;
  };
  p.hessian = [n](const Vector& x) -> Matrix {
    Matrix H = Matrix::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) {
      H(i, i) += 1200.0 * x(i) * x(i) - 400.0 * x(i + 1) + 2.0;
      H(i, i + 1) += -400.0 * x(i);
      H(i + 1, i) += -400.0 * x(i);
      H(i + 1, i + 1) += 200.0;
    }
    return H;
  };
  p.f_lower = 0.0;
  p.convexity = Convexity::nonconvex;
  return p;
}

/// Max over coordinates of the central-difference error, relative to
/// max(1, ||grad||_inf) so the check stays meaningful near stationary
/// points.
inline double fd_gradient_check(const DeterministicProblem& p, const Vector& x, double h) {
  if (h <= 0.0) throw config_error("fd_gradient_check: h must be positive");
  const Vector g = p.grad(x);
  const double scale = std::max(1.0, g.lpNorm<Eigen::Infinity>());
  double worst = 0.0;
  Vector e = x;
  for (int i = 0; i < p.dim; ++i) {
    const double xi = x(i);
    e(i) = xi + h;
    const double fp = p.f(e);
    e(i) = xi - h;
    const double fm = p.f(e);
    e(i) = xi;
    const double fd = (fp - fm) / (2.0 * h);
    worst = std::max(worst, std::abs(fd - g(i)) / scale);
  }
  return worst;
}

/// Default step from the design rule h = 1e-5 * max(1, ||x||_inf).
inline double fd_gradient_check(const DeterministicProblem& p, const Vector& x) {
  return fd_gradient_check(p, x, 1e-5 * std::max(1.0, x.lpNorm<Eigen::Infinity>()));
}

/// Radius of the level set {f <= f0} for a strongly convex problem:
/// ||x - x_*|| <= sqrt(2 (f0 - f_*) / mu).
inline double level_set_diameter(const DeterministicProblem& p, double f0) {
  if (!p.strong_modulus || !p.f_lower)
    throw config_error("level_set_diameter: needs strong convexity modulus and f_*");
  return std::sqrt(2.0 * (f0 - *p.f_lower) / *p.strong_modulus);
}

}  // namespace aopt
