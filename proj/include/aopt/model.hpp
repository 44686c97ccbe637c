#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "aopt/common.hpp"

namespace aopt {

/// Local model m(x_k + s) = f0 + g's + 1/2 s'Hs + sigma ||s||^3 around a
/// center. H may be empty (treated as zero); sigma = 1/(3 alpha) for the
/// cubic regularized model and 0 otherwise.
struct LocalModel {
  Vector center;
  double f0 = 0.0;
  Vector g;
  Matrix H;            // empty => zero curvature
  double sigma = 0.0;

  bool has_curvature() const { return H.size() > 0; }

  double value_at_step(const Vector& s) const {
    double v = f0 + g.dot(s);
    if (has_curvature()) v += 0.5 * s.dot(H * s);
    if (sigma != 0.0) v += sigma * std::pow(s.norm(), 3);
    return v;
  }

  Vector gradient_at_step(const Vector& s) const {
    Vector gm = g;
    if (has_curvature()) gm += H * s;
    if (sigma != 0.0) gm += 3.0 * sigma * s.norm() * s;
    return gm;
  }
};

struct TrialStep {
  Vector s;
  double mred = 0.0;   // m(x_k) - m(x_k + s), >= 0
  double snorm = 0.0;
};

/// Symmetric positive definite scaling with declared eigenvalue bounds.
struct Preconditioner {
  Matrix M;
  double kappa1 = 1.0;  // lower eigenvalue bound, > 0
  double kappa2 = 1.0;  // upper eigenvalue bound

  static Preconditioner identity(int n) {
    return Preconditioner{Matrix::Identity(n, n), 1.0, 1.0};
  }
};

/// 1/2 ||g|| min{alpha, ||g||/betaH}: the model decrease guaranteed by
/// the best step along -g inside radius alpha when betaH bounds ||H||.
inline double cauchy_decrease_bound(double gnorm, double betaH, double alpha) {
  if (gnorm < 0.0 || betaH <= 0.0 || alpha <= 0.0)
    throw config_error("cauchy_decrease_bound: need gnorm >= 0, betaH > 0, alpha > 0");
  return 0.5 * gnorm * std::min(alpha, gnorm / betaH);
}

inline double model_reduction(const LocalModel& m, const Vector& s) {
  if (s.size() != m.g.size()) throw config_error("model_reduction: dimension mismatch");
  return m.f0 - m.value_at_step(s);
}

/// Approximate minimizer of a quadratic model (sigma must be 0) in the
/// ball ||s|| <= radius: Steihaug truncated CG with an explicit
/// Cauchy-point fallback. Guarantees ||s|| <= radius and at least the
/// Cauchy decrease; interior solutions are Newton-exact for PD models.
inline TrialStep tr_solve(const LocalModel& m, double radius) {
  if (radius <= 0.0) throw config_error("tr_solve: radius must be positive");
  if (m.sigma != 0.0) throw config_error("tr_solve: model has a cubic term");
  const Eigen::Index n = m.g.size();
  if (!m.g.allFinite()) throw numerical_error("tr_solve: non-finite gradient");

  TrialStep out;
  out.s = Vector::Zero(n);
  const double gnorm = m.g.norm();
  if (gnorm == 0.0) return out;  // stationary center: caller's responsibility

  auto apply_H = [&](const Vector& v) -> Vector {
    return m.has_curvature() ? Vector(m.H * v) : Vector(Vector::Zero(n));
  };

  // step to the boundary from s along d (positive root of ||s+t d|| = radius)
  auto boundary_t = [&](const Vector& s, const Vector& d) {
    const double dd = d.squaredNorm();
    const double sd = s.dot(d);
    const double ss = s.squaredNorm();
    const double disc = std::max(0.0, sd * sd + dd * (radius * radius - ss));
    return (-sd + std::sqrt(disc)) / dd;
  };

  Vector s = Vector::Zero(n);
  Vector r = -m.g;            // residual of H s = -g
  Vector d = r;
  double rr = r.squaredNorm();
  const double tol2 = rr * 1e-28;

  for (Eigen::Index it = 0; it < 2 * n + 2; ++it) {
    const Vector Hd = apply_H(d);
    const double dHd = d.dot(Hd);
    if (dHd <= 0.0) {
      s += boundary_t(s, d) * d;
      break;
    }
    const double t = rr / dHd;
    if ((s + t * d).norm() >= radius) {
      s += boundary_t(s, d) * d;
      break;
    }
    s += t * d;
    r -= t * Hd;
    const double rr_new = r.squaredNorm();
    if (rr_new <= tol2) break;
    d = r + (rr_new / rr) * d;
    rr = rr_new;
  }

  // explicit Cauchy point, kept as a fallback if CG ever does worse
  Vector sc;
  {
    const Vector Hg = apply_H(m.g);
    const double gHg = m.g.dot(Hg);
    double t = radius / gnorm;
    if (gHg > 0.0) t = std::min(t, gnorm * gnorm / gHg);
    sc = -t * m.g;
  }

  const double red_cg = model_reduction(m, s);
  const double red_cauchy = model_reduction(m, sc);
  if (red_cauchy > red_cg) s = sc;

  out.s = s;
  out.snorm = s.norm();
  out.mred = std::max(0.0, model_reduction(m, s));
  return out;
}

/// Preconditioned steepest-descent direction d = -M g with the descent
/// bound g'd <= -kappa1 ||g||^2 and norm cap ||d|| <= beta ||g||.
inline Vector ls_direction(const LocalModel& m, const Preconditioner& M, double beta) {
  if (beta < M.kappa2)
    throw config_error("ls_direction: beta below kappa2 would truncate the direction");
  return -(M.M * m.g);
}

namespace detail {

// sign normalization so eigenvector-based tie-breaking is deterministic
inline void normalize_sign(Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) {
      if (v(i) < 0.0) v = -v;
      return;
    }
  }
}

inline bool lex_greater(const Vector& a, const Vector& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a(i) != b(i)) return a(i) > b(i);
  }
  return false;
}

}  // namespace detail

/// Global minimizer of the cubic regularized model (sigma > 0, H
/// required) via dense eigendecomposition and a 1-D secular root find in
/// lambda = 3 sigma ||s||. Handles the hard case; symmetric minimizer
/// ties break to the lexicographically larger step. Dimension capped at
/// 500 by design.
inline TrialStep cubic_solve(const LocalModel& m, double alpha) {
  if (alpha <= 0.0) throw config_error("cubic_solve: alpha must be positive");
  if (m.sigma <= 0.0) throw config_error("cubic_solve: model has no cubic term");
  if (!m.has_curvature()) throw config_error("cubic_solve: model has no curvature");
  const Eigen::Index n = m.g.size();
  if (n > 500) throw config_error("cubic_solve: dimension exceeds the dense-solver cap of 500");

  Eigen::SelfAdjointEigenSolver<Matrix> es(m.H);
  if (es.info() != Eigen::Success)
    throw numerical_error("cubic_solve: eigendecomposition failed");
  const Vector lam = es.eigenvalues();
  Matrix Q = es.eigenvectors();
  for (Eigen::Index j = 0; j < n; ++j) {
    Vector col = Q.col(j);
    detail::normalize_sign(col);
    Q.col(j) = col;
  }
  const Vector gh = Q.transpose() * m.g;

  const double c = 3.0 * m.sigma;  // lambda(t) = c * t with t = ||s||
  const double lam_min = lam(0);
  const double lam0 = std::max(0.0, -lam_min);

  // psi(L) = || (Lam + L I)^{-1} gh ||, strictly decreasing on (lam0, inf)
  auto psi = [&](double L) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double den = lam(j) + L;
      const double r = gh(j) / den;
      acc += r * r;
    }
    return std::sqrt(acc);
  };

  auto finish = [&](const Vector& s) {
    TrialStep out;
    out.s = s;
    out.snorm = s.norm();
    out.mred = std::max(0.0, model_reduction(m, s));
    return out;
  };

  const double gnorm = m.g.norm();
  if (gnorm == 0.0 && lam_min >= 0.0) return finish(Vector::Zero(n));

  // interior/boundary regular case: psi(L) = L / c has a root above lam0
  // whenever psi(lam0^+) > lam0 / c
  const double edge = 1e-12 * std::max(1.0, std::abs(lam_min));
  bool regular;
  if (lam0 == 0.0) {
    regular = gnorm > 0.0;  // PSD curvature: root exists for any g != 0
  } else {
    bool blowup = false;    // g has weight on the minimal eigenspace
    double trunc2 = 0.0;    // psi(lam0)^2 over the nonsingular part
    for (Eigen::Index j = 0; j < n; ++j) {
      if (lam(j) + lam0 <= edge) {
        if (gh(j) != 0.0) blowup = true;
      } else {
        const double r = gh(j) / (lam(j) + lam0);
        trunc2 += r * r;
      }
    }
    regular = blowup || std::sqrt(trunc2) > lam0 / c;
  }

  if (regular) {
    double lo = lam0;
    double hi = std::max(lam0 * 2.0 + 1.0, lam0 + c * gnorm + 1.0);
    while (psi(hi) > hi / c) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mid == lo || mid == hi) break;
      if (psi(mid) > mid / c)
        lo = mid;
      else
        hi = mid;
    }
    const double L = 0.5 * (lo + hi);
    Vector sh(n);
    for (Eigen::Index j = 0; j < n; ++j) sh(j) = -gh(j) / (lam(j) + L);
    return finish(Vector(Q * sh));
  }

  // hard case: lambda = -lam_min, pad with a minimal-eigenspace component
  const double L = lam0;
  const double target = L / c;  // required ||s||
  Vector sh = Vector::Zero(n);
  double fixed2 = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    if (lam(j) + L > edge) {
      sh(j) = -gh(j) / (lam(j) + L);
      fixed2 += sh(j) * sh(j);
    }
  }
  const double w = std::sqrt(std::max(0.0, target * target - fixed2));
  Vector base = Q * sh;
  Vector vmin = Q.col(0);
  Vector cand1 = base + w * vmin;
  Vector cand2 = base - w * vmin;
  return finish(detail::lex_greater(cand1, cand2) ? cand1 : cand2);
}

}  // namespace aopt
