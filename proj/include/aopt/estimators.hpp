#pragma once

#include <cmath>
#include <cstdint>

#include "aopt/oracle.hpp"

namespace aopt {

/// Accuracy constants of the Taylor-like conditions plus the failure
/// probability used when sizing sample averages.
struct AccuracySpec {
  double kappa_f = 1.0;
  double kappa_g = 1.0;
  double kappa_H = 1.0;
  enum class Order { first, second };
  Order order = Order::first;
  double delta = 0.1;  // in (0, 1/2)

  void validate() const {
    if (kappa_f < 0.0 || kappa_g < 0.0 || kappa_H < 0.0)
      throw config_error("AccuracySpec: kappas must be >= 0");
    if (!(delta > 0.0 && delta < 0.5))
      throw config_error("AccuracySpec: delta must be in (0, 1/2)");
  }
};

struct VarianceEstimate {
  double V_f = 0.0;          // variance of a batch-1 f estimate
  double V_g = 0.0;          // E||g_1 - grad f||^2 at batch 1
  std::size_t pilot = 0;     // draws used (0 => exact, not estimated)
  bool exact = false;
};

/// Chebyshev sample size: with n >= V / (delta kappa^2 Delta^2) a sample
/// average violates |err| <= kappa Delta with probability at most delta.
inline std::size_t chebyshev_sample_size(double V, double kappa, double Delta, double delta) {
  if (V < 0.0) throw config_error("chebyshev_sample_size: V must be >= 0");
  if (kappa <= 0.0 || Delta <= 0.0)
    throw config_error("chebyshev_sample_size: kappa and Delta must be positive");
  if (!(delta > 0.0 && delta < 1.0))
    throw config_error("chebyshev_sample_size: delta must be in (0,1)");
  if (V == 0.0) return 1;
  const double n = V / (delta * kappa * kappa * Delta * Delta);
  if (n >= 9e18) return std::size_t(9000000000000000000ULL);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(n)));
}

/// Pilot estimate of the batch-1 variances: unbiased sample variance of
/// f draws and of gradient draws (measured in norm around their mean).
inline VarianceEstimate estimate_variance(StochasticOracle& o, const Vector& x,
                                          std::size_t pilot) {
  if (pilot < 2) throw config_error("estimate_variance: pilot must be >= 2");
  std::vector<double> fs(pilot);
  std::vector<Vector> gs(pilot);
  double fbar = 0.0;
  Vector gbar = Vector::Zero(o.dim());
  for (std::size_t i = 0; i < pilot; ++i) {
    const Estimate e = o.full_estimate(x, 1);
    fs[i] = e.f;
    gs[i] = e.g;
    fbar += e.f;
    gbar += e.g;
  }
  fbar /= static_cast<double>(pilot);
  gbar /= static_cast<double>(pilot);
  VarianceEstimate v;
  for (std::size_t i = 0; i < pilot; ++i) {
    v.V_f += (fs[i] - fbar) * (fs[i] - fbar);
    v.V_g += (gs[i] - gbar).squaredNorm();
  }
  v.V_f /= static_cast<double>(pilot - 1);
  v.V_g /= static_cast<double>(pilot - 1);
  v.pilot = pilot;
  return v;
}

inline VarianceEstimate exact_variance(const StochasticOracle& o) {
  VarianceEstimate v;
  v.V_f = o.value_variance();
  v.V_g = o.gradient_variance();
  v.exact = true;
  return v;
}

/// Taylor-like accuracy test against exact reference values (test-oracle
/// use on instrumented problems). First order: |ft - f| <= kf D^2,
/// ||g - grad|| <= kg D, ||Ht - hess|| <= kH; second order multiplies
/// each right-hand side by another power of D.
inline bool taylor_accuracy_holds(double f_est, const Vector& g_est, const Matrix* H_est,
                                  double f_true, const Vector& g_true, const Matrix* H_true,
                                  double Delta, const AccuracySpec& spec) {
  spec.validate();
  if (Delta <= 0.0) throw config_error("taylor_accuracy_holds: Delta must be positive");
  const bool second = spec.order == AccuracySpec::Order::second;
  const double bf = spec.kappa_f * (second ? Delta * Delta * Delta : Delta * Delta);
  const double bg = spec.kappa_g * (second ? Delta * Delta : Delta);
  const double bH = spec.kappa_H * (second ? Delta : 1.0);
  if (std::abs(f_est - f_true) > bf) return false;
  if ((g_est - g_true).norm() > bg) return false;
  if (H_est != nullptr && H_true != nullptr && sym_norm(*H_est - *H_true) > bH) return false;
  return true;
}

/// Gradient norm condition ||g - grad f|| <= theta ||grad f|| (requires
/// the exact gradient, so it is a test oracle, not an online check).
inline bool gradient_norm_condition_holds(const Vector& g, const Vector& grad_true,
                                          double theta) {
  if (!(theta >= 0.0 && theta < 1.0))
    throw config_error("gradient_norm_condition: theta must be in [0,1)");
  return (g - grad_true).norm() <= theta * grad_true.norm();
}

struct AdaptiveGradient {
  Vector g;
  std::size_t batch = 0;        // final batch size backing g
  std::size_t drawn = 0;        // total fresh samples consumed by the loop
  bool near_stationary = false; // cap hit with the requirement still growing
};

/// Guess-and-double sampling for the stochastic gradient norm condition:
/// grow the batch until n >= chebyshev_sample_size(V_g, kappa_g,
/// alpha ||g_n||, delta) holds for the estimate's own norm. The sample
/// set is extended, not redrawn, so the returned batch size equals the
/// draws behind the returned estimate.
inline AdaptiveGradient adaptive_gradient_sample(StochasticOracle& o, const Vector& x,
                                                 double alpha, const AccuracySpec& spec,
                                                 const VarianceEstimate& V, std::size_t n0 = 4,
                                                 std::size_t cap = (std::size_t{1} << 16)) {
  spec.validate();
  if (alpha <= 0.0) throw config_error("adaptive_gradient_sample: alpha must be positive");
  if (n0 < 1 || cap < n0) throw config_error("adaptive_gradient_sample: bad n0/cap");

  AdaptiveGradient out;
  auto acc = o.start_gradient(x);
  o.extend_gradient(acc, n0);
  out.drawn = n0;
  while (true) {
    out.g = acc.mean();
    out.batch = acc.n;
    const double gnorm = out.g.norm();
    if (gnorm > 0.0) {
      const std::size_t need =
          chebyshev_sample_size(V.V_g, spec.kappa_g, alpha * gnorm, spec.delta);
      if (acc.n >= need) return out;
    }
    if (acc.n >= cap) {
      out.near_stationary = true;
      return out;
    }
    const std::size_t n_more = std::min(acc.n, cap - acc.n);
    o.extend_gradient(acc, n_more);
    out.drawn += n_more;
  }
}

struct FunctionPair {
  double f0 = 0.0;
  double fs = 0.0;
  std::size_t batch = 0;  // common batch size behind both estimates
  std::size_t drawn = 0;  // fresh samples consumed
};

/// Objective estimates at x and xs with a common batch sized from the
/// known Delta^4 arm of the variance bound: n >= V_f / (kappa_f Delta^4),
/// so E|ft - f|^2 <= kappa_f Delta^4. The pair shares one index draw on
/// mini-batch oracles; a flag requests independent draws for ablation.
inline FunctionPair function_pair_estimates(StochasticOracle& o, const Vector& x,
                                            const Vector& xs, double Delta,
                                            const AccuracySpec& spec, const VarianceEstimate& V,
                                            bool shared_batch = true,
                                            std::size_t cap = std::size_t{1} << 62) {
  spec.validate();
  if (Delta <= 0.0) throw config_error("function_pair_estimates: Delta must be positive");
  if (spec.kappa_f <= 0.0) throw config_error("function_pair_estimates: kappa_f must be positive");

  const double d4 = Delta * Delta * Delta * Delta;
  double need = V.V_f / (spec.kappa_f * d4);
  std::size_t n = 1;
  if (need > 1.0) {
    if (need >= static_cast<double>(cap)) {
      n = cap;
    } else {
      n = static_cast<std::size_t>(std::ceil(need));
    }
  }
  FunctionPair out;
  auto [f0, fs] = o.value_pair_estimate(x, xs, n, shared_batch);
  out.f0 = f0;
  out.fs = fs;
  out.batch = n;
  out.drawn = o.pair_draw_cost(n, shared_batch);
  return out;
}

}  // namespace aopt
