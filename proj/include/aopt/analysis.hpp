#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "aopt/stoch_methods.hpp"
#include "aopt/trace.hpp"

namespace aopt {

enum class PhiKind {
  tr_first,            // nu (f - f*) + (1-nu) alpha^2
  ls_first,            // nu (f - f*) + (1-nu) alpha ||grad f||^2
  cubic,               // nu (f - f*) + (1-nu) alpha ||grad f||^{3/2}
  tr_second,           // nu (f - f*) + (1-nu) alpha^3
  convex_ls,           // nu (1/eps - 1/(f - f*)) + (1-nu) alpha
  strongly_convex_ls,  // nu (log(1/eps) - log(1/(f - f*))) + (1-nu) log alpha
  stoch_ls,            // nu (f - f*) + (1-nu)(alpha/L^2 ||grad f||^2 + eta Delta^2)
};

inline const char* to_string(PhiKind k) {
  switch (k) {
    case PhiKind::tr_first: return "tr_first";
    case PhiKind::ls_first: return "ls_first";
    case PhiKind::cubic: return "cubic";
    case PhiKind::tr_second: return "tr_second";
    case PhiKind::convex_ls: return "convex_ls";
    case PhiKind::strongly_convex_ls: return "strongly_convex_ls";
    case PhiKind::stoch_ls: return "stoch_ls";
  }
  return "unknown";
}

struct PhiSnapshot {
  double f = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  std::optional<double> delta;
};

/// A progress measure: the Phi family member plus its parameters.
struct ProgressMeasure {
  PhiKind kind = PhiKind::tr_first;
  double nu = 0.5;      // in (0,1)
  double f_star = 0.0;
  double eps = 1e-3;    // used by the reciprocal/log kinds and h functions
  double L = 1.0;       // stoch_ls
  double eta = 0.1;     // stoch_ls
  double strong_c = 0.0;  // strongly convex constant, analysis side
  double D = 0.0;         // level-set diameter, analysis side

  void validate() const {
    if (!(nu > 0.0 && nu < 1.0)) throw config_error("ProgressMeasure: nu must be in (0,1)");
    if (!(eps > 0.0)) throw config_error("ProgressMeasure: eps must be > 0");
  }
};

inline double phi_value(const ProgressMeasure& m, const PhiSnapshot& s) {
  m.validate();
  const double gap = s.f - m.f_star;
  switch (m.kind) {
    case PhiKind::tr_first:
      return m.nu * gap + (1.0 - m.nu) * s.alpha * s.alpha;
    case PhiKind::ls_first:
      return m.nu * gap + (1.0 - m.nu) * s.alpha * s.grad_norm * s.grad_norm;
    case PhiKind::cubic:
      return m.nu * gap + (1.0 - m.nu) * s.alpha * std::pow(s.grad_norm, 1.5);
    case PhiKind::tr_second:
      return m.nu * gap + (1.0 - m.nu) * s.alpha * s.alpha * s.alpha;
    case PhiKind::convex_ls:
      if (gap <= 0.0) throw std::domain_error("phi_value: needs f > f_* for convex_ls");
      return m.nu * (1.0 / m.eps - 1.0 / gap) + (1.0 - m.nu) * s.alpha;
    case PhiKind::strongly_convex_ls:
      if (gap <= 0.0) throw std::domain_error("phi_value: needs f > f_* for strongly_convex_ls");
      return m.nu * (std::log(1.0 / m.eps) - std::log(1.0 / gap)) +
             (1.0 - m.nu) * std::log(s.alpha);
    case PhiKind::stoch_ls: {
      if (!s.delta) throw config_error("phi_value: stoch_ls needs the Delta control value");
      const double d = *s.delta;
      return m.nu * gap + (1.0 - m.nu) * (s.alpha / (m.L * m.L) * s.grad_norm * s.grad_norm +
                                          m.eta * d * d);
    }
  }
  throw config_error("phi_value: unknown kind");
}

/// The per-method h_eps functions of the framework.
enum class HKind { alpha_sq, alpha_eps_sq, alpha_eps_32, alpha_cubed };

inline double h_value(HKind h, double alpha, double eps) {
  switch (h) {
    case HKind::alpha_sq: return alpha * alpha;
    case HKind::alpha_eps_sq: return alpha * eps * eps;
    case HKind::alpha_eps_32: return alpha * std::pow(eps, 1.5);
    case HKind::alpha_cubed: return alpha * alpha * alpha;
  }
  throw config_error("h_value: unknown kind");
}

inline HKind h_for(PhiKind k) {
  switch (k) {
    case PhiKind::tr_first: return HKind::alpha_sq;
    case PhiKind::ls_first: return HKind::alpha_eps_sq;
    case PhiKind::stoch_ls: return HKind::alpha_eps_sq;
    case PhiKind::cubic: return HKind::alpha_eps_32;
    case PhiKind::tr_second: return HKind::alpha_cubed;
    default: throw config_error("h_for: no h function for this Phi kind");
  }
}

/// Parameters entering the nu-selection inequalities.
struct NuParams {
  double eta = 0.1;
  double gamma = 2.0;
  double c = 1.0;        // c2 (TR), c3 (LS) or c4 (cubic)
  double L = 1.0;        // LS only
  double alpha_bar = 1.0;  // LS only
  double beta = 1.0;       // LS only
};

enum class NuKind { tr_first, ls_first, cubic };

/// Smallest nu in (0,1) with nu eta c >= (1 - nu) R, where R is the
/// method's right-hand coefficient; returned as R / (eta c + R).
inline double choose_nu(NuKind kind, const NuParams& p) {
  if (p.eta <= 0.0 || p.gamma <= 1.0 || p.c <= 0.0)
    throw config_error("choose_nu: need eta > 0, gamma > 1, c > 0");
  double R = 0.0;
  switch (kind) {
    case NuKind::tr_first:
      R = p.gamma * p.gamma - 1.0 / (p.gamma * p.gamma);
      break;
    case NuKind::ls_first: {
      const double w = (p.L * p.alpha_bar * p.beta + 1.0);
      R = w * w * p.gamma - 1.0 / p.gamma;
      break;
    }
    case NuKind::cubic:
      R = p.gamma + 1.0 - 1.0 / p.gamma;
      break;
  }
  return R / (p.eta * p.c + R);
}

/// Theta constants of the deterministic instances.
inline double theta_formula(NuKind kind, double nu, double gamma) {
  switch (kind) {
    case NuKind::tr_first: return (1.0 - nu) * (1.0 - 1.0 / (gamma * gamma));
    case NuKind::ls_first: return (1.0 - nu) * (1.0 - 1.0 / gamma);
    case NuKind::cubic: return (1.0 - nu) * (1.0 - 1.0 / gamma);
  }
  throw config_error("theta_formula: unknown kind");
}

/// c2 from the Cauchy-decrease chain under the gate alpha <= tau ||g||:
/// mred >= (1/(2 tau)) min{1, 1/(betaH tau)} alpha^2.
inline double c2_formula(double tau, double betaH) {
  if (tau <= 0.0 || betaH <= 0.0) throw config_error("c2_formula: tau, betaH must be positive");
  return 0.5 * (1.0 / tau) * std::min(1.0, 1.0 / (betaH * tau));
}

/// chi = max(||g||, -lambda_min(H)): the second-order stationarity
/// measure.
inline double chi(const Vector& g, const Matrix& H) {
  if (H.rows() != H.cols() || H.rows() != g.size())
    throw config_error("chi: dimension mismatch");
  if (!H.isApprox(H.transpose(), 1e-12)) throw config_error("chi: H must be symmetric");
  return std::max(g.norm(), -min_eigenvalue(H));
}

namespace detail {

inline PhiSnapshot snapshot_at(const RunTrace& t, std::size_t idx) {
  PhiSnapshot s;
  if (idx < t.records.size()) {
    const auto& r = t.records[idx];
    s.f = r.f;
    s.grad_norm = r.grad_norm;
    s.alpha = r.alpha;
    s.delta = r.delta;
  } else {
    s.f = t.final_f;
    s.grad_norm = t.final_grad_norm;
    s.alpha = t.final_alpha;
    s.delta = t.final_delta;
  }
  return s;
}

}  // namespace detail

/// First index at which the rule's criterion holds, scanning the trace
/// records and the final snapshot; nullopt when it never fires.
inline std::optional<long> stopping_time(const RunTrace& t, const StoppingRule& rule) {
  rule.validate();
  const long n = t.iterations();
  auto value_at = [&](long i) -> double {
    switch (rule.kind) {
      case StoppingRule::Kind::grad_norm:
      case StoppingRule::Kind::next_grad_norm:
        return i < n ? t.records[i].grad_norm : t.final_grad_norm;
      case StoppingRule::Kind::f_gap:
        return (i < n ? t.records[i].f : t.final_f) - *rule.f_star;
      case StoppingRule::Kind::second_order: {
        const auto& c = i < n ? t.records[i].chi : t.final_chi;
        if (!c) throw config_error("stopping_time: trace lacks chi instrumentation");
        return *c;
      }
    }
    throw config_error("stopping_time: unknown rule");
  };

  if (rule.kind == StoppingRule::Kind::next_grad_norm) {
    for (long i = 1; i <= n; ++i)
      if (value_at(i) <= rule.eps) return i - 1;
    return std::nullopt;
  }
  for (long i = 0; i <= n; ++i)
    if (value_at(i) <= rule.eps) return i;
  return std::nullopt;
}

inline StoppingRule rule_for(PhiKind kind, double eps, double f_star) {
  StoppingRule r;
  r.eps = eps;
  switch (kind) {
    case PhiKind::cubic:
      r.kind = StoppingRule::Kind::next_grad_norm;
      break;
    case PhiKind::tr_second:
      r.kind = StoppingRule::Kind::second_order;
      break;
    case PhiKind::convex_ls:
    case PhiKind::strongly_convex_ls:
      r.kind = StoppingRule::Kind::f_gap;
      r.f_star = f_star;
      break;
    default:
      r.kind = StoppingRule::Kind::grad_norm;
      break;
  }
  return r;
}

/// Calibrated or formula-derived constants consumed by the condition
/// checks and the stopping-time bounds.
struct AnalysisConfig {
  double gamma = 2.0;
  double theta = 0.0;        // Theta
  double alpha_floor = 0.0;  // underline-alpha_eps
  double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
  double zeta = 0.0;
};

struct Violation {
  long k = 0;
  std::string part;
  double lhs = 0.0, rhs = 0.0;
};

struct ConditionReport {
  bool part1 = true;
  bool part2 = true;
  bool verdict = false;
  double min_alpha = std::numeric_limits<double>::infinity();
  std::optional<long> t_eps;
  std::vector<double> decrements;
  std::vector<Violation> violations;
};

/// Checks Condition 1 on a deterministic trace: part 1, every iteration
/// with alpha_k <= gamma alpha_floor succeeded and min_k alpha_k >=
/// alpha_floor; part 2, Phi_k - Phi_{k+1} >= Theta h(alpha_k) - tol for
/// all k < T_eps. Violations are reported, not thrown.
inline ConditionReport check_condition1(const RunTrace& t, const ProgressMeasure& m,
                                        const AnalysisConfig& cfg, HKind h,
                                        double tol = 1e-10) {
  m.validate();
  ConditionReport rep;
  const StoppingRule rule = rule_for(m.kind, m.eps, m.f_star);
  rep.t_eps = stopping_time(t, rule);
  const long horizon = rep.t_eps ? *rep.t_eps : t.iterations();

  for (long k = 0; k < t.iterations(); ++k) {
    const auto& r = t.records[k];
    rep.min_alpha = std::min(rep.min_alpha, r.alpha);
    if (cfg.alpha_floor > 0.0 && r.alpha <= cfg.gamma * cfg.alpha_floor && r.W != 1) {
      rep.part1 = false;
      rep.violations.push_back({k, "part1_success", r.alpha, cfg.gamma * cfg.alpha_floor});
    }
  }
  if (cfg.alpha_floor > 0.0 && rep.min_alpha < cfg.alpha_floor - tol) {
    rep.part1 = false;
    rep.violations.push_back({-1, "part1_floor", rep.min_alpha, cfg.alpha_floor});
  }

  for (long k = 0; k < horizon; ++k) {
    const PhiSnapshot a = detail::snapshot_at(t, static_cast<std::size_t>(k));
    const PhiSnapshot b = detail::snapshot_at(t, static_cast<std::size_t>(k) + 1);
    const double dec = phi_value(m, a) - phi_value(m, b);
    rep.decrements.push_back(dec);
    const double need = cfg.theta * h_value(h, a.alpha, m.eps);
    if (dec < need - tol) {
      rep.part2 = false;
      rep.violations.push_back({k, "part2_decrement", dec, need});
    }
  }

  rep.verdict = rep.part1 && rep.part2;
  return rep;
}

/// Eq.-style stopping-time bound T_eps <= Phi_0 / (Theta h(alpha_floor)).
inline double te_bound(double phi0, double Theta, double h_at_floor) {
  if (Theta <= 0.0 || h_at_floor <= 0.0)
    throw config_error("te_bound: Theta and h(alpha_floor) must be positive");
  if (phi0 < 0.0) throw config_error("te_bound: Phi_0 must be >= 0");
  return phi0 / (Theta * h_at_floor);
}

/// Expected stopping-time bound (1-delta)/(1-2delta) Phi_0/(Theta h) + 1.
inline double expected_te_bound(double phi0, double Theta, double h_at_floor, double delta) {
  if (!(delta >= 0.0 && delta < 0.5))
    throw config_error("expected_te_bound: delta must be in [0, 1/2)");
  return (1.0 - delta) / (1.0 - 2.0 * delta) * te_bound(phi0, Theta, h_at_floor) + 1.0;
}

/// Least-squares fit of the complexity curve. loglog mode fits
/// log T = slope log(1/eps) + intercept (power laws); semilog fits
/// T = slope log(1/eps) + intercept (logarithmic rates).
struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double rss = 0.0;
  double r2 = 1.0;
};

enum class FitMode { loglog, semilog };

inline FitResult complexity_fit(const std::vector<std::pair<double, double>>& points,
                                FitMode mode = FitMode::loglog) {
  if (points.size() < 2) throw config_error("complexity_fit: need at least 2 points");
  std::vector<double> xs, ys;
  for (const auto& [eps, T] : points) {
    if (eps <= 0.0 || T <= 0.0) throw config_error("complexity_fit: need eps > 0 and T > 0");
    xs.push_back(std::log(1.0 / eps));
    ys.push_back(mode == FitMode::loglog ? std::log(T) : T);
  }
  const double n = static_cast<double>(xs.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
    sxx += xs[i] * xs[i];
    sxy += xs[i] * ys[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw config_error("complexity_fit: need at least 2 distinct eps values");
  FitResult fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double tss = 0.0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double e = ys[i] - (fit.slope * xs[i] + fit.intercept);
    fit.rss += e * e;
    tss += (ys[i] - ybar) * (ys[i] - ybar);
  }
  fit.r2 = tss > 0.0 ? 1.0 - fit.rss / tss : 1.0;
  return fit;
}

struct OneStepReport {
  double p_hat = 0.0;
  double p_stderr = 0.0;
  double mean_dec = 0.0;
  double dec_stderr = 0.0;
  double h_alpha = 0.0;
  long replications = 0;
};

/// Checkpoint-replay estimator of Condition 2: replays one iteration M
/// times from an identical frozen state with independent oracle streams,
/// reporting the success frequency and the sample mean of the
/// Phi-decrement. This is the operational form of conditioning on F_k.
inline OneStepReport one_step_conditional_check(const StochState& frozen, StochMethod method,
                                                const StochasticOracle& proto,
                                                const StochConfig& c, const ProgressMeasure& m,
                                                HKind h, long replications,
                                                std::uint64_t base_seed) {
  if (replications < 100)
    throw config_error("one_step_conditional_check: need at least 100 replications");
  m.validate();
  const DeterministicProblem& truth = proto.truth();

  OneStepReport rep;
  rep.replications = replications;
  rep.h_alpha = h_value(h, frozen.alpha, m.eps);

  PhiSnapshot before;
  before.f = truth.f(frozen.x);
  before.grad_norm = truth.grad(frozen.x).norm();
  before.alpha = frozen.alpha;
  before.delta = frozen.delta_ctrl;
  const double phi_before = phi_value(m, before);

  long successes = 0;
  double sum = 0.0, sum2 = 0.0;
  for (long i = 0; i < replications; ++i) {
    StochasticOracle o = proto.clone_with_seed(derive_seed(base_seed, static_cast<std::uint64_t>(i)));
    IterationOutcome out = [&] {
      switch (method) {
        case StochMethod::storm: return storm_tr_iteration(frozen, o, c, &truth);
        case StochMethod::storm2: return storm_tr2_iteration(frozen, o, c, &truth);
        case StochMethod::sls: return stoch_ls_iteration(frozen, o, c, &truth);
      }
      throw config_error("one_step_conditional_check: unknown method");
    }();
    if (out.rec.W == 1) ++successes;
    PhiSnapshot after;
    after.f = truth.f(out.state.x);
    after.grad_norm = truth.grad(out.state.x).norm();
    after.alpha = out.state.alpha;
    after.delta = out.state.delta_ctrl;
    const double dec = phi_before - phi_value(m, after);
    sum += dec;
    sum2 += dec * dec;
  }

  const double M = static_cast<double>(replications);
  rep.p_hat = static_cast<double>(successes) / M;
  rep.p_stderr = std::sqrt(std::max(0.0, rep.p_hat * (1.0 - rep.p_hat)) / M);
  rep.mean_dec = sum / M;
  const double var = std::max(0.0, (sum2 - sum * sum / M) / (M - 1.0));
  rep.dec_stderr = std::sqrt(var / M);
  return rep;
}

/// Trace-calibrated alpha floor for Condition 1 part 1: the largest
/// value for which every iteration with alpha <= gamma * floor
/// succeeded. The admissible set is open at min_unsuccessful/gamma, so
/// the returned value sits strictly inside it.
inline double calibrate_alpha_floor(const RunTrace& t, double gamma) {
  double floor = std::numeric_limits<double>::infinity();
  double min_alpha = t.final_alpha;
  for (const auto& r : t.records) {
    min_alpha = std::min(min_alpha, r.alpha);
    if (r.W != 1) floor = std::min(floor, r.alpha / gamma);
  }
  return std::min(floor, min_alpha) * (1.0 - 1e-12);
}

/// Smallest observed fred / (eta alpha ||grad f(x_{k+1})||^{3/2}) over
/// successful iterations: the trace-calibrated c4 of the cubic method.
inline double calibrate_c4(const RunTrace& t, double eta) {
  double c4 = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    const auto& r = t.records[k];
    if (r.W != 1 || !r.fred) continue;
    const double gnext =
        k + 1 < t.records.size() ? t.records[k + 1].grad_norm : t.final_grad_norm;
    if (gnext <= 0.0) continue;
    c4 = std::min(c4, *r.fred / (eta * r.alpha * std::pow(gnext, 1.5)));
  }
  if (!std::isfinite(c4)) throw config_error("calibrate_c4: no usable successful iteration");
  return c4;
}

/// Largest Hessian spectral norm along the retained iterates: a valid
/// curvature bound betaH for the trace.
inline double measure_beta_H(const RunTrace& t, const DeterministicProblem& p) {
  if (t.iterates.empty()) throw config_error("measure_beta_H: trace kept no iterates");
  double b = 0.0;
  for (const auto& x : t.iterates) b = std::max(b, sym_norm(p.hess(x)));
  return b;
}

/// Largest secant constant ||grad f(x_{k+1}) - grad f(x_k)|| /
/// ||x_{k+1} - x_k|| over successful steps: a trace-valid stand-in for L
/// when no global constant is declared.
inline double measure_secant_L(const RunTrace& t, const DeterministicProblem& p) {
  if (t.iterates.size() < 2) throw config_error("measure_secant_L: trace kept no iterates");
  double L = 0.0;
  for (std::size_t k = 0; k + 1 < t.iterates.size(); ++k) {
    const Vector d = t.iterates[k + 1] - t.iterates[k];
    const double dn = d.norm();
    if (dn == 0.0) continue;
    L = std::max(L, (p.grad(t.iterates[k + 1]) - p.grad(t.iterates[k])).norm() / dn);
  }
  return L;
}

}  // namespace aopt
