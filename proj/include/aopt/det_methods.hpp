#pragma once

#include <utility>

#include "aopt/model.hpp"
#include "aopt/problem.hpp"
#include "aopt/trace.hpp"

namespace aopt {

/// Shared constants of the adaptive deterministic framework plus the
/// per-method extras (tau gates the trust-region acceptance, beta_dir
/// caps the line-search direction).
struct DetConfig {
  double eta = 0.1;        // sufficient-reduction parameter, in (0,1)
  double gamma = 2.0;      // stepsize expansion/contraction factor, > 1
  double alpha_bar = 1.0;  // stepsize cap
  double alpha0 = 1.0;     // initial stepsize, in (0, alpha_bar]
  double tau = 1.0;        // TR gate: success also requires alpha <= tau ||grad f||
  double beta_dir = 1.0;   // LS direction cap, must be >= kappa2
  double eps = 1e-6;       // default stationarity tolerance
  long max_iters = 100000;

  void validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw config_error("DetConfig: eta must be in (0,1)");
    if (!(gamma > 1.0)) throw config_error("DetConfig: gamma must be > 1");
    if (!(alpha_bar > 0.0)) throw config_error("DetConfig: alpha_bar must be > 0");
    if (!(alpha0 > 0.0 && alpha0 <= alpha_bar))
      throw config_error("DetConfig: alpha0 must be in (0, alpha_bar]");
    if (!(tau > 0.0)) throw config_error("DetConfig: tau must be > 0");
    if (!(beta_dir > 0.0)) throw config_error("DetConfig: beta_dir must be > 0");
    if (!(eps > 0.0)) throw config_error("DetConfig: eps must be > 0");
    if (max_iters < 0) throw config_error("DetConfig: max_iters must be >= 0");
  }
};

struct DetState {
  long k = 0;
  Vector x;
  double alpha = 1.0;
  int last_W = 0;
};

enum class DetMethod { tr, ls, cubic };

/// Algorithm steps 3-4: min{gamma alpha, alpha_bar} on success,
/// alpha/gamma otherwise.
inline double stepsize_update(double alpha, int W, double gamma, double alpha_bar) {
  return W > 0 ? std::min(gamma * alpha, alpha_bar) : alpha / gamma;
}

namespace detail {

inline TraceRecord base_record(const DetState& s, double f, double gnorm) {
  TraceRecord r;
  r.k = s.k;
  r.f = f;
  r.grad_norm = gnorm;
  r.alpha = s.alpha;
  return r;
}

}  // namespace detail

/// One trust-region iteration: exact second-order model, step from
/// tr_solve, success iff fred/mred >= eta and alpha <= tau ||grad f||.
/// The gate is checked first; a gated iteration skips the trial
/// evaluation entirely.
inline std::pair<DetState, TraceRecord> det_tr_iteration(const DetState& s,
                                                         const DeterministicProblem& p,
                                                         const DetConfig& c) {
  const double f = p.f(s.x);
  const Vector g = p.grad(s.x);
  const double gnorm = g.norm();
  if (gnorm == 0.0) throw config_error("det_tr_iteration: stationary point (guard upstream)");

  TraceRecord rec = detail::base_record(s, f, gnorm);
  DetState next = s;
  next.k = s.k + 1;

  LocalModel m{s.x, f, g, p.hess(s.x), 0.0};
  const TrialStep step = tr_solve(m, s.alpha);
  rec.mred = step.mred;

  bool success = false;
  if (s.alpha <= c.tau * gnorm) {
    if (step.mred <= 0.0)
      throw numerical_error("det_tr_iteration: zero model reduction at a non-stationary point");
    const double ftrial = p.f(s.x + step.s);
    const double fred = f - ftrial;
    rec.fred = fred;
    rec.ratio = fred / step.mred;
    success = *rec.ratio >= c.eta;
    if (success) next.x = s.x + step.s;
  }

  rec.W = success ? 1 : -1;
  next.last_W = rec.W;
  next.alpha = stepsize_update(s.alpha, rec.W, c.gamma, c.alpha_bar);
  return {next, rec};
}

/// One line-search iteration: s = alpha d with d = -M grad f, success iff
/// the Armijo condition f(x) - f(x+s) >= -eta grad f(x)' s holds.
inline std::pair<DetState, TraceRecord> det_ls_iteration(const DetState& s,
                                                         const DeterministicProblem& p,
                                                         const DetConfig& c,
                                                         const Preconditioner& M) {
  const double f = p.f(s.x);
  const Vector g = p.grad(s.x);
  const double gnorm = g.norm();
  if (gnorm == 0.0) throw config_error("det_ls_iteration: stationary point (guard upstream)");

  TraceRecord rec = detail::base_record(s, f, gnorm);
  DetState next = s;
  next.k = s.k + 1;

  LocalModel m{s.x, f, g, Matrix(), 0.0};
  const Vector d = ls_direction(m, M, c.beta_dir);
  const Vector step = s.alpha * d;
  const double armijo_rhs = -c.eta * g.dot(step);
  rec.mred = -g.dot(step);  // first-order model reduction

  const double ftrial = p.f(s.x + step);
  const double fred = f - ftrial;
  rec.fred = fred;

  const bool success = fred >= armijo_rhs;
  if (success) next.x = s.x + step;
  rec.W = success ? 1 : -1;
  next.last_W = rec.W;
  next.alpha = stepsize_update(s.alpha, rec.W, c.gamma, c.alpha_bar);
  return {next, rec};
}

/// One cubic regularized Newton iteration: model weight sigma = 1/(3
/// alpha), step from cubic_solve, the trust-region ratio test decides
/// acceptance.
inline std::pair<DetState, TraceRecord> det_cubic_iteration(const DetState& s,
                                                            const DeterministicProblem& p,
                                                            const DetConfig& c) {
  if (!p.has_hessian()) throw config_error("det_cubic_iteration: problem has no Hessian");
  const double f = p.f(s.x);
  const Vector g = p.grad(s.x);
  const double gnorm = g.norm();
  if (gnorm == 0.0) throw config_error("det_cubic_iteration: stationary point (guard upstream)");

  TraceRecord rec = detail::base_record(s, f, gnorm);
  DetState next = s;
  next.k = s.k + 1;

  LocalModel m{s.x, f, g, p.hess(s.x), 1.0 / (3.0 * s.alpha)};
  const TrialStep step = cubic_solve(m, s.alpha);
  rec.mred = step.mred;

  bool success = false;
  if (step.mred > 0.0) {
    const double ftrial = p.f(s.x + step.s);
    const double fred = f - ftrial;
    rec.fred = fred;
    rec.ratio = fred / step.mred;
    success = *rec.ratio >= c.eta;
    if (success) next.x = s.x + step.s;
  }

  rec.W = success ? 1 : -1;
  next.last_W = rec.W;
  next.alpha = stepsize_update(s.alpha, rec.W, c.gamma, c.alpha_bar);
  return {next, rec};
}

namespace detail {

inline bool rule_fires_at(const StoppingRule& rule, const DeterministicProblem& p,
                          const Vector& x, double f, double gnorm, std::optional<double>& chi_out);

}  // namespace detail

/// Runs Algorithm 1 with the chosen strategy until the stopping rule
/// fires, a stationary point is hit, or the iteration budget runs out.
/// Deterministic given its inputs; iterates are retained for analysis.
inline RunTrace run_deterministic(DetMethod method, const DeterministicProblem& p,
                                  const DetConfig& c, const StoppingRule& rule, const Vector& x0,
                                  const Preconditioner* precond = nullptr) {
  c.validate();
  rule.validate();
  require_finite(x0, "x0");

  Preconditioner ident = Preconditioner::identity(p.dim);
  const Preconditioner& M = precond ? *precond : ident;

  RunTrace trace;
  DetState state;
  state.x = x0;
  state.alpha = std::min(c.alpha0, c.alpha_bar);
  trace.iterates.push_back(state.x);

  auto finalize = [&](RunStatus st, double f, double gnorm, std::optional<double> chi_v) {
    trace.status = st;
    trace.final_x = state.x;
    trace.final_f = f;
    trace.final_grad_norm = gnorm;
    trace.final_alpha = state.alpha;
    trace.final_chi = chi_v;
    return trace;
  };

  for (long k = 0; k < c.max_iters; ++k) {
    const double f = p.f(state.x);
    const double gnorm = p.grad(state.x).norm();
    std::optional<double> chi_v;
    if (rule.kind != StoppingRule::Kind::next_grad_norm &&
        detail::rule_fires_at(rule, p, state.x, f, gnorm, chi_v))
      return finalize(RunStatus::converged, f, gnorm, chi_v);
    if (gnorm == 0.0) return finalize(RunStatus::stationary_point, f, gnorm, chi_v);

    std::pair<DetState, TraceRecord> out = [&] {
      switch (method) {
        case DetMethod::tr: return det_tr_iteration(state, p, c);
        case DetMethod::ls: return det_ls_iteration(state, p, c, M);
        case DetMethod::cubic: return det_cubic_iteration(state, p, c);
      }
      throw config_error("run_deterministic: unknown method");
    }();
    state = out.first;
    trace.records.push_back(out.second);
    trace.iterates.push_back(state.x);

    if (rule.kind == StoppingRule::Kind::next_grad_norm) {
      const double gnext = p.grad(state.x).norm();
      if (gnext <= rule.eps) {
        std::optional<double> none;
        return finalize(RunStatus::converged, p.f(state.x), gnext, none);
      }
    }
  }

  const double f = p.f(state.x);
  const double gnorm = p.grad(state.x).norm();
  std::optional<double> chi_v;
  if (rule.kind != StoppingRule::Kind::next_grad_norm &&
      detail::rule_fires_at(rule, p, state.x, f, gnorm, chi_v))
    return finalize(RunStatus::converged, f, gnorm, chi_v);
  return finalize(RunStatus::max_iters, f, gnorm, chi_v);
}

namespace detail {

inline bool rule_fires_at(const StoppingRule& rule, const DeterministicProblem& p,
                          const Vector& x, double f, double gnorm, std::optional<double>& chi_out) {
  switch (rule.kind) {
    case StoppingRule::Kind::grad_norm:
      return gnorm <= rule.eps;
    case StoppingRule::Kind::next_grad_norm:
      return false;  // handled after the step
    case StoppingRule::Kind::f_gap:
      return f - *rule.f_star <= rule.eps;
    case StoppingRule::Kind::second_order: {
      Eigen::SelfAdjointEigenSolver<Matrix> es(p.hess(x), Eigen::EigenvaluesOnly);
      const double chi_v = std::max(gnorm, -es.eigenvalues()(0));
      chi_out = chi_v;
      return chi_v <= rule.eps;
    }
  }
  return false;
}

}  // namespace detail

}  // namespace aopt
