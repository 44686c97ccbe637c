#pragma once

#include <optional>
#include <utility>

#include "aopt/det_methods.hpp"
#include "aopt/estimators.hpp"
#include "aopt/model.hpp"
#include "aopt/oracle.hpp"
#include "aopt/trace.hpp"

namespace aopt {

/// Constants of the adaptive stochastic framework. delta1 bounds the
/// model-accuracy failure probability, delta2 the estimate-accuracy
/// failure probability; tau gates STORM acceptance via ||g|| >= tau
/// alpha; delta0 seeds the line-search accuracy control sequence.
struct StochConfig {
  double eta = 0.1;
  double gamma = 2.0;
  double alpha_bar = 1.0;
  double alpha0 = 1.0;
  double delta1 = 0.05;
  double delta2 = 0.05;
  double tau = 1.0;
  double kappa_f = 0.5;
  double kappa_g = 0.5;
  double kappa_H = 1.0;
  double delta0 = 1.0;                       // line-search control seed
  std::size_t batch_cap = std::size_t{1} << 62;  // per-estimate cap (work limit)
  std::size_t ls_cap = std::size_t{1} << 16;     // guess-and-double cap
  std::size_t n0 = 4;                        // guess-and-double start
  std::size_t pilot = 128;                   // pilot draws when variance is unknown
  double surrogate_theta = 0.5;              // probe-free stopping: ||g|| <= eps/(1+theta)
  long max_iters = 100000;

  void validate() const {
    if (!(eta > 0.0 && eta < 1.0)) throw config_error("StochConfig: eta must be in (0,1)");
    if (!(gamma > 1.0)) throw config_error("StochConfig: gamma must be > 1");
    if (!(alpha_bar > 0.0)) throw config_error("StochConfig: alpha_bar must be > 0");
    if (!(alpha0 > 0.0 && alpha0 <= alpha_bar))
      throw config_error("StochConfig: alpha0 must be in (0, alpha_bar]");
    if (!(delta1 > 0.0 && delta1 < 1.0 && delta2 > 0.0 && delta2 < 1.0))
      throw config_error("StochConfig: delta1, delta2 must be in (0,1)");
    if (!((1.0 - delta1) * (1.0 - delta2) > 0.5))
      throw config_error("StochConfig: need (1-delta1)(1-delta2) > 1/2");
    if (!(tau > 0.0)) throw config_error("StochConfig: tau must be > 0");
    if (kappa_f <= 0.0 || kappa_g <= 0.0 || kappa_H <= 0.0)
      throw config_error("StochConfig: kappas must be positive");
    if (!(delta0 > 0.0)) throw config_error("StochConfig: delta0 must be > 0");
    if (n0 < 1 || ls_cap < n0) throw config_error("StochConfig: bad n0/ls_cap");
    if (!(surrogate_theta >= 0.0 && surrogate_theta < 1.0))
      throw config_error("StochConfig: surrogate_theta must be in [0,1)");
    if (max_iters < 0) throw config_error("StochConfig: max_iters must be >= 0");
  }

  AccuracySpec model_spec() const {
    AccuracySpec s;
    s.kappa_f = kappa_f;
    s.kappa_g = kappa_g;
    s.kappa_H = kappa_H;
    s.delta = delta1;
    return s;
  }
};

struct StochState {
  long k = 0;
  Vector x;
  double alpha = 1.0;
  double delta_ctrl = 1.0;      // line-search accuracy control Delta_k
  VarianceEstimate var;
  std::uint64_t samples = 0;    // cumulative oracle samples (work counter)
};

enum class StochMethod { storm, storm2, sls };

/// STORM acceptance: estimated ratio test plus the gradient-versus-
/// stepsize gate ||g|| >= tau alpha (chi replaces ||g|| in the
/// second-order variant).
inline bool storm_accept(double f0_est, double fs_est, double mred, double gate_value,
                         double alpha, double tau, double eta) {
  if (mred <= 0.0) return false;
  if (gate_value < tau * alpha) return false;
  return (f0_est - fs_est) / mred >= eta;
}

struct IterationOutcome {
  StochState state;
  TraceRecord rec;
  std::optional<RunStatus> halt;
};

namespace detail {

inline void instrument(TraceRecord& rec, const DeterministicProblem* probe, const Vector& x,
                       double f_est, double g_est_norm) {
  if (probe) {
    rec.f = probe->f(x);
    rec.grad_norm = probe->grad(x).norm();
  } else {
    rec.f = f_est;
    rec.grad_norm = g_est_norm;
  }
}

// sizing radii for the Taylor-like conditions at Delta_k := alpha_k
inline double f_radius(double alpha, bool second) { return second ? alpha * std::sqrt(alpha) : alpha; }
// chebyshev_sample_size bounds |err| <= kappa * radius; the f condition
// uses kappa_f alpha^2 (first order) or kappa_f alpha^3 (second), i.e.
// radius alpha^2 / alpha^3; the g condition uses alpha / alpha^2.

inline std::size_t size_f(const StochConfig& c, const VarianceEstimate& v, double alpha,
                          bool second, double budget) {
  const double r = second ? alpha * alpha * alpha : alpha * alpha;
  return chebyshev_sample_size(v.V_f, c.kappa_f, r, budget);
}

inline std::size_t size_g(const StochConfig& c, const VarianceEstimate& v, double alpha,
                          bool second, double budget) {
  const double r = second ? alpha * alpha : alpha;
  return chebyshev_sample_size(v.V_g, c.kappa_g, r, budget);
}

// negative-curvature boundary step, considered alongside the CG step in
// the second-order variant so saddle points are escaped
inline std::optional<TrialStep> eigen_step(const LocalModel& m, double alpha) {
  if (!m.has_curvature()) return std::nullopt;
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.H);
  if (es.info() != Eigen::Success) throw numerical_error("eigen_step: eigensolve failed");
  if (es.eigenvalues()(0) >= 0.0) return std::nullopt;
  Vector v = es.eigenvectors().col(0);
  normalize_sign(v);
  const double gv = m.g.dot(v);
  Vector s = (gv > 0.0 ? -alpha : alpha) * v;
  TrialStep out;
  out.s = s;
  out.snorm = alpha;
  out.mred = std::max(0.0, model_reduction(m, s));
  return out;
}

inline double chi_of(const Vector& g, const Matrix& H) {
  return std::max(g.norm(), H.size() > 0 ? -min_eigenvalue(H) : 0.0);
}

}  // namespace detail

/// One STORM iteration (first or second order): model estimates sized
/// for the Taylor-like conditions at probability 1-delta1 (failure
/// budget split across the f and g components), step from tr_solve, f
/// estimates sized at 1-delta2, acceptance by storm_accept.
inline IterationOutcome storm_iteration(const StochState& s, StochasticOracle& o,
                                        const StochConfig& c, bool second_order,
                                        const DeterministicProblem* probe) {
  IterationOutcome out;
  out.state = s;
  out.state.k = s.k + 1;
  TraceRecord& rec = out.rec;
  rec.k = s.k;
  rec.alpha = s.alpha;

  const std::size_t n_f = detail::size_f(c, s.var, s.alpha, second_order, c.delta1 / 2.0);
  const std::size_t n_g = detail::size_g(c, s.var, s.alpha, second_order, c.delta1 / 2.0);
  const std::size_t n_model = std::max(n_f, n_g);
  const std::size_t n_fn = detail::size_f(c, s.var, s.alpha, second_order, c.delta2 / 2.0);
  if (n_model > c.batch_cap || n_fn > c.batch_cap) {
    detail::instrument(rec, probe, s.x, 0.0, 0.0);
    out.halt = RunStatus::work_limit;
    return out;
  }

  const bool want_H = second_order || o.truth().has_hessian();
  const Estimate est = o.full_estimate(s.x, n_model, want_H);
  LocalModel m{s.x, est.f, est.g, est.has_hessian ? est.H : Matrix(), 0.0};

  TrialStep step = tr_solve(m, s.alpha);
  if (second_order) {
    auto es = detail::eigen_step(m, s.alpha);
    if (es && es->mred > step.mred) step = *es;
  }

  const auto [f0, fs] = o.value_pair_estimate(s.x, s.x + step.s, n_fn);
  rec.batch_model = n_model;
  rec.batch_fn = o.pair_draw_cost(n_fn);
  out.state.samples = s.samples + n_model + *rec.batch_fn;
  rec.mred = step.mred;
  rec.fred = f0 - fs;
  if (step.mred > 0.0) rec.ratio = (f0 - fs) / step.mred;

  const double gate = second_order ? detail::chi_of(est.g, m.H) : est.g.norm();
  const bool success = storm_accept(f0, fs, step.mred, gate, s.alpha, c.tau, c.eta);
  if (success) out.state.x = s.x + step.s;
  rec.W = success ? 1 : -1;
  out.state.alpha = stepsize_update(s.alpha, rec.W, c.gamma, c.alpha_bar);

  detail::instrument(rec, probe, s.x, est.f, est.g.norm());
  if (second_order && probe && probe->has_hessian())
    rec.chi = detail::chi_of(probe->grad(s.x), probe->hess(s.x));
  else if (second_order)
    rec.chi = gate;
  return out;
}

inline IterationOutcome storm_tr_iteration(const StochState& s, StochasticOracle& o,
                                           const StochConfig& c,
                                           const DeterministicProblem* probe = nullptr) {
  return storm_iteration(s, o, c, false, probe);
}

inline IterationOutcome storm_tr2_iteration(const StochState& s, StochasticOracle& o,
                                            const StochConfig& c,
                                            const DeterministicProblem* probe = nullptr) {
  return storm_iteration(s, o, c, true, probe);
}

/// One stochastic line-search iteration: gradient from the
/// guess-and-double sampler, d = -g, estimated Armijo acceptance, and
/// the reliability-driven update of the control sequence Delta.
inline IterationOutcome stoch_ls_iteration(const StochState& s, StochasticOracle& o,
                                           const StochConfig& c,
                                           const DeterministicProblem* probe = nullptr) {
  IterationOutcome out;
  out.state = s;
  out.state.k = s.k + 1;
  TraceRecord& rec = out.rec;
  rec.k = s.k;
  rec.alpha = s.alpha;
  rec.delta = s.delta_ctrl;

  AccuracySpec gspec = c.model_spec();
  gspec.delta = c.delta1;
  const AdaptiveGradient ag = adaptive_gradient_sample(o, s.x, s.alpha, gspec, s.var, c.n0, c.ls_cap);
  out.state.samples = s.samples + ag.drawn;
  rec.batch_model = ag.batch;
  detail::instrument(rec, probe, s.x, 0.0, ag.g.norm());
  if (ag.near_stationary) {
    rec.batch_fn = 0;
    out.halt = RunStatus::near_stationary;
    return out;
  }

  const Vector step = -s.alpha * ag.g;
  AccuracySpec fspec = c.model_spec();
  fspec.delta = c.delta2;
  const FunctionPair fp =
      function_pair_estimates(o, s.x, s.x + step, s.delta_ctrl, fspec, s.var, true, c.batch_cap);
  out.state.samples += fp.drawn;
  rec.batch_fn = fp.drawn;
  if (!probe) rec.f = fp.f0;

  const double armijo_rhs = -c.eta * ag.g.dot(step);  // = eta alpha ||g||^2
  rec.mred = -ag.g.dot(step);
  rec.fred = fp.f0 - fp.fs;
  const bool success = fp.f0 - fp.fs >= armijo_rhs;

  if (success) {
    out.state.x = s.x + step;
    const bool reliable = s.alpha * ag.g.squaredNorm() >= s.delta_ctrl * s.delta_ctrl;
    out.state.delta_ctrl =
        reliable ? std::sqrt(c.gamma) * s.delta_ctrl : s.delta_ctrl / std::sqrt(c.gamma);
  }
  rec.W = success ? 1 : -1;
  out.state.alpha = stepsize_update(s.alpha, rec.W, c.gamma, c.alpha_bar);
  return out;
}

/// Runs Algorithm 2. With a probe (exact evaluators of the oracle's
/// underlying problem) the stopping rule is evaluated on true values and
/// the trace carries true f and ||grad f||; without one, stopping falls
/// back to the estimate surrogate ||g|| <= eps/(1+theta). Fully
/// reproducible from the oracle's seed.
inline RunTrace run_stochastic(StochMethod method, StochasticOracle& o, const StochConfig& c,
                               const StoppingRule& rule, const Vector& x0,
                               const DeterministicProblem* probe = nullptr) {
  c.validate();
  rule.validate();
  require_finite(x0, "x0");
  if (!probe && rule.kind != StoppingRule::Kind::grad_norm)
    throw config_error("run_stochastic: only the grad_norm rule has a probe-free surrogate");

  RunTrace trace;
  StochState state;
  state.x = x0;
  state.alpha = std::min(c.alpha0, c.alpha_bar);
  state.delta_ctrl = c.delta0;
  if (o.has_exact_variance()) {
    state.var = exact_variance(o);
    trace.variance_regime = "exact";
  } else {
    state.var = estimate_variance(o, x0, c.pilot);
    trace.pilot_samples = c.pilot;
    trace.variance_regime = "pilot";
  }
  trace.iterates.push_back(state.x);

  auto finalize = [&](RunStatus st) {
    trace.status = st;
    trace.final_x = state.x;
    if (probe) {
      trace.final_f = probe->f(state.x);
      trace.final_grad_norm = probe->grad(state.x).norm();
      if (rule.kind == StoppingRule::Kind::second_order && probe->has_hessian())
        trace.final_chi = detail::chi_of(probe->grad(state.x), probe->hess(state.x));
    }
    trace.final_alpha = state.alpha;
    trace.final_delta = state.delta_ctrl;
    trace.total_samples = state.samples;
    return trace;
  };

  auto probe_fires = [&]() {
    if (!probe) return false;
    switch (rule.kind) {
      case StoppingRule::Kind::grad_norm:
        return probe->grad(state.x).norm() <= rule.eps;
      case StoppingRule::Kind::next_grad_norm:
        return false;
      case StoppingRule::Kind::f_gap:
        return probe->f(state.x) - *rule.f_star <= rule.eps;
      case StoppingRule::Kind::second_order:
        return detail::chi_of(probe->grad(state.x), probe->hess(state.x)) <= rule.eps;
    }
    return false;
  };

  for (long k = 0; k < c.max_iters; ++k) {
    if (rule.kind != StoppingRule::Kind::next_grad_norm && probe_fires())
      return finalize(RunStatus::converged);

    IterationOutcome out = [&] {
      switch (method) {
        case StochMethod::storm: return storm_tr_iteration(state, o, c, probe);
        case StochMethod::storm2: return storm_tr2_iteration(state, o, c, probe);
        case StochMethod::sls: return stoch_ls_iteration(state, o, c, probe);
      }
      throw config_error("run_stochastic: unknown method");
    }();
    if (out.halt) {
      trace.records.push_back(out.rec);
      state = out.state;
      trace.iterates.push_back(state.x);
      return finalize(*out.halt);
    }
    state = out.state;
    trace.records.push_back(out.rec);
    trace.iterates.push_back(state.x);

    if (rule.kind == StoppingRule::Kind::next_grad_norm && probe &&
        probe->grad(state.x).norm() <= rule.eps)
      return finalize(RunStatus::converged);
    if (!probe) {
      const double gest = trace.records.back().grad_norm;
      if (gest <= rule.eps / (1.0 + c.surrogate_theta)) return finalize(RunStatus::converged);
    }
  }
  if (rule.kind != StoppingRule::Kind::next_grad_norm && probe_fires())
    return finalize(RunStatus::converged);
  return finalize(RunStatus::max_iters);
}

/// Result of a classification experiment: the trace plus the test
/// accuracy curve (entry 0 is the initial classifier, entry e the state
/// after epoch e).
struct ExperimentRun {
  RunTrace trace;
  std::vector<double> accuracy;
  Vector final_x;
};

/// Plain SG with a constant stepsize and fixed mini-batch, i.i.d.
/// with-replacement draws by default; a shuffled-epoch mode is kept
/// behind a flag. Records one trace row and one accuracy entry per
/// epoch.
inline ExperimentRun sg_baseline(const FiniteSumProblem& p, double alpha, std::size_t batch,
                                 int epochs, std::uint64_t seed, bool shuffled = false) {
  if (batch < 1) throw config_error("sg_baseline: batch must be >= 1");
  if (epochs < 0) throw config_error("sg_baseline: epochs must be >= 0");
  Rng rng(seed);
  const std::size_t N = p.num_samples();
  Vector x = Vector::Zero(p.dim());

  ExperimentRun run;
  run.accuracy.push_back(p.test_accuracy(x));
  std::uint64_t samples = 0;

  std::vector<std::size_t> order(N);
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int e = 0; e < epochs; ++e) {
    if (shuffled) {
      for (std::size_t i = N; i > 1; --i)
        std::swap(order[i - 1], order[rng.uniform_below(i)]);
      for (std::size_t off = 0; off < N; off += batch) {
        const std::size_t len = std::min(batch, N - off);
        std::span<const std::size_t> idx(order.data() + off, len);
        x -= alpha * p.sample_eval(x, idx).g;
        samples += len;
      }
    } else {
      const std::size_t iters = (N + batch - 1) / batch;
      std::vector<std::size_t> idx(batch);
      for (std::size_t it = 0; it < iters; ++it) {
        for (auto& i : idx) i = rng.uniform_below(N);
        x -= alpha * p.sample_eval(x, idx).g;
        samples += batch;
      }
    }
    TraceRecord rec;
    rec.k = e;
    rec.f = p.value(x);
    rec.grad_norm = p.gradient(x).norm();
    rec.alpha = alpha;
    rec.W = 1;
    rec.batch_model = batch;
    run.trace.records.push_back(rec);
    run.accuracy.push_back(p.test_accuracy(x));
  }
  run.trace.total_samples = samples;
  run.trace.status = RunStatus::converged;
  run.trace.final_x = x;
  run.trace.final_f = p.value(x);
  run.trace.final_grad_norm = p.gradient(x).norm();
  run.trace.final_alpha = alpha;
  run.final_x = x;
  return run;
}

/// The adaptive mini-batch heuristic: test sufficient decrease of the
/// objective over the current mini-batch at the trial point; on reject,
/// shrink the stepsize and grow the batch, on accept do the opposite.
/// The work budget is epochs * N drawn samples; accuracy is recorded at
/// every epoch boundary.
inline ExperimentRun adaptive_sg_experiment(const FiniteSumProblem& p, double alpha0,
                                            std::size_t batch0, double gamma_alpha,
                                            double gamma_batch, double armijo_eta, int epochs,
                                            std::uint64_t seed, double alpha_cap = 16.0) {
  if (batch0 < 1) throw config_error("adaptive_sg_experiment: batch0 must be >= 1");
  if (gamma_alpha <= 1.0 || gamma_batch <= 1.0)
    throw config_error("adaptive_sg_experiment: factors must be > 1");
  Rng rng(seed);
  const std::size_t N = p.num_samples();
  Vector x = Vector::Zero(p.dim());
  double alpha = alpha0;
  std::size_t batch = std::min(batch0, N);

  ExperimentRun run;
  run.accuracy.push_back(p.test_accuracy(x));
  const std::uint64_t budget = static_cast<std::uint64_t>(epochs) * N;
  std::uint64_t samples = 0;
  std::uint64_t next_epoch_mark = N;
  long k = 0;

  std::vector<std::size_t> idx;
  while (samples < budget) {
    idx.resize(batch);
    for (auto& i : idx) i = rng.uniform_below(N);
    const SampleEval se = p.sample_eval(x, idx);
    const Vector trial = x - alpha * se.g;
    const double f_trial = p.sample_value(trial, idx);
    const double g2 = se.g.squaredNorm();
    const bool accept = se.f - f_trial >= armijo_eta * alpha * g2;

    TraceRecord rec;
    rec.k = k++;
    rec.f = se.f;
    rec.grad_norm = std::sqrt(g2);
    rec.alpha = alpha;
    rec.batch_model = batch;
    rec.W = accept ? 1 : -1;
    run.trace.records.push_back(rec);

    if (accept) {
      x = trial;
      alpha = std::min(gamma_alpha * alpha, alpha_cap);
      batch = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(double(batch) / gamma_batch)));
    } else {
      alpha /= gamma_alpha;
      batch = std::min(N, static_cast<std::size_t>(std::ceil(double(batch) * gamma_batch)));
    }
    samples += idx.size();
    while (samples >= next_epoch_mark && next_epoch_mark <= budget) {
      run.accuracy.push_back(p.test_accuracy(x));
      next_epoch_mark += N;
    }
  }
  while (run.accuracy.size() < static_cast<std::size_t>(epochs) + 1)
    run.accuracy.push_back(p.test_accuracy(x));

  run.trace.total_samples = samples;
  run.trace.status = RunStatus::converged;
  run.trace.final_x = x;
  run.trace.final_f = p.value(x);
  run.trace.final_grad_norm = p.gradient(x).norm();
  run.trace.final_alpha = alpha;
  run.final_x = x;
  return run;
}

}  // namespace aopt
