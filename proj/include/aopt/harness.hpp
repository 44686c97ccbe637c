#pragma once

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "aopt/analysis.hpp"
#include "aopt/config.hpp"
#include "aopt/trace_io.hpp"

namespace aopt {

namespace fs = std::filesystem;

namespace detail {

/// Tracks written artifacts; on error the partial outputs are removed.
class ArtifactSink {
 public:
  explicit ArtifactSink(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  fs::path path(const std::string& rel) {
    fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    std::lock_guard<std::mutex> lock(mu_);
    written_.push_back(p);
    return p;
  }

  void write_json(const std::string& rel, const json& j) {
    std::ofstream out(path(rel));
    out << j.dump(2) << "\n";
  }

  void discard_all() {
    std::lock_guard<std::mutex> lock(mu_);
    for (const auto& p : written_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
    written_.clear();
  }

  const fs::path& root() const { return root_; }

 private:
  fs::path root_;
  std::vector<fs::path> written_;
  std::mutex mu_;
};

inline json final_json(const RunTrace& t) {
  json f;
  f["f"] = t.final_f;
  f["grad_norm"] = t.final_grad_norm;
  f["alpha"] = t.final_alpha;
  if (t.final_delta) f["delta"] = *t.final_delta;
  if (t.final_chi) f["chi"] = *t.final_chi;
  return f;
}

inline json report_json(const ConditionReport& rep) {
  json r;
  r["verdict"] = rep.verdict;
  r["part1"] = rep.part1;
  r["part2"] = rep.part2;
  r["min_alpha"] = rep.min_alpha;
  if (rep.t_eps) r["t_eps"] = *rep.t_eps;
  r["violations"] = json::array();
  for (const auto& v : rep.violations) {
    json e;
    e["k"] = v.k;
    e["part"] = v.part;
    e["lhs"] = v.lhs;
    e["rhs"] = v.rhs;
    r["violations"].push_back(e);
  }
  return r;
}

inline DetMethod det_method_of(const std::string& m) {
  if (m == "tr") return DetMethod::tr;
  if (m == "ls") return DetMethod::ls;
  return DetMethod::cubic;
}

inline StochMethod stoch_method_of(const std::string& m) {
  if (m == "storm") return StochMethod::storm;
  if (m == "storm2") return StochMethod::storm2;
  return StochMethod::sls;
}

inline bool is_det_method(const std::string& m) { return m == "tr" || m == "ls" || m == "cubic"; }

}  // namespace detail

/// Formula-and-calibration pass over a deterministic trace: assembles
/// the method's measure (nu from choose_nu, Theta from the closed
/// forms), an alpha floor from the trace and runs check_condition1.
struct DetVerification {
  ProgressMeasure measure;
  AnalysisConfig constants;
  ConditionReport report;
  HKind h = HKind::alpha_sq;
  json to_json() const {
    json v = detail::report_json(report);
    v["constants"]["nu"] = measure.nu;
    v["constants"]["gamma"] = constants.gamma;
    v["constants"]["theta"] = constants.theta;
    v["constants"]["alpha_floor"] = constants.alpha_floor;
    v["constants"]["c2"] = constants.c2;
    v["constants"]["c3"] = constants.c3;
    v["constants"]["c4"] = constants.c4;
    v["constants"]["phi_kind"] = to_string(measure.kind);
    return v;
  }
};

inline DetVerification verify_det_trace(const RunTrace& trace, const DeterministicProblem& p,
                                        DetMethod method, const DetConfig& dc, double eps) {
  if (!p.f_lower) throw config_error("verify_det_trace: problem lacks a declared f_*");
  DetVerification v;
  NuParams np;
  np.eta = dc.eta;
  np.gamma = dc.gamma;

  switch (method) {
    case DetMethod::tr: {
      const double betaH = measure_beta_H(trace, p);
      v.constants.c2 = c2_formula(dc.tau, betaH);
      np.c = v.constants.c2;
      v.measure.kind = PhiKind::tr_first;
      v.measure.nu = choose_nu(NuKind::tr_first, np);
      v.constants.theta = theta_formula(NuKind::tr_first, v.measure.nu, dc.gamma);
      v.h = HKind::alpha_sq;
      break;
    }
    case DetMethod::ls: {
      v.constants.c3 = 1.0;  // identity preconditioner: kappa1 = 1
      np.c = v.constants.c3;
      np.L = p.lipschitz_grad ? *p.lipschitz_grad : measure_secant_L(trace, p);
      np.alpha_bar = dc.alpha_bar;
      np.beta = dc.beta_dir;
      v.measure.kind = PhiKind::ls_first;
      v.measure.nu = choose_nu(NuKind::ls_first, np);
      v.constants.theta = theta_formula(NuKind::ls_first, v.measure.nu, dc.gamma);
      v.h = HKind::alpha_eps_sq;
      break;
    }
    case DetMethod::cubic: {
      v.constants.c4 = calibrate_c4(trace, dc.eta);
      np.c = v.constants.c4;
      v.measure.kind = PhiKind::cubic;
      v.measure.nu = choose_nu(NuKind::cubic, np);
      v.constants.theta = theta_formula(NuKind::cubic, v.measure.nu, dc.gamma);
      v.h = HKind::alpha_eps_32;
      break;
    }
  }
  v.measure.f_star = *p.f_lower;
  v.measure.eps = eps;
  v.constants.gamma = dc.gamma;
  v.constants.alpha_floor = calibrate_alpha_floor(trace, dc.gamma);
  v.constants.c1 = v.constants.alpha_floor / eps;
  v.report = check_condition1(trace, v.measure, v.constants, v.h);
  return v;
}

inline void fill_phi_column(RunTrace& trace, const ProgressMeasure& m) {
  for (auto& r : trace.records) {
    PhiSnapshot s{r.f, r.grad_norm, r.alpha, r.delta};
    r.phi = phi_value(m, s);
  }
}

/// Replay-based calibration of the stochastic constants (Theta, zeta,
/// alpha floor, delta) on a gamma-spaced stepsize grid at a reference
/// state. The floor is the largest grid stepsize below which every rung
/// clears the target success probability.
struct StochCalibration {
  double alpha_floor = 0.0;
  double theta_hat = 0.0;
  double delta_hat = 0.0;
  double zeta_hat = 0.0;
  double p_at_floor = 0.0;
  json grid = json::array();
};

inline StochCalibration calibrate_stochastic(const StochasticOracle& proto, StochMethod method,
                                             const StochConfig& c, const ProgressMeasure& m,
                                             HKind h, const Vector& x_ref, long replications,
                                             std::uint64_t seed, double alpha_min) {
  StochState state;
  state.x = x_ref;
  state.delta_ctrl = c.delta0;
  state.var = proto.has_exact_variance() ? exact_variance(proto) : VarianceEstimate{};

  const double target = (1.0 - c.delta1) * (1.0 - c.delta2);
  StochCalibration cal;
  std::vector<std::pair<double, OneStepReport>> rungs;
  double alpha = c.alpha_bar;
  std::uint64_t rung = 0;
  while (alpha >= alpha_min) {
    state.alpha = alpha;
    rungs.push_back({alpha, one_step_conditional_check(state, method, proto, c, m, h, replications,
                                                       derive_seed(seed, rung++))});
    alpha /= c.gamma;
  }

  // largest rung such that it and every smaller rung meet the target
  std::size_t first_good = rungs.size();
  for (std::size_t i = rungs.size(); i-- > 0;) {
    if (rungs[i].second.p_hat >= target)
      first_good = i;
    else
      break;
  }
  if (first_good == rungs.size())
    throw numerical_error("calibrate_stochastic: no stepsize rung met the target probability");

  double theta = std::numeric_limits<double>::infinity();
  double pmin = 1.0;
  for (std::size_t i = first_good; i < rungs.size(); ++i) {
    const auto& [a, rep] = rungs[i];
    theta = std::min(theta, std::max(0.0, rep.mean_dec - 2.0 * rep.dec_stderr) / rep.h_alpha);
    pmin = std::min(pmin, rep.p_hat);
  }
  cal.alpha_floor = rungs[first_good].first;
  cal.p_at_floor = rungs[first_good].second.p_hat;
  cal.theta_hat = theta;
  cal.delta_hat = std::min(0.499, 1.0 - pmin);
  cal.zeta_hat = cal.alpha_floor / m.eps;
  for (const auto& [a, rep] : rungs) {
    json e;
    e["alpha"] = a;
    e["p_hat"] = rep.p_hat;
    e["mean_dec"] = rep.mean_dec;
    e["dec_stderr"] = rep.dec_stderr;
    cal.grid.push_back(e);
  }
  return cal;
}

namespace detail {

struct OptimizeArtifacts {
  RunTrace trace;
  json summary;
};

inline OptimizeArtifacts run_optimize(const ExperimentConfig& cfg, const json& j,
                                      std::uint64_t seed, const StoppingRule* rule_override) {
  const std::string method = j.at("method").get<std::string>();
  ProblemSpec spec = ProblemSpec::parse(j.at("problem"), "problem");

  OptimizeArtifacts out;
  out.summary["kind"] = "optimize";
  out.summary["method"] = method;
  out.summary["seed"] = seed;

  if (detail::is_det_method(method)) {
    const DetConfig dc = j.contains("det") ? parse_det(j.at("det"), "det") : DetConfig{};
    DeterministicProblem p = spec.build();
    const Vector x0 = spec.start_point(p);
    StoppingRule rule = j.contains("stop")
                            ? parse_stop(j.at("stop"), "stop", p.f_lower.value_or(0.0))
                            : StoppingRule{StoppingRule::Kind::grad_norm, dc.eps, std::nullopt};
    if (rule_override) rule = *rule_override;
    const DetMethod dm = detail::det_method_of(method);
    out.trace = run_deterministic(dm, p, dc, rule, x0);

    const bool want_verify = cfg::get_or<bool>(j, "verify_condition1", true);
    if (want_verify && p.f_lower && !out.trace.records.empty() &&
        rule.kind != StoppingRule::Kind::f_gap && rule.kind != StoppingRule::Kind::second_order) {
      DetVerification v = verify_det_trace(out.trace, p, dm, dc, rule.eps);
      fill_phi_column(out.trace, v.measure);
      out.summary["verification"] = v.to_json();
    }
    if (auto t = stopping_time(out.trace, rule)) out.summary["t_eps"] = *t;
  } else {
    const StochConfig sc = j.contains("stoch") ? parse_stoch(j.at("stoch"), "stoch") : StochConfig{};
    const StochMethod sm = detail::stoch_method_of(method);
    const bool probe = cfg::get_or<bool>(j, "probe", true);

    StochasticOracle oracle = [&] {
      if (spec.raw.at("kind").get<std::string>() == "logistic")
        return minibatch_oracle(spec.build_finite_sum(), seed);
      DeterministicProblem p = spec.build();
      double sf = 0.0, sg = 0.0;
      if (j.contains("noise")) {
        sf = cfg::get_or<double>(j.at("noise"), "sigma_f", 0.0);
        sg = cfg::get_or<double>(j.at("noise"), "sigma_g", 0.0);
      }
      return noisy_oracle(std::move(p), sf, sg, seed);
    }();

    const DeterministicProblem& truth = oracle.truth();
    const Vector x0 = spec.start_point(truth);
    StoppingRule rule = j.contains("stop")
                            ? parse_stop(j.at("stop"), "stop", truth.f_lower.value_or(0.0))
                            : StoppingRule{StoppingRule::Kind::grad_norm, 1e-4, std::nullopt};
    if (rule_override) rule = *rule_override;
    out.trace = run_stochastic(sm, oracle, sc, rule, x0, probe ? &truth : nullptr);
    out.summary["variance_regime"] = out.trace.variance_regime;
    out.summary["pilot_samples"] = out.trace.pilot_samples;
    if (auto t = stopping_time(out.trace, rule)) out.summary["t_eps"] = *t;
  }

  out.summary["status"] = to_string(out.trace.status);
  out.summary["iterations"] = out.trace.iterations();
  out.summary["total_samples"] = out.trace.total_samples;
  out.summary["final"] = detail::final_json(out.trace);
  return out;
}

inline json run_sg_compare(const ExperimentConfig& cfg, const json& j, ArtifactSink& sink) {
  DataSpec dspec = DataSpec::parse(j.at("data"), "data");
  Dataset ds = dspec.load();
  const double lambda = cfg::get_or<double>(j, "lambda", 1e-4);
  FiniteSumProblem prob = logistic_problem(std::make_shared<Dataset>(std::move(ds)), lambda);

  const auto batch = cfg::get_or<std::size_t>(j, "batch", 64);
  const int epochs = cfg::get_or<int>(j, "epochs", 10);
  const bool shuffled = cfg::get_or<bool>(j, "shuffled", false);
  std::vector<double> stepsizes = cfg::get_or<std::vector<double>>(j, "sg_stepsizes", {1.0, 0.1, 0.01});
  std::vector<double> alpha0s = cfg::get_or<std::vector<double>>(j, "adaptive_alpha0", {1.0, 0.1, 0.01});
  const double ga = cfg::get_or<double>(j, "gamma_alpha", 2.0);
  const double gb = cfg::get_or<double>(j, "gamma_batch", 2.0);
  const double ae = cfg::get_or<double>(j, "armijo_eta", 1e-4);

  json summary;
  summary["kind"] = "sg_compare";
  summary["sampling"] = shuffled ? "shuffled_epochs" : "iid_with_replacement";
  summary["lambda"] = lambda;
  summary["batch"] = batch;
  summary["epochs"] = epochs;

  std::vector<std::pair<std::string, std::vector<double>>> curves;
  double best_sg = 0.0;
  std::uint64_t run_idx = 0;
  for (double a : stepsizes) {
    auto run = sg_baseline(prob, a, batch, epochs, derive_seed(cfg.seed, run_idx++), shuffled);
    const std::string name = "sg_" + format_double(a);
    write_trace_csv(run.trace, sink.path("trace_" + name + ".csv").string());
    curves.push_back({name, run.accuracy});
    summary["sg"][format_double(a)] = run.accuracy.back();
    best_sg = std::max(best_sg, run.accuracy.back());
  }
  summary["best_sg"] = best_sg;

  double worst_gap = 0.0;
  for (double a0 : alpha0s) {
    auto run =
        adaptive_sg_experiment(prob, a0, batch, ga, gb, ae, epochs, derive_seed(cfg.seed, run_idx++));
    const std::string name = "adaptive_" + format_double(a0);
    write_trace_csv(run.trace, sink.path("trace_" + name + ".csv").string());
    curves.push_back({name, run.accuracy});
    summary["adaptive"][format_double(a0)] = run.accuracy.back();
    worst_gap = std::max(worst_gap, best_sg - run.accuracy.back());
  }
  summary["worst_adaptive_gap"] = worst_gap;

  // plot data: one accuracy column per run, rows are epochs
  {
    std::ofstream out(sink.path("accuracy.csv"));
    out << "epoch";
    for (const auto& [name, _] : curves) out << ',' << name;
    out << "\n";
    for (int e = 0; e <= epochs; ++e) {
      out << e;
      for (const auto& [_, acc] : curves)
        out << ',' << format_double(e < static_cast<int>(acc.size()) ? acc[e] : acc.back());
      out << "\n";
    }
  }
  return summary;
}

inline json run_sweep(const ExperimentConfig& cfg, const json& j, ArtifactSink& sink, int jobs) {
  std::vector<double> eps_list = j.at("eps_list").get<std::vector<double>>();
  std::vector<std::uint64_t> seeds =
      cfg::get_or<std::vector<std::uint64_t>>(j, "seeds", {cfg.seed});
  const std::string fit_mode = cfg::get_or<std::string>(j, "fit", "loglog");
  const std::string method = j.at("method").get<std::string>();

  struct Cell {
    double eps;
    std::uint64_t seed;
    std::optional<long> t_eps;
    RunStatus status = RunStatus::max_iters;
    std::uint64_t samples = 0;
    long iterations = 0;
    std::string rel;
  };
  std::vector<Cell> cells;
  for (std::size_t ei = 0; ei < eps_list.size(); ++ei)
    for (std::size_t si = 0; si < seeds.size(); ++si) {
      Cell c;
      c.eps = eps_list[ei];
      c.seed = seeds[si];
      c.rel = "cells/eps" + std::to_string(ei) + "_seed" + std::to_string(si) + "/trace.csv";
      cells.push_back(c);
    }

  json cell_cfg = j;
  cell_cfg["verify_condition1"] = false;  // per-cell verification is the verify command's job

  std::mutex sink_mu;
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      Cell& cell = cells[i];
      StoppingRule rule;
      if (j.contains("stop")) rule = parse_stop(j.at("stop"), "stop", 0.0);
      rule.eps = cell.eps;
      auto art = run_optimize(cfg, cell_cfg, cell.seed, &rule);
      cell.status = art.trace.status;
      cell.samples = art.trace.total_samples;
      cell.iterations = art.trace.iterations();
      StoppingRule trule = rule;
      if (trule.kind == StoppingRule::Kind::f_gap && !trule.f_star) trule.f_star = 0.0;
      cell.t_eps = stopping_time(art.trace, trule);
      std::lock_guard<std::mutex> lock(sink_mu);
      write_trace_csv(art.trace, sink.path(cell.rel).string());
    }
  };
  const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  json summary;
  summary["kind"] = "sweep";
  summary["method"] = method;
  summary["cells"] = json::array();
  for (const auto& c : cells) {
    json e;
    e["eps"] = c.eps;
    e["seed"] = c.seed;
    e["status"] = to_string(c.status);
    e["iterations"] = c.iterations;
    e["samples"] = c.samples;
    if (c.t_eps) e["t_eps"] = *c.t_eps;
    e["trace"] = c.rel;
    summary["cells"].push_back(e);
  }

  std::vector<std::pair<double, double>> fit_points;
  summary["per_eps"] = json::array();
  for (double eps : eps_list) {
    std::vector<double> ts;
    for (const auto& c : cells)
      if (c.eps == eps && c.t_eps) ts.push_back(static_cast<double>(*c.t_eps));
    json row;
    row["eps"] = eps;
    row["converged"] = ts.size();
    if (!ts.empty()) {
      std::sort(ts.begin(), ts.end());
      const double mean = std::accumulate(ts.begin(), ts.end(), 0.0) / double(ts.size());
      row["mean_t"] = mean;
      row["p50_t"] = ts[ts.size() / 2];
      row["p90_t"] = ts[(ts.size() * 9) / 10];
      if (mean > 0.0) fit_points.push_back({eps, mean});
    }
    summary["per_eps"].push_back(row);
  }
  if (fit_mode != "none" && fit_points.size() >= 2) {
    auto fit = complexity_fit(fit_points,
                              fit_mode == "loglog" ? FitMode::loglog : FitMode::semilog);
    summary["fit"]["mode"] = fit_mode;
    summary["fit"]["slope"] = fit.slope;
    summary["fit"]["intercept"] = fit.intercept;
    summary["fit"]["r2"] = fit.r2;
  }

  // Theorem-style bound table for stochastic sweeps, using replay-
  // calibrated constants at the start state
  if (!detail::is_det_method(method) && cfg::get_or<bool>(j, "calibrate_bound", false)) {
    ProblemSpec spec = ProblemSpec::parse(j.at("problem"), "problem");
    DeterministicProblem p = spec.build();
    const Vector x0 = spec.start_point(p);
    const StochConfig sc =
        j.contains("stoch") ? parse_stoch(j.at("stoch"), "stoch") : StochConfig{};
    double sf = 0.0, sg = 0.0;
    if (j.contains("noise")) {
      sf = cfg::get_or<double>(j.at("noise"), "sigma_f", 0.0);
      sg = cfg::get_or<double>(j.at("noise"), "sigma_g", 0.0);
    }
    auto proto = noisy_oracle(p, sf, sg, derive_seed(cfg.seed, 0xCA11));

    summary["bound_table"] = json::array();
    for (double eps : eps_list) {
      ProgressMeasure m;
      m.kind = PhiKind::tr_first;
      NuParams np;
      np.eta = sc.eta;
      np.gamma = sc.gamma;
      np.c = c2_formula(1.0 / sc.tau, p.lipschitz_grad.value_or(1.0));
      m.nu = choose_nu(NuKind::tr_first, np);
      m.f_star = p.f_lower.value_or(0.0);
      m.eps = eps;
      auto cal = calibrate_stochastic(proto, detail::stoch_method_of(method), sc, m,
                                      HKind::alpha_sq, x0, 400, derive_seed(cfg.seed, 0xB0), eps / 10.0);
      PhiSnapshot s0{p.f(x0), p.grad(x0).norm(), std::min(sc.alpha0, sc.alpha_bar), sc.delta0};
      const double bound = expected_te_bound(
          phi_value(m, s0), cal.theta_hat,
          h_value(HKind::alpha_sq, cal.alpha_floor, eps), cal.delta_hat);
      double mean_t = 0.0;
      bool have = false;
      for (const auto& row : summary["per_eps"])
        if (row.at("eps").get<double>() == eps && row.contains("mean_t")) {
          mean_t = row.at("mean_t").get<double>();
          have = true;
        }
      json row;
      row["eps"] = eps;
      row["expected_te_bound"] = bound;
      row["theta_hat"] = cal.theta_hat;
      row["alpha_floor_hat"] = cal.alpha_floor;
      row["delta_hat"] = cal.delta_hat;
      if (have) {
        row["mean_t"] = mean_t;
        row["ratio"] = mean_t / bound;
        row["within_bound"] = mean_t <= bound;
      }
      summary["bound_table"].push_back(row);
    }
  }
  return summary;
}

}  // namespace detail

/// Executes a parsed config, writing traces, plot data and summary.json
/// under the output directory. Partial artifacts are removed on error.
inline json run_experiment(const ExperimentConfig& cfg, int jobs = 1) {
  detail::ArtifactSink sink(cfg.out);
  try {
    json summary;
    if (cfg.kind == "optimize") {
      auto art = detail::run_optimize(cfg, cfg.raw, cfg.seed, nullptr);
      write_trace_csv(art.trace, sink.path("trace.csv").string());
      summary = art.summary;
    } else if (cfg.kind == "sg_compare") {
      summary = detail::run_sg_compare(cfg, cfg.raw, sink);
    } else {
      summary = detail::run_sweep(cfg, cfg.raw, sink, jobs);
    }
    sink.write_json("summary.json", summary);
    return summary;
  } catch (...) {
    sink.discard_all();
    throw;
  }
}

/// Re-runs the Condition-1 checks on a stored trace file. The measure
/// and constants arrive via the verify config:
///   {"trace": path, "measure": {...}, "h": "...", "constants": {...}}
inline json verify_stored_trace(const json& vj) {
  cfg::expect_keys(vj, "verify", {"trace", "measure", "h", "constants"});
  RunTrace trace = read_trace_csv(cfg::require(vj, "verify", "trace").get<std::string>());

  const json& mj = cfg::require(vj, "verify", "measure");
  cfg::expect_keys(mj, "verify.measure", {"kind", "nu", "f_star", "eps", "L", "eta"});
  ProgressMeasure m;
  const std::string kind = cfg::require(mj, "verify.measure", "kind").get<std::string>();
  if (kind == "tr_first") m.kind = PhiKind::tr_first;
  else if (kind == "ls_first") m.kind = PhiKind::ls_first;
  else if (kind == "cubic") m.kind = PhiKind::cubic;
  else if (kind == "tr_second") m.kind = PhiKind::tr_second;
  else if (kind == "convex_ls") m.kind = PhiKind::convex_ls;
  else if (kind == "strongly_convex_ls") m.kind = PhiKind::strongly_convex_ls;
  else if (kind == "stoch_ls") m.kind = PhiKind::stoch_ls;
  else throw config_error("verify.measure.kind: unknown kind '" + kind + "'");
  m.nu = cfg::get_or<double>(mj, "nu", 0.5);
  m.f_star = cfg::get_or<double>(mj, "f_star", 0.0);
  m.eps = cfg::get_or<double>(mj, "eps", 1e-3);
  m.L = cfg::get_or<double>(mj, "L", 1.0);
  m.eta = cfg::get_or<double>(mj, "eta", 0.1);

  const std::string hs = cfg::get_or<std::string>(vj, "h", "alpha_sq");
  HKind h;
  if (hs == "alpha_sq") h = HKind::alpha_sq;
  else if (hs == "alpha_eps_sq") h = HKind::alpha_eps_sq;
  else if (hs == "alpha_eps_32") h = HKind::alpha_eps_32;
  else if (hs == "alpha_cubed") h = HKind::alpha_cubed;
  else throw config_error("verify.h: unknown h kind '" + hs + "'");

  const json& cj = cfg::require(vj, "verify", "constants");
  cfg::expect_keys(cj, "verify.constants", {"gamma", "theta", "alpha_floor"});
  AnalysisConfig ac;
  ac.gamma = cfg::get_or<double>(cj, "gamma", 2.0);
  ac.theta = cfg::require(cj, "verify.constants", "theta").get<double>();
  ac.alpha_floor = cfg::get_or<double>(cj, "alpha_floor", 0.0);

  ConditionReport rep = check_condition1(trace, m, ac, h);
  json out = detail::report_json(rep);
  out["constants"] = cj;
  out["constants"]["nu"] = m.nu;
  out["measure"] = mj;
  return out;
}

}  // namespace aopt
