#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aopt/common.hpp"

namespace aopt {

/// One row per iteration. f and grad_norm are exact values when the run
/// is instrumented with a probe and estimates otherwise; fields a method
/// does not produce stay empty.
struct TraceRecord {
  long k = 0;
  double f = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  std::optional<double> delta;               // stochastic LS control value
  int W = -1;                                // +1 success, -1 otherwise
  std::optional<std::size_t> batch_model;    // samples consumed building the model
  std::optional<std::size_t> batch_fn;       // samples consumed for the f-estimate pair
  std::optional<double> phi;                 // filled by the harness for a chosen measure
  std::optional<double> ratio;
  std::optional<double> chi;
  std::optional<double> mred;
  std::optional<double> fred;
};

enum class RunStatus {
  converged,         // stopping rule fired
  max_iters,         // budget exhausted without convergence
  stationary_point,  // exact zero gradient encountered
  near_stationary,   // adaptive sampling hit its cap with a vanishing estimate
  work_limit,        // per-estimate batch cap exceeded
};

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::converged: return "converged";
    case RunStatus::max_iters: return "max_iters";
    case RunStatus::stationary_point: return "stationary_point";
    case RunStatus::near_stationary: return "near_stationary";
    case RunStatus::work_limit: return "work_limit";
  }
  return "unknown";
}

struct RunTrace {
  std::vector<TraceRecord> records;
  std::vector<Vector> iterates;  // x_0 .. x_K when kept (deterministic runs keep them)

  Vector final_x;
  double final_f = 0.0;
  double final_grad_norm = 0.0;
  double final_alpha = 0.0;
  std::optional<double> final_delta;
  std::optional<double> final_chi;

  RunStatus status = RunStatus::max_iters;
  std::uint64_t total_samples = 0;  // sum of per-iteration batch sizes
  std::uint64_t pilot_samples = 0;
  std::string variance_regime;      // "exact" or "pilot" for stochastic runs

  long iterations() const { return static_cast<long>(records.size()); }
};

/// Convergence criteria. grad_norm fires on ||grad f(x_k)||, the cubic
/// variant on the next iterate's gradient, second_order on
/// chi = max(||g||, -lambda_min(H)), f_gap on f(x_k) - f_*.
struct StoppingRule {
  enum class Kind { grad_norm, next_grad_norm, second_order, f_gap };
  Kind kind = Kind::grad_norm;
  double eps = 1e-6;
  std::optional<double> f_star;  // required by f_gap

  void validate() const {
    if (eps <= 0.0) throw config_error("stopping rule: eps must be positive");
    if (kind == Kind::f_gap && !f_star) throw config_error("stopping rule: f_gap needs f_*");
  }
};

}  // namespace aopt
