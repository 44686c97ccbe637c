#pragma once

#include <fstream>
#include <initializer_list>
#include <json.hpp>
#include <optional>
#include <string>

#include "aopt/data.hpp"
#include "aopt/det_methods.hpp"
#include "aopt/finite_sum.hpp"
#include "aopt/stoch_methods.hpp"

namespace aopt {

using json = nlohmann::json;

namespace cfg {

inline void expect_keys(const json& j, const std::string& ctx,
                        std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw config_error(ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) throw config_error(ctx + ": unknown key '" + it.key() + "'");
  }
}

inline const json& require(const json& j, const std::string& ctx, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw config_error(ctx + ": missing key '" + key + "'");
  return *it;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->get<T>();
}

inline Vector get_vector(const json& j, const std::string& ctx) {
  if (!j.is_array()) throw config_error(ctx + ": expected an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& e : j) {
    if (!e.is_number()) throw config_error(ctx + ": expected an array of numbers");
    v(i++) = e.get<double>();
  }
  return v;
}

}  // namespace cfg

/// Dataset source: synthetic generator, IDX pair(s) or CSV.
struct DataSpec {
  json raw;

  static DataSpec parse(const json& j, const std::string& ctx) {
    const std::string kind = cfg::require(j, ctx, "kind").get<std::string>();
    if (kind == "synthetic") {
      cfg::expect_keys(j, ctx, {"kind", "n", "d", "margin", "split", "seed"});
    } else if (kind == "idx") {
      cfg::expect_keys(j, ctx, {"kind", "images", "labels", "test_images", "test_labels"});
    } else if (kind == "csv") {
      cfg::expect_keys(j, ctx, {"kind", "path", "label", "split"});
    } else {
      throw config_error(ctx + ": unknown data kind '" + kind + "'");
    }
    return DataSpec{j};
  }

  Dataset load() const {
    const std::string kind = raw.at("kind").get<std::string>();
    if (kind == "synthetic") {
      Dataset ds = gen_synthetic(cfg::get_or<std::size_t>(raw, "n", 10000),
                                 cfg::get_or<int>(raw, "d", 50),
                                 cfg::get_or<double>(raw, "margin", 2.0),
                                 cfg::get_or<std::uint64_t>(raw, "seed", 1));
      ds.split_head(cfg::get_or<double>(raw, "split", 0.8));
      return ds;
    }
    if (kind == "idx") {
      Dataset train = load_idx(raw.at("images").get<std::string>(),
                               raw.at("labels").get<std::string>());
      if (raw.contains("test_images")) {
        Dataset test = load_idx(raw.at("test_images").get<std::string>(),
                                raw.at("test_labels").get<std::string>());
        return with_test_split(train, test);
      }
      train.split_head(0.85);
      return train;
    }
    Dataset ds = load_csv(raw.at("path").get<std::string>(),
                          cfg::get_or<std::string>(raw, "label", "y"));
    ds.split_head(cfg::get_or<double>(raw, "split", 0.8));
    return ds;
  }
};

/// Objective under test plus its default start point.
struct ProblemSpec {
  json raw;
  std::optional<DataSpec> data;

  static ProblemSpec parse(const json& j, const std::string& ctx) {
    ProblemSpec out;
    out.raw = j;
    const std::string kind = cfg::require(j, ctx, "kind").get<std::string>();
    if (kind == "quadratic") {
      cfg::expect_keys(j, ctx, {"kind", "diag", "shift", "x0"});
    } else if (kind == "rosenbrock") {
      cfg::expect_keys(j, ctx, {"kind", "n", "x0"});
    } else if (kind == "logistic") {
      cfg::expect_keys(j, ctx, {"kind", "lambda", "data", "x0"});
      out.data = DataSpec::parse(cfg::require(j, ctx, "data"), ctx + ".data");
    } else {
      throw config_error(ctx + ": unknown problem kind '" + kind + "'");
    }
    return out;
  }

  DeterministicProblem build() const {
    const std::string kind = raw.at("kind").get<std::string>();
    if (kind == "quadratic")
      return quadratic_problem(cfg::get_vector(raw.at("diag"), "problem.diag"),
                               cfg::get_vector(raw.at("shift"), "problem.shift"));
    if (kind == "rosenbrock") return rosenbrock_problem(cfg::get_or<int>(raw, "n", 2));
    return logistic_problem(data->load(), cfg::get_or<double>(raw, "lambda", 1e-4))
        .as_deterministic();
  }

  FiniteSumProblem build_finite_sum() const {
    if (raw.at("kind").get<std::string>() != "logistic")
      throw config_error("problem: mini-batch methods need a logistic problem");
    return logistic_problem(data->load(), cfg::get_or<double>(raw, "lambda", 1e-4));
  }

  Vector start_point(const DeterministicProblem& p) const {
    if (raw.contains("x0")) {
      Vector x0 = cfg::get_vector(raw.at("x0"), "problem.x0");
      if (x0.size() != p.dim) throw config_error("problem.x0: dimension mismatch");
      return x0;
    }
    const std::string kind = raw.at("kind").get<std::string>();
    if (kind == "rosenbrock") {
      Vector x0 = Vector::Ones(p.dim);
      x0(0) = -1.2;
      return x0;
    }
    if (kind == "quadratic") return Vector::Ones(p.dim);
    return Vector::Zero(p.dim);
  }
};

inline StoppingRule parse_stop(const json& j, const std::string& ctx, double default_fstar) {
  cfg::expect_keys(j, ctx, {"kind", "eps", "f_star"});
  StoppingRule r;
  const std::string kind = cfg::get_or<std::string>(j, "kind", "grad_norm");
  if (kind == "grad_norm") r.kind = StoppingRule::Kind::grad_norm;
  else if (kind == "next_grad_norm") r.kind = StoppingRule::Kind::next_grad_norm;
  else if (kind == "second_order") r.kind = StoppingRule::Kind::second_order;
  else if (kind == "f_gap") r.kind = StoppingRule::Kind::f_gap;
  else throw config_error(ctx + ": unknown stopping kind '" + kind + "'");
  r.eps = cfg::get_or<double>(j, "eps", 1e-4);
  if (r.kind == StoppingRule::Kind::f_gap)
    r.f_star = cfg::get_or<double>(j, "f_star", default_fstar);
  return r;
}

inline DetConfig parse_det(const json& j, const std::string& ctx) {
  cfg::expect_keys(j, ctx,
                   {"eta", "gamma", "alpha_bar", "alpha0", "tau", "beta_dir", "eps", "max_iters"});
  DetConfig c;
  c.eta = cfg::get_or<double>(j, "eta", c.eta);
  c.gamma = cfg::get_or<double>(j, "gamma", c.gamma);
  c.alpha_bar = cfg::get_or<double>(j, "alpha_bar", c.alpha_bar);
  c.alpha0 = cfg::get_or<double>(j, "alpha0", std::min(c.alpha0, c.alpha_bar));
  c.tau = cfg::get_or<double>(j, "tau", c.tau);
  c.beta_dir = cfg::get_or<double>(j, "beta_dir", c.beta_dir);
  c.eps = cfg::get_or<double>(j, "eps", c.eps);
  c.max_iters = cfg::get_or<long>(j, "max_iters", c.max_iters);
  c.validate();
  return c;
}

inline StochConfig parse_stoch(const json& j, const std::string& ctx) {
  cfg::expect_keys(j, ctx,
                   {"eta", "gamma", "alpha_bar", "alpha0", "delta1", "delta2", "tau", "kappa_f",
                    "kappa_g", "kappa_H", "delta0", "batch_cap", "ls_cap", "n0", "pilot",
                    "surrogate_theta", "max_iters"});
  StochConfig c;
  c.eta = cfg::get_or<double>(j, "eta", c.eta);
  c.gamma = cfg::get_or<double>(j, "gamma", c.gamma);
  c.alpha_bar = cfg::get_or<double>(j, "alpha_bar", c.alpha_bar);
  c.alpha0 = cfg::get_or<double>(j, "alpha0", std::min(c.alpha0, c.alpha_bar));
  c.delta1 = cfg::get_or<double>(j, "delta1", c.delta1);
  c.delta2 = cfg::get_or<double>(j, "delta2", c.delta2);
  c.tau = cfg::get_or<double>(j, "tau", c.tau);
  c.kappa_f = cfg::get_or<double>(j, "kappa_f", c.kappa_f);
  c.kappa_g = cfg::get_or<double>(j, "kappa_g", c.kappa_g);
  c.kappa_H = cfg::get_or<double>(j, "kappa_H", c.kappa_H);
  c.delta0 = cfg::get_or<double>(j, "delta0", c.delta0);
  c.batch_cap = cfg::get_or<std::size_t>(j, "batch_cap", c.batch_cap);
  c.ls_cap = cfg::get_or<std::size_t>(j, "ls_cap", c.ls_cap);
  c.n0 = cfg::get_or<std::size_t>(j, "n0", c.n0);
  c.pilot = cfg::get_or<std::size_t>(j, "pilot", c.pilot);
  c.surrogate_theta = cfg::get_or<double>(j, "surrogate_theta", c.surrogate_theta);
  c.max_iters = cfg::get_or<long>(j, "max_iters", c.max_iters);
  c.validate();
  return c;
}

/// Parsed, schema-validated experiment configuration. Unknown keys are
/// rejected at every level.
struct ExperimentConfig {
  std::string kind;  // optimize | sg_compare | sweep
  std::uint64_t seed = 1;
  std::string out = "out";
  json raw;

  static ExperimentConfig parse(const json& j) {
    ExperimentConfig c;
    c.kind = cfg::require(j, "config", "kind").get<std::string>();
    c.seed = cfg::get_or<std::uint64_t>(j, "seed", 1);
    c.out = cfg::get_or<std::string>(j, "out", "out");
    c.raw = j;

    if (c.kind == "optimize") {
      cfg::expect_keys(j, "config",
                       {"kind", "seed", "out", "method", "problem", "stop", "det", "stoch",
                        "noise", "probe", "verify_condition1"});
      ProblemSpec::parse(cfg::require(j, "config", "problem"), "problem");
      const std::string m = cfg::require(j, "config", "method").get<std::string>();
      if (m != "tr" && m != "ls" && m != "cubic" && m != "storm" && m != "storm2" && m != "sls")
        throw config_error("config.method: unknown method '" + m + "'");
      if (j.contains("det")) parse_det(j.at("det"), "det");
      if (j.contains("stoch")) parse_stoch(j.at("stoch"), "stoch");
      if (j.contains("noise"))
        cfg::expect_keys(j.at("noise"), "noise", {"sigma_f", "sigma_g", "seed"});
      if (j.contains("stop")) parse_stop(j.at("stop"), "stop", 0.0);
    } else if (c.kind == "sg_compare") {
      cfg::expect_keys(j, "config",
                       {"kind", "seed", "out", "data", "lambda", "batch", "epochs",
                        "sg_stepsizes", "adaptive_alpha0", "gamma_alpha", "gamma_batch",
                        "armijo_eta", "shuffled"});
      DataSpec::parse(cfg::require(j, "config", "data"), "data");
    } else if (c.kind == "sweep") {
      cfg::expect_keys(j, "config",
                       {"kind", "seed", "out", "method", "problem", "stop", "det", "stoch",
                        "noise", "eps_list", "seeds", "fit", "calibrate_bound", "jobs"});
      ProblemSpec::parse(cfg::require(j, "config", "problem"), "problem");
      const auto& eps = cfg::require(j, "config", "eps_list");
      if (!eps.is_array() || eps.size() < 1)
        throw config_error("config.eps_list: expected a non-empty array");
      const std::string fit = cfg::get_or<std::string>(j, "fit", "loglog");
      if (fit != "loglog" && fit != "semilog" && fit != "none")
        throw config_error("config.fit: expected loglog, semilog or none");
      if (fit != "none" && eps.size() < 2)
        throw config_error("config.eps_list: slope fitting needs at least 2 eps values");
      if (j.contains("det")) parse_det(j.at("det"), "det");
      if (j.contains("stoch")) parse_stoch(j.at("stoch"), "stoch");
    } else {
      throw config_error("config.kind: expected optimize, sg_compare or sweep, got '" + c.kind +
                         "'");
    }
    return c;
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error(path + ": cannot open config");
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw config_error(path + ": JSON parse error: " + e.what());
    }
    return parse(j);
  }
};

}  // namespace aopt
