#pragma once

#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "aopt/finite_sum.hpp"
#include "aopt/problem.hpp"
#include "aopt/rng.hpp"

namespace aopt {

struct Estimate {
  double f = 0.0;
  Vector g;
  Matrix H;
  bool has_hessian = false;
  std::size_t samples = 0;
};

/// Unbiased stochastic oracle over an underlying problem. Two noise
/// models: additive Gaussian perturbations of exact evaluators, and
/// mini-batch sampling (with replacement) of a finite sum. Each oracle
/// owns a private RNG stream; clone with a derived seed instead of
/// sharing across concurrent consumers.
///
/// Gaussian batch estimates are drawn in closed form: the average of n
/// i.i.d. N(v, s^2) draws is N(v, s^2/n), sampled directly. This is
/// distribution-exact and keeps huge Chebyshev batch sizes O(1) to draw.
class StochasticOracle {
 public:
  static StochasticOracle gaussian(DeterministicProblem p, double sigma_f, double sigma_g,
                                   std::uint64_t seed) {
    if (sigma_f < 0.0 || sigma_g < 0.0)
      throw config_error("noisy_oracle: noise standard deviations must be >= 0");
    StochasticOracle o;
    o.kind_ = Kind::gaussian;
    o.prob_ = std::make_shared<DeterministicProblem>(std::move(p));
    o.sigma_f_ = sigma_f;
    o.sigma_g_ = sigma_g;
    o.seed_ = seed;
    o.rng_.reseed(seed);
    return o;
  }

  static StochasticOracle minibatch(FiniteSumProblem p, std::uint64_t seed) {
    StochasticOracle o;
    o.kind_ = Kind::minibatch;
    o.fsum_ = std::make_shared<FiniteSumProblem>(std::move(p));
    o.prob_ = std::make_shared<DeterministicProblem>(o.fsum_->as_deterministic());
    o.seed_ = seed;
    o.rng_.reseed(seed);
    return o;
  }

  int dim() const { return prob_->dim; }
  bool is_minibatch() const { return kind_ == Kind::minibatch; }
  const FiniteSumProblem* finite_sum() const { return fsum_.get(); }

  /// Exact evaluators of the underlying problem (instrumentation only).
  const DeterministicProblem& truth() const { return *prob_; }

  /// Batch size 1 variances, exactly known for Gaussian oracles.
  bool has_exact_variance() const { return kind_ == Kind::gaussian; }
  double gradient_variance() const {
    if (!has_exact_variance()) throw config_error("gradient_variance: only known for Gaussian oracles");
    return static_cast<double>(dim()) * sigma_g_ * sigma_g_;
  }
  double value_variance() const {
    if (!has_exact_variance()) throw config_error("value_variance: only known for Gaussian oracles");
    return sigma_f_ * sigma_f_;
  }

  StochasticOracle clone_with_seed(std::uint64_t seed) const {
    StochasticOracle o = *this;
    o.seed_ = seed;
    o.rng_.reseed(seed);
    return o;
  }

  double value_estimate(const Vector& x, std::size_t n) {
    check_batch(n);
    if (kind_ == Kind::gaussian) {
      const double f = prob_->f(x);
      return sigma_f_ == 0.0 ? f : f + sigma_f_ / std::sqrt(double(n)) * rng_.normal();
    }
    return fsum_->sample_value(x, draw_batch(n));
  }

  Vector gradient_estimate(const Vector& x, std::size_t n) {
    check_batch(n);
    if (kind_ == Kind::gaussian) {
      Vector g = prob_->grad(x);
      if (sigma_g_ != 0.0) {
        const double s = sigma_g_ / std::sqrt(double(n));
        for (int i = 0; i < g.size(); ++i) g(i) += s * rng_.normal();
      }
      return g;
    }
    return fsum_->sample_eval(x, draw_batch(n)).g;
  }

  Estimate full_estimate(const Vector& x, std::size_t n, bool want_hessian = false) {
    check_batch(n);
    Estimate e;
    e.samples = n;
    if (kind_ == Kind::gaussian) {
      e.f = prob_->f(x);
      e.g = prob_->grad(x);
      if (sigma_f_ != 0.0) e.f += sigma_f_ / std::sqrt(double(n)) * rng_.normal();
      if (sigma_g_ != 0.0) {
        const double s = sigma_g_ / std::sqrt(double(n));
        for (int i = 0; i < e.g.size(); ++i) e.g(i) += s * rng_.normal();
      }
      if (want_hessian && prob_->has_hessian()) {
        e.H = prob_->hess(x);  // Hessian noise is not modeled for Gaussian oracles
        e.has_hessian = true;
      }
      return e;
    }
    const SampleEval se = fsum_->sample_eval(x, draw_batch(n), want_hessian);
    e.f = se.f;
    e.g = se.g;
    e.H = se.H;
    e.has_hessian = se.has_hessian;
    return e;
  }

  /// Estimates of f at two points with a common batch size. Mini-batch
  /// oracles evaluate both points on the same index draw unless
  /// independent draws are requested; Gaussian noise is always
  /// independent across the pair.
  std::pair<double, double> value_pair_estimate(const Vector& x0, const Vector& x1, std::size_t n,
                                                bool shared_batch = true) {
    check_batch(n);
    if (kind_ == Kind::gaussian) {
      double f0 = prob_->f(x0), f1 = prob_->f(x1);
      if (sigma_f_ != 0.0) {
        const double s = sigma_f_ / std::sqrt(double(n));
        f0 += s * rng_.normal();
        f1 += s * rng_.normal();
      }
      return {f0, f1};
    }
    if (shared_batch) {
      const auto batch = draw_batch(n);
      return {fsum_->sample_value(x0, batch), fsum_->sample_value(x1, batch)};
    }
    return {fsum_->sample_value(x0, draw_batch(n)), fsum_->sample_value(x1, draw_batch(n))};
  }

  /// Number of fresh sample draws consumed by value_pair_estimate.
  std::size_t pair_draw_cost(std::size_t n, bool shared_batch = true) const {
    if (kind_ == Kind::gaussian) return 2 * n;
    return shared_batch ? n : 2 * n;
  }

  /// Running gradient average that can be extended with more samples,
  /// as the guess-and-double loop requires.
  struct GradientAccumulator {
    Vector point;
    Vector sum;          // sum over draws of per-draw gradient estimates
    std::size_t n = 0;

    Vector mean() const { return sum / static_cast<double>(n); }
  };

  GradientAccumulator start_gradient(const Vector& x) const {
    GradientAccumulator a;
    a.point = x;
    a.sum = Vector::Zero(dim());
    return a;
  }

  void extend_gradient(GradientAccumulator& a, std::size_t n_more) {
    check_batch(n_more);
    if (kind_ == Kind::gaussian) {
      Vector add = static_cast<double>(n_more) * prob_->grad(a.point);
      if (sigma_g_ != 0.0) {
        const double s = sigma_g_ * std::sqrt(double(n_more));
        for (int i = 0; i < add.size(); ++i) add(i) += s * rng_.normal();
      }
      a.sum += add;
      a.n += n_more;
      return;
    }
    // accumulate raw per-sample gradients; the regularizer term is exact
    // and added at mean() time via sample_eval's convention, so fold it in
    // per draw to keep mean() a plain average.
    const auto batch = draw_batch(n_more);
    const SampleEval se = fsum_->sample_eval(a.point, batch);
    a.sum += static_cast<double>(n_more) * se.g;
    a.n += n_more;
  }

 private:
  enum class Kind { gaussian, minibatch };

  static void check_batch(std::size_t n) {
    if (n == 0) throw config_error("oracle: batch size must be >= 1");
  }

  std::vector<std::size_t> draw_batch(std::size_t n) {
    std::vector<std::size_t> idx(n);
    const std::size_t N = fsum_->num_samples();
    for (auto& i : idx) i = rng_.uniform_below(N);
    return idx;
  }

  Kind kind_ = Kind::gaussian;
  std::shared_ptr<DeterministicProblem> prob_;
  std::shared_ptr<FiniteSumProblem> fsum_;
  double sigma_f_ = 0.0, sigma_g_ = 0.0;
  std::uint64_t seed_ = 0;
  Rng rng_;
};

/// Additive-Gaussian oracle over a problem with exact evaluators;
/// V_g = dim * sigma_g^2 is exactly known.
inline StochasticOracle noisy_oracle(DeterministicProblem p, double sigma_f, double sigma_g,
                                     std::uint64_t seed) {
  return StochasticOracle::gaussian(std::move(p), sigma_f, sigma_g, seed);
}

inline StochasticOracle minibatch_oracle(FiniteSumProblem p, std::uint64_t seed) {
  return StochasticOracle::minibatch(std::move(p), seed);
}

}  // namespace aopt
