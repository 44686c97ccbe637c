#include <catch2/catch_amalgamated.hpp>

#include "aopt/estimators.hpp"

using namespace aopt;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v(0) = a;
  return v;
}

DeterministicProblem quad1d() { return quadratic_problem(vec1(2.0), vec1(0.0)); }

}  // namespace

TEST_CASE("chebyshev_sample_size") {
  CHECK(chebyshev_sample_size(1.0, 1.0, 0.1, 0.1) == 1000);
  CHECK(chebyshev_sample_size(0.0, 1.0, 0.1, 0.1) == 1);
  CHECK(chebyshev_sample_size(1.0, 1.0, 100.0, 0.5) == 1);
  CHECK_THROWS_AS(chebyshev_sample_size(1.0, 0.0, 0.1, 0.1), config_error);
  CHECK_THROWS_AS(chebyshev_sample_size(1.0, 1.0, 0.0, 0.1), config_error);
}

TEST_CASE("chebyshev_sample_size monotonicity", "[property]") {
  Rng rng(404);
  for (int t = 0; t < 2000; ++t) {
    const double V = rng.uniform(0.0, 4.0);
    const double k = rng.uniform(0.1, 3.0);
    const double D = rng.uniform(0.01, 2.0);
    const double d = rng.uniform(0.01, 0.9);
    const auto base = chebyshev_sample_size(V, k, D, d);
    REQUIRE(chebyshev_sample_size(V, k, D * 1.5, d) <= base);       // nonincreasing in Delta
    REQUIRE(chebyshev_sample_size(V, k, D, std::min(0.95, d * 1.5)) <= base);  // and in delta
    REQUIRE(chebyshev_sample_size(V * 2.0, k, D, d) >= base);        // nondecreasing in V
  }
}

TEST_CASE("estimate_variance") {
  SECTION("zero-noise oracle has zero variance") {
    auto o = noisy_oracle(quad1d(), 0.0, 0.0, 1);
    auto v = estimate_variance(o, vec1(1.0), 100);
    CHECK(v.V_f == 0.0);
    CHECK(v.V_g == 0.0);
  }
  SECTION("unit-variance Gaussian oracle, big pilot") {
    auto o = noisy_oracle(quad1d(), 0.0, 1.0, 2718);
    auto v = estimate_variance(o, vec1(1.0), 100000);
    CHECK(v.V_g > 0.98);
    CHECK(v.V_g < 1.02);
  }
  SECTION("pilot of two is legal") {
    auto o = noisy_oracle(quad1d(), 1.0, 1.0, 3);
    auto v = estimate_variance(o, vec1(1.0), 2);
    CHECK(v.pilot == 2);
    CHECK(v.V_f >= 0.0);
  }
  SECTION("pilot below two rejected") {
    auto o = noisy_oracle(quad1d(), 1.0, 1.0, 3);
    CHECK_THROWS_AS(estimate_variance(o, vec1(1.0), 1), config_error);
  }
}

TEST_CASE("taylor_accuracy_holds") {
  auto p = quad1d();
  Vector x = vec1(1.0);
  const double f = p.f(x);
  const Vector g = p.grad(x);
  const Matrix H = p.hess(x);
  AccuracySpec spec;
  spec.kappa_f = 0.5;
  spec.kappa_g = 0.5;
  spec.kappa_H = 1.0;
  spec.delta = 0.1;

  SECTION("exact estimates pass at any radius") {
    CHECK(taylor_accuracy_holds(f, g, &H, f, g, &H, 0.01, spec));
    CHECK(taylor_accuracy_holds(f, g, &H, f, g, &H, 10.0, spec));
  }
  SECTION("one violated clause fails the conjunction") {
    const double D = 0.5;
    const double bad_f = f + 2.0 * spec.kappa_f * D * D;
    CHECK_FALSE(taylor_accuracy_holds(bad_f, g, &H, f, g, &H, D, spec));
  }
  SECTION("Chebyshev-sized gradients meet the clause at rate >= 1-delta") {
    auto o = noisy_oracle(p, 0.0, 1.0, 909);
    const double D = 0.25;
    const std::size_t n = chebyshev_sample_size(o.gradient_variance(), spec.kappa_g, D, spec.delta);
    int hold = 0;
    const int trials = 10000;
    for (int t = 0; t < trials; ++t) {
      const Vector gi = o.gradient_estimate(x, n);
      if ((gi - g).norm() <= spec.kappa_g * D) ++hold;
    }
    CHECK(static_cast<double>(hold) / trials >= 1.0 - spec.delta);
  }
}

TEST_CASE("gradient_norm_condition_holds") {
  Vector g = vec1(1.05), gt = vec1(1.0);
  CHECK(gradient_norm_condition_holds(gt, gt, 0.0));
  CHECK(gradient_norm_condition_holds(g, gt, 0.1));  // error 0.05 <= 0.1
  CHECK_FALSE(gradient_norm_condition_holds(vec1(0.5), vec1(0.0), 0.5));
  CHECK_THROWS_AS(gradient_norm_condition_holds(g, gt, 1.0), config_error);
}

TEST_CASE("adaptive_gradient_sample") {
  auto p = quad1d();
  AccuracySpec spec;
  spec.kappa_g = 0.5;
  spec.delta = 0.1;

  SECTION("zero noise terminates at n0 with the exact gradient") {
    auto o = noisy_oracle(p, 0.0, 0.0, 7);
    VarianceEstimate v = exact_variance(o);
    auto r = adaptive_gradient_sample(o, vec1(1.0), 1.0, spec, v);
    CHECK(r.batch == 4);
    CHECK(r.drawn == 4);
    CHECK_FALSE(r.near_stationary);
    CHECK(r.g(0) == p.grad(vec1(1.0))(0));
  }

  SECTION("doubling lands one rung above the plug-in requirement") {
    // ||grad f|| = 1 at x = 0.5, V_g = 1: need ~ 1/(0.1 * 0.25) = 40, so
    // the doubling grid from 4 stops at 64 (within a factor-2 band)
    auto o = noisy_oracle(p, 0.0, 1.0, 515);
    VarianceEstimate v = exact_variance(o);
    double sum = 0.0;
    int reps = 200;
    for (int i = 0; i < reps; ++i) {
      auto r = adaptive_gradient_sample(o, vec1(0.5), 1.0, spec, v);
      REQUIRE(r.batch >= chebyshev_sample_size(v.V_g, spec.kappa_g, 1.0 * r.g.norm(), spec.delta));
      sum += static_cast<double>(r.batch);
    }
    CHECK(sum / reps >= 32.0);
    CHECK(sum / reps <= 128.0);
  }

  SECTION("stationary point hits the cap with a near-stationarity signal") {
    auto o = noisy_oracle(p, 0.0, 1.0, 99);
    VarianceEstimate v = exact_variance(o);
    auto r = adaptive_gradient_sample(o, vec1(0.0), 1e-3, spec, v, 4, 1 << 10);
    CHECK(r.near_stationary);
    CHECK(r.batch == 1 << 10);
  }
}

TEST_CASE("function_pair_estimates") {
  auto p = quad1d();
  AccuracySpec spec;
  spec.kappa_f = 1.0;
  spec.delta = 0.1;

  SECTION("zero noise returns exact values at batch 1") {
    auto o = noisy_oracle(p, 0.0, 0.0, 5);
    VarianceEstimate v = exact_variance(o);
    auto r = function_pair_estimates(o, vec1(1.0), vec1(0.5), 0.5, spec, v);
    CHECK(r.batch == 1);
    CHECK(r.f0 == p.f(vec1(1.0)));
    CHECK(r.fs == p.f(vec1(0.5)));
  }

  SECTION("sigma_f = 1, Delta = 0.5 gives n = 16 and the second moment bound") {
    auto o = noisy_oracle(p, 1.0, 0.0, 927);
    VarianceEstimate v = exact_variance(o);
    const double D = 0.5;
    double m2 = 0.0;
    const int trials = 10000;
    std::size_t n_seen = 0;
    for (int t = 0; t < trials; ++t) {
      auto r = function_pair_estimates(o, vec1(1.0), vec1(0.5), D, spec, v);
      n_seen = r.batch;
      const double err = r.f0 - p.f(vec1(1.0));
      m2 += err * err;
    }
    CHECK(n_seen == 16);
    CHECK(m2 / trials <= 1.1 * spec.kappa_f * D * D * D * D);
  }

  SECTION("huge Delta clamps the batch at one") {
    auto o = noisy_oracle(p, 1.0, 0.0, 11);
    VarianceEstimate v = exact_variance(o);
    auto r = function_pair_estimates(o, vec1(1.0), vec1(0.5), 1e6, spec, v);
    CHECK(r.batch == 1);
  }
}

TEST_CASE("Chebyshev soundness: violation rate stays below delta", "[property]") {
  auto p = quad1d();
  auto o = noisy_oracle(p, 0.0, 1.3, 2222);
  const Vector x = vec1(0.8);
  const Vector g = p.grad(x);
  const double kappa = 0.4, Delta = 0.3, delta = 0.05;
  const std::size_t n = chebyshev_sample_size(o.gradient_variance(), kappa, Delta, delta);
  int viol = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t)
    if ((o.gradient_estimate(x, n) - g).norm() > kappa * Delta) ++viol;
  CHECK(static_cast<double>(viol) / trials <= delta + 0.02);
}
