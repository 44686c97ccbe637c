#include <catch2/catch_amalgamated.hpp>

#include "aopt/det_methods.hpp"
#include "aopt/rng.hpp"

using namespace aopt;

namespace {

Vector vec1(double a) {
  Vector v(1);
  v(0) = a;
  return v;
}

Vector vec2(double a, double b) {
  Vector v(2);
  v(0) = a;
  v(1) = b;
  return v;
}

DeterministicProblem quad1d() { return quadratic_problem(vec1(2.0), vec1(0.0)); }

DetState state_at(const Vector& x, double alpha) {
  DetState s;
  s.x = x;
  s.alpha = alpha;
  return s;
}

// plain backtracking Armijo descent, written independently of the library
// path, used as a reference optimizer
Vector reference_descent(const DeterministicProblem& p, Vector x, double gtol, long iters) {
  for (long k = 0; k < iters; ++k) {
    const Vector g = p.grad(x);
    if (g.norm() <= gtol) break;
    double t = 1.0;
    const double f = p.f(x);
    const double gg = g.squaredNorm();
    while (t > 1e-18 && p.f(x - t * g) > f - 1e-4 * t * gg) t *= 0.5;
    x -= t * g;
  }
  return x;
}

}  // namespace

TEST_CASE("stepsize_update") {
  CHECK(stepsize_update(0.5, +1, 2.0, 1.0) == 1.0);
  CHECK(stepsize_update(0.5, -1, 2.0, 1.0) == 0.25);
  CHECK(stepsize_update(1.0, +1, 2.0, 1.0) == 1.0);
}

TEST_CASE("det_tr_iteration on f(x)=x^2") {
  auto p = quad1d();
  DetConfig c;
  c.eta = 0.5;
  c.gamma = 2.0;
  c.alpha_bar = 2.0;
  c.tau = 1.0;

  SECTION("full Newton step accepted") {
    auto [next, rec] = det_tr_iteration(state_at(vec1(1.0), 1.0), p, c);
    CHECK(rec.W == 1);
    CHECK(*rec.ratio == Catch::Approx(1.0).margin(1e-14));
    CHECK(next.x(0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(next.alpha == 2.0);
  }
  SECTION("tau gate fails the iteration even with a perfect ratio") {
    c.tau = 0.4;  // tau ||grad|| = 0.8 < alpha = 1
    auto [next, rec] = det_tr_iteration(state_at(vec1(1.0), 1.0), p, c);
    CHECK(rec.W == -1);
    CHECK(next.x(0) == 1.0);
    CHECK(next.alpha == 0.5);
    CHECK(!rec.ratio.has_value());
  }
  SECTION("stationary point guard") {
    CHECK_THROWS_AS(det_tr_iteration(state_at(vec1(0.0), 1.0), p, c), config_error);
  }
}

TEST_CASE("det_ls_iteration on f(x)=x^2") {
  auto p = quad1d();
  DetConfig c;
  c.eta = 0.5;
  c.gamma = 2.0;
  c.alpha_bar = 1.0;
  auto M = Preconditioner::identity(1);

  SECTION("moderate step passes Armijo") {
    auto [next, rec] = det_ls_iteration(state_at(vec1(1.0), 0.25), p, c, M);
    CHECK(rec.W == 1);
    CHECK(next.x(0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(*rec.fred == Catch::Approx(0.75).margin(1e-15));
  }
  SECTION("overshoot fails Armijo") {
    auto [next, rec] = det_ls_iteration(state_at(vec1(1.0), 1.0), p, c, M);
    CHECK(rec.W == -1);
    CHECK(next.x(0) == 1.0);
    CHECK(next.alpha == 0.5);
    CHECK(*rec.fred == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("stationary point guard") {
    CHECK_THROWS_AS(det_ls_iteration(state_at(vec1(0.0), 1.0), p, c, M), config_error);
  }
}

TEST_CASE("det_cubic_iteration on f(x)=x^2") {
  auto p = quad1d();
  DetConfig c;
  c.eta = 0.1;
  c.gamma = 2.0;
  c.alpha_bar = 4.0;

  SECTION("step is 1 - sqrt(3) and the ratio accepts") {
    auto [next, rec] = det_cubic_iteration(state_at(vec1(1.0), 1.0), p, c);
    CHECK(rec.W == 1);
    CHECK(next.x(0) - 1.0 == Catch::Approx(1.0 - std::sqrt(3.0)).margin(1e-10));
    CHECK(*rec.ratio >= c.eta);
  }
  SECTION("small-alpha limit: step vanishes and the ratio accepts for any eta < 1") {
    // with s ~ -sqrt(2 alpha), fred ~ 2 sqrt(2 alpha) while the cubic
    // penalty shrinks mred to (2/3) fred, so the ratio tends to 3/2
    auto [next, rec] = det_cubic_iteration(state_at(vec1(1.0), 1e-6), p, c);
    CHECK(rec.W == 1);
    CHECK(std::abs(next.x(0) - 1.0) < 2e-3);
    CHECK(*rec.ratio == Catch::Approx(1.5).margin(1e-3));
    CHECK(*rec.ratio >= c.eta);
  }
  SECTION("missing Hessian is a configuration error") {
    DeterministicProblem q = p;
    q.hessian = nullptr;
    CHECK_THROWS_AS(det_cubic_iteration(state_at(vec1(1.0), 1.0), q, c), config_error);
  }
}

TEST_CASE("run_deterministic") {
  SECTION("TR on the quadratic converges with the strong-convexity bound") {
    auto p = quadratic_problem(vec2(1.0, 4.0), vec2(0.0, 0.0));
    DetConfig c;
    c.eta = 0.1;
    c.tau = 10.0;
    StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-6, std::nullopt};
    auto trace = run_deterministic(DetMethod::tr, p, c, rule, vec2(1.0, 1.0));
    REQUIRE(trace.status == RunStatus::converged);
    CHECK(trace.final_grad_norm <= 1e-6);
    // ||grad f||^2 >= 2 mu (f - f*) with mu = min diag
    CHECK(trace.final_f - *p.f_lower <= 1e-12 / (2.0 * *p.strong_modulus) + 1e-18);
  }

  SECTION("start at a stationary point gives an empty, valid trace") {
    auto p = quad1d();
    DetConfig c;
    StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-8, std::nullopt};
    auto trace = run_deterministic(DetMethod::tr, p, c, rule, vec1(0.0));
    CHECK(trace.status == RunStatus::converged);
    CHECK(trace.records.empty());
  }

  SECTION("LS on Rosenbrock reaches the reference minimizer") {
    auto p = rosenbrock_problem(2);
    DetConfig c;
    c.eta = 1e-3;
    c.gamma = 2.0;
    c.alpha_bar = 1.0;
    c.alpha0 = 1.0;
    c.max_iters = 400000;
    StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-4, std::nullopt};
    auto trace = run_deterministic(DetMethod::ls, p, c, rule, vec2(-1.2, 1.0));
    REQUIRE(trace.status == RunStatus::converged);
    const Vector ref = reference_descent(p, vec2(-1.2, 1.0), 1e-5, 500000);
    CHECK((trace.final_x - ref).norm() < 1e-3);
    CHECK((trace.final_x - vec2(1.0, 1.0)).norm() < 1e-3);
  }

  SECTION("budget exhaustion reports not converged") {
    auto p = rosenbrock_problem(2);
    DetConfig c;
    c.max_iters = 3;
    StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-12, std::nullopt};
    auto trace = run_deterministic(DetMethod::tr, p, c, rule, vec2(-1.2, 1.0));
    CHECK(trace.status == RunStatus::max_iters);
    CHECK(trace.records.size() == 3);
  }
}

TEST_CASE("deterministic method invariants", "[property]") {
  auto quad = quadratic_problem(vec2(1.0, 4.0), vec2(0.3, -0.2));
  auto rosen = rosenbrock_problem(2);
  DetConfig c;
  c.eta = 0.5;
  c.gamma = 2.0;
  c.alpha_bar = 1.0;
  c.tau = 2.0;
  StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-7, std::nullopt};

  auto check_invariants = [&](const DeterministicProblem& p, DetMethod m, const Vector& x0,
                              DetConfig cfg) {
    auto trace = run_deterministic(m, p, cfg, rule, x0);
    REQUIRE(!trace.records.empty());
    for (std::size_t k = 0; k + 1 <= trace.records.size(); ++k) {
      const auto& r = trace.records[k];
      const double f_next =
          k + 1 < trace.records.size() ? trace.records[k + 1].f : trace.final_f;
      if (r.W == 1) {
        REQUIRE(f_next < r.f);  // strict decrease on success
      } else {
        REQUIRE(f_next == r.f);  // unchanged iterate
        const double a_next =
            k + 1 < trace.records.size() ? trace.records[k + 1].alpha : trace.final_alpha;
        REQUIRE(a_next == r.alpha / cfg.gamma);
        REQUIRE((trace.iterates[k + 1].array() == trace.iterates[k].array()).all());
      }
    }
  };

  check_invariants(quad, DetMethod::tr, vec2(1.0, 1.0), c);
  check_invariants(quad, DetMethod::ls, vec2(1.0, 1.0), c);
  check_invariants(quad, DetMethod::cubic, vec2(1.0, 1.0), c);
  DetConfig cr = c;
  cr.eta = 1e-3;
  cr.max_iters = 300000;
  check_invariants(rosen, DetMethod::tr, vec2(-1.2, 1.0), cr);
  check_invariants(rosen, DetMethod::cubic, vec2(-1.2, 1.0), cr);
}

TEST_CASE("LS stepsize floor and gradient growth on the quadratic") {
  // L = 2, eta = 0.5, gamma = 2, identity preconditioner: the accepted
  // trace never drops below 2 gamma^{-1} (1-eta) kappa1 / (L kappa2^2) = 0.25
  auto p = quad1d();
  DetConfig c;
  c.eta = 0.5;
  c.gamma = 2.0;
  c.alpha_bar = 1.0;
  c.alpha0 = 1.0;
  StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-9, std::nullopt};
  auto trace = run_deterministic(DetMethod::ls, p, c, rule, vec1(1.0));
  REQUIRE(trace.status == RunStatus::converged);

  const double L = *p.lipschitz_grad;
  const double floor = 2.0 * (1.0 - c.eta) * 1.0 / (c.gamma * L * 1.0);
  double min_alpha = trace.final_alpha;
  for (const auto& r : trace.records) min_alpha = std::min(min_alpha, r.alpha);
  CHECK(min_alpha >= floor - 1e-12);

  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const auto& r = trace.records[k];
    if (r.W != 1) continue;
    const double gnext =
        k + 1 < trace.records.size() ? trace.records[k + 1].grad_norm : trace.final_grad_norm;
    CHECK(gnext <= (L * r.alpha * c.beta_dir + 1.0) * r.grad_norm + 1e-10);
  }
}

TEST_CASE("TR success decrease bound fred >= eta c2 alpha^2") {
  auto p = quadratic_problem(vec2(1.0, 4.0), vec2(0.0, 0.0));
  DetConfig c;
  c.eta = 0.25;
  c.gamma = 2.0;
  c.alpha_bar = 1.0;
  c.tau = 1.5;
  StoppingRule rule{StoppingRule::Kind::grad_norm, 1e-8, std::nullopt};
  auto trace = run_deterministic(DetMethod::tr, p, c, rule, vec2(1.0, 1.0));
  REQUIRE(trace.status == RunStatus::converged);

  const double betaH = 4.0;  // ||H|| for this quadratic
  const double c2 = 0.5 * (1.0 / c.tau) * std::min(1.0, 1.0 / (betaH * c.tau));
  for (const auto& r : trace.records) {
    if (r.W != 1) continue;
    REQUIRE(*r.fred >= c.eta * c2 * r.alpha * r.alpha - 1e-10);
  }
}
