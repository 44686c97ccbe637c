#include <catch2/catch_amalgamated.hpp>

#include "aopt/model.hpp"
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

LocalModel model1d(double f0, double g, double H, double sigma = 0.0) {
  LocalModel m;
  m.center = vec1(0.0);
  m.f0 = f0;
  m.g = vec1(g);
  m.H = Matrix::Constant(1, 1, H);
  m.sigma = sigma;
  return m;
}

// independent 1-D oracle: minimize f0 + g s + 0.5 H s^2 over |s| <= r
double tr_min_1d(double g, double H, double r) {
  double best = 0.0, bestv = 0.0;
  auto consider = [&](double s) {
    const double v = g * s + 0.5 * H * s * s;
    if (v < bestv) {
      bestv = v;
      best = s;
    }
  };
  if (H > 0.0) {
    const double sn = -g / H;
    if (std::abs(sn) <= r) consider(sn);
  }
  consider(r);
  consider(-r);
  return best;
}

// independent root of the cubic model stationarity 2 + 2s - s^2 = 0 on s < 0
double cubic_root_neg() {
  double lo = -2.0, hi = 0.0;  // value at -2: 2 - 4 - 4 = -6 < 0; at 0: 2 > 0
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = 2.0 + 2.0 * mid - mid * mid;
    (v < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// grid + local polish minimizer of a cubic model, for cross-checking
double brute_force_cubic_value(const LocalModel& m, double span) {
  const int n = static_cast<int>(m.g.size());
  double best = m.f0;
  Vector bests = Vector::Zero(n);
  const int grid = n == 1 ? 4001 : 101;
  auto eval = [&](const Vector& s) {
    const double v = m.value_at_step(s);
    if (v < best) {
      best = v;
      bests = s;
    }
  };
  if (n == 1) {
    for (int i = 0; i < grid; ++i) eval(vec1(-span + 2.0 * span * i / (grid - 1)));
  } else {
    for (int i = 0; i < grid; ++i)
      for (int j = 0; j < grid; ++j)
        eval(vec2(-span + 2.0 * span * i / (grid - 1), -span + 2.0 * span * j / (grid - 1)));
  }
  // polish with damped gradient steps
  Vector s = bests;
  double v = best;
  double t = span / grid;
  for (int it = 0; it < 4000; ++it) {
    const Vector gm = m.gradient_at_step(s);
    Vector cand = s - t * gm;
    const double cv = m.value_at_step(cand);
    if (cv < v) {
      s = cand;
      v = cv;
      t *= 1.3;
    } else {
      t *= 0.5;
      if (t < 1e-18) break;
    }
  }
  return v;
}

}  // namespace

TEST_CASE("cauchy decrease bound") {
  CHECK(cauchy_decrease_bound(2.0, 2.0, 1.0) == 1.0);
  CHECK(cauchy_decrease_bound(0.0, 1.0, 1.0) == 0.0);
  CHECK(cauchy_decrease_bound(2.0, 1.0, 10.0) == 2.0);
  CHECK_THROWS_AS(cauchy_decrease_bound(1.0, 0.0, 1.0), config_error);
}

TEST_CASE("model_reduction") {
  auto m = model1d(1.0, 2.0, 2.0);
  CHECK(model_reduction(m, vec1(0.0)) == 0.0);
  CHECK(model_reduction(m, vec1(-1.0)) == Catch::Approx(1.0).margin(1e-15));

  LocalModel lin;
  lin.center = vec1(0.0);
  lin.f0 = 0.0;
  lin.g = vec1(1.0);
  CHECK(model_reduction(lin, vec1(-0.5)) == 0.5);
}

TEST_CASE("tr_solve 1-D against the closed-form oracle") {
  SECTION("interior Newton point") {
    auto m = model1d(1.0, 2.0, 2.0);
    auto st = tr_solve(m, 10.0);
    CHECK(st.s(0) == Catch::Approx(tr_min_1d(2.0, 2.0, 10.0)).margin(1e-12));
    CHECK(st.s(0) == Catch::Approx(-1.0).margin(1e-12));
    CHECK(st.mred == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("boundary active") {
    auto m = model1d(1.0, 2.0, 2.0);
    auto st = tr_solve(m, 0.5);
    CHECK(st.s(0) == Catch::Approx(tr_min_1d(2.0, 2.0, 0.5)).margin(1e-12));
    CHECK(st.s(0) == Catch::Approx(-0.5).margin(1e-12));
    CHECK(st.mred == Catch::Approx(0.75).margin(1e-12));
  }
  SECTION("stationary center returns the zero step") {
    auto m = model1d(1.0, 0.0, 2.0);
    auto st = tr_solve(m, 1.0);
    CHECK(st.s(0) == 0.0);
    CHECK(st.mred == 0.0);
  }
}

TEST_CASE("tr_solve respects the radius and the Cauchy decrease", "[property]") {
  Rng rng(314159);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_below(10));
    LocalModel m;
    m.center = Vector::Zero(n);
    m.f0 = rng.uniform(-1.0, 1.0);
    m.g = Vector(n);
    for (int i = 0; i < n; ++i) m.g(i) = rng.normal();
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
    m.H = 0.5 * (A + A.transpose());
    const double alpha = std::exp(rng.uniform(-3.0, 1.5));

    auto st = tr_solve(m, alpha);
    REQUIRE(st.snorm <= alpha * (1.0 + 1e-12));
    const double betaH = std::max(sym_norm(m.H), 1e-12);
    REQUIRE(st.mred >= cauchy_decrease_bound(m.g.norm(), betaH, alpha) - 1e-10);
  }
}

TEST_CASE("ls_direction") {
  LocalModel m;
  m.center = vec2(0.0, 0.0);
  m.f0 = 0.0;

  SECTION("identity preconditioner") {
    m.g = vec2(3.0, 4.0);
    auto M = Preconditioner::identity(2);
    Vector d = ls_direction(m, M, 1.0);
    CHECK(d(0) == -3.0);
    CHECK(d(1) == -4.0);
    CHECK(d.norm() == 5.0);
  }
  SECTION("diagonal preconditioner") {
    m.g = vec2(1.0, 1.0);
    Preconditioner M{Matrix(vec2(2.0, 1.0).asDiagonal()), 1.0, 2.0};
    Vector d = ls_direction(m, M, 2.0);
    CHECK(d(0) == -2.0);
    CHECK(d(1) == -1.0);
  }
  SECTION("zero gradient maps to zero direction") {
    m.g = vec2(0.0, 0.0);
    auto M = Preconditioner::identity(2);
    CHECK(ls_direction(m, M, 1.0).norm() == 0.0);
  }
  SECTION("cap below kappa2 is a configuration error") {
    m.g = vec2(1.0, 0.0);
    Preconditioner M{Matrix(vec2(2.0, 1.0).asDiagonal()), 1.0, 2.0};
    CHECK_THROWS_AS(ls_direction(m, M, 1.5), config_error);
  }
}

TEST_CASE("cubic_solve 1-D cases") {
  SECTION("g=2 H=2 alpha=1 matches the root-finding oracle") {
    auto m = model1d(1.0, 2.0, 2.0, 1.0 / 3.0);
    auto st = cubic_solve(m, 1.0);
    CHECK(st.s(0) == Catch::Approx(cubic_root_neg()).margin(1e-10));
    CHECK(st.s(0) == Catch::Approx(1.0 - std::sqrt(3.0)).margin(1e-10));
    // gradient of the model vanishes at the solution
    CHECK(m.gradient_at_step(st.s).norm() <= 1e-8 * std::max(1.0, m.g.norm()));
  }
  SECTION("stationary convex center") {
    auto m = model1d(0.0, 0.0, 2.0, 1.0 / 3.0);
    auto st = cubic_solve(m, 1.0);
    CHECK(st.s(0) == 0.0);
    CHECK(st.mred == 0.0);
  }
  SECTION("pure negative curvature: symmetric minimizers, positive tie-break") {
    auto m = model1d(0.0, 0.0, -2.0, 1.0 / 3.0);
    auto st = cubic_solve(m, 1.0);
    CHECK(st.s(0) == Catch::Approx(2.0).margin(1e-10));
    CHECK(st.mred == Catch::Approx(4.0 / 3.0).margin(1e-10));
  }
}

TEST_CASE("cubic_solve matches a grid-plus-polish brute force", "[property]") {
  Rng rng(271828);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_below(2));
    LocalModel m;
    m.center = Vector::Zero(n);
    m.f0 = rng.uniform(-1.0, 1.0);
    m.g = Vector(n);
    for (int i = 0; i < n; ++i) m.g(i) = rng.normal();
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
    m.H = 0.5 * (A + A.transpose());
    const double alpha = std::exp(rng.uniform(-2.0, 1.0));
    m.sigma = 1.0 / (3.0 * alpha);

    auto st = cubic_solve(m, alpha);
    // bound on the minimizer norm: t^2/(3 alpha) <= ||g|| t + ||H|| t^2 / 2
    const double hn = sym_norm(m.H);
    const double span = 1.5 * alpha * hn + std::sqrt(3.0 * alpha * m.g.norm()) + 1.0;
    const double bf = brute_force_cubic_value(m, span);
    REQUIRE(m.value_at_step(st.s) <= bf + 1e-6);
  }
}

TEST_CASE("model_reduction consistency identity", "[property]") {
  Rng rng(5150);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform_below(6));
    LocalModel m;
    m.center = Vector::Zero(n);
    m.f0 = rng.uniform(-2.0, 2.0);
    m.g = Vector(n);
    Vector s(n);
    for (int i = 0; i < n; ++i) {
      m.g(i) = rng.normal();
      s(i) = rng.normal();
    }
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
    m.H = 0.5 * (A + A.transpose());
    if (trial % 2 == 0) m.sigma = std::exp(rng.uniform(-2.0, 0.0));

    const double lhs = model_reduction(m, s) + m.value_at_step(s);
    const double rhs = m.f0;
    const double scale = std::max({1.0, std::abs(m.f0), std::abs(m.value_at_step(s))});
    REQUIRE(std::abs(lhs - rhs) <= 4.0 * std::numeric_limits<double>::epsilon() * scale);
  }
}
