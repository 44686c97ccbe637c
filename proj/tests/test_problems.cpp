#include <catch2/catch_amalgamated.hpp>

#include "aopt/data.hpp"
#include "aopt/finite_sum.hpp"
#include "aopt/oracle.hpp"
#include "aopt/problem.hpp"

using namespace aopt;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Dataset tiny_dataset(std::size_t n, int d, std::uint64_t seed) {
  return gen_synthetic(n, d, 1.0, seed);
}

}  // namespace

TEST_CASE("quadratic problem closed forms") {
  auto p = quadratic_problem(vec({2.0}), vec({0.0}));
  CHECK(p.f(vec({1.0})) == 1.0);
  CHECK(p.grad(vec({1.0}))(0) == 2.0);
  CHECK(p.grad(vec({0.0}))(0) == 0.0);

  auto q = quadratic_problem(vec({1.0, 4.0}), vec({0.0, 0.0}));
  CHECK(*q.lipschitz_grad == 4.0);
  CHECK(*q.strong_modulus == 1.0);
  CHECK(q.convexity == Convexity::strongly_convex);

  CHECK_THROWS_AS(quadratic_problem(vec({0.0}), vec({0.0})), invalid_problem);
  CHECK_THROWS_AS(quadratic_problem(vec({-1.0, 2.0}), vec({0.0, 0.0})), invalid_problem);
}

TEST_CASE("rosenbrock problem") {
  CHECK_THROWS_AS(rosenbrock_problem(1), invalid_problem);
  auto p = rosenbrock_problem(2);
  CHECK(p.f(vec({1.0, 1.0})) == 0.0);
  CHECK(p.grad(vec({1.0, 1.0})).norm() == 0.0);
  CHECK(p.f(vec({0.0, 0.0})) == 1.0);  // 100*0 + (1-0)^2
  // gradient consistent with finite differences away from the minimizer
  CHECK(fd_gradient_check(p, vec({-1.2, 1.0})) < 1e-6);
}

TEST_CASE("logistic problem value and gradient") {
  SECTION("f(0) = ln 2 for any data at lambda 0") {
    auto ds = tiny_dataset(50, 3, 11);
    auto p = logistic_problem(ds, 0.0);
    CHECK(p.value(Vector::Zero(p.dim())) == Catch::Approx(std::log(2.0)).epsilon(1e-12));
  }

  SECTION("single-sample closed form") {
    // one sample with z=+1 and augmented feature (1): feature dim 0 is
    // impossible, so use a zero-weight feature instead and read the bias
    // coordinate, whose gradient is -1/(1+e^t) + lambda t at x=(0, t).
    Dataset ds;
    ds.features.resize(1, 1);
    ds.features(0, 0) = 0.0;
    ds.labels = {1};
    const double lambda = 0.3;
    auto p = logistic_problem(ds, lambda);
    const double t = 0.7;
    Vector x = vec({0.0, t});
    const Vector g = p.gradient(x);
    CHECK(g(1) == Catch::Approx(-1.0 / (1.0 + std::exp(t)) + lambda * t).epsilon(1e-12));
    CHECK(fd_gradient_check(p.as_deterministic(), x) < 1e-8);
  }

  SECTION("empty dataset rejected") {
    Dataset ds;
    ds.features.resize(0, 2);
    CHECK_THROWS_AS(logistic_problem(ds, 0.1), invalid_problem);
  }

  SECTION("strong convexity metadata tracks lambda") {
    auto ds = tiny_dataset(20, 2, 5);
    auto p = logistic_problem(ds, 0.25).as_deterministic();
    CHECK(p.convexity == Convexity::strongly_convex);
    CHECK(*p.strong_modulus == 0.25);
  }
}

TEST_CASE("sample_eval mini-batch semantics") {
  auto ds = tiny_dataset(10, 3, 42);
  auto p = logistic_problem(ds, 0.05);
  Rng rng(7);
  Vector x(p.dim());
  for (int i = 0; i < p.dim(); ++i) x(i) = rng.normal();

  SECTION("full batch reproduces the exact evaluation") {
    std::vector<std::size_t> all(p.num_samples());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto se = p.sample_eval(x, all);
    CHECK(se.f == Catch::Approx(p.value(x)).epsilon(1e-14));
    CHECK((se.g - p.gradient(x)).norm() < 1e-13);
  }

  SECTION("repeated index averages to the singleton value") {
    std::vector<std::size_t> one{3};
    std::vector<std::size_t> twice{3, 3};
    CHECK(p.sample_eval(x, one).f == Catch::Approx(p.sample_eval(x, twice).f).epsilon(1e-15));
  }

  SECTION("out-of-range index raises") {
    std::vector<std::size_t> bad{p.num_samples()};
    CHECK_THROWS_AS(p.sample_eval(x, bad), std::out_of_range);
  }

  SECTION("unbiasedness: singleton batches average to the full gradient") {
    Vector acc = Vector::Zero(p.dim());
    for (std::size_t i = 0; i < p.num_samples(); ++i) {
      std::vector<std::size_t> b{i};
      acc += p.sample_eval(x, b).g;
    }
    acc /= static_cast<double>(p.num_samples());
    CHECK((acc - p.gradient(x)).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}

TEST_CASE("noisy oracle") {
  auto p = quadratic_problem(vec({2.0}), vec({0.0}));

  SECTION("zero noise returns exact values") {
    auto o = noisy_oracle(p, 0.0, 0.0, 1);
    Vector x = vec({1.5});
    CHECK(o.value_estimate(x, 5) == p.f(x));
    CHECK((o.gradient_estimate(x, 5).array() == p.grad(x).array()).all());
  }

  SECTION("negative sigma rejected") {
    CHECK_THROWS_AS(noisy_oracle(p, -0.1, 0.0, 1), config_error);
  }

  SECTION("sample mean of gradient estimates is near the exact gradient") {
    auto o = noisy_oracle(p, 0.0, 1.0, 99);
    Vector x = vec({0.7});
    const double exact = p.grad(x)(0);
    double acc = 0.0;
    const int trials = 100000;
    for (int t = 0; t < trials; ++t) acc += o.gradient_estimate(x, 1)(0);
    CHECK(std::abs(acc / trials - exact) < 3e-2);
  }

  SECTION("V_g sums coordinate variances") {
    auto q = quadratic_problem(vec({1.0, 1.0}), vec({0.0, 0.0}));
    auto o = noisy_oracle(q, 0.0, 1.0, 1);
    CHECK(o.gradient_variance() == 2.0);
  }

  SECTION("identical seed and call sequence give bit-identical outputs") {
    auto a = noisy_oracle(p, 0.5, 1.0, 1234);
    auto b = noisy_oracle(p, 0.5, 1.0, 1234);
    Vector x = vec({0.3});
    for (int i = 0; i < 10; ++i) {
      CHECK(a.value_estimate(x, 3) == b.value_estimate(x, 3));
      CHECK((a.gradient_estimate(x, 2).array() == b.gradient_estimate(x, 2).array()).all());
    }
  }
}

TEST_CASE("finite difference gradient check") {
  SECTION("quadratic is exact up to rounding") {
    auto p = quadratic_problem(vec({2.0, 0.5}), vec({0.1, -0.4}));
    CHECK(fd_gradient_check(p, vec({1.0, 2.0}), 1e-5) < 1e-8);
  }

  SECTION("zero-gradient guard at the minimizer") {
    auto p = quadratic_problem(vec({2.0}), vec({0.25}));
    CHECK(fd_gradient_check(p, vec({0.25}), 1e-5) < 1e-10);
  }

  SECTION("logistic at random points") {
    auto ds = tiny_dataset(40, 4, 3);
    auto p = logistic_problem(ds, 1e-3).as_deterministic();
    Rng rng(17);
    for (int t = 0; t < 20; ++t) {
      Vector x(p.dim);
      for (int i = 0; i < p.dim; ++i) x(i) = rng.normal();
      CHECK(fd_gradient_check(p, x, 1e-5) < 1e-6);
    }
  }
}

TEST_CASE("declared Lipschitz constants hold on random pairs") {
  Rng rng(2024);
  auto check_problem = [&](const DeterministicProblem& p, double box) {
    const double L = *p.lipschitz_grad;
    for (int t = 0; t < 10000; ++t) {
      Vector x(p.dim), y(p.dim);
      for (int i = 0; i < p.dim; ++i) {
        x(i) = rng.uniform(-box, box);
        y(i) = rng.uniform(-box, box);
      }
      const double lhs = (p.grad(x) - p.grad(y)).norm();
      const double rhs = L * (x - y).norm();
      REQUIRE(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
    }
  };
  check_problem(quadratic_problem(vec({1.0, 4.0, 2.5}), vec({0.0, 1.0, -2.0})), 10.0);
  auto ds = tiny_dataset(30, 3, 8);
  check_problem(logistic_problem(ds, 1e-2).as_deterministic(), 5.0);
}

TEST_CASE("gen_synthetic basics") {
  SECTION("reproducible from seed") {
    auto a = gen_synthetic(100, 5, 2.0, 77);
    auto b = gen_synthetic(100, 5, 2.0, 77);
    CHECK((a.features.array() == b.features.array()).all());
    CHECK(a.labels == b.labels);
  }
  SECTION("margin 0 labels are uninformative") {
    auto ds = gen_synthetic(4000, 3, 0.0, 5);
    // the best constant classifier is near 50%
    std::size_t ones = 0;
    for (int y : ds.labels) ones += static_cast<std::size_t>(y);
    const double frac = double(ones) / double(ds.size());
    CHECK(frac > 0.45);
    CHECK(frac < 0.55);
  }
}
