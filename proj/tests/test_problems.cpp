#include "actc/problems.hpp"

#include <doctest.h>

#include <cmath>

using namespace actc;

namespace {

Matrix random_psd(Eigen::Index m, CounterRng& rng) {
  Matrix b(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) b(i, j) = rng.normal();
  return b * b.transpose() / static_cast<double>(m) + 0.1 * Matrix::Identity(m, m);
}

}  // namespace

TEST_CASE("noiseless gradient vanishes at the target") {
  const Vector w_star = (Vector(3) << 1.0, -2.0, 0.5).finished();
  CounterRng rng(3);
  for (int i = 0; i < 20; ++i) {
    GradientSample s;
    s.u = Vector::NullaryExpr(3, [&] { return rng.normal(); });
    s.d = s.u.dot(w_star);
    CHECK(s.gradient(w_star).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("true gradient examples") {
  const Vector zero = Vector::Zero(3);
  const auto p = RegressionProblem::diagonal(zero, {Vector::Ones(3)}, {1.0});
  CHECK(true_gradient(p, 0, zero).norm() == 0.0);
  const Vector e1 = Vector::Unit(3, 0);
  CHECK((true_gradient(p, 0, e1) - 2.0 * e1).norm() == 0.0);
}

TEST_CASE("stochastic gradient is unbiased") {
  CounterRng setup(21);
  const Eigen::Index m = 4;
  const Vector w_star = Vector::NullaryExpr(m, [&] { return setup.normal(); });
  const Matrix r = random_psd(m, setup);
  const RegressionProblem p(w_star, {RegressionProblem::make_agent(r, 0.5, w_star)});
  const Vector w = Vector::NullaryExpr(m, [&] { return setup.normal(); });

  const int n = 100000;
  Vector mean = Vector::Zero(m), m2 = Vector::Zero(m);
  CounterRng rng(99);
  for (int i = 1; i <= n; ++i) {
    const Vector g = sample(p, 0, rng).gradient(w);
    const Vector d = g - mean;
    mean += d / i;
    m2 += d.cwiseProduct(g - mean);
  }
  const Vector se = (m2 / (n - 1.0) / n).cwiseSqrt();
  const Vector err = (mean - true_gradient(p, 0, w)).cwiseAbs();
  for (Eigen::Index i = 0; i < m; ++i) CHECK(err[i] < 5.0 * se[i]);
}

TEST_CASE("regressor covariance matches the model") {
  RandomProblemSpec spec;
  spec.n_agents = 1;
  spec.dimension = 50;
  const auto p = random_diagonal_problem(spec);
  const Vector var = p.agent(0).covariance.diagonal();
  CHECK(var.minCoeff() > 1.0);
  CHECK(var.maxCoeff() < 4.0);
  const int n = 20000;
  Vector acc = Vector::Zero(50);
  Vector u(50);
  CounterRng rng(5);
  for (int i = 0; i < n; ++i) {
    p.draw_regressor(0, rng, u);
    acc += u.cwiseAbs2();
  }
  const Vector est = acc / n;
  // var(u^2) = 2 s^4 for Gaussian u
  for (Eigen::Index i = 0; i < 50; ++i)
    CHECK(std::abs(est[i] - var[i]) < 4.5 * std::sqrt(2.0 / n) * var[i]);
}

TEST_CASE("finite differences of the cost match the gradient") {
  CounterRng setup(8);
  const Eigen::Index m = 3;
  const Vector w_star = Vector::NullaryExpr(m, [&] { return setup.normal(); });
  const RegressionProblem p(w_star, {RegressionProblem::make_agent(random_psd(m, setup), 0.3,
                                                                    w_star)});
  const Vector w = Vector::NullaryExpr(m, [&] { return setup.normal(); });
  const double h = 1e-3;
  const Vector g = true_gradient(p, 0, w);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Vector e = Vector::Unit(m, i);
    CHECK((cost(p, 0, w + h * e) - cost(p, 0, w - h * e)) / (2 * h) ==
          doctest::Approx(g[i]).epsilon(1e-7));

    // Monte-Carlo difference quotient on shared draws
    const int n = 50000;
    double mean = 0.0, m2 = 0.0;
    CounterRng rng(static_cast<std::uint64_t>(100 + i));
    for (int s = 1; s <= n; ++s) {
      const GradientSample gs = sample(p, 0, rng);
      const double plus = std::pow(gs.d - gs.u.dot(w + h * e), 2);
      const double minus = std::pow(gs.d - gs.u.dot(w - h * e), 2);
      const double q = (plus - minus) / (2 * h);
      const double d = q - mean;
      mean += d / s;
      m2 += d * (q - mean);
    }
    CHECK(std::abs(mean - g[i]) < 5.0 * std::sqrt(m2 / (n - 1.0) / n));
  }
}

TEST_CASE("closed-form cost matches Monte-Carlo") {
  RandomProblemSpec spec;
  spec.n_agents = 2;
  spec.dimension = 4;
  const auto p = random_diagonal_problem(spec);
  const Vector w = Vector::Ones(4);
  const int n = 100000;
  double mean = 0.0, m2 = 0.0;
  CounterRng rng(1);
  for (int s = 1; s <= n; ++s) {
    const GradientSample gs = sample(p, 1, rng);
    const double c = std::pow(gs.d - gs.u.dot(w), 2);
    const double d = c - mean;
    mean += d / s;
    m2 += d * (c - mean);
  }
  CHECK(std::abs(mean - cost(p, 1, w)) < 5.0 * std::sqrt(m2 / (n - 1.0) / n));
}

TEST_CASE("global minimizer") {
  RandomProblemSpec spec;
  spec.n_agents = 5;
  spec.dimension = 6;
  const auto base = random_diagonal_problem(spec);
  const Vector p = Vector::Constant(5, 0.2);
  CHECK((global_minimizer(base, p) - base.w_star()).cwiseAbs().maxCoeff() < 1e-10);

  // One farsighted agent and four singular ones.
  RegressionProblem singular = base;
  for (std::size_t k = 1; k < 5; ++k) singular = make_singular_agent(singular, k, 0, 1);
  for (std::size_t k = 1; k < 5; ++k) {
    const Matrix& r = singular.agent(k).covariance;
    CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(r).eigenvalues().minCoeff() < 1e-12);
  }
  CHECK((global_minimizer(singular, p) - base.w_star()).cwiseAbs().maxCoeff() < 1e-9);

  RegressionProblem all_singular = make_singular_agent(singular, 0, 0, 1);
  CHECK_THROWS_AS(global_minimizer(all_singular, p), ProblemError);
}

TEST_CASE("singular agent regressors duplicate a coordinate") {
  RandomProblemSpec spec;
  spec.n_agents = 2;
  spec.dimension = 5;
  const auto p = make_singular_agent(random_diagonal_problem(spec), 1, 2, 4);
  Vector u(5);
  CounterRng rng(4);
  for (int i = 0; i < 10; ++i) {
    p.draw_regressor(1, rng, u);
    CHECK(u[2] == u[4]);
  }
  CHECK(p.agent(1).duplicate == std::make_pair(std::size_t{2}, std::size_t{4}));
}

TEST_CASE("problem constants") {
  const Vector w = Vector::Zero(4);
  const double s2 = 2.5;
  SUBCASE("identical isotropic agents") {
    const auto p = RegressionProblem::diagonal(w, std::vector<Vector>(3, Vector::Constant(4, s2)),
                                               {0.5, 0.5, 0.5});
    const auto c = constants(p, Vector::Constant(3, 1.0 / 3.0));
    CHECK(c.nu == doctest::Approx(2.0 * s2));
    CHECK(c.eta == doctest::Approx(2.0 * s2));
    CHECK(c.beta_k2[0] == doctest::Approx(8.0 * s2 * s2));
  }
  SUBCASE("one farsighted agent") {
    std::vector<Vector> vars(4, Vector::Constant(4, s2));
    const auto base = RegressionProblem::diagonal(w, vars, {0.5, 0.5, 0.5, 0.5});
    RegressionProblem p = base;
    for (std::size_t k = 1; k < 4; ++k) p = make_singular_agent(p, k, 0, 1);
    const Vector pi = (Vector(4) << 0.4, 0.2, 0.2, 0.2).finished();
    CHECK(constants(p, pi).nu == doctest::Approx(2.0 * 0.4 * s2));
    CHECK(constants(p, pi).nu <= constants(p, pi).eta);
  }
  SUBCASE("gradient noise floor") {
    const auto p = RegressionProblem::diagonal(Vector::Zero(7), {Vector::Ones(7)}, {1.0});
    CHECK(constants(p, Vector::Ones(1)).sigma_k2[0] == doctest::Approx(28.0));
  }
}

TEST_CASE("invalid problems are rejected") {
  const Vector w = Vector::Zero(2);
  CHECK_THROWS_AS(RegressionProblem::diagonal(w, {Vector::Ones(2)}, {0.0}), ProblemError);
  Matrix notpsd = Matrix::Identity(2, 2);
  notpsd(1, 1) = -1.0;
  CHECK_THROWS_AS(RegressionProblem::make_agent(notpsd, 1.0, w), ProblemError);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.5;
  CHECK_THROWS_AS(RegressionProblem::make_agent(asym, 1.0, w), ProblemError);
}
