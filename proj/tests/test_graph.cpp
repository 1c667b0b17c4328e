#include "actc/diagnostics.hpp"
#include "actc/graph.hpp"
#include "actc/harness.hpp"

#include <doctest.h>

#include <random>

using namespace actc;

namespace {

Topology random_connected(std::size_t n, std::mt19937_64& gen) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 0; k + 1 < n; ++k) edges.emplace_back(k, k + 1);
  std::bernoulli_distribution extra(0.3);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 2; b < n; ++b)
      if (extra(gen)) edges.emplace_back(a, b);
  return Topology::undirected(n, edges);
}

Vector random_simplex(std::size_t n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Vector p(static_cast<Eigen::Index>(n));
  for (auto& x : p) x = u(gen);
  return p / p.sum();
}

}  // namespace

TEST_CASE("metropolis on two connected nodes") {
  const Topology t = Topology::undirected(2, {{0, 1}});
  const Matrix w = metropolis(t).weights();
  CHECK(w(0, 0) == doctest::Approx(0.5));
  CHECK(w(0, 1) == doctest::Approx(0.5));
  CHECK(w(1, 0) == doctest::Approx(0.5));
  CHECK(w(1, 1) == doctest::Approx(0.5));
  CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
  CHECK((w.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("disconnected topologies are rejected") {
  CHECK_THROWS_WITH_AS(Topology({{0}, {1}, {2}}), doctest::Contains("not strongly connected"),
                       GraphError);
  CHECK_THROWS_AS(Topology({{1}, {0}}), GraphError);  // no self-loop
  CHECK_THROWS_AS(Topology({{0, 5}}), GraphError);
}

TEST_CASE("preset topology gives a symmetric doubly stochastic metropolis matrix") {
  const Topology t = preset_topology10();
  CHECK(t.size() == 10);
  CHECK(t.symmetric());
  CHECK(t.all_self_loops());
  const Matrix w = metropolis(t).weights();
  CHECK((w - w.transpose()).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((w.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK(w.minCoeff() >= 0.0);
  const Vector pi = perron(metropolis(t)).pi;
  CHECK((pi.array() - 0.1).abs().maxCoeff() < 1e-10);
}

TEST_CASE("perron vector of small matrices") {
  const auto a = CombinationMatrix::from_weights((Matrix(2, 2) << 0.7, 0.3, 0.3, 0.7).finished());
  const PerronVector p = perron(a);
  CHECK(p.pi[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(p.pi[1] == doctest::Approx(0.5).epsilon(1e-12));

  const Topology chain = Topology::undirected(3, {{0, 1}, {1, 2}});
  const Vector target = (Vector(3) << 0.6, 0.3, 0.1).finished();
  const Vector pi = perron(metropolis_hastings_target(chain, target)).pi;
  CHECK((pi - target).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("metropolis-hastings on a star recovers the target") {
  const std::size_t n = 6;
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 1; k < n; ++k) edges.emplace_back(0, k);
  const Topology star = Topology::undirected(n, edges);
  Vector target = Vector::Constant(n, 0.5 / static_cast<double>(n - 1));
  target[0] = 0.5;
  const auto a = metropolis_hastings_target(star, target);
  CHECK((a.weights().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((perron(a).pi - target).cwiseAbs().maxCoeff() < 1e-8);

  Vector bad = target;
  bad[0] = 0.0;
  bad[1] += 0.5;
  CHECK_THROWS_AS(metropolis_hastings_target(star, bad), GraphError);
}

TEST_CASE("metropolis-hastings round trip on random graphs") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 120; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 10);
    const Topology t = random_connected(n, gen);
    const Vector target = random_simplex(n, gen);
    const auto a = metropolis_hastings_target(t, target);
    CHECK(a.weights().minCoeff() >= 0.0);
    CHECK((a.weights().colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
    CHECK((perron(a).pi - target).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("uniform target on a regular graph reproduces metropolis") {
  const Topology ring = Topology::undirected(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}});
  const auto mh = metropolis_hastings_target(ring, Vector::Constant(6, 1.0 / 6.0));
  CHECK((mh.weights() - metropolis(ring).weights()).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("network transform is consistent") {
  const auto a = metropolis(preset_topology10());
  const auto spec = spectrum(a);
  CHECK(spec.diagonalizable);
  CHECK(std::abs(spec.eigenvalues.front() - 1.0) < 1e-12);
  CHECK(spec.lambda2_mag < 1.0);
  const auto tr = network_transform(a, spec);
  CHECK_NOTHROW(tr.check(perron(a).pi));
  const ComplexMatrix at = a.weights().transpose().cast<std::complex<double>>();
  ComplexMatrix j = ComplexMatrix::Zero(10, 10);
  for (Eigen::Index i = 0; i < 10; ++i) j(i, i) = spec.eigenvalues[static_cast<std::size_t>(i)];
  CHECK((at - tr.v_inv * j * tr.v).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("gamma on the two-node example") {
  // One block at 0.5: the direct sum over the resolvent gives 2.
  const auto spec = SpectralSummary::from_jordan_blocks({{0.5, 1}});
  const double g = gamma(spec);
  CHECK(g == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(g == doctest::Approx(gamma_resolvent_oracle(0.3, build_e0(spec, 0.3))).epsilon(1e-12));
}

TEST_CASE("gamma agrees with the resolvent oracle on random spectra") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 60; ++trial) {
    const double l2 = 0.05 + 0.9 * u(gen);
    std::vector<JordanBlock> blocks{{std::polar(l2, 6.283 * u(gen)), 1}};
    const int extra = 1 + trial % 8;
    for (int b = 0; b < extra; ++b) blocks.push_back({std::polar(l2 * u(gen), 6.283 * u(gen)), 1});
    const auto spec = SpectralSummary::from_jordan_blocks(blocks);
    const double zeta = 0.05 + 0.95 * u(gen);
    const double oracle = gamma_resolvent_oracle(zeta, build_e0(spec, zeta));
    CHECK(gamma(spec) == doctest::Approx(oracle).epsilon(1e-8));
  }
}

TEST_CASE("gamma agrees with the resolvent oracle on Jordan structures") {
  for (std::size_t size = 2; size <= 4; ++size)
    for (double l2 : {0.2, 0.6, 0.9}) {
      const auto spec = SpectralSummary::from_jordan_blocks({{l2, size}, {0.5 * l2, 1}});
      CHECK_FALSE(spec.diagonalizable);
      for (double zeta : {0.1, 0.5, 1.0}) {
        const double oracle = gamma_resolvent_oracle(zeta, build_e0(spec, zeta));
        CHECK(gamma(spec) == doctest::Approx(oracle).epsilon(1e-8));
      }
    }
  const auto mixed = SpectralSummary::from_jordan_blocks({{0.7, 3}, {std::polar(0.6, 1.0), 2}});
  CHECK(gamma(mixed) ==
        doctest::Approx(gamma_resolvent_oracle(0.4, build_e0(mixed, 0.4))).epsilon(1e-8));
}

TEST_CASE("gamma of real matrices matches the oracle") {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 4 + static_cast<std::size_t>(trial);
    const auto a = metropolis_hastings_target(random_connected(n, gen), random_simplex(n, gen));
    const auto spec = spectrum(a);
    CHECK(gamma(spec) ==
          doctest::Approx(gamma_resolvent_oracle(0.5, build_e0(spec, 0.5))).epsilon(1e-8));
  }
}

TEST_CASE("zeta cancels in the resolvent oracle") {
  const auto spec = spectrum(metropolis(preset_topology10()));
  const double a = gamma_resolvent_oracle(0.5, build_e0(spec, 0.5));
  const double b = gamma_resolvent_oracle(0.25, build_e0(spec, 0.25));
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("gamma grows linearly with repeated eigenvalues") {
  const double g1 = gamma(SpectralSummary::from_jordan_blocks({{0.5, 1}}));
  for (std::size_t n = 2; n <= 6; ++n) {
    std::vector<JordanBlock> blocks(n - 1, JordanBlock{0.5, 1});
    CHECK(gamma(SpectralSummary::from_jordan_blocks(blocks)) ==
          doctest::Approx(static_cast<double>(n - 1) * g1));
  }
}

TEST_CASE("degenerate inputs are rejected") {
  CHECK_THROWS_AS(gamma(SpectralSummary::from_jordan_blocks({{0.0, 1}})), GraphError);
  Matrix unstable = Matrix::Identity(2, 2) * 1.2;
  CHECK_THROWS_AS(gamma_resolvent_oracle(0.5, unstable), GraphError);
}

TEST_CASE("weighted geometric sum near one") {
  for (std::size_t len = 1; len <= 5; ++len) {
    double direct = 0.0;
    for (std::size_t j = 0; j < len; ++j)
      direct += static_cast<double>(len - j) * std::pow(1.0 + 1e-9, static_cast<double>(j));
    CHECK(weighted_geometric_sum(1.0 + 1e-9, len) == doctest::Approx(direct).epsilon(1e-12));
  }
  CHECK(weighted_geometric_sum(3.0, 3) == doctest::Approx(3.0 + 2.0 * 3.0 + 9.0));
}
