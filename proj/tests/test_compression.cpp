#include "actc/algorithms.hpp"
#include "actc/compression.hpp"

#include <doctest.h>

#include <cmath>

using namespace actc;

TEST_CASE("zero vector quantizes to zero") {
  const RandQuantizer q(2);
  CounterRng rng(1);
  const Vector zero = Vector::Zero(5);
  for (int i = 0; i < 10; ++i) CHECK(q.compress(zero, rng) == zero);
}

TEST_CASE("hand-evaluated quantizer outcomes for x = (3, 4), r = 2") {
  const RandQuantizer q(2);
  CHECK(q.levels() == 3);
  CHECK(q.theta() == doctest::Approx(1.0 / 3.0));
  const Vector x = (Vector(2) << 3.0, 4.0).finished();
  CounterRng rng(42);
  const int n = 200000;
  int upper = 0;
  double mean0 = 0.0;
  for (int i = 0; i < n; ++i) {
    const Vector y = q.compress(x, rng);
    const bool hi = std::abs(y[0] - 10.0 / 3.0) < 1e-12;
    const bool lo = std::abs(y[0] - 5.0 / 3.0) < 1e-12;
    REQUIRE((hi || lo));
    upper += hi ? 1 : 0;
    mean0 += y[0];
  }
  const double p = static_cast<double>(upper) / n;
  const double se = std::sqrt(0.8 * 0.2 / n);
  CHECK(std::abs(p - 0.8) < 4.0 * se);
  // E = 0.8 * 10/3 + 0.2 * 5/3 = 3
  CHECK(std::abs(mean0 / n - 3.0) < 4.0 * (5.0 / 3.0) * se);
}

TEST_CASE("endpoint entries are deterministic") {
  const RandQuantizer q(3);
  const Vector x = (Vector(2) << 1.0, 0.0).finished();
  CounterRng rng(5);
  for (int i = 0; i < 50; ++i) {
    const Vector y = q.compress(x, rng);
    CHECK(y[0] == 1.0);
    CHECK(y[1] == 0.0);
  }
  const Vector neg = (Vector(3) << 0.0, -2.0, 0.0).finished();
  CHECK(q.compress(neg, rng) == neg);
}

TEST_CASE("omega examples") {
  CHECK(RandQuantizer(2).omega(50) == doctest::Approx(std::sqrt(50.0) / 3.0).epsilon(1e-14));
  CHECK(RandQuantizer(10).omega(1) == doctest::Approx(1.0 / 1046529.0).epsilon(1e-14));
  CHECK(omega_of(RandQuantizer(2), 50) == RandQuantizer(2).omega(50));
  double prev = 1e300;
  for (unsigned r = 1; r <= 31; ++r) {
    const double w = RandQuantizer(r).omega(20);
    CHECK(w < prev);
    prev = w;
  }
  CHECK(prev < 1e-15);
  CHECK(IdentityOperator().omega(7) == 0.0);
}

TEST_CASE("bit budget per message and per run") {
  CHECK(RandQuantizer(2).encoded_bits(50) == 182);
  CHECK(RandQuantizer(2, 64).encoded_bits(50) == 214);
  const BitTotals t = bits_accounting(RandQuantizer(2), 50, 2500);
  CHECK(t.per_agent == 455000);
  CHECK(t.baseline == 4000000);
}

TEST_CASE("codec round trip on random messages") {
  CounterRng gen(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const unsigned r = 1 + static_cast<unsigned>(trial % 8);
    const unsigned h = (trial % 3 == 0) ? 64 : 32;
    const std::size_t m = 1 + static_cast<std::size_t>(trial % 37);
    const RandQuantizer q(r, h);
    Vector x(static_cast<Eigen::Index>(m));
    for (auto& v : x) v = gen.normal() * 10.0;
    CounterRng rng(static_cast<std::uint64_t>(trial));
    const QuantizedMessage msg = q.draw(x, rng);
    const EncodedMessage enc = q.encode(msg);
    REQUIRE(enc.bit_length == h + m * (r + 1));
    CHECK(enc.bytes.size() == (enc.bit_length + 7) / 8);
    CHECK(q.decode_message(enc.bytes, m) == msg);
    CHECK(q.decode(enc.bytes, m) == q.reconstruct(msg));
  }
}

TEST_CASE("truncated message names the missing bits") {
  const RandQuantizer q(3);
  CounterRng rng(1);
  const Vector x = Vector::Ones(10);
  EncodedMessage enc = q.encode(x, rng);
  enc.bytes.resize(enc.bytes.size() - 2);
  CHECK_THROWS_WITH_AS(q.decode(enc.bytes, 10), doctest::Contains("truncated"), CompressionError);
}

TEST_CASE("quantizer draws are replayable") {
  const RandQuantizer q(2);
  const Vector x = (Vector(4) << 1.0, -2.0, 0.5, 3.0).finished();
  CounterRng a(77), b(77);
  for (int i = 0; i < 20; ++i) CHECK(q.compress(x, a) == q.compress(x, b));
}

TEST_CASE("contract checks") {
  const Vector x = (Vector(8) << 1.0, -0.3, 2.0, 0.1, -1.5, 0.7, 0.0, 0.9).finished();
  const VarianceReport id = verify_variance(IdentityOperator(), x, 100);
  CHECK(id.measured_ratio == 0.0);
  CHECK(id.pass);
  CHECK(verify_variance(RandKSparsifier(8), x, 100).measured_ratio == doctest::Approx(0.0));

  const ContractReport rep = verify_contract(RandQuantizer(2), x, 100000, 0.9973002039367398, 3);
  CHECK(rep.variance.pass);
  CHECK(rep.variance.measured_ratio <= 1.0);
  CHECK(rep.unbiased.critical_value == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(rep.unbiased.max_standardized_deviation < 5.0);
}

TEST_CASE("rand-k sparsifier is unbiased with the stated omega") {
  const RandKSparsifier s(3);
  CHECK(s.omega(12) == doctest::Approx(3.0));
  Vector x(12);
  for (Eigen::Index i = 0; i < 12; ++i) x[i] = static_cast<double>(i) - 5.5;
  const ContractReport rep = verify_contract(s, x, 100000, 0.9999, 2);
  CHECK(rep.unbiased.pass);
  CHECK(rep.variance.pass);
}

TEST_CASE("invalid quantizer parameters") {
  CHECK_THROWS_AS(RandQuantizer(0), CompressionError);
  CHECK_THROWS_AS(RandQuantizer(2, 16), CompressionError);
  CounterRng rng(1);
  Vector bad = Vector::Ones(3);
  bad[1] = std::nan("");
  CHECK_THROWS_AS(RandQuantizer(2).compress(bad, rng), CompressionError);
}
