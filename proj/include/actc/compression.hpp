#pragma once

#include "actc/graph.hpp"
#include "actc/rng.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace actc {

class CompressionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Randomized map Q with E[Q(x)] = x and E|Q(x) - x|^2 <= omega |x|^2.
class CompressionOperator {
 public:
  virtual ~CompressionOperator() = default;

  virtual Vector compress(const Vector& x, CounterRng& rng) const = 0;
  /// Blow-up factor for dimension m.
  virtual double omega(std::size_t m) const = 0;
  /// Bits on the wire per message of dimension m.
  virtual std::size_t encoded_bits(std::size_t m) const = 0;
  /// True when Q(x) = x exactly.
  virtual bool lossless() const { return false; }
  virtual std::string name() const = 0;
};

using OperatorPtr = std::shared_ptr<const CompressionOperator>;

/// Q(x) = x. Accounted as plain 32-bit floats.
class IdentityOperator final : public CompressionOperator {
 public:
  Vector compress(const Vector& x, CounterRng&) const override { return x; }
  double omega(std::size_t) const override { return 0.0; }
  std::size_t encoded_bits(std::size_t m) const override { return 32 * m; }
  bool lossless() const override { return true; }
  std::string name() const override { return "identity"; }
};

/// Bit-packed wire image of one quantized vector.
struct QuantizedMessage {
  double norm = 0.0;                 ///< exactly representable in h bits
  std::vector<bool> negative;        ///< one sign bit per entry
  std::vector<std::uint32_t> index;  ///< transmitted endpoint index in [0, L]

  std::size_t dimension() const { return index.size(); }
  bool operator==(const QuantizedMessage&) const = default;
};

struct EncodedMessage {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_length = 0;  ///< before the final byte padding
};

/// Stochastic quantizer with r bits per magnitude: the unit interval is split
/// into L = 2^r - 1 cells and |x_m| / |x| is rounded at random to one of the
/// two enclosing endpoints so that the result is unbiased.
class RandQuantizer final : public CompressionOperator {
 public:
  /// `norm_bits` must be 32 (binary32) or 64 (binary64).
  explicit RandQuantizer(unsigned rate_bits, unsigned norm_bits = 32);

  unsigned rate_bits() const { return rate_bits_; }
  unsigned norm_bits() const { return norm_bits_; }
  std::uint32_t levels() const { return levels_; }
  double theta() const { return 1.0 / static_cast<double>(levels_); }

  /// Draws the message; consumes one uniform per entry, in entry order.
  QuantizedMessage draw(const Vector& x, CounterRng& rng) const;
  Vector reconstruct(const QuantizedMessage& msg) const;

  EncodedMessage encode(const QuantizedMessage& msg) const;
  EncodedMessage encode(const Vector& x, CounterRng& rng) const { return encode(draw(x, rng)); }
  QuantizedMessage decode_message(std::span<const std::uint8_t> bytes, std::size_t m) const;
  Vector decode(std::span<const std::uint8_t> bytes, std::size_t m) const {
    return reconstruct(decode_message(bytes, m));
  }

  Vector compress(const Vector& x, CounterRng& rng) const override {
    return reconstruct(draw(x, rng));
  }
  double omega(std::size_t m) const override;
  std::size_t encoded_bits(std::size_t m) const override {
    return norm_bits_ + m * (rate_bits_ + 1);
  }
  std::string name() const override { return "randq(r=" + std::to_string(rate_bits_) + ")"; }

 private:
  unsigned rate_bits_;
  unsigned norm_bits_;
  std::uint32_t levels_;
};

/// min(M / L^2, sqrt(M) / L).
double omega_of(const RandQuantizer& q, std::size_t m);

/// Keeps k uniformly chosen coordinates scaled by M/k, zeroes the rest.
class RandKSparsifier final : public CompressionOperator {
 public:
  explicit RandKSparsifier(std::size_t k) : k_(k) {
    if (k == 0) throw CompressionError("rand-k sparsifier needs k >= 1");
  }
  std::size_t k() const { return k_; }

  Vector compress(const Vector& x, CounterRng& rng) const override;
  double omega(std::size_t m) const override;
  /// k 32-bit values plus k coordinate indices of ceil(log2 M) bits.
  std::size_t encoded_bits(std::size_t m) const override;
  std::string name() const override { return "randk(k=" + std::to_string(k_) + ")"; }

 private:
  std::size_t k_;
};

struct UnbiasednessReport {
  bool pass = false;
  double max_standardized_deviation = 0.0;
  double critical_value = 0.0;
  std::size_t samples = 0;
};

struct VarianceReport {
  bool pass = false;
  double measured_ratio = 0.0;  ///< mean |Q(x)-x|^2 / |x|^2
  double omega = 0.0;
  double bound = 0.0;           ///< omega (1 + 3 / sqrt(n))
  std::size_t samples = 0;
};

/// Two-sided standard normal quantile for the given coverage, e.g. 0.9973 -> 3.
double normal_critical_value(double confidence);

UnbiasednessReport verify_unbiased(const CompressionOperator& op, const Vector& x,
                                   std::size_t n_samples, double confidence,
                                   std::uint64_t seed = 1);

VarianceReport verify_variance(const CompressionOperator& op, const Vector& x,
                               std::size_t n_samples, std::uint64_t seed = 1);

/// Both statistics from one pass over the same draws.
struct ContractReport {
  UnbiasednessReport unbiased;
  VarianceReport variance;
};
ContractReport verify_contract(const CompressionOperator& op, const Vector& x,
                               std::size_t n_samples, double confidence,
                               std::uint64_t seed = 1);

}  // namespace actc
