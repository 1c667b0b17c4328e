#include "actc/compression.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

namespace actc {

namespace {

class BitWriter {
 public:
  void put(std::uint64_t value, unsigned bits) {
    for (unsigned b = bits; b-- > 0;) {
      if (length_ % 8 == 0) bytes_.push_back(0);
      if ((value >> b) & 1U) bytes_.back() |= static_cast<std::uint8_t>(0x80U >> (length_ % 8));
      ++length_;
    }
  }
  EncodedMessage finish() && { return {std::move(bytes_), length_}; }

 private:
  std::vector<std::uint8_t> bytes_;
  std::size_t length_ = 0;
};

class BitReader {
 public:
  explicit BitReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint64_t get(unsigned bits) {
    if (offset_ + bits > bytes_.size() * 8) {
      std::ostringstream os;
      os << "truncated message: need " << bits << " bits at bit offset " << offset_
         << " but only " << bytes_.size() * 8 << " bits are present";
      throw CompressionError(os.str());
    }
    std::uint64_t value = 0;
    for (unsigned b = 0; b < bits; ++b, ++offset_) {
      const unsigned bit = (bytes_[offset_ / 8] >> (7 - offset_ % 8)) & 1U;
      value = (value << 1) | bit;
    }
    return value;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

}  // namespace

RandQuantizer::RandQuantizer(unsigned rate_bits, unsigned norm_bits)
    : rate_bits_(rate_bits), norm_bits_(norm_bits) {
  if (rate_bits == 0 || rate_bits > 31)
    throw CompressionError("quantizer rate must be between 1 and 31 bits");
  if (norm_bits != 32 && norm_bits != 64)
    throw CompressionError("norm precision must be 32 or 64 bits");
  levels_ = (std::uint32_t{1} << rate_bits) - 1;
}

QuantizedMessage RandQuantizer::draw(const Vector& x, CounterRng& rng) const {
  if (!x.allFinite()) throw CompressionError("cannot quantize a non-finite vector");
  const auto m = static_cast<std::size_t>(x.size());
  QuantizedMessage msg;
  msg.negative.assign(m, false);
  msg.index.assign(m, 0);

  double norm = x.norm();
  if (norm_bits_ == 32) norm = static_cast<double>(static_cast<float>(norm));
  msg.norm = norm;
  if (norm == 0.0) return msg;

  const double levels = static_cast<double>(levels_);
  for (std::size_t i = 0; i < m; ++i) {
    const double value = x[static_cast<Eigen::Index>(i)];
    // The ratio uses the transmitted norm so that reconstruction is unbiased;
    // rounding the norm can push it marginally above 1.
    const double xi = std::min(std::abs(value) / norm, 1.0);
    const double scaled = xi * levels;
    auto lower = static_cast<std::uint32_t>(std::floor(scaled));
    if (lower >= levels_) lower = levels_;
    const double up_probability = scaled - static_cast<double>(lower);
    const double u = rng.uniform();
    msg.index[i] = (u < up_probability) ? lower + 1 : lower;
    msg.negative[i] = value < 0.0;
  }
  return msg;
}

Vector RandQuantizer::reconstruct(const QuantizedMessage& msg) const {
  const auto m = static_cast<Eigen::Index>(msg.dimension());
  Vector out(m);
  const double levels = static_cast<double>(levels_);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    const double magnitude = msg.norm * (static_cast<double>(msg.index[idx]) / levels);
    out[i] = msg.negative[idx] ? -magnitude : magnitude;
  }
  return out;
}

EncodedMessage RandQuantizer::encode(const QuantizedMessage& msg) const {
  BitWriter writer;
  if (norm_bits_ == 32) {
    writer.put(std::bit_cast<std::uint32_t>(static_cast<float>(msg.norm)), 32);
  } else {
    writer.put(std::bit_cast<std::uint64_t>(msg.norm), 64);
  }
  for (bool neg : msg.negative) writer.put(neg ? 1U : 0U, 1);
  for (std::uint32_t idx : msg.index) {
    if (idx > levels_) throw CompressionError("endpoint index exceeds L");
    writer.put(idx, rate_bits_);
  }
  return std::move(writer).finish();
}

QuantizedMessage RandQuantizer::decode_message(std::span<const std::uint8_t> bytes,
                                               std::size_t m) const {
  BitReader reader(bytes);
  QuantizedMessage msg;
  if (norm_bits_ == 32) {
    msg.norm = static_cast<double>(
        std::bit_cast<float>(static_cast<std::uint32_t>(reader.get(32))));
  } else {
    msg.norm = std::bit_cast<double>(reader.get(64));
  }
  if (!std::isfinite(msg.norm) || msg.norm < 0.0)
    throw CompressionError("decoded norm is not a finite nonnegative number");
  msg.negative.resize(m);
  for (std::size_t i = 0; i < m; ++i) msg.negative[i] = reader.get(1) != 0;
  msg.index.resize(m);
  for (std::size_t i = 0; i < m; ++i)
    msg.index[i] = static_cast<std::uint32_t>(reader.get(rate_bits_));
  return msg;
}

double RandQuantizer::omega(std::size_t m) const {
  const double md = static_cast<double>(m);
  const double l = static_cast<double>(levels_);
  return std::min(md / (l * l), std::sqrt(md) / l);
}

double omega_of(const RandQuantizer& q, std::size_t m) {
  if (m == 0) throw CompressionError("dimension must be at least 1");
  return q.omega(m);
}

Vector RandKSparsifier::compress(const Vector& x, CounterRng& rng) const {
  const auto m = static_cast<std::size_t>(x.size());
  if (k_ > m) throw CompressionError("rand-k sparsifier has k > dimension");
  if (!x.allFinite()) throw CompressionError("cannot compress a non-finite vector");
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  // Partial Fisher-Yates: the first k slots become a uniform k-subset.
  for (std::size_t i = 0; i < k_; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng() % (m - i));
    std::swap(perm[i], perm[j]);
  }
  Vector out = Vector::Zero(x.size());
  const double scale = static_cast<double>(m) / static_cast<double>(k_);
  for (std::size_t i = 0; i < k_; ++i) {
    const auto c = static_cast<Eigen::Index>(perm[i]);
    out[c] = scale * x[c];
  }
  return out;
}

double RandKSparsifier::omega(std::size_t m) const {
  return static_cast<double>(m) / static_cast<double>(k_) - 1.0;
}

std::size_t RandKSparsifier::encoded_bits(std::size_t m) const {
  std::size_t index_bits = 0;
  while ((std::size_t{1} << index_bits) < m) ++index_bits;
  return k_ * (32 + index_bits);
}

double normal_critical_value(double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw CompressionError("confidence must lie in (0, 1)");
  const double tail = 1.0 - confidence;
  double lo = 0.0;
  double hi = 40.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (std::erfc(mid / std::sqrt(2.0)) > tail) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

ContractReport verify_contract(const CompressionOperator& op, const Vector& x,
                               std::size_t n_samples, double confidence, std::uint64_t seed) {
  const Eigen::Index m = x.size();
  Vector mean = Vector::Zero(m);
  Vector m2 = Vector::Zero(m);
  double sq_error_sum = 0.0;
  CounterRng rng = make_stream(seed, 0, 0, 0, Purpose::verification);
  for (std::size_t s = 1; s <= n_samples; ++s) {
    const Vector q = op.compress(x, rng);
    sq_error_sum += (q - x).squaredNorm();
    const Vector delta = q - mean;
    mean += delta / static_cast<double>(s);
    m2 += delta.cwiseProduct(q - mean);
  }
  const double n = static_cast<double>(n_samples);

  ContractReport report;
  auto& ub = report.unbiased;
  ub.samples = n_samples;
  ub.critical_value = normal_critical_value(confidence);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double var = n_samples > 1 ? m2[i] / (n - 1.0) : 0.0;
    const double diff = std::abs(mean[i] - x[i]);
    double z;
    if (var > 0.0) {
      z = diff / std::sqrt(var / n);
    } else {
      // A constant output must equal x up to the binary32 resolution of the
      // transmitted norm.
      z = diff <= 0x1p-22 * x.norm() ? 0.0 : std::numeric_limits<double>::infinity();
    }
    ub.max_standardized_deviation = std::max(ub.max_standardized_deviation, z);
  }
  ub.pass = ub.max_standardized_deviation <= ub.critical_value;

  auto& vr = report.variance;
  vr.samples = n_samples;
  vr.omega = op.omega(static_cast<std::size_t>(m));
  const double norm2 = x.squaredNorm();
  vr.measured_ratio = norm2 > 0.0 ? sq_error_sum / n / norm2 : 0.0;
  vr.bound = vr.omega * (1.0 + 3.0 / std::sqrt(n));
  vr.pass = vr.measured_ratio <= vr.bound;
  return report;
}

UnbiasednessReport verify_unbiased(const CompressionOperator& op, const Vector& x,
                                   std::size_t n_samples, double confidence,
                                   std::uint64_t seed) {
  return verify_contract(op, x, n_samples, confidence, seed).unbiased;
}

VarianceReport verify_variance(const CompressionOperator& op, const Vector& x,
                               std::size_t n_samples, std::uint64_t seed) {
  return verify_contract(op, x, n_samples, 0.9973, seed).variance;
}

}  // namespace actc
