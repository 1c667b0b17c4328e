#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace actc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Directed communication graph. neighbors(k) lists the agents l whose data
/// flows into k (the set N_k), sorted ascending; it may contain k itself.
/// Agent indices are zero-based.
class Topology {
 public:
  Topology() = default;

  /// Builds and validates: indices in range, at least one self-loop, and
  /// strong connectivity. Throws GraphError naming an unreachable pair.
  explicit Topology(std::vector<std::vector<std::size_t>> incoming);

  /// Undirected graph from an edge list; self-loops are added on all nodes.
  static Topology undirected(std::size_t n,
                             const std::vector<std::pair<std::size_t, std::size_t>>& edges);

  /// N isolated agents (self-loops only). Not strongly connected; used only
  /// for non-cooperative baselines.
  static Topology isolated(std::size_t n);

  std::size_t size() const { return incoming_.size(); }
  const std::vector<std::size_t>& neighbors(std::size_t k) const {
    return incoming_.at(k);
  }
  bool has_edge(std::size_t from, std::size_t to) const;
  bool symmetric() const;
  bool all_self_loops() const;
  bool strongly_connected() const { return !unreachable_pair().has_value(); }

  /// First (from, to) pair with no directed path, if any.
  std::optional<std::pair<std::size_t, std::size_t>> unreachable_pair() const;

 private:
  struct Unchecked {};
  Topology(std::vector<std::vector<std::size_t>> incoming, Unchecked);

  std::vector<std::vector<std::size_t>> incoming_;
};

/// Left-stochastic combination matrix: weights(l, k) = a_{lk} is the weight
/// agent k assigns to data from agent l. Columns sum to one.
class CombinationMatrix {
 public:
  static constexpr double kStochasticTol = 1e-12;

  /// Validates nonnegativity, column sums and support.
  CombinationMatrix(Matrix weights, Topology support);

  /// Identity weights over isolated agents (non-cooperative baseline).
  static CombinationMatrix isolated(std::size_t n);

  /// Accepts any nonnegative matrix with unit column sums; the support is
  /// read off the nonzero pattern.
  static CombinationMatrix from_weights(const Matrix& weights);

  const Matrix& weights() const { return weights_; }
  const Topology& support() const { return support_; }
  std::size_t size() const { return static_cast<std::size_t>(weights_.rows()); }
  double operator()(std::size_t l, std::size_t k) const {
    return weights_(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
  }

 private:
  CombinationMatrix(Matrix weights, Topology support, bool);

  Matrix weights_;
  Topology support_;
};

/// a_{lk} = 1/max(n_l, n_k) for neighbors l != k, where n counts the
/// neighborhood including the self-loop; the diagonal takes the residual.
CombinationMatrix metropolis(const Topology& topology);

/// Metropolis-Hastings construction whose Perron vector is `target`:
/// a_{lk} = min(1/n_k, target_l / (target_k n_l)) for l != k.
CombinationMatrix metropolis_hastings_target(const Topology& topology,
                                             const Vector& target);

struct PerronVector {
  Vector pi;
  std::size_t iterations = 0;
  double residual = 0.0;
};

class ConvergenceError : public GraphError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : GraphError(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

/// Power iteration x <- A x from the uniform vector, stopped when successive
/// iterates are within 1e-12 in l1 distance.
PerronVector perron(const CombinationMatrix& a, std::size_t max_iterations = 1'000'000);

struct JordanBlock {
  std::complex<double> eigenvalue;
  std::size_t size = 1;
};

struct SpectralSummary {
  /// All N eigenvalues, descending magnitude, lambda_1 = 1 first.
  std::vector<std::complex<double>> eigenvalues;
  double lambda2_mag = 0.0;
  bool diagonalizable = true;
  double eigenvector_condition = 1.0;
  /// Blocks for eigenvalues 2..N (the reduced Jordan matrix), sorted by
  /// descending magnitude.
  std::vector<JordanBlock> jordan_blocks;

  std::size_t reduced_dimension() const;

  /// Summary for a user-supplied reduced Jordan structure. lambda_1 = 1 is
  /// implied; `blocks` describe the remaining eigenvalues.
  static SpectralSummary from_jordan_blocks(std::vector<JordanBlock> blocks);
};

inline constexpr double kDiagonalizableCondition = 1e8;

SpectralSummary spectrum(const CombinationMatrix& a);

/// Coordinate change splitting the coordinated (Perron) component from the
/// network-disagreement components. A^T = V^{-1} J V.
struct NetworkTransform {
  ComplexMatrix v;      ///< row 0 = pi^T, rows 1.. = right eigenvectors of A
  ComplexMatrix v_inv;  ///< column 0 = all-ones
  double norm_v_inv = 0.0;

  ComplexMatrix v_r() const { return v.bottomRows(v.rows() - 1); }

  /// Checks V V^{-1} = I, row 0 = pi and column 0 = 1 within 1e-8.
  void check(const Vector& pi) const;

  /// Transform from an explicit V (for example generalized eigenvector chains
  /// of a non-diagonalizable matrix).
  static NetworkTransform from_rows(ComplexMatrix v, const Vector& pi);
};

NetworkTransform network_transform(const CombinationMatrix& a,
                                   const SpectralSummary& spec);

/// sum_{j=0}^{L-1} (L - j) a^j, evaluated without cancellation near a = 1.
double weighted_geometric_sum(double a, std::size_t length);

/// Eigenstructure functional controlling the stability threshold of the
/// network error matrix.
double gamma(const SpectralSummary& spec);

/// zeta * 1^T (I - E0)^{-1} 1, the resolvent form of gamma().
double gamma_resolvent_oracle(double zeta, const Matrix& e0);

double spectral_radius(const Matrix& m);

}  // namespace actc
