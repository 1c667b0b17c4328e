#include "actc/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

namespace actc {

namespace {

std::vector<bool> reachable_from(const std::vector<std::vector<std::size_t>>& adjacency,
                                 std::size_t start) {
  std::vector<bool> seen(adjacency.size(), false);
  std::queue<std::size_t> frontier;
  seen[start] = true;
  frontier.push(start);
  while (!frontier.empty()) {
    const std::size_t u = frontier.front();
    frontier.pop();
    for (std::size_t v : adjacency[u]) {
      if (!seen[v]) {
        seen[v] = true;
        frontier.push(v);
      }
    }
  }
  return seen;
}

}  // namespace

Topology::Topology(std::vector<std::vector<std::size_t>> incoming, Unchecked)
    : incoming_(std::move(incoming)) {
  for (auto& list : incoming_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
}

Topology::Topology(std::vector<std::vector<std::size_t>> incoming)
    : Topology(std::move(incoming), Unchecked{}) {
  const std::size_t n = incoming_.size();
  if (n == 0) throw GraphError("topology has no agents");
  bool any_self_loop = false;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l : incoming_[k]) {
      if (l >= n) {
        std::ostringstream os;
        os << "agent " << k << " lists neighbor " << l << " outside [0, " << n << ")";
        throw GraphError(os.str());
      }
      if (l == k) any_self_loop = true;
    }
  }
  if (!any_self_loop) throw GraphError("topology has no self-loop");
  if (auto pair = unreachable_pair()) {
    std::ostringstream os;
    os << "not strongly connected: agent " << pair->first << " cannot reach agent "
       << pair->second;
    throw GraphError(os.str());
  }
}

Topology Topology::undirected(std::size_t n,
                              const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  std::vector<std::vector<std::size_t>> incoming(n);
  for (std::size_t k = 0; k < n; ++k) incoming[k].push_back(k);
  for (auto [a, b] : edges) {
    if (a >= n || b >= n) throw GraphError("edge endpoint out of range");
    incoming[a].push_back(b);
    incoming[b].push_back(a);
  }
  return Topology(std::move(incoming));
}

Topology Topology::isolated(std::size_t n) {
  std::vector<std::vector<std::size_t>> incoming(n);
  for (std::size_t k = 0; k < n; ++k) incoming[k] = {k};
  return Topology(std::move(incoming), Unchecked{});
}

bool Topology::has_edge(std::size_t from, std::size_t to) const {
  const auto& list = incoming_.at(to);
  return std::binary_search(list.begin(), list.end(), from);
}

bool Topology::symmetric() const {
  for (std::size_t k = 0; k < size(); ++k)
    for (std::size_t l : incoming_[k])
      if (!has_edge(k, l)) return false;
  return true;
}

bool Topology::all_self_loops() const {
  for (std::size_t k = 0; k < size(); ++k)
    if (!has_edge(k, k)) return false;
  return true;
}

std::optional<std::pair<std::size_t, std::size_t>> Topology::unreachable_pair() const {
  const std::size_t n = size();
  if (n == 0) return std::nullopt;
  // outgoing[l] lists k with l in N_k.
  std::vector<std::vector<std::size_t>> outgoing(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l : incoming_[k]) outgoing[l].push_back(k);

  const auto forward = reachable_from(outgoing, 0);
  for (std::size_t j = 0; j < n; ++j)
    if (!forward[j]) return std::make_pair(std::size_t{0}, j);
  const auto backward = reachable_from(incoming_, 0);
  for (std::size_t j = 0; j < n; ++j)
    if (!backward[j]) return std::make_pair(j, std::size_t{0});
  return std::nullopt;
}

CombinationMatrix::CombinationMatrix(Matrix weights, Topology support, bool)
    : weights_(std::move(weights)), support_(std::move(support)) {}

CombinationMatrix::CombinationMatrix(Matrix weights, Topology support)
    : weights_(std::move(weights)), support_(std::move(support)) {
  const auto n = static_cast<Eigen::Index>(support_.size());
  if (weights_.rows() != n || weights_.cols() != n)
    throw GraphError("weight matrix size does not match topology");
  for (Eigen::Index k = 0; k < n; ++k) {
    double column = 0.0;
    for (Eigen::Index l = 0; l < n; ++l) {
      const double a = weights_(l, k);
      if (!std::isfinite(a) || a < 0.0) {
        std::ostringstream os;
        os << "weight a(" << l << "," << k << ") = " << a << " is not a nonnegative number";
        throw GraphError(os.str());
      }
      if (a != 0.0 && !support_.has_edge(static_cast<std::size_t>(l),
                                         static_cast<std::size_t>(k))) {
        std::ostringstream os;
        os << "weight a(" << l << "," << k << ") is nonzero outside the topology";
        throw GraphError(os.str());
      }
      column += a;
    }
    if (std::abs(column - 1.0) > kStochasticTol) {
      std::ostringstream os;
      os << "column " << k << " sums to " << column << ", not 1";
      throw GraphError(os.str());
    }
  }
}

CombinationMatrix CombinationMatrix::isolated(std::size_t n) {
  return CombinationMatrix(Matrix::Identity(static_cast<Eigen::Index>(n),
                                            static_cast<Eigen::Index>(n)),
                           Topology::isolated(n), true);
}

CombinationMatrix CombinationMatrix::from_weights(const Matrix& weights) {
  if (weights.rows() != weights.cols()) throw GraphError("weight matrix is not square");
  const auto n = static_cast<std::size_t>(weights.rows());
  std::vector<std::vector<std::size_t>> incoming(n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l)
      if (weights(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) != 0.0)
        incoming[k].push_back(l);
  return CombinationMatrix(weights, Topology(std::move(incoming)));
}

namespace {

void require_symmetric_connected(const Topology& topology, const char* rule) {
  if (auto pair = topology.unreachable_pair()) {
    std::ostringstream os;
    os << "not strongly connected: agent " << pair->first << " cannot reach agent "
       << pair->second;
    throw GraphError(os.str());
  }
  if (!topology.symmetric())
    throw GraphError(std::string(rule) + " rule needs an undirected (symmetric) topology");
  if (!topology.all_self_loops())
    throw GraphError(std::string(rule) + " rule needs a self-loop on every agent");
}

}  // namespace

CombinationMatrix metropolis(const Topology& topology) {
  require_symmetric_connected(topology, "Metropolis");
  const std::size_t n = topology.size();
  const auto ni = static_cast<Eigen::Index>(n);
  Matrix a = Matrix::Zero(ni, ni);
  for (std::size_t k = 0; k < n; ++k) {
    const double nk = static_cast<double>(topology.neighbors(k).size());
    double off = 0.0;
    for (std::size_t l : topology.neighbors(k)) {
      if (l == k) continue;
      const double nl = static_cast<double>(topology.neighbors(l).size());
      const double w = 1.0 / std::max(nk, nl);
      a(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = w;
      off += w;
    }
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0 - off;
  }
  return CombinationMatrix(std::move(a), topology);
}

CombinationMatrix metropolis_hastings_target(const Topology& topology, const Vector& target) {
  require_symmetric_connected(topology, "Metropolis-Hastings");
  const std::size_t n = topology.size();
  if (static_cast<std::size_t>(target.size()) != n)
    throw GraphError("target Perron vector length does not match topology");
  for (Eigen::Index k = 0; k < target.size(); ++k)
    if (!(target[k] > 0.0))
      throw GraphError("target Perron vector must be strictly positive (entry " +
                       std::to_string(k) + ")");
  if (std::abs(target.sum() - 1.0) > 1e-10)
    throw GraphError("target Perron vector must sum to 1");

  const auto ni = static_cast<Eigen::Index>(n);
  Matrix a = Matrix::Zero(ni, ni);
  for (std::size_t k = 0; k < n; ++k) {
    const double nk = static_cast<double>(topology.neighbors(k).size());
    const double pk = target[static_cast<Eigen::Index>(k)];
    double off = 0.0;
    for (std::size_t l : topology.neighbors(k)) {
      if (l == k) continue;
      const double nl = static_cast<double>(topology.neighbors(l).size());
      const double pl = target[static_cast<Eigen::Index>(l)];
      const double w = std::min(1.0 / nk, pl / (pk * nl));
      a(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k)) = w;
      off += w;
    }
    a(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = 1.0 - off;
  }
  return CombinationMatrix(std::move(a), topology);
}

PerronVector perron(const CombinationMatrix& a, std::size_t max_iterations) {
  const Matrix& w = a.weights();
  const Eigen::Index n = w.rows();
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector y(n);
  double residual = 0.0;
  for (std::size_t it = 1; it <= max_iterations; ++it) {
    y.noalias() = w * x;
    residual = (y - x).lpNorm<1>();
    x.swap(y);
    if (residual < 1e-12) {
      x /= x.sum();
      if ((x.array() <= 0.0).any())
        throw GraphError("Perron vector has non-positive entries; matrix is not primitive");
      return {x, it, residual};
    }
  }
  throw ConvergenceError("power iteration did not converge within " +
                             std::to_string(max_iterations) +
                             " iterations (last l1 step " + std::to_string(residual) + ")",
                         residual);
}

std::size_t SpectralSummary::reduced_dimension() const {
  std::size_t total = 0;
  for (const auto& b : jordan_blocks) total += b.size;
  return total;
}

SpectralSummary SpectralSummary::from_jordan_blocks(std::vector<JordanBlock> blocks) {
  if (blocks.empty()) throw GraphError("at least one Jordan block besides lambda_1 is needed");
  for (const auto& b : blocks)
    if (b.size == 0) throw GraphError("Jordan block of size zero");
  std::stable_sort(blocks.begin(), blocks.end(), [](const JordanBlock& x, const JordanBlock& y) {
    return std::abs(x.eigenvalue) > std::abs(y.eigenvalue);
  });
  SpectralSummary s;
  s.eigenvalues.push_back(1.0);
  for (const auto& b : blocks)
    for (std::size_t j = 0; j < b.size; ++j) s.eigenvalues.push_back(b.eigenvalue);
  s.lambda2_mag = std::abs(blocks.front().eigenvalue);
  s.diagonalizable = std::all_of(blocks.begin(), blocks.end(),
                                 [](const JordanBlock& b) { return b.size == 1; });
  s.eigenvector_condition = s.diagonalizable ? 1.0 : std::numeric_limits<double>::infinity();
  s.jordan_blocks = std::move(blocks);
  return s;
}

namespace {

struct SortedEigen {
  std::vector<std::complex<double>> values;
  ComplexMatrix vectors;  // columns match `values`
};

SortedEigen sorted_eigen(const Matrix& a) {
  Eigen::EigenSolver<Matrix> solver(a, true);
  if (solver.info() != Eigen::Success) throw GraphError("eigensolver failed");
  const ComplexVector vals = solver.eigenvalues();
  const ComplexMatrix vecs = solver.eigenvectors();
  const Eigen::Index n = vals.size();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto unit = std::min_element(order.begin(), order.end(), [&](auto i, auto j) {
    return std::abs(vals[i] - 1.0) < std::abs(vals[j] - 1.0);
  });
  std::iter_swap(order.begin(), unit);
  std::stable_sort(order.begin() + 1, order.end(), [&](auto i, auto j) {
    return std::abs(vals[i]) > std::abs(vals[j]);
  });

  SortedEigen out;
  out.vectors.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    out.values.push_back(vals[order[static_cast<std::size_t>(c)]]);
    out.vectors.col(c) = vecs.col(order[static_cast<std::size_t>(c)]);
  }
  return out;
}

}  // namespace

SpectralSummary spectrum(const CombinationMatrix& a) {
  const auto eig = sorted_eigen(a.weights());
  if (std::abs(eig.values.front() - 1.0) > 1e-10)
    throw GraphError("combination matrix has no eigenvalue at 1");

  SpectralSummary s;
  s.eigenvalues = eig.values;
  s.lambda2_mag = eig.values.size() > 1 ? std::abs(eig.values[1]) : 0.0;

  Eigen::JacobiSVD<ComplexMatrix> svd(eig.vectors);
  const auto& sv = svd.singularValues();
  const double smallest = sv[sv.size() - 1];
  s.eigenvector_condition =
      smallest > 0.0 ? sv[0] / smallest : std::numeric_limits<double>::infinity();
  s.diagonalizable = s.eigenvector_condition < kDiagonalizableCondition;
  for (std::size_t n = 1; n < eig.values.size(); ++n)
    s.jordan_blocks.push_back({eig.values[n], 1});
  return s;
}

void NetworkTransform::check(const Vector& pi) const {
  const Eigen::Index n = v.rows();
  const double consistency =
      (v * v_inv - ComplexMatrix::Identity(n, n)).cwiseAbs().maxCoeff();
  if (consistency > 1e-8)
    throw GraphError("network transform is inconsistent: |V V^-1 - I| = " +
                     std::to_string(consistency));
  if ((v.row(0).transpose() - pi.cast<std::complex<double>>()).cwiseAbs().maxCoeff() > 1e-8)
    throw GraphError("first row of V is not the Perron vector");
  if ((v_inv.col(0) - ComplexVector::Ones(n)).cwiseAbs().maxCoeff() > 1e-8)
    throw GraphError("first column of V^-1 is not the all-ones vector");
}

NetworkTransform NetworkTransform::from_rows(ComplexMatrix v, const Vector& pi) {
  NetworkTransform t;
  Eigen::FullPivLU<ComplexMatrix> lu(v);
  if (!lu.isInvertible()) throw GraphError("supplied V is singular");
  t.v_inv = lu.inverse();
  t.v = std::move(v);
  t.norm_v_inv = Eigen::JacobiSVD<ComplexMatrix>(t.v_inv).singularValues()[0];
  t.check(pi);
  return t;
}

NetworkTransform network_transform(const CombinationMatrix& a, const SpectralSummary& spec) {
  if (!spec.diagonalizable) {
    std::ostringstream os;
    os << "eigenbasis is ill-conditioned (condition " << spec.eigenvector_condition
       << " >= " << kDiagonalizableCondition
       << "); supply explicit jordan_blocks and generalized eigenvectors";
    throw GraphError(os.str());
  }
  const auto eig = sorted_eigen(a.weights());
  const Vector pi = perron(a).pi;
  const Eigen::Index n = pi.size();
  ComplexMatrix v(n, n);
  v.row(0) = pi.cast<std::complex<double>>().transpose();
  for (Eigen::Index r = 1; r < n; ++r)
    v.row(r) = eig.vectors.col(r).normalized().transpose();
  return NetworkTransform::from_rows(std::move(v), pi);
}

double weighted_geometric_sum(double a, std::size_t length) {
  // Horner form of sum_{j=0}^{L-1} (L - j) a^j; all terms share a sign for
  // a > 0, so there is no cancellation near a = 1.
  double acc = 0.0;
  for (std::size_t j = length; j-- > 0;) acc = acc * a + static_cast<double>(length - j);
  return acc;
}

double gamma(const SpectralSummary& spec) {
  const double l2 = spec.lambda2_mag;
  if (!(l2 > 0.0 && l2 < 1.0))
    throw GraphError("gamma needs 0 < |lambda_2| < 1 (got " + std::to_string(l2) + ")");
  double total = 0.0;
  for (const auto& block : spec.jordan_blocks) {
    const double mag = std::abs(block.eigenvalue);
    const double gap = l2 - mag * mag;
    if (std::abs(gap) < 1e-10)
      throw GraphError("gamma is singular: |lambda_2| = |lambda_n|^2");
    const double a = 2.0 * l2 / ((1.0 - l2) * gap);
    total += (l2 / gap) * weighted_geometric_sum(a, block.size);
  }
  return total;
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> solver(m, false);
  if (solver.info() != Eigen::Success) throw GraphError("eigensolver failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double gamma_resolvent_oracle(double zeta, const Matrix& e0) {
  const double rho = spectral_radius(e0);
  if (rho >= 1.0)
    throw GraphError("E0 has spectral radius " + std::to_string(rho) + " >= 1");
  const Eigen::Index n = e0.rows();
  Eigen::FullPivLU<Matrix> lu(Matrix::Identity(n, n) - e0);
  if (!lu.isInvertible()) throw GraphError("I - E0 is singular");
  const Vector x = lu.solve(Vector::Ones(n));
  return zeta * x.sum();
}

}  // namespace actc
