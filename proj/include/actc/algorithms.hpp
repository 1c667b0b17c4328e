#pragma once

#include "actc/compression.hpp"
#include "actc/graph.hpp"
#include "actc/problems.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace actc {

enum class Algorithm { actc, uncompressed_actc, atc, choco_sgd };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view name);

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what), iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

struct AlgoConfig {
  std::vector<double> mu;                ///< per-agent step-sizes
  double zeta = 1.0;                     ///< stabilizing parameter in (0, 1]
  std::vector<OperatorPtr> operators;    ///< per-agent compression
  double choco_gamma = 0.5;              ///< CHOCO-SGD consensus step
  double divergence_threshold = 1e9;     ///< |w_k| above this aborts a run

  static AlgoConfig uniform(std::size_t n_agents, double mu, double zeta, OperatorPtr op);

  double mu_max() const;
  /// Scaled step-size mu_k / max_l mu_l.
  double alpha(std::size_t k) const { return mu.at(k) / mu_max(); }
  void validate(std::size_t n_agents) const;
};

/// Per-agent iterates plus each agent's replicas of its neighbors' quantized
/// states. q_mem[k][j] is agent k's copy of q_l for l = neighbors(k)[j].
struct NetworkState {
  std::size_t iteration = 0;
  std::vector<Vector> w;
  std::vector<Vector> psi;
  std::vector<Vector> q;
  std::vector<std::vector<Vector>> q_mem;
};

/// Identifies the random streams of one Monte-Carlo run.
struct StreamIds {
  std::uint64_t seed = 0;
  std::uint64_t run = 0;
};

/// q_k = q0_k, replicas seeded with exact neighbor values, w_k = sum a_{lk} q0_l.
NetworkState actc_init(const AlgoConfig& config, const CombinationMatrix& a,
                       const std::vector<Vector>& q0);

/// One synchronous adapt / compress / replicated update / combine round.
void actc_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
               const RegressionProblem& problem, StreamIds ids);

/// actc_step with every operator replaced by the identity.
void uncompressed_actc_step(NetworkState& state, const AlgoConfig& config,
                            const CombinationMatrix& a, const RegressionProblem& problem,
                            StreamIds ids);

/// psi_k = w_k - mu_k g_k(w_k); w_k = sum a_{lk} psi_l.
void atc_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
              const RegressionProblem& problem, StreamIds ids);

/// Consensus baseline: local step, compressed tracking of public copies, then
/// a gossip correction with step choco_gamma.
void choco_sgd_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
                    const RegressionProblem& problem, StreamIds ids);

/// Initial state for any algorithm (ATC ignores q and the replicas).
NetworkState init_state(Algorithm algorithm, const AlgoConfig& config,
                        const CombinationMatrix& a, const std::vector<Vector>& q0);

void step(Algorithm algorithm, NetworkState& state, const AlgoConfig& config,
          const CombinationMatrix& a, const RegressionProblem& problem, StreamIds ids);

/// Bits each agent sends per round under `algorithm`.
std::vector<std::size_t> bits_per_round(Algorithm algorithm, const AlgoConfig& config,
                                        std::size_t dimension);

struct RunRecord {
  Algorithm algorithm = Algorithm::actc;
  std::size_t n_agents = 0;
  std::vector<std::size_t> iterations;  ///< recorded iteration indices
  std::vector<double> sq_dev;           ///< |w_{k,i} - w*|^2, row-major [t][k]
  std::vector<std::size_t> bits_per_agent_per_round;
  StreamIds ids;
  bool diverged = false;
  std::size_t diverged_at = 0;

  double deviation(std::size_t t, std::size_t k) const { return sq_dev[t * n_agents + k]; }
  std::size_t total_bits(std::size_t iteration) const;
};

struct RunOptions {
  std::size_t iterations = 1000;
  std::size_t record_stride = 1;
  std::vector<Vector> q0;  ///< empty means all-zero
  /// Optional per-agent trajectory capture (w_k at recorded iterations).
  bool keep_trajectories = false;
};

struct RunOutput {
  RunRecord record;
  std::vector<std::vector<Vector>> trajectories;  ///< [t][k] when requested
};

RunOutput run_single(Algorithm algorithm, const AlgoConfig& config, const CombinationMatrix& a,
                     const RegressionProblem& problem, const RunOptions& options, StreamIds ids);

struct BitTotals {
  std::size_t per_agent = 0;  ///< (h + M(r+1)) * iterations
  std::size_t baseline = 0;   ///< 32 M iterations
};

BitTotals bits_accounting(const CompressionOperator& op, std::size_t dimension,
                          std::size_t iterations);

}  // namespace actc
