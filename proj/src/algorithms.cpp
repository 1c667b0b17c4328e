#include "actc/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace actc {

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::actc: return "actc";
    case Algorithm::uncompressed_actc: return "uncompressed_actc";
    case Algorithm::atc: return "atc";
    case Algorithm::choco_sgd: return "choco_sgd";
  }
  return "?";
}

Algorithm algorithm_from_string(std::string_view name) {
  if (name == "actc") return Algorithm::actc;
  if (name == "uncompressed_actc") return Algorithm::uncompressed_actc;
  if (name == "atc") return Algorithm::atc;
  if (name == "choco_sgd") return Algorithm::choco_sgd;
  throw std::invalid_argument("unknown algorithm '" + std::string(name) + "'");
}

AlgoConfig AlgoConfig::uniform(std::size_t n_agents, double mu, double zeta, OperatorPtr op) {
  AlgoConfig c;
  c.mu.assign(n_agents, mu);
  c.zeta = zeta;
  c.operators.assign(n_agents, std::move(op));
  return c;
}

double AlgoConfig::mu_max() const {
  if (mu.empty()) throw std::invalid_argument("no step-sizes configured");
  return *std::max_element(mu.begin(), mu.end());
}

void AlgoConfig::validate(std::size_t n_agents) const {
  if (mu.size() != n_agents) throw std::invalid_argument("one step-size per agent is required");
  for (double m : mu)
    if (!(m > 0.0)) throw std::invalid_argument("step-sizes must be positive");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw std::invalid_argument("zeta must lie in (0, 1]");
  if (operators.size() != n_agents)
    throw std::invalid_argument("one compression operator per agent is required");
  for (const auto& op : operators)
    if (!op) throw std::invalid_argument("null compression operator");
}

namespace {

const IdentityOperator kIdentity;

/// acc = sum_j a(l_j, k) x(j) over the neighbor list of k, in list order.
/// Shared by every combine so equal inputs give bitwise-equal sums.
template <class Get>
void combine_into(Vector& acc, const CombinationMatrix& a, std::size_t k, Get&& get) {
  acc.setZero();
  const auto& nbrs = a.support().neighbors(k);
  for (std::size_t j = 0; j < nbrs.size(); ++j) {
    const double weight = a(nbrs[j], k);
    if (weight != 0.0) acc.noalias() += weight * get(j, nbrs[j]);
  }
}

void adapt(NetworkState& state, const AlgoConfig& config, const RegressionProblem& problem,
           StreamIds ids) {
  const std::size_t n = problem.size();
  const std::size_t i = state.iteration + 1;
  Vector u(static_cast<Eigen::Index>(problem.dimension()));
  for (std::size_t k = 0; k < n; ++k) {
    CounterRng reg = make_stream(ids.seed, ids.run, i, k, Purpose::regressor);
    CounterRng noise = make_stream(ids.seed, ids.run, i, k, Purpose::noise);
    problem.draw_regressor(k, reg, u);
    const double d = u.dot(problem.agent(k).target) + problem.draw_noise(k, noise);
    const double residual = u.dot(state.w[k]) - d;
    // psi = w - mu * 2 u (u^T w - d)
    state.psi[k] = state.w[k] - (config.mu[k] * 2.0 * residual) * u;
  }
}

void check_finite(const Vector& v, std::size_t iteration, const char* what, std::size_t k) {
  if (!v.allFinite()) {
    std::ostringstream os;
    os << what << " of agent " << k << " is not finite at iteration " << iteration;
    throw DivergenceError(os.str(), iteration);
  }
}

void check_divergence(const NetworkState& state, const AlgoConfig& config) {
  for (std::size_t k = 0; k < state.w.size(); ++k) {
    const double norm = state.w[k].norm();
    if (!std::isfinite(norm) || norm > config.divergence_threshold) {
      std::ostringstream os;
      os << "diverged at iteration " << state.iteration << ": |w_" << k << "| = " << norm;
      throw DivergenceError(os.str(), state.iteration);
    }
  }
}

void check_shapes(const NetworkState& state, const CombinationMatrix& a,
                  const RegressionProblem& problem) {
  if (a.size() != problem.size() || state.w.size() != problem.size())
    throw std::invalid_argument("state, combination matrix and problem disagree on N");
}

void compressed_round(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
                      const RegressionProblem& problem, StreamIds ids, bool force_identity) {
  config.validate(problem.size());
  check_shapes(state, a, problem);
  const std::size_t n = problem.size();
  const std::size_t i = state.iteration + 1;
  const double zeta = config.zeta;

  adapt(state, config, problem, ids);

  // One draw per agent per round, broadcast to every out-neighbor.
  std::vector<Vector> message(n);
  std::vector<bool> lossless(n);
  for (std::size_t k = 0; k < n; ++k) {
    const CompressionOperator& op = force_identity ? kIdentity : *config.operators[k];
    lossless[k] = op.lossless();
    CounterRng rng = make_stream(ids.seed, ids.run, i, k, Purpose::quantizer);
    message[k] = op.compress(state.psi[k] - state.q[k], rng);
    check_finite(message[k], i, "compressed innovation", k);
  }

  // q <- q + zeta Q(psi - q). A lossless message carries psi - q exactly, so
  // the update is evaluated as (1 - zeta) q + zeta psi, which is exact at
  // zeta = 1. Sender and receivers run the same arithmetic on equal inputs.
  auto update = [&](Vector& copy, std::size_t l) {
    if (lossless[l]) {
      copy = (1.0 - zeta) * copy + zeta * state.psi[l];
    } else {
      copy.noalias() += zeta * message[l];
    }
  };
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nbrs = a.support().neighbors(k);
    for (std::size_t j = 0; j < nbrs.size(); ++j) update(state.q_mem[k][j], nbrs[j]);
  }
  for (std::size_t l = 0; l < n; ++l) update(state.q[l], l);

  for (std::size_t k = 0; k < n; ++k)
    combine_into(state.w[k], a, k, [&](std::size_t j, std::size_t) -> const Vector& {
      return state.q_mem[k][j];
    });
  state.iteration = i;
  check_divergence(state, config);
}

}  // namespace

NetworkState actc_init(const AlgoConfig& config, const CombinationMatrix& a,
                       const std::vector<Vector>& q0) {
  const std::size_t n = a.size();
  config.validate(n);
  if (q0.size() != n) throw std::invalid_argument("one initial state per agent is required");
  NetworkState s;
  s.q = q0;
  s.psi = q0;
  s.w.resize(n);
  s.q_mem.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t l : a.support().neighbors(k)) s.q_mem[k].push_back(q0[l]);
    s.w[k].resize(q0[k].size());
    combine_into(s.w[k], a, k, [&](std::size_t j, std::size_t) -> const Vector& {
      return s.q_mem[k][j];
    });
  }
  return s;
}

void actc_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
               const RegressionProblem& problem, StreamIds ids) {
  compressed_round(state, config, a, problem, ids, false);
}

void uncompressed_actc_step(NetworkState& state, const AlgoConfig& config,
                            const CombinationMatrix& a, const RegressionProblem& problem,
                            StreamIds ids) {
  compressed_round(state, config, a, problem, ids, true);
}

void atc_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
              const RegressionProblem& problem, StreamIds ids) {
  check_shapes(state, a, problem);
  if (config.mu.size() != problem.size())
    throw std::invalid_argument("one step-size per agent is required");
  adapt(state, config, problem, ids);
  const std::size_t n = problem.size();
  for (std::size_t k = 0; k < n; ++k)
    combine_into(state.w[k], a, k, [&](std::size_t, std::size_t l) -> const Vector& {
      return state.psi[l];
    });
  state.iteration += 1;
  check_divergence(state, config);
}

void choco_sgd_step(NetworkState& state, const AlgoConfig& config, const CombinationMatrix& a,
                    const RegressionProblem& problem, StreamIds ids) {
  config.validate(problem.size());
  check_shapes(state, a, problem);
  const std::size_t n = problem.size();
  const std::size_t i = state.iteration + 1;

  adapt(state, config, problem, ids);

  // Public copies x_hat (stored in q / q_mem) track the half-step iterates.
  std::vector<Vector> message(n);
  for (std::size_t k = 0; k < n; ++k) {
    CounterRng rng = make_stream(ids.seed, ids.run, i, k, Purpose::quantizer);
    message[k] = config.operators[k]->compress(state.psi[k] - state.q[k], rng);
    check_finite(message[k], i, "compressed innovation", k);
  }
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nbrs = a.support().neighbors(k);
    for (std::size_t j = 0; j < nbrs.size(); ++j) state.q_mem[k][j] += message[nbrs[j]];
  }
  for (std::size_t l = 0; l < n; ++l) state.q[l] += message[l];

  // x_k = x_k^{1/2} + gamma sum_l a_{lk} (x_hat_l - x_hat_k)
  Vector mix(static_cast<Eigen::Index>(problem.dimension()));
  for (std::size_t k = 0; k < n; ++k) {
    combine_into(mix, a, k, [&](std::size_t j, std::size_t) -> const Vector& {
      return state.q_mem[k][j];
    });
    state.w[k] = state.psi[k] + config.choco_gamma * (mix - state.q[k]);
  }
  state.iteration = i;
  check_divergence(state, config);
}

NetworkState init_state(Algorithm algorithm, const AlgoConfig& config,
                        const CombinationMatrix& a, const std::vector<Vector>& q0) {
  if (algorithm == Algorithm::choco_sgd) {
    // CHOCO starts from x = q0 with public copies equal to x.
    NetworkState s = actc_init(config, a, q0);
    s.w = q0;
    return s;
  }
  return actc_init(config, a, q0);
}

void step(Algorithm algorithm, NetworkState& state, const AlgoConfig& config,
          const CombinationMatrix& a, const RegressionProblem& problem, StreamIds ids) {
  switch (algorithm) {
    case Algorithm::actc: return actc_step(state, config, a, problem, ids);
    case Algorithm::uncompressed_actc: return uncompressed_actc_step(state, config, a, problem, ids);
    case Algorithm::atc: return atc_step(state, config, a, problem, ids);
    case Algorithm::choco_sgd: return choco_sgd_step(state, config, a, problem, ids);
  }
}

std::vector<std::size_t> bits_per_round(Algorithm algorithm, const AlgoConfig& config,
                                        std::size_t dimension) {
  std::vector<std::size_t> bits;
  for (std::size_t k = 0; k < config.operators.size(); ++k) {
    if (algorithm == Algorithm::actc || algorithm == Algorithm::choco_sgd)
      bits.push_back(config.operators[k]->encoded_bits(dimension));
    else
      bits.push_back(32 * dimension);
  }
  return bits;
}

std::size_t RunRecord::total_bits(std::size_t iteration) const {
  std::size_t per_round = 0;
  for (std::size_t b : bits_per_agent_per_round) per_round += b;
  return per_round * iteration;
}

RunOutput run_single(Algorithm algorithm, const AlgoConfig& config, const CombinationMatrix& a,
                     const RegressionProblem& problem, const RunOptions& options, StreamIds ids) {
  const std::size_t n = problem.size();
  const auto m = static_cast<Eigen::Index>(problem.dimension());
  std::vector<Vector> q0 = options.q0;
  if (q0.empty()) q0.assign(n, Vector::Zero(m));
  const std::size_t stride = std::max<std::size_t>(1, options.record_stride);

  RunOutput out;
  RunRecord& rec = out.record;
  rec.algorithm = algorithm;
  rec.n_agents = n;
  rec.ids = ids;
  rec.bits_per_agent_per_round = bits_per_round(algorithm, config, problem.dimension());

  auto capture = [&](const NetworkState& s) {
    rec.iterations.push_back(s.iteration);
    for (std::size_t k = 0; k < n; ++k)
      rec.sq_dev.push_back((s.w[k] - problem.w_star()).squaredNorm());
    if (options.keep_trajectories) out.trajectories.push_back(s.w);
  };

  NetworkState state = init_state(algorithm, config, a, q0);
  capture(state);
  try {
    for (std::size_t it = 1; it <= options.iterations; ++it) {
      step(algorithm, state, config, a, problem, ids);
      if (it % stride == 0 || it == options.iterations) capture(state);
    }
  } catch (const DivergenceError& e) {
    rec.diverged = true;
    rec.diverged_at = e.iteration();
  }
  return out;
}

BitTotals bits_accounting(const CompressionOperator& op, std::size_t dimension,
                          std::size_t iterations) {
  return {op.encoded_bits(dimension) * iterations, 32 * dimension * iterations};
}

}  // namespace actc
