#include "actc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

namespace actc {

namespace {

constexpr double kZ95 = 1.959963984540054;

struct Welford {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double ci() const {
    if (n < 2) return 0.0;
    return kZ95 * std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n));
  }
};

std::size_t tail_count(std::size_t points) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(0.1 * static_cast<double>(points))));
}

std::size_t expected_points(std::size_t iterations, std::size_t stride) {
  stride = std::max<std::size_t>(1, stride);
  return 1 + iterations / stride + (iterations % stride != 0 ? 1 : 0);
}

/// Accumulates runs of one variant in run-index order.
struct Accumulator {
  std::vector<std::size_t> iterations;
  std::vector<Welford> network;
  std::vector<std::vector<double>> agent_sum;  // [t][k]
  std::vector<std::size_t> bits_per_round;
  std::size_t n_agents = 0;
  std::size_t diverged = 0;
  std::size_t runs = 0;
  SteadyStateEstimate steady;
  Welford steady_acc;

  void add(const RunRecord& rec, std::size_t full_points) {
    ++runs;
    n_agents = rec.n_agents;
    if (bits_per_round.empty()) bits_per_round = rec.bits_per_agent_per_round;
    const std::size_t points = rec.iterations.size();
    if (iterations.size() < points) {
      iterations = rec.iterations;
      network.resize(points);
      agent_sum.resize(points, std::vector<double>(rec.n_agents, 0.0));
    }
    double tail = 0.0;
    const std::size_t tail_n = tail_count(full_points);
    for (std::size_t t = 0; t < points; ++t) {
      double net = 0.0;
      for (std::size_t k = 0; k < rec.n_agents; ++k) {
        const double dev = rec.deviation(t, k);
        agent_sum[t][k] += dev;
        net += dev;
      }
      net /= static_cast<double>(rec.n_agents);
      network[t].add(net);
      if (t + tail_n >= full_points) tail += net;
    }
    if (rec.diverged) {
      ++diverged;
      return;
    }
    const double value = tail / static_cast<double>(tail_n);
    steady.per_run.push_back(value);
    steady_acc.add(value);
  }

  MsdCurve finish(const Variant& v, std::size_t full_points) const {
    MsdCurve c;
    c.label = v.label;
    c.algorithm = v.algorithm;
    c.runs = runs;
    c.diverged_runs = diverged;
    std::size_t length = network.size();
    for (std::size_t t = 0; t < network.size(); ++t) {
      if (network[t].n < network.front().n) {
        length = t;
        break;
      }
    }
    c.truncated = diverged > 0 || length < full_points;
    std::size_t per_round = 0;
    for (std::size_t b : bits_per_round) per_round += b;
    const std::size_t agents = std::max<std::size_t>(1, n_agents);
    c.agent_msd.assign(n_agents, std::vector<double>(length, 0.0));
    for (std::size_t t = 0; t < length; ++t) {
      c.iterations.push_back(iterations[t]);
      c.msd.push_back(network[t].mean);
      c.ci.push_back(network[t].ci());
      c.bits_cum.push_back(per_round * iterations[t] / agents);
      for (std::size_t k = 0; k < n_agents; ++k)
        c.agent_msd[k][t] = agent_sum[t][k] / static_cast<double>(network[t].n);
    }
    c.steady = steady;
    c.steady.mean = steady_acc.mean;
    c.steady.ci = steady_acc.ci();
    const std::size_t tail_n = tail_count(full_points);
    if (full_points >= tail_n && full_points - tail_n < iterations.size())
      c.steady.from_iteration = iterations[full_points - tail_n];
    return c;
  }
};

template <class Task>
void parallel_for(std::size_t count, std::size_t workers, Task&& task) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count && !failed; i = next++) {
        try {
          task(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y,
                           double* intercept) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
  if (intercept) *intercept = my - slope * mx;
  return slope;
}

std::size_t index_of_iteration(const std::vector<std::size_t>& iterations, std::size_t it) {
  return static_cast<std::size_t>(
      std::lower_bound(iterations.begin(), iterations.end(), it) - iterations.begin());
}

/// First index at or after `from` where the curve drops below twice its
/// steady state.
std::size_t transient_end(const std::vector<double>& msd, double s, std::size_t from) {
  for (std::size_t t = from; t < msd.size(); ++t)
    if (msd[t] < 2.0 * s) return t;
  return msd.size();
}

std::size_t phase2_index(const MsdCurve& curve) {
  if (curve.agent_msd.size() < 2 || curve.msd.empty()) return 0;
  const double s = steady_state_of(curve.msd);
  const std::size_t end = transient_end(curve.msd, s, 0);
  std::size_t start = 0;
  for (std::size_t t = 0; t < end; ++t) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& agent : curve.agent_msd) {
      lo = std::min(lo, agent[t]);
      hi = std::max(hi, agent[t]);
    }
    if (!(lo > 0.0) || 10.0 * std::log10(hi / lo) >= 1.0) start = t + 1;
  }
  return start;
}

OperatorPtr quantizer(unsigned r, unsigned h = 32) { return std::make_shared<RandQuantizer>(r, h); }
OperatorPtr identity() { return std::make_shared<IdentityOperator>(); }

Variant make_variant(std::string label, Algorithm alg, std::size_t n, double mu, double zeta,
                     OperatorPtr op) {
  Variant v;
  v.label = std::move(label);
  v.algorithm = alg;
  v.config = AlgoConfig::uniform(n, mu, zeta, std::move(op));
  return v;
}

/// ATC at step mu zeta, the rate-matched uncompressed reference.
Variant atc_reference(std::size_t n, double mu, double zeta) {
  return make_variant("atc", Algorithm::atc, n, mu * zeta, 1.0, identity());
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os << std::setprecision(12) << x;
  return os.str();
}

double nu_of(const RegressionProblem& problem, const Vector& p) {
  return constants(problem, p).nu;
}

std::size_t iterations_for(double mu_zeta_nu, double e_folds) {
  return static_cast<std::size_t>(std::ceil(e_folds / mu_zeta_nu));
}

}  // namespace

void ExperimentConfig::validate() const {
  if (mc_runs < 1) throw HarnessError("mc_runs must be at least 1");
  if (variants.empty()) throw HarnessError("experiment has no variants");
  if (iterations < 1) throw HarnessError("iterations must be at least 1");
  for (const auto& v : variants) {
    v.config.validate(scenario.problem.size());
    if (v.matrix && v.matrix->size() != scenario.problem.size())
      throw HarnessError("variant '" + v.label + "' matrix size does not match the scenario");
  }
  if (!q0.empty() && q0.size() != scenario.problem.size())
    throw HarnessError("q0 needs one vector per agent");
}

const MsdCurve& ExperimentResult::curve(const std::string& label) const {
  for (const auto& c : curves)
    if (c.label == label) return c;
  throw HarnessError("no curve labelled '" + label + "'");
}

std::size_t worker_count() {
  if (const char* env = std::getenv("ACTC_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ExperimentResult run(const ExperimentConfig& config) {
  config.validate();
  const std::size_t nv = config.variants.size();
  const std::size_t workers = worker_count();
  const std::size_t full_points = expected_points(config.iterations, config.record_stride);
  RunOptions options;
  options.iterations = config.iterations;
  options.record_stride = config.record_stride;
  options.q0 = config.q0;

  std::vector<Accumulator> acc(nv);
  // Runs are processed in blocks; each block is reduced in run order.
  const std::size_t block = std::max<std::size_t>(4, 2 * workers);
  for (std::size_t first = 0; first < config.mc_runs; first += block) {
    const std::size_t runs = std::min(block, config.mc_runs - first);
    std::vector<RunRecord> records(runs * nv);
    parallel_for(runs * nv, workers, [&](std::size_t task) {
      const std::size_t r = task / nv, v = task % nv;
      const Variant& var = config.variants[v];
      const CombinationMatrix& a = var.matrix ? *var.matrix : config.scenario.matrix;
      records[task] = run_single(var.algorithm, var.config, a, config.scenario.problem, options,
                                 {config.seed, first + r})
                          .record;
    });
    for (std::size_t r = 0; r < runs; ++r)
      for (std::size_t v = 0; v < nv; ++v) acc[v].add(records[r * nv + v], full_points);
  }

  ExperimentResult result;
  result.scenario = config.scenario.name;
  result.seed = config.seed;
  result.workers = workers;
  for (std::size_t v = 0; v < nv; ++v)
    result.curves.push_back(acc[v].finish(config.variants[v], full_points));
  return result;
}

Gap paired_gap(const MsdCurve& a, const MsdCurve& b) {
  const auto& x = a.steady.per_run;
  const auto& y = b.steady.per_run;
  if (x.size() != y.size() || x.empty())
    throw HarnessError("paired gap needs the same non-empty set of converged runs");
  Welford w;
  for (std::size_t i = 0; i < x.size(); ++i) w.add(x[i] - y[i]);
  return {w.mean, w.ci()};
}

RunOutput trajectory_run(const ExperimentConfig& config, std::size_t variant, std::size_t run) {
  config.validate();
  const Variant& var = config.variants.at(variant);
  RunOptions options;
  options.iterations = config.iterations;
  options.record_stride = config.record_stride;
  options.q0 = config.q0;
  options.keep_trajectories = true;
  const CombinationMatrix& a = var.matrix ? *var.matrix : config.scenario.matrix;
  return run_single(var.algorithm, var.config, a, config.scenario.problem, options,
                    {config.seed, run});
}

double steady_state_of(const std::vector<double>& msd) {
  if (msd.empty()) throw HarnessError("empty curve");
  const std::size_t n = tail_count(msd.size());
  return std::accumulate(msd.end() - static_cast<std::ptrdiff_t>(n), msd.end(), 0.0) /
         static_cast<double>(n);
}

std::size_t phase2_start(const MsdCurve& curve) {
  const std::size_t t = phase2_index(curve);
  return t < curve.iterations.size() ? curve.iterations[t] : 0;
}

TransientFit fit_transient(const std::vector<std::size_t>& iterations,
                           const std::vector<double>& msd,
                           std::optional<std::pair<std::size_t, std::size_t>> window) {
  if (iterations.size() != msd.size()) throw HarnessError("curve lengths differ");
  TransientFit fit;
  fit.steady_state = steady_state_of(msd);
  std::size_t lo = 0, hi = 0;
  if (window) {
    lo = index_of_iteration(iterations, window->first);
    hi = index_of_iteration(iterations, window->second);
  } else {
    hi = transient_end(msd, fit.steady_state, 0);
  }
  std::vector<double> x, y;
  for (std::size_t t = lo; t < hi && t < msd.size(); ++t) {
    const double excess = msd[t] - fit.steady_state;
    if (excess > 0.0) {
      x.push_back(static_cast<double>(iterations[t]));
      y.push_back(std::log(excess));
    }
  }
  if (!x.empty()) {
    fit.window_start = static_cast<std::size_t>(x.front());
    fit.window_end = static_cast<std::size_t>(x.back());
  }
  fit.points = x.size();
  if (x.size() < 3) {
    fit.no_transient = true;
    return fit;
  }
  fit.slope = least_squares_slope(x, y, &fit.intercept);
  if (!(fit.slope < 0.0)) {
    fit.no_transient = true;
    fit.slope = 0.0;
    return fit;
  }
  fit.rate = std::exp(fit.slope);
  return fit;
}

TransientFit fit_transient(const MsdCurve& curve,
                           std::optional<std::pair<std::size_t, std::size_t>> window) {
  if (!window && !curve.msd.empty()) {
    const std::size_t start = phase2_index(curve);
    const std::size_t end = transient_end(curve.msd, steady_state_of(curve.msd), start);
    if (start < curve.iterations.size()) {
      const std::size_t end_it =
          end < curve.iterations.size() ? curve.iterations[end] : curve.iterations.back() + 1;
      window = std::make_pair(curve.iterations[start], end_it);
    }
  }
  return fit_transient(curve.iterations, curve.msd, window);
}

ExcessSweep excess_msd_sweep(const Scenario& scenario, const SweepParams& params) {
  if (params.rates.empty()) throw HarnessError("sweep needs at least one rate");
  const std::size_t n = scenario.problem.size();
  const std::size_t m = scenario.problem.dimension();
  ExperimentConfig cfg{scenario, {}, params.iterations, params.record_stride, params.mc_runs,
                       params.seed, {}};
  for (unsigned r : params.rates)
    cfg.variants.push_back(make_variant("actc r=" + std::to_string(r), Algorithm::actc, n,
                                        params.mu, params.zeta, quantizer(r, params.norm_bits)));
  cfg.variants.push_back(make_variant("uncompressed_actc", Algorithm::uncompressed_actc, n,
                                      params.mu, params.zeta, identity()));
  cfg.variants.push_back(atc_reference(n, params.mu, params.zeta));

  ExcessSweep sweep;
  sweep.result = run(cfg);
  const MsdCurve& unc = sweep.result.curve("uncompressed_actc");
  const MsdCurve& atc = sweep.result.curve("atc");
  sweep.uncompressed = unc.steady.mean;
  sweep.atc = atc.steady.mean;

  std::vector<double> lx, lu, la;
  double num = 0.0, den = 0.0;
  for (unsigned r : params.rates) {
    const MsdCurve& c = sweep.result.curve("actc r=" + std::to_string(r));
    ExcessRow row;
    row.r = r;
    const RandQuantizer q(r, params.norm_bits);
    row.omega = q.omega(m);
    row.actc = c.steady.mean;
    row.over_uncompressed = paired_gap(c, unc);
    row.over_atc = paired_gap(c, atc);
    row.bits_per_round = q.encoded_bits(m);
    sweep.rows.push_back(row);
    const double levels = static_cast<double>(q.levels());
    if (row.over_uncompressed.mean > 0.0 && row.over_atc.mean > 0.0) {
      lx.push_back(std::log(levels));
      lu.push_back(std::log(row.over_uncompressed.mean));
      la.push_back(std::log(row.over_atc.mean));
    }
    const double x = params.mu * params.zeta * row.omega * (1.0 + row.omega);
    num += row.over_uncompressed.mean * x;
    den += x * x;
  }
  if (lx.size() >= 2) {
    sweep.slope_uncompressed = least_squares_slope(lx, lu, nullptr);
    sweep.slope_atc = least_squares_slope(lx, la, nullptr);
  }
  sweep.c_q = den > 0.0 ? std::max(0.0, num / den) : 0.0;
  return sweep;
}

ChocoTuning choco_tuning_sweep(const Scenario& scenario, const ChocoParams& params) {
  const std::size_t n = scenario.problem.size();
  ExperimentConfig cfg{scenario, {}, params.iterations, params.record_stride, params.mc_runs,
                       params.seed, {}};
  cfg.variants.push_back(make_variant("actc", Algorithm::actc, n, params.mu, params.zeta,
                                      quantizer(params.r)));
  ChocoTuning out;
  for (double f : params.step_factors) {
    for (double g : params.gammas) {
      ChocoCandidate c;
      c.step = f * params.mu * params.zeta;
      c.gamma = g;
      Variant v = make_variant("choco step=" + fmt_double(c.step) + " gamma=" + fmt_double(g),
                               Algorithm::choco_sgd, n, c.step, 1.0, quantizer(params.r));
      v.config.choco_gamma = g;
      cfg.variants.push_back(std::move(v));
      out.candidates.push_back(c);
    }
  }
  const ExperimentResult res = run(cfg);
  out.actc = res.curves.front();
  out.actc_fit = fit_transient(out.actc);
  out.iterations = out.actc.iterations;
  const double actc_speed = 1.0 - out.actc_fit.rate;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < out.candidates.size(); ++i) {
    ChocoCandidate& c = out.candidates[i];
    const MsdCurve& curve = res.curves[i + 1];
    c.steady = curve.steady;
    c.fit = fit_transient(curve);
    c.rate_matched = curve.diverged_runs == 0 && !c.fit.no_transient &&
                     std::abs((1.0 - c.fit.rate) - actc_speed) <= params.rate_tolerance * actc_speed;
    if (!c.rate_matched) continue;
    if (c.steady.mean < best) {
      best = c.steady.mean;
      out.best = i;
    }
    if (out.envelope_min.empty()) {
      out.envelope_min = out.envelope_max = curve.msd;
    } else {
      for (std::size_t t = 0; t < out.envelope_min.size() && t < curve.msd.size(); ++t) {
        out.envelope_min[t] = std::min(out.envelope_min[t], curve.msd[t]);
        out.envelope_max[t] = std::max(out.envelope_max[t], curve.msd[t]);
      }
    }
  }
  if (out.best) {
    out.best_curve = res.curves[*out.best + 1];
    out.best_minus_actc = paired_gap(*out.best_curve, out.actc);
  }
  return out;
}

Topology preset_topology10() {
  return Topology::undirected(10, {{0, 1}, {0, 2}, {1, 2}, {1, 3}, {2, 4}, {3, 4}, {3, 5},
                                   {4, 6}, {5, 6}, {5, 7}, {6, 8}, {7, 8}, {7, 9}, {8, 9},
                                   {2, 6}, {0, 9}});
}

Topology preset_ring_with_chords(std::size_t n) {
  if (n < 3) throw HarnessError("ring needs at least 3 agents");
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  for (std::size_t k = 0; k < n; ++k) edges.emplace_back(k, (k + 1) % n);
  for (std::size_t k = 0; k < n; k += 3) {
    const std::size_t other = (k + n / 2) % n;
    if (other != k && other != (k + 1) % n && (other + 1) % n != k) edges.emplace_back(k, other);
  }
  return Topology::undirected(n, edges);
}

Scenario regression_scenario(std::size_t dimension, std::uint64_t seed) {
  RandomProblemSpec spec;
  spec.n_agents = 10;
  spec.dimension = dimension;
  spec.seed = seed;
  return {"regression M=" + std::to_string(dimension), metropolis(preset_topology10()),
          random_diagonal_problem(spec), seed, std::nullopt};
}

Scenario singular_scenario(const Topology& topology, std::size_t dimension, std::uint64_t seed,
                           const std::optional<Vector>& perron_target) {
  if (dimension < 2) throw HarnessError("singular agents need at least two coordinates");
  const std::size_t n = topology.size();
  CounterRng rng = make_stream(seed, 0, 0, 0, Purpose::scenario);
  const auto m = static_cast<Eigen::Index>(dimension);
  Vector w_star(m);
  for (Eigen::Index i = 0; i < m; ++i) w_star[i] = 3.0 * rng.normal();
  const double su2 = 1.0 + 3.0 * rng.uniform();
  const double sv2 = 0.25 + 0.75 * rng.uniform();

  // Duplicate the pair whose true values differ most, so the direction the
  // singular agents cannot see carries most of the error.
  std::size_t bi = 0, bj = 1;
  for (std::size_t i = 0; i < dimension; ++i)
    for (std::size_t j = i + 1; j < dimension; ++j)
      if (std::abs(w_star[static_cast<Eigen::Index>(i)] - w_star[static_cast<Eigen::Index>(j)]) >
          std::abs(w_star[static_cast<Eigen::Index>(bi)] - w_star[static_cast<Eigen::Index>(bj)])) {
        bi = i;
        bj = j;
      }

  RegressionProblem problem = RegressionProblem::diagonal(
      w_star, std::vector<Vector>(n, Vector::Constant(m, su2)), std::vector<double>(n, sv2));
  for (std::size_t k = 1; k < n; ++k) problem = make_singular_agent(problem, k, bi, bj);

  Scenario s{perron_target ? "singular (left-stochastic)" : "singular (Metropolis)",
             perron_target ? metropolis_hastings_target(topology, *perron_target)
                           : metropolis(topology),
             std::move(problem), seed, 0};
  return s;
}

double perron_objective(const RegressionProblem& problem, const Vector& pi,
                        PerronObjective objective) {
  const auto m = static_cast<Eigen::Index>(problem.dimension());
  Matrix h = Matrix::Zero(m, m);
  Matrix s = Matrix::Zero(m, m);
  double linear = 0.0;
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const AgentModel& a = problem.agent(k);
    const double p = pi[static_cast<Eigen::Index>(k)];
    h += p * a.covariance;
    s += p * p * a.noise_variance * a.covariance;
    linear += p * 4.0 * a.noise_variance * a.covariance.trace();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
  const double lmin = eig.eigenvalues().minCoeff();
  if (!(lmin > 1e-12)) return std::numeric_limits<double>::infinity();
  if (objective == PerronObjective::steady_state_bound) return linear / (4.0 * lmin);
  const Matrix v = eig.eigenvectors();
  const Vector inv = eig.eigenvalues().cwiseInverse();
  const double trace = (v * inv.asDiagonal() * v.transpose() * s).trace();
  return trace / lmin;
}

Vector optimal_perron(const RegressionProblem& problem, std::uint64_t seed,
                      PerronObjective objective, double floor) {
  const std::size_t n = problem.size();
  if (floor * static_cast<double>(n) >= 1.0) throw HarnessError("Perron floor too large");
  const auto nn = static_cast<Eigen::Index>(n);
  auto project = [&](Vector p) {
    // Clip at the floor and rescale the free mass.
    p = p.cwiseMax(floor);
    const double free = 1.0 - floor * static_cast<double>(n);
    const Vector excess = p.array() - floor;
    return Vector((excess * (free / excess.sum())).array() + floor);
  };
  Vector best = Vector::Constant(nn, 1.0 / static_cast<double>(n));
  double best_value = perron_objective(problem, best, objective);
  CounterRng rng = make_stream(seed, 0, 0, 0, Purpose::scenario);
  for (int trial = 0; trial < 2000; ++trial) {
    Vector p(nn);
    for (Eigen::Index k = 0; k < nn; ++k) p[k] = -std::log(1.0 - rng.uniform());
    p = project(p / p.sum());
    const double value = perron_objective(problem, p, objective);
    if (value < best_value) {
      best_value = value;
      best = p;
    }
  }
  for (double step = 0.1; step > 1e-7; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (Eigen::Index from = 0; from < nn; ++from) {
        for (Eigen::Index to = 0; to < nn; ++to) {
          if (from == to) continue;
          const double moved = std::min(step, best[from] - floor);
          if (moved <= 0.0) continue;
          Vector p = best;
          p[from] -= moved;
          p[to] += moved;
          const double value = perron_objective(problem, p, objective);
          if (value < best_value) {
            best_value = value;
            best = p;
            improved = true;
          }
        }
      }
    }
  }
  return best / best.sum();
}

Variant isolated_variant(const Scenario& scenario, double mu, double zeta, std::size_t reference) {
  const std::size_t n = scenario.problem.size();
  const Vector pi = perron(scenario.matrix).pi;
  const double nu = nu_of(scenario.problem, pi);
  const RegressionProblem alone = scenario.problem.single_agent(reference);
  const double nu_ref = nu_of(alone, Vector::Ones(1));
  if (!(nu_ref > 0.0)) throw HarnessError("reference agent is not strongly convex");
  Variant v = make_variant("non-cooperative", Algorithm::atc, n, mu * zeta * nu / nu_ref, 1.0,
                           identity());
  v.matrix = CombinationMatrix::isolated(n);
  return v;
}

std::vector<std::string> preset_names() {
  return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"};
}

ExperimentConfig preset(const std::string& name, const PresetOptions& options) {
  auto finish = [&](ExperimentConfig cfg, std::size_t default_iterations) {
    cfg.iterations = options.iterations.value_or(default_iterations);
    cfg.mc_runs = options.mc_runs;
    cfg.seed = options.seed;
    return cfg;
  };
  const std::uint64_t scenario_seed = options.seed;

  if (name == "fig1" || name == "fig2" || name == "fig3" || name == "fig8") {
    const std::size_t m = name == "fig1" || name == "fig3" ? 50 : 10;
    Scenario s = regression_scenario(m, scenario_seed);
    const std::size_t n = s.problem.size();
    const double mu = 4e-3, zeta = 0.25;
    ExperimentConfig cfg{s, {}, 0, 1, 0, 0, {}};
    if (name == "fig3") {
      cfg.variants.push_back(make_variant("actc r=2", Algorithm::actc, n, mu, zeta, quantizer(2)));
    } else if (name == "fig8") {
      cfg.variants.push_back(make_variant("actc r=2", Algorithm::actc, n, mu, zeta, quantizer(2)));
      Variant choco = make_variant("choco_sgd r=2", Algorithm::choco_sgd, n, mu * zeta, 1.0,
                                   quantizer(2));
      choco.config.choco_gamma = 0.4;
      cfg.variants.push_back(std::move(choco));
      cfg.variants.push_back(atc_reference(n, mu, zeta));
    } else {
      for (unsigned r = 1; r <= 4; ++r)
        cfg.variants.push_back(make_variant("actc r=" + std::to_string(r), Algorithm::actc, n, mu,
                                            zeta, quantizer(r)));
      if (name == "fig2")
        cfg.variants.push_back(make_variant("uncompressed_actc", Algorithm::uncompressed_actc, n,
                                            mu, zeta, identity()));
      cfg.variants.push_back(atc_reference(n, mu, zeta));
    }
    return finish(std::move(cfg), 3000);
  }
  if (name == "fig4") {
    Scenario s = regression_scenario(50, scenario_seed);
    const std::size_t n = s.problem.size();
    ExperimentConfig cfg{s, {}, 0, 1, 0, 0, {}};
    for (auto [mu, zeta] : {std::pair{4e-3, 0.25}, {2e-3, 0.5}, {1e-3, 1.0}, {8e-3, 0.125}})
      cfg.variants.push_back(make_variant("actc mu=" + fmt_double(mu) + " zeta=" + fmt_double(zeta),
                                          Algorithm::actc, n, mu, zeta, quantizer(2)));
    return finish(std::move(cfg), 3000);
  }
  if (name == "fig5" || name == "fig6") {
    const double mu5 = 5e-3, zeta = 0.8;
    const Topology topo = preset_topology10();
    Scenario s5 = singular_scenario(topo, 10, scenario_seed);
    const double nu5 = nu_of(s5.problem, perron(s5.matrix).pi);
    Scenario s = s5;
    double mu = mu5;
    if (name == "fig6") {
      const Vector target = optimal_perron(s5.problem, scenario_seed);
      s = singular_scenario(topo, 10, scenario_seed, target);
      // Step-size giving the same centralized rate as the Metropolis preset.
      mu = mu5 * nu5 / nu_of(s.problem, perron(s.matrix).pi);
    }
    const std::size_t n = s.problem.size();
    ExperimentConfig cfg{s, {}, 0, 1, 0, 0, {}};
    cfg.variants.push_back(make_variant("actc r=3", Algorithm::actc, n, mu, zeta, quantizer(3)));
    cfg.variants.push_back(isolated_variant(s, mu, zeta, 0));
    return finish(std::move(cfg), iterations_for(mu5 * zeta * nu5, 12.0));
  }
  if (name == "fig7") {
    Scenario s = singular_scenario(preset_ring_with_chords(20), 2, scenario_seed);
    const std::size_t n = s.problem.size();
    const double mu = 5e-3, zeta = 0.8;
    ExperimentConfig cfg{s, {}, 0, 1, 0, 0, {}};
    cfg.variants.push_back(make_variant("actc r=3", Algorithm::actc, n, mu, zeta, quantizer(3)));
    cfg.variants.push_back(isolated_variant(s, mu, zeta, 0));
    const double nu = nu_of(s.problem, perron(s.matrix).pi);
    return finish(std::move(cfg), iterations_for(mu * zeta * nu, 12.0));
  }
  throw HarnessError("unknown preset '" + name + "'");
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw HarnessError("cannot write " + path.string());
  out << std::setprecision(10);
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

void write_msd_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_out(path);
  out << "iteration,variant,msd_db,msd_linear,ci_db,bits_cum\n";
  for (const auto& c : result.curves)
    for (std::size_t t = 0; t < c.msd.size(); ++t)
      out << c.iterations[t] << ',' << csv_field(c.label) << ',' << c.msd_db(t) << ',' << c.msd[t]
          << ',' << c.ci_db(t) << ',' << c.bits_cum[t] << '\n';
}

void write_agent_csv(const std::filesystem::path& path, const ExperimentResult& result) {
  auto out = open_out(path);
  out << "iteration,variant,agent,msd_db,msd_linear\n";
  for (const auto& c : result.curves)
    for (std::size_t k = 0; k < c.agent_msd.size(); ++k)
      for (std::size_t t = 0; t < c.iterations.size(); ++t)
        out << c.iterations[t] << ',' << csv_field(c.label) << ',' << k << ','
            << MsdCurve::to_db(c.agent_msd[k][t]) << ',' << c.agent_msd[k][t] << '\n';
}

void write_trajectory_csv(const std::filesystem::path& path, const std::string& label,
                          const RunOutput& run_out) {
  auto out = open_out(path);
  const auto& traj = run_out.trajectories;
  const Eigen::Index m = traj.empty() || traj.front().empty() ? 0 : traj.front().front().size();
  out << "iteration,variant,agent";
  for (Eigen::Index i = 0; i < m; ++i) out << ",w_" << i;
  out << '\n';
  for (std::size_t t = 0; t < traj.size(); ++t)
    for (std::size_t k = 0; k < traj[t].size(); ++k) {
      out << run_out.record.iterations[t] << ',' << csv_field(label) << ',' << k;
      for (Eigen::Index i = 0; i < m; ++i) out << ',' << traj[t][k][i];
      out << '\n';
    }
}

void write_excess_csv(const std::filesystem::path& path, const ExcessSweep& sweep) {
  auto out = open_out(path);
  out << "r,omega,bits_per_round,msd_actc,gap_uncompressed,ci_uncompressed,gap_atc,ci_atc\n";
  for (const auto& row : sweep.rows)
    out << row.r << ',' << row.omega << ',' << row.bits_per_round << ',' << row.actc << ','
        << row.over_uncompressed.mean << ',' << row.over_uncompressed.ci << ','
        << row.over_atc.mean << ',' << row.over_atc.ci << '\n';
}

}  // namespace actc
