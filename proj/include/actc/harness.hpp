#pragma once

#include "actc/algorithms.hpp"
#include "actc/diagnostics.hpp"
#include "actc/graph.hpp"
#include "actc/problems.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace actc {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.1.0";

/// A network plus its data model.
struct Scenario {
  std::string name;
  CombinationMatrix matrix;
  RegressionProblem problem;
  std::uint64_t seed = 0;                 ///< scenario seed, recorded for replay
  std::optional<std::size_t> farsighted;  ///< the only full-rank agent, if any
};

/// One curve of an experiment.
struct Variant {
  std::string label;
  Algorithm algorithm = Algorithm::actc;
  AlgoConfig config;
  /// Replaces the scenario matrix (non-cooperative runs use the identity).
  std::optional<CombinationMatrix> matrix;
};

struct ExperimentConfig {
  Scenario scenario;
  std::vector<Variant> variants;
  std::size_t iterations = 3000;
  std::size_t record_stride = 1;
  std::size_t mc_runs = 100;
  std::uint64_t seed = 1;
  std::vector<Vector> q0;  ///< empty means all-zero

  void validate() const;
};

/// Mean over the final 10% of the recorded points, per run, then across runs.
struct SteadyStateEstimate {
  double mean = 0.0;
  double ci = 0.0;  ///< 95% half-width across runs
  std::size_t from_iteration = 0;
  std::vector<double> per_run;
};

struct MsdCurve {
  std::string label;
  Algorithm algorithm = Algorithm::actc;
  std::vector<std::size_t> iterations;
  std::vector<double> msd;                     ///< network MSD, linear
  std::vector<double> ci;                      ///< 95% half-width, linear
  std::vector<std::vector<double>> agent_msd;  ///< [k][t]
  std::vector<std::size_t> bits_cum;           ///< bits sent by one agent so far
  std::size_t runs = 0;
  std::size_t diverged_runs = 0;
  bool truncated = false;
  SteadyStateEstimate steady;

  static double to_db(double linear) { return 10.0 * std::log10(linear); }
  double msd_db(std::size_t t) const { return to_db(msd[t]); }
  /// Upper CI half-width in dB.
  double ci_db(std::size_t t) const { return to_db(msd[t] + ci[t]) - to_db(msd[t]); }
};

struct ExperimentResult {
  std::string scenario;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  std::vector<MsdCurve> curves;

  const MsdCurve& curve(const std::string& label) const;
};

/// Worker count from ACTC_WORKERS, else the available parallelism.
std::size_t worker_count();

/// Monte-Carlo run r of every variant uses stream ids (seed, r), so variants
/// share regressor and noise draws. Results do not depend on the worker count.
ExperimentResult run(const ExperimentConfig& config);

/// Steady-state difference between two curves, paired run by run.
struct Gap {
  double mean = 0.0;
  double ci = 0.0;
};
Gap paired_gap(const MsdCurve& a, const MsdCurve& b);

/// Iterates of one run, for trajectory figures.
RunOutput trajectory_run(const ExperimentConfig& config, std::size_t variant, std::size_t run);

struct TransientFit {
  double rate = 1.0;  ///< fitted per-iteration MSD contraction factor
  double slope = 0.0;
  double intercept = 0.0;
  double steady_state = 0.0;
  std::size_t window_start = 0;
  std::size_t window_end = 0;
  std::size_t points = 0;
  bool no_transient = false;
};

/// Iteration from which the per-agent curves stay within 1 dB of each other.
std::size_t phase2_start(const MsdCurve& curve);

/// Least-squares slope of log(MSD - s) with s the final-10% mean. The default
/// window runs from phase2_start() until MSD first drops below 2 s.
TransientFit fit_transient(const MsdCurve& curve,
                           std::optional<std::pair<std::size_t, std::size_t>> window = {});
TransientFit fit_transient(const std::vector<std::size_t>& iterations,
                           const std::vector<double>& msd,
                           std::optional<std::pair<std::size_t, std::size_t>> window = {});

/// Mean of the final 10% of a curve.
double steady_state_of(const std::vector<double>& msd);

struct ExcessRow {
  unsigned r = 0;
  double omega = 0.0;
  double actc = 0.0;                ///< steady-state MSD of ACTC
  Gap over_uncompressed;            ///< ACTC - uncompressed ACTC
  Gap over_atc;                     ///< ACTC - ATC
  std::size_t bits_per_round = 0;
};

struct ExcessSweep {
  std::vector<ExcessRow> rows;
  double uncompressed = 0.0;
  double atc = 0.0;
  /// Slope of log(gap) against log(2^r - 1); -2 is the predicted law.
  double slope_uncompressed = 0.0;
  double slope_atc = 0.0;
  /// c_q fitted as gap / (mu zeta Omega (1 + Omega)) by least squares over r.
  double c_q = 0.0;
  ExperimentResult result;
};

struct SweepParams {
  double mu = 4e-3;
  double zeta = 0.25;
  std::vector<unsigned> rates{1, 2, 3, 4};
  unsigned norm_bits = 32;
  std::size_t iterations = 3000;
  std::size_t mc_runs = 100;
  std::size_t record_stride = 1;
  std::uint64_t seed = 1;
};

/// ACTC for every r, plus uncompressed ACTC and ATC (step mu zeta).
ExcessSweep excess_msd_sweep(const Scenario& scenario, const SweepParams& params);

struct ChocoCandidate {
  double step = 0.0;
  double gamma = 0.0;
  TransientFit fit;
  SteadyStateEstimate steady;
  bool rate_matched = false;
};

struct ChocoTuning {
  std::vector<ChocoCandidate> candidates;
  std::optional<std::size_t> best;  ///< lowest steady state among rate-matched
  TransientFit actc_fit;
  MsdCurve actc;
  std::optional<MsdCurve> best_curve;
  Gap best_minus_actc;
  /// Pointwise min / max over the rate-matched candidates.
  std::vector<double> envelope_min, envelope_max;
  std::vector<std::size_t> iterations;
};

struct ChocoParams {
  double mu = 4e-3;
  double zeta = 0.25;
  unsigned r = 2;
  std::vector<double> step_factors{0.9, 1.0, 1.1};  ///< times mu zeta
  std::vector<double> gammas{0.05, 0.1, 0.2, 0.4, 0.7, 1.0};
  double rate_tolerance = 0.1;  ///< relative, on 1 - rate
  std::size_t iterations = 3000;
  std::size_t mc_runs = 100;
  std::size_t record_stride = 1;
  std::uint64_t seed = 1;
};

ChocoTuning choco_tuning_sweep(const Scenario& scenario, const ChocoParams& params);

// Scenario catalog.

/// Fixed 10-node undirected topology used by the Fig.1-style presets.
Topology preset_topology10();
/// Ring of n agents with chords to the agent n/2 hops ahead of every third one.
Topology preset_ring_with_chords(std::size_t n);

/// Random diagonal regression (variances U(1,4), noises U(0.25,1)) over
/// preset_topology10 with Metropolis weights.
Scenario regression_scenario(std::size_t dimension, std::uint64_t seed);

/// Agent 0 farsighted with R = s_u^2 I; the rest duplicate one coordinate
/// into another. s_u^2 ~ U(1,4) and s_v^2 ~ U(0.25,1) are shared by all.
/// `perron_target` switches from Metropolis to Metropolis-Hastings.
Scenario singular_scenario(const Topology& topology, std::size_t dimension, std::uint64_t seed,
                           const std::optional<Vector>& perron_target = {});

enum class PerronObjective {
  /// sum pi_l sigma_l^2 / (2 nu(pi)) at fixed mu zeta. Linear in pi over the
  /// numerator, so its minimizer sits on a vertex when the sigma_l^2 agree.
  steady_state_bound,
  /// Tr(H^-1 S) / nu(pi) with H = sum pi_k R_k, S = sum pi_k^2 s_v,k^2 R_k:
  /// first-order ATC MSD at a fixed centralized rate.
  matched_rate_msd,
};

double perron_objective(const RegressionProblem& problem, const Vector& pi,
                        PerronObjective objective);

/// Minimizes the objective over the simplex (pi_k >= floor) by seeded
/// random search followed by pairwise mass transfers.
Vector optimal_perron(const RegressionProblem& problem, std::uint64_t seed,
                      PerronObjective objective = PerronObjective::matched_rate_msd,
                      double floor = 1e-3);

/// Isolated agents whose step matches the cooperative rate of `reference`:
/// mu_iso = mu zeta nu / nu_f, with nu_f the strong-convexity constant of the
/// reference agent alone.
Variant isolated_variant(const Scenario& scenario, double mu, double zeta, std::size_t reference);

struct PresetOptions {
  std::size_t mc_runs = 100;
  std::optional<std::size_t> iterations;
  std::uint64_t seed = 1;
};

std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name, const PresetOptions& options = {});

// Persistence.

/// iteration,variant,msd_db,msd_linear,ci_db,bits_cum
void write_msd_csv(const std::filesystem::path& path, const ExperimentResult& result);
/// iteration,variant,agent,msd_db,msd_linear
void write_agent_csv(const std::filesystem::path& path, const ExperimentResult& result);
/// iteration,variant,agent,w_0,...,w_{M-1}
void write_trajectory_csv(const std::filesystem::path& path, const std::string& label,
                          const RunOutput& out);
/// r,omega,bits_per_round,msd_actc,gap_uncompressed,ci_uncompressed,gap_atc,ci_atc
void write_excess_csv(const std::filesystem::path& path, const ExcessSweep& sweep);

}  // namespace actc
