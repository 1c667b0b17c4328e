#pragma once

#include "actc/diagnostics.hpp"
#include "actc/harness.hpp"

#include <json.hpp>

#include <filesystem>
#include <stdexcept>
#include <string>

namespace actc {

using Json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Json load_json(const std::filesystem::path& path);

/// {"agents": N, "neighbors": [[...], ...]} with incoming neighbor lists, or
/// {"agents": N, "edges": [[l, k], ...], "undirected": true}. Directed edges
/// go from l into k. Self-loops are added when "self_loops" is true (default).
Topology topology_from_json(const Json& j);
Json topology_to_json(const Topology& t);

/// {"topology": {...}, "rule": "metropolis" | "metropolis_hastings" | "weights",
///  "target_perron": [...], "weights": [[...]]}
CombinationMatrix matrix_from_json(const Json& j);
Json matrix_to_json(const CombinationMatrix& a);

/// {"dimension": M, "w_star": [...] | {"seed": s, "scale": x},
///  "agents": [{"covariance": {"diagonal": [...]} | {"full": [[...]]}
///              | {"diagonal": [...], "duplicate": [i, j]}, "noise_variance": v}, ...]}
/// or {"random": {"agents": N, "dimension": M, "seed": s, ...}}.
RegressionProblem problem_from_json(const Json& j);

/// {"name": ..., "network": {...}, "problem": {...}} or {"preset": "fig1"}.
Scenario scenario_from_json(const Json& j, std::uint64_t seed);

/// Either {"preset": name, "mc_runs": R, ...} or an explicit scenario plus
/// grids: {"scenario": {...}, "algorithms": [...], "mu": [...], "zeta": [...],
/// "r": [...], "h": [...], "iterations": I, "mc_runs": R, "seed": S}.
/// ATC variants run at step mu zeta so they share the ACTC centralized rate.
ExperimentConfig experiment_from_json(const Json& j);

/// Replaces one grid ("r=1..4", "mu=1e-3,2e-3") in an experiment document.
void apply_sweep_param(Json& experiment, const std::string& assignment);

TheoryInputs theory_from_json(const Json& j);

Json report_to_json(const StabilityReport& report);
Json experiment_echo(const ExperimentConfig& config);

/// Seeds, version, configuration echo and per-curve summaries.
void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const ExperimentResult& result, const Json& extra = Json::object());

/// Row-major CSV with the header line "a_l_k columns sum to 1".
void write_matrix_csv(const std::filesystem::path& path, const CombinationMatrix& a);

}  // namespace actc
