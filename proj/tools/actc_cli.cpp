// Command-line front end: simulate, sweep, diagnose, quantize-test, presets.

#include "actc/config.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

namespace fs = std::filesystem;
using namespace actc;

namespace {

Json experiment_document(const std::string& config, const std::string& preset_name,
                         std::size_t runs, std::size_t iterations, std::uint64_t seed) {
  Json doc = config.empty() ? Json{{"preset", preset_name}} : load_json(config);
  if (!preset_name.empty() && !config.empty())
    throw ConfigError("give either --config or --preset, not both");
  if (config.empty() && preset_name.empty()) throw ConfigError("--config or --preset is required");
  if (runs) doc["mc_runs"] = runs;
  if (iterations) doc["iterations"] = iterations;
  if (seed) doc["seed"] = seed;
  return doc;
}

double first_value(const Json& doc, const char* key, double fallback) {
  if (!doc.contains(key)) return fallback;
  const Json& v = doc.at(key);
  return v.is_array() ? v.at(0).get<double>() : v.get<double>();
}

void print_summary(const ExperimentResult& result) {
  std::cout << std::left << std::setw(36) << "variant" << std::setw(16) << "steady_db"
            << std::setw(14) << "ci_db" << "diverged\n";
  for (const auto& c : result.curves) {
    const double db = MsdCurve::to_db(c.steady.mean);
    const double ci = MsdCurve::to_db(c.steady.mean + c.steady.ci) - db;
    std::cout << std::setw(36) << c.label << std::setw(16) << db << std::setw(14) << ci
              << c.diverged_runs << '\n';
  }
}

void write_outputs(const fs::path& out, const ExperimentConfig& cfg, const ExperimentResult& res,
                   const Json& extra) {
  write_msd_csv(out / "msd.csv", res);
  write_agent_csv(out / "agents.csv", res);
  write_matrix_csv(out / "matrix.csv", cfg.scenario.matrix);
  write_manifest(out / "manifest.json", cfg, res, extra);
}

int simulate(const std::string& config, const std::string& preset_name, const fs::path& out,
             std::size_t runs, std::size_t iterations, std::uint64_t seed, bool trajectories) {
  const ExperimentConfig cfg =
      experiment_from_json(experiment_document(config, preset_name, runs, iterations, seed));
  const ExperimentResult res = run(cfg);
  Json extra = Json::object();
  Json fits = Json::object();
  for (const auto& c : res.curves) {
    const TransientFit f = fit_transient(c);
    fits[c.label] = {{"rate", f.rate},
                     {"window", {f.window_start, f.window_end}},
                     {"no_transient", f.no_transient}};
  }
  extra["transient_fits"] = fits;
  if (trajectories || preset_name == "fig7") {
    for (std::size_t v = 0; v < cfg.variants.size(); ++v) {
      const std::string file = "trajectory_" + std::to_string(v) + ".csv";
      write_trajectory_csv(out / file, cfg.variants[v].label, trajectory_run(cfg, v, 0));
      extra["trajectories"][cfg.variants[v].label] = file;
    }
  }
  write_outputs(out, cfg, res, extra);
  print_summary(res);
  std::cout << "wrote " << (out / "msd.csv").string() << '\n';
  return 0;
}

int sweep(const std::string& config, const std::vector<std::string>& params, const fs::path& out,
          std::size_t runs, std::size_t iterations, std::uint64_t seed) {
  Json doc = experiment_document(config, "", runs, iterations, seed);
  for (const auto& p : params) apply_sweep_param(doc, p);
  const bool over_r = std::any_of(params.begin(), params.end(),
                                  [](const std::string& p) { return p.rfind("r=", 0) == 0; });
  if (over_r && params.size() == 1) {
    const ExperimentConfig cfg = experiment_from_json(doc);
    SweepParams sp;
    sp.mu = first_value(doc, "mu", sp.mu);
    sp.zeta = first_value(doc, "zeta", sp.zeta);
    sp.rates = doc["r"].get<std::vector<unsigned>>();
    sp.iterations = cfg.iterations;
    sp.mc_runs = cfg.mc_runs;
    sp.record_stride = cfg.record_stride;
    sp.seed = cfg.seed;
    const ExcessSweep s = excess_msd_sweep(cfg.scenario, sp);
    write_excess_csv(out / "excess.csv", s);
    ExperimentConfig echo = cfg;
    write_outputs(out, echo, s.result,
                  {{"excess", {{"slope_vs_log_levels_uncompressed", s.slope_uncompressed},
                               {"slope_vs_log_levels_atc", s.slope_atc},
                               {"c_q_fitted", s.c_q}}}});
    std::cout << std::left << std::setw(4) << "r" << std::setw(14) << "omega" << std::setw(16)
              << "gap_unc" << std::setw(14) << "ci" << std::setw(16) << "gap_atc" << "ci\n";
    for (const auto& row : s.rows)
      std::cout << std::setw(4) << row.r << std::setw(14) << row.omega << std::setw(16)
                << row.over_uncompressed.mean << std::setw(14) << row.over_uncompressed.ci
                << std::setw(16) << row.over_atc.mean << row.over_atc.ci << '\n';
    std::cout << "slope vs log(2^r-1): " << s.slope_uncompressed << " (uncompressed), "
              << s.slope_atc << " (ATC); fitted c_q = " << s.c_q << '\n';
    return 0;
  }
  const ExperimentConfig cfg = experiment_from_json(doc);
  const ExperimentResult res = run(cfg);
  write_outputs(out, cfg, res, Json::object());
  print_summary(res);
  return 0;
}

int diagnose_cmd(const std::string& config, const std::string& preset_name,
                 const std::string& theory, const std::string& json_out) {
  const ExperimentConfig cfg =
      experiment_from_json(experiment_document(config, preset_name, 1, 0, 0));
  Json all = Json::object();
  for (const auto& v : cfg.variants) {
    if (v.algorithm != Algorithm::actc && v.algorithm != Algorithm::uncompressed_actc) continue;
    const CombinationMatrix& a = v.matrix ? *v.matrix : cfg.scenario.matrix;
    StabilityReport rep;
    if (theory.empty()) {
      rep = diagnose(a, cfg.scenario.problem, v.config);
    } else {
      const Json t = load_json(theory);
      TheoryInputs in = theory_from_json(t);
      if (!t.contains("sigma12")) {
        const auto spec = spectrum(a);
        const Vector pi = perron(a).pi;
        std::vector<double> alpha(cfg.scenario.problem.size());
        Vector p(pi.size());
        for (std::size_t k = 0; k < alpha.size(); ++k) {
          alpha[k] = v.config.alpha(k);
          p[static_cast<Eigen::Index>(k)] = alpha[k] * pi[static_cast<Eigen::Index>(k)];
        }
        const TheoryInputs d = default_theory_inputs(network_transform(a, spec),
                                                     constants(cfg.scenario.problem, p), alpha);
        in.sigma12 = d.sigma12;
        in.sigma21 = d.sigma21;
        in.sigma22 = d.sigma22;
      }
      rep = diagnose(a, cfg.scenario.problem, v.config, in);
    }
    std::cout << "[" << v.label << "]\n";
    for (const auto& [k, val] : rep.table())
      std::cout << "  " << std::left << std::setw(26) << k << val << '\n';
    all[v.label] = report_to_json(rep);
  }
  if (!json_out.empty()) {
    std::ofstream out(json_out);
    if (!out) throw ConfigError("cannot write " + json_out);
    out << std::setw(2) << all << '\n';
  }
  return 0;
}

int quantize_test(std::size_t samples, std::size_t vectors, double confidence, std::uint64_t seed) {
  std::cout << std::left << std::setw(5) << "M" << std::setw(4) << "r" << std::setw(12) << "omega"
            << std::setw(14) << "max_ratio" << std::setw(12) << "max_|z|" << "result\n";
  bool all = true;
  for (std::size_t m : {1, 8, 50})
    for (unsigned r : {1u, 2u, 4u}) {
      const RandQuantizer q(r);
      double worst_ratio = 0.0, worst_z = 0.0;
      bool ok = true;
      for (std::size_t v = 0; v < vectors; ++v) {
        CounterRng rng = make_stream(seed, v, m, r, Purpose::verification);
        Vector x(static_cast<Eigen::Index>(m));
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = rng.normal();
        const ContractReport rep = verify_contract(q, x, samples, confidence, seed + 1000 * v + m);
        worst_ratio = std::max(worst_ratio, rep.variance.measured_ratio);
        worst_z = std::max(worst_z, rep.unbiased.max_standardized_deviation);
        ok = ok && rep.unbiased.pass && rep.variance.pass;
      }
      all = all && ok;
      std::cout << std::setw(5) << m << std::setw(4) << r << std::setw(12) << q.omega(m)
                << std::setw(14) << worst_ratio << std::setw(12) << worst_z
                << (ok ? "pass" : "FAIL") << '\n';
    }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Compressed diffusion learning laboratory"};
  app.require_subcommand(1);

  std::string config, preset_name, theory, json_out;
  std::string out = "out";
  std::vector<std::string> params;
  std::size_t runs = 0, iterations = 0, samples = 100000, vectors = 20;
  std::uint64_t seed = 0;
  double confidence = 0.9973002039367398;
  bool trajectories = false;

  auto* sim = app.add_subcommand("simulate", "Run a Monte-Carlo experiment");
  sim->add_option("--config", config, "Experiment JSON");
  sim->add_option("--preset", preset_name, "Figure preset (fig1 ... fig8)");
  sim->add_option("--out", out, "Output directory");
  sim->add_option("--runs", runs, "Monte-Carlo runs (overrides config)");
  sim->add_option("--iterations", iterations, "Iterations (overrides config)");
  sim->add_option("--seed", seed, "Master seed (overrides config)");
  sim->add_flag("--trajectories", trajectories, "Also write run-0 iterates");

  auto* sw = app.add_subcommand("sweep", "Sweep one grid parameter, e.g. --param r=1..4");
  sw->add_option("--config", config, "Experiment JSON")->required();
  sw->add_option("--param", params, "name=lo..hi or name=v1,v2")->required();
  sw->add_option("--out", out, "Output directory");
  sw->add_option("--runs", runs, "Monte-Carlo runs");
  sw->add_option("--iterations", iterations, "Iterations");
  sw->add_option("--seed", seed, "Master seed");

  auto* diag = app.add_subcommand("diagnose", "Print the stability report");
  diag->add_option("--config", config, "Experiment JSON");
  diag->add_option("--preset", preset_name, "Figure preset");
  diag->add_option("--theory", theory, "JSON with sigma12/21/22, phi, c_q, epsilon");
  diag->add_option("--json", json_out, "Also export the report as JSON");

  auto* qt = app.add_subcommand("quantize-test", "Check the quantizer contract on a grid");
  qt->add_option("--samples", samples, "Draws per vector");
  qt->add_option("--vectors", vectors, "Random vectors per grid point");
  qt->add_option("--confidence", confidence, "Two-sided coverage of the mean test");
  qt->add_option("--seed", seed, "Seed");

  auto* pre = app.add_subcommand("presets", "List figure presets or dump one as JSON");
  std::string dump;
  pre->add_option("--dump", dump, "Preset to dump");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return simulate(config, preset_name, out, runs, iterations, seed, trajectories);
    if (*sw) return sweep(config, params, out, runs, iterations, seed);
    if (*diag) return diagnose_cmd(config, preset_name, theory, json_out);
    if (*qt) return quantize_test(samples, vectors, confidence, seed ? seed : 1);
    if (*pre) {
      if (dump.empty()) {
        for (const auto& n : preset_names()) std::cout << n << '\n';
      } else {
        std::cout << std::setw(2) << experiment_echo(preset(dump)) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
