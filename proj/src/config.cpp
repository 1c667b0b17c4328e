#include "actc/config.hpp"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace actc {

namespace {

Vector to_vector(const Json& j, const char* what) {
  if (!j.is_array()) throw ConfigError(std::string(what) + " must be an array");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Matrix to_matrix(const Json& j, const char* what) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(what) + " must be a non-empty array of rows");
  const std::size_t rows = j.size(), cols = j[0].size();
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (j[r].size() != cols) throw ConfigError(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

Json from_vector(const Vector& v) {
  Json j = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
  return j;
}

Json from_matrix(const Matrix& m) {
  Json j = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) j.push_back(from_vector(m.row(r).transpose()));
  return j;
}

template <class T>
std::vector<T> grid(const Json& j, const char* key, std::vector<T> fallback) {
  if (!j.contains(key)) return fallback;
  const Json& g = j.at(key);
  if (!g.is_array()) return {g.get<T>()};
  if (g.empty()) throw ConfigError(std::string("grid '") + key + "' is empty");
  return g.get<std::vector<T>>();
}

std::string short_double(double x) {
  std::ostringstream os;
  os << x;
  return os.str();
}

}  // namespace

Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Topology topology_from_json(const Json& j) {
  const auto n = j.at("agents").get<std::size_t>();
  const bool self_loops = j.value("self_loops", true);
  std::vector<std::vector<std::size_t>> incoming(n);
  if (j.contains("neighbors")) {
    const Json& lists = j.at("neighbors");
    if (lists.size() != n) throw ConfigError("neighbors needs one list per agent");
    for (std::size_t k = 0; k < n; ++k) incoming[k] = lists[k].get<std::vector<std::size_t>>();
  }
  if (j.contains("edges")) {
    const bool undirected = j.value("undirected", true);
    for (const auto& e : j.at("edges")) {
      const auto l = e.at(0).get<std::size_t>(), k = e.at(1).get<std::size_t>();
      if (l >= n || k >= n) throw ConfigError("edge endpoint out of range");
      incoming[k].push_back(l);
      if (undirected) incoming[l].push_back(k);
    }
  }
  if (self_loops)
    for (std::size_t k = 0; k < n; ++k) incoming[k].push_back(k);
  return Topology(std::move(incoming));
}

Json topology_to_json(const Topology& t) {
  Json lists = Json::array();
  for (std::size_t k = 0; k < t.size(); ++k) lists.push_back(t.neighbors(k));
  return {{"agents", t.size()}, {"neighbors", lists}, {"self_loops", false}};
}

CombinationMatrix matrix_from_json(const Json& j) {
  const std::string rule = j.value("rule", "metropolis");
  if (rule == "weights") {
    const Matrix w = to_matrix(j.at("weights"), "weights");
    if (j.contains("topology")) return CombinationMatrix(w, topology_from_json(j.at("topology")));
    return CombinationMatrix::from_weights(w);
  }
  const Topology topo = topology_from_json(j.at("topology"));
  if (rule == "metropolis") return metropolis(topo);
  if (rule == "metropolis_hastings")
    return metropolis_hastings_target(topo, to_vector(j.at("target_perron"), "target_perron"));
  throw ConfigError("unknown combination rule '" + rule + "'");
}

Json matrix_to_json(const CombinationMatrix& a) {
  return {{"rule", "weights"},
          {"topology", topology_to_json(a.support())},
          {"weights", from_matrix(a.weights())}};
}

RegressionProblem problem_from_json(const Json& j) {
  if (j.contains("random")) {
    const Json& r = j.at("random");
    RandomProblemSpec spec;
    spec.n_agents = r.value("agents", spec.n_agents);
    spec.dimension = r.value("dimension", spec.dimension);
    spec.variance_lo = r.value("variance_lo", spec.variance_lo);
    spec.variance_hi = r.value("variance_hi", spec.variance_hi);
    spec.noise_lo = r.value("noise_lo", spec.noise_lo);
    spec.noise_hi = r.value("noise_hi", spec.noise_hi);
    spec.w_star_scale = r.value("w_star_scale", spec.w_star_scale);
    spec.seed = r.value("seed", spec.seed);
    return random_diagonal_problem(spec);
  }
  const auto m = j.at("dimension").get<std::size_t>();
  const auto mm = static_cast<Eigen::Index>(m);
  Vector w_star(mm);
  const Json& ws = j.at("w_star");
  if (ws.is_array()) {
    w_star = to_vector(ws, "w_star");
  } else {
    CounterRng rng = make_stream(ws.value("seed", std::uint64_t{1}), 0, 0, 0, Purpose::scenario);
    const double scale = ws.value("scale", 1.0);
    for (Eigen::Index i = 0; i < mm; ++i) w_star[i] = scale * rng.normal();
  }
  if (w_star.size() != mm) throw ConfigError("w_star length does not match dimension");

  std::vector<AgentModel> agents;
  std::vector<std::pair<std::size_t, std::pair<std::size_t, std::size_t>>> duplicates;
  for (const auto& a : j.at("agents")) {
    const Json& cov = a.at("covariance");
    Matrix r;
    if (cov.contains("full")) {
      r = to_matrix(cov.at("full"), "covariance.full");
    } else {
      r = to_vector(cov.at("diagonal"), "covariance.diagonal").asDiagonal();
    }
    if (r.rows() != mm || r.cols() != mm) throw ConfigError("covariance size does not match dimension");
    if (cov.contains("duplicate")) {
      const auto d = cov.at("duplicate").get<std::vector<std::size_t>>();
      if (d.size() != 2) throw ConfigError("duplicate needs two coordinates");
      duplicates.push_back({agents.size(), {d[0], d[1]}});
    }
    agents.push_back(
        RegressionProblem::make_agent(r, a.at("noise_variance").get<double>(), w_star));
  }
  RegressionProblem problem(w_star, std::move(agents));
  for (const auto& [k, pair] : duplicates)
    problem = make_singular_agent(problem, k, pair.first, pair.second);
  return problem;
}

Scenario scenario_from_json(const Json& j, std::uint64_t seed) {
  if (j.contains("preset")) {
    const std::string name = j.at("preset").get<std::string>();
    const auto m = j.value("dimension", std::size_t{10});
    const std::uint64_t s = j.value("seed", seed);
    if (name == "regression") return regression_scenario(m, s);
    if (name == "singular") {
      Scenario base = singular_scenario(preset_topology10(), m, s);
      if (!j.value("optimized_perron", false)) return base;
      return singular_scenario(preset_topology10(), m, s, optimal_perron(base.problem, s));
    }
    throw ConfigError("unknown scenario preset '" + name + "'");
  }
  Scenario s{j.value("name", std::string("custom")), matrix_from_json(j.at("network")),
             problem_from_json(j.at("problem")), seed, std::nullopt};
  if (s.matrix.size() != s.problem.size())
    throw ConfigError("network and problem disagree on the number of agents");
  return s;
}

ExperimentConfig experiment_from_json(const Json& j) {
  const std::uint64_t seed = j.value("seed", std::uint64_t{1});
  if (j.contains("preset")) {
    PresetOptions opt;
    opt.mc_runs = j.value("mc_runs", opt.mc_runs);
    opt.seed = seed;
    if (j.contains("iterations")) opt.iterations = j.at("iterations").get<std::size_t>();
    ExperimentConfig cfg = preset(j.at("preset").get<std::string>(), opt);
    cfg.record_stride = j.value("record_stride", cfg.record_stride);
    return cfg;
  }
  ExperimentConfig cfg{scenario_from_json(j.at("scenario"), seed), {}, 3000, 1, 100, seed, {}};
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.mc_runs = j.value("mc_runs", cfg.mc_runs);
  cfg.record_stride = j.value("record_stride", cfg.record_stride);

  const auto algorithms = grid<std::string>(j, "algorithms", {"actc"});
  const auto mus = grid<double>(j, "mu", {4e-3});
  const auto zetas = grid<double>(j, "zeta", {0.25});
  const auto rates = grid<unsigned>(j, "r", {2});
  const auto norms = grid<unsigned>(j, "h", {32});
  const double choco_gamma = j.value("choco_gamma", 0.5);
  const std::size_t n = cfg.scenario.problem.size();

  std::set<std::string> seen;
  for (const auto& name : algorithms) {
    const Algorithm alg = algorithm_from_string(name);
    const bool compressed = alg == Algorithm::actc || alg == Algorithm::choco_sgd;
    for (double mu : mus)
      for (double zeta : zetas)
        for (unsigned r : compressed ? rates : std::vector<unsigned>{0})
          for (unsigned h : compressed ? norms : std::vector<unsigned>{0}) {
            std::string label = name;
            if (mus.size() > 1) label += " mu=" + short_double(mu);
            if (zetas.size() > 1) label += " zeta=" + short_double(zeta);
            if (compressed && rates.size() > 1) label += " r=" + std::to_string(r);
            if (compressed && norms.size() > 1) label += " h=" + std::to_string(h);
            if (!seen.insert(label).second) continue;
            OperatorPtr op = compressed ? OperatorPtr(std::make_shared<RandQuantizer>(r, h))
                                        : OperatorPtr(std::make_shared<IdentityOperator>());
            Variant v;
            v.label = label;
            v.algorithm = alg;
            if (alg == Algorithm::atc || alg == Algorithm::choco_sgd)
              v.config = AlgoConfig::uniform(n, mu * zeta, 1.0, op);
            else
              v.config = AlgoConfig::uniform(n, mu, zeta, op);
            v.config.choco_gamma = choco_gamma;
            cfg.variants.push_back(std::move(v));
          }
  }
  if (j.contains("q0")) {
    const Vector q = to_vector(j.at("q0"), "q0");
    cfg.q0.assign(n, q);
  }
  cfg.validate();
  return cfg;
}

void apply_sweep_param(Json& experiment, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("sweep parameter must look like name=values");
  const std::string key = assignment.substr(0, eq);
  const std::string values = assignment.substr(eq + 1);
  if (key != "r" && key != "h" && key != "mu" && key != "zeta")
    throw ConfigError("sweepable parameters are r, h, mu and zeta");
  Json list = Json::array();
  const auto dots = values.find("..");
  try {
    if (dots != std::string::npos) {
      const long lo = std::stol(values.substr(0, dots));
      const long hi = std::stol(values.substr(dots + 2));
      if (key == "mu" || key == "zeta" || hi < lo) throw ConfigError("ranges need integers lo..hi");
      for (long v = lo; v <= hi; ++v) list.push_back(v);
    } else {
      std::stringstream ss(values);
      std::string item;
      while (std::getline(ss, item, ',')) {
        if (key == "r" || key == "h")
          list.push_back(std::stoul(item));
        else
          list.push_back(std::stod(item));
      }
    }
  } catch (const std::logic_error&) {
    throw ConfigError("cannot parse sweep values '" + values + "'");
  }
  if (list.empty()) throw ConfigError("sweep needs at least one value");
  if (experiment.contains("preset"))
    throw ConfigError("sweeps need an explicit scenario, not a figure preset");
  experiment[key] = list;
}

TheoryInputs theory_from_json(const Json& j) {
  TheoryInputs in;
  in.sigma12 = j.value("sigma12", 0.0);
  in.sigma21 = j.value("sigma21", 0.0);
  in.sigma22 = j.value("sigma22", 0.0);
  if (j.contains("phi")) in.phi = j.at("phi").get<double>();
  if (j.contains("c_q")) in.c_q = j.at("c_q").get<double>();
  if (j.contains("epsilon")) in.epsilon = j.at("epsilon").get<double>();
  in.validate();
  return in;
}

Json report_to_json(const StabilityReport& report) {
  Json j = Json::object();
  for (const auto& [k, v] : report.table()) j[k] = v;
  j["pi"] = from_vector(report.pi);
  return j;
}

Json experiment_echo(const ExperimentConfig& config) {
  Json variants = Json::array();
  for (const auto& v : config.variants) {
    Json ops = Json::array();
    for (const auto& op : v.config.operators) ops.push_back(op->name());
    variants.push_back({{"label", v.label},
                        {"algorithm", std::string(to_string(v.algorithm))},
                        {"mu", v.config.mu},
                        {"zeta", v.config.zeta},
                        {"choco_gamma", v.config.choco_gamma},
                        {"operators", ops},
                        {"isolated", v.matrix.has_value()}});
  }
  const RegressionProblem& p = config.scenario.problem;
  Json agents = Json::array();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const AgentModel& a = p.agent(k);
    Json cov = {{"full", from_matrix(a.covariance)}};
    if (a.diagonal) {
      cov = {{"diagonal", from_vector(a.covariance.diagonal())}};
    } else if (a.duplicate) {
      // A duplicated diagonal agent replays from its diagonal plus the pair.
      const Vector d = a.covariance.diagonal();
      const RegressionProblem base(
          p.w_star(), {RegressionProblem::make_agent(d.asDiagonal().toDenseMatrix(),
                                                     a.noise_variance, a.target)});
      const auto rebuilt = make_singular_agent(base, 0, a.duplicate->first, a.duplicate->second);
      if (rebuilt.agent(0).factor == a.factor)
        cov = {{"diagonal", from_vector(d)}, {"duplicate", {a.duplicate->first, a.duplicate->second}}};
    }
    agents.push_back({{"covariance", cov}, {"noise_variance", a.noise_variance}});
  }
  return {{"scenario",
           {{"name", config.scenario.name},
            {"seed", config.scenario.seed},
            {"network", matrix_to_json(config.scenario.matrix)},
            {"problem", {{"dimension", p.dimension()}, {"w_star", from_vector(p.w_star())},
                         {"agents", agents}}}}},
          {"variants", variants},
          {"iterations", config.iterations},
          {"record_stride", config.record_stride},
          {"mc_runs", config.mc_runs},
          {"seed", config.seed}};
}

void write_manifest(const std::filesystem::path& path, const ExperimentConfig& config,
                    const ExperimentResult& result, const Json& extra) {
  Json curves = Json::array();
  for (const auto& c : result.curves)
    curves.push_back({{"variant", c.label},
                      {"algorithm", std::string(to_string(c.algorithm))},
                      {"runs", c.runs},
                      {"diverged_runs", c.diverged_runs},
                      {"truncated", c.truncated},
                      {"steady_state_linear", c.steady.mean},
                      {"steady_state_ci", c.steady.ci},
                      {"steady_state_from_iteration", c.steady.from_iteration}});
  Json m = {{"version", kVersion},
            {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                          std::to_string(EIGEN_MAJOR_VERSION) + "." +
                          std::to_string(EIGEN_MINOR_VERSION)},
            {"master_seed", config.seed},
            {"scenario_seed", config.scenario.seed},
            {"rng", "splitmix64 counter streams keyed by (seed, run, iteration, agent, purpose)"},
            {"workers", result.workers},
            {"config", experiment_echo(config)},
            {"curves", curves}};
  for (const auto& [k, v] : extra.items()) m[k] = v;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << std::setw(2) << m << '\n';
}

void write_matrix_csv(const std::filesystem::path& path, const CombinationMatrix& a) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "a_l_k columns sum to 1\n" << std::setprecision(17);
  const Matrix& w = a.weights();
  for (Eigen::Index l = 0; l < w.rows(); ++l) {
    for (Eigen::Index k = 0; k < w.cols(); ++k) out << (k ? "," : "") << w(l, k);
    out << '\n';
  }
}

}  // namespace actc
