#include "actc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace actc {

Deltas deltas(const NetworkTransform& transform, const std::vector<double>& omegas,
              const Vector& pi) {
  const Eigen::Index n = transform.v.rows();
  if (static_cast<Eigen::Index>(omegas.size()) != n || pi.size() != n)
    throw DiagnosticsError("deltas: omega and pi must have one entry per agent");
  const double scale = transform.norm_v_inv * transform.norm_v_inv;
  Deltas d;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double w = omegas[static_cast<std::size_t>(k)];
    if (w < 0.0) throw DiagnosticsError("compression factors must be nonnegative");
    d.bar = std::max(d.bar, pi[k] * pi[k] * w);
    for (Eigen::Index l = 1; l < n; ++l) d.check = std::max(d.check, std::norm(transform.v(l, k)) * w);
  }
  d.bar *= scale;
  d.check *= scale;
  return d;
}

Matrix build_e0(const SpectralSummary& spec, double zeta) {
  const double l2 = spec.lambda2_mag;
  if (!(l2 > 0.0 && l2 < 1.0))
    throw DiagnosticsError("E0 needs 0 < |lambda_2| < 1 (got " + std::to_string(l2) + ")");
  if (!(zeta > 0.0 && zeta <= 1.0)) throw DiagnosticsError("zeta must lie in (0, 1]");
  const auto dim = static_cast<Eigen::Index>(spec.reduced_dimension());
  Matrix e0 = Matrix::Zero(dim, dim);
  const double coupling = 2.0 * zeta / (1.0 - l2);
  Eigen::Index pos = 0;
  for (const auto& block : spec.jordan_blocks) {
    const double diag = (1.0 - zeta) + zeta * std::norm(block.eigenvalue) / l2;
    for (std::size_t j = 0; j < block.size; ++j, ++pos) {
      e0(pos, pos) = diag;
      if (j + 1 < block.size) e0(pos, pos + 1) = coupling;
    }
  }
  return e0;
}

ErrorMatrix build_e(const Matrix& e0, double zeta, double delta_check) {
  ErrorMatrix out;
  out.e = e0.array() + 16.0 * zeta * zeta * delta_check;
  out.spectral_radius = spectral_radius(out.e);
  return out;
}

std::optional<double> zeta_max(double gamma_a, double delta_check) {
  if (delta_check < 0.0 || gamma_a < 0.0)
    throw DiagnosticsError("zeta_max needs nonnegative gamma and Delta_check");
  if (delta_check == 0.0) return std::nullopt;
  return 1.0 / (16.0 * delta_check * gamma_a);
}

void TheoryInputs::validate() const {
  if (sigma12 < 0.0 || sigma21 < 0.0 || sigma22 < 0.0)
    throw DiagnosticsError("sigma constants must be nonnegative");
  if (phi && !(*phi > 0.0)) throw DiagnosticsError("phi must be positive");
  if (c_q && !(*c_q > 0.0)) throw DiagnosticsError("c_q must be positive");
  if (epsilon && !(*epsilon > 0.0)) throw DiagnosticsError("epsilon must be positive");
}

TheoryInputs default_theory_inputs(const NetworkTransform& transform,
                                   const ProblemConstants& constants,
                                   const std::vector<double>& alpha) {
  double worst = 0.0;
  for (std::size_t k = 0; k < alpha.size() && k < constants.eta_k.size(); ++k)
    worst = std::max(worst, alpha[k] * constants.eta_k[k]);
  const double norm_v = Eigen::JacobiSVD<ComplexMatrix>(transform.v).singularValues()[0];
  TheoryInputs in;
  in.sigma12 = in.sigma21 = in.sigma22 = worst * norm_v * transform.norm_v_inv;
  return in;
}

MuQuadratic mu_star_quadratic(const TheoryInputs& inputs, double nu, double gamma_a,
                              double delta_bar, double delta_check, double zeta) {
  inputs.validate();
  if (!inputs.phi) throw DiagnosticsError("mu_star needs phi");
  if (!(nu > 0.0)) throw DiagnosticsError("mu_star needs nu > 0");
  const double margin = 1.0 - 16.0 * zeta * delta_check * gamma_a;
  if (!(margin > 0.0))
    throw DiagnosticsError("mu_star needs zeta < zeta_max (1 - 16 zeta Delta_check gamma <= 0)");
  MuQuadratic q;
  q.a = (1.0 + inputs.sigma12 * inputs.sigma12 / (nu * nu)) * gamma_a / margin;
  q.b = zeta * (1.0 + 16.0 * delta_bar) / nu;
  q.c = 1.0 / *inputs.phi;
  return q;
}

double mu_star(const TheoryInputs& inputs, double nu, double gamma_a, double delta_bar,
               double delta_check, double zeta) {
  const MuQuadratic q = mu_star_quadratic(inputs, nu, gamma_a, delta_bar, delta_check, zeta);
  // Cancellation-free form of (-b + sqrt(b^2 + 4ac)) / (2a); also valid at a = 0.
  return 2.0 * q.c / (q.b + std::sqrt(q.b * q.b + 4.0 * q.a * q.c));
}

Rates rates(double mu, double zeta, double nu, double e_spectral_radius,
            std::optional<double> epsilon) {
  Rates r;
  const double contraction = 1.0 - mu * zeta * nu;
  r.rho_cen = contraction * contraction;
  const double eps = epsilon.value_or(0.01 * std::max(0.0, 1.0 - e_spectral_radius));
  r.rho_net = e_spectral_radius + eps;
  return r;
}

SteadyState steady_state_prediction(double mu, double zeta, const Vector& pi,
                                    const std::vector<double>& alpha,
                                    const std::vector<double>& sigma_k2, double nu,
                                    double omega_max, double c_q) {
  if (!(nu > 0.0)) throw DiagnosticsError("steady-state prediction needs nu > 0");
  const auto n = static_cast<std::size_t>(pi.size());
  if (alpha.size() != n || sigma_k2.size() != n)
    throw DiagnosticsError("pi, alpha and sigma^2 must have one entry per agent");
  double weighted = 0.0;
  for (std::size_t l = 0; l < n; ++l)
    weighted += pi[static_cast<Eigen::Index>(l)] * alpha[l] * alpha[l] * sigma_k2[l];
  return {mu * zeta * weighted / (2.0 * nu), mu * zeta * c_q * omega_max * (1.0 + omega_max)};
}

double excess_msd_bound(double mu, double zeta, [[maybe_unused]] double nu,
                        std::size_t dimension, unsigned r_min, double c_q) {
  const double levels = std::ldexp(1.0, static_cast<int>(r_min)) - 1.0;
  return mu * zeta * c_q * static_cast<double>(dimension) / (levels * levels);
}

double omega_growth_bound(std::size_t dimension, unsigned r_min) {
  const double levels = std::ldexp(1.0, static_cast<int>(r_min)) - 1.0;
  return 2.0 * static_cast<double>(dimension) / (levels * levels);
}

std::vector<Vector> bias(const RegressionProblem& problem, const std::vector<double>& alpha,
                         const Vector& w_star) {
  if (alpha.size() != problem.size())
    throw DiagnosticsError("bias needs one scaled step-size per agent");
  std::vector<Vector> b;
  for (std::size_t k = 0; k < problem.size(); ++k)
    b.push_back(alpha[k] * true_gradient(problem, k, w_star));
  return b;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

std::string fmt(const std::optional<double>& v, const char* missing) {
  return v ? fmt(*v) : std::string(missing);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> StabilityReport::table() const {
  std::vector<std::pair<std::string, std::string>> t = {
      {"mu", fmt(mu)},
      {"zeta", fmt(zeta)},
      {"nu", fmt(nu)},
      {"eta", fmt(eta)},
      {"lambda2_mag", fmt(lambda2_mag)},
      {"gamma_A", fmt(gamma_a)},
      {"delta_bar", fmt(delta_bar)},
      {"delta_check", fmt(delta_check)},
      {"Omega", fmt(omega_max)},
      {"zeta_max", fmt(zeta_max, "unbounded")},
      {"zeta_admissible", zeta_admissible ? "true" : "false"},
      {"mu_lemma3_bound", fmt(mu_lemma3_bound)},
      {"mu_star", fmt(mu_star, "unavailable (phi not supplied)")},
      {"mu_admissible", mu_admissible ? "true" : "false"},
      {"rho_E", fmt(rho_e)},
      {"rho_cen", fmt(rho_cen)},
      {"rho_net", fmt(rho_net)},
      {"steady_state_first_order", fmt(steady_state_first_order)},
      {"compression_loss", fmt(compression_loss, "unavailable (c_q not supplied)")},
      {"excess_msd_bound", fmt(excess_msd_bound, "unavailable (c_q not supplied)")},
      {"c_q_source", c_q_fitted ? "fitted" : "supplied"},
      {"higher_order_terms", "O(mu^{3/2}) unquantified"},
  };
  return t;
}

StabilityReport diagnose(const CombinationMatrix& a, const RegressionProblem& problem,
                         const AlgoConfig& config, const TheoryInputs& inputs) {
  const std::size_t n = problem.size();
  config.validate(n);
  inputs.validate();
  StabilityReport rep;
  rep.mu = config.mu_max();
  rep.zeta = config.zeta;
  rep.pi = perron(a).pi;

  std::vector<double> alpha(n);
  Vector p(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    alpha[k] = config.alpha(k);
    p[static_cast<Eigen::Index>(k)] = alpha[k] * rep.pi[static_cast<Eigen::Index>(k)];
  }
  const ProblemConstants pc = constants(problem, p);
  rep.nu = pc.nu;
  rep.eta = pc.eta;

  const SpectralSummary spec = spectrum(a);
  const NetworkTransform transform = network_transform(a, spec);
  rep.lambda2_mag = spec.lambda2_mag;
  rep.gamma_a = gamma(spec);

  std::vector<double> omegas;
  for (const auto& op : config.operators) omegas.push_back(op->omega(problem.dimension()));
  rep.omega_max = *std::max_element(omegas.begin(), omegas.end());
  const Deltas d = deltas(transform, omegas, rep.pi);
  rep.delta_bar = d.bar;
  rep.delta_check = d.check;

  rep.zeta_max = zeta_max(rep.gamma_a, d.check);
  rep.zeta_admissible = !rep.zeta_max || rep.zeta < *rep.zeta_max;
  rep.mu_lemma3_bound = 2.0 / (rep.zeta * (rep.eta + rep.nu));

  const ErrorMatrix e = build_e(build_e0(spec, rep.zeta), rep.zeta, d.check);
  rep.rho_e = e.spectral_radius;
  const Rates r = rates(rep.mu, rep.zeta, rep.nu, rep.rho_e, inputs.epsilon);
  rep.rho_cen = r.rho_cen;
  rep.rho_net = r.rho_net;

  if (inputs.phi && rep.zeta_admissible && rep.nu > 0.0)
    rep.mu_star = mu_star(inputs, rep.nu, rep.gamma_a, d.bar, d.check, rep.zeta);
  rep.mu_admissible = rep.zeta_admissible && rep.mu < rep.mu_lemma3_bound &&
                      (!rep.mu_star || rep.mu < *rep.mu_star);

  if (rep.nu > 0.0) {
    const SteadyState ss = steady_state_prediction(rep.mu, rep.zeta, rep.pi, alpha, pc.sigma_k2,
                                                   rep.nu, rep.omega_max,
                                                   inputs.c_q.value_or(0.0));
    rep.steady_state_first_order = ss.first_order;
    if (inputs.c_q) rep.compression_loss = ss.compression_loss;
  }
  if (inputs.c_q) {
    // Smallest rate among the stochastic quantizers, if every agent uses one.
    std::optional<unsigned> r_min;
    for (const auto& op : config.operators) {
      const auto* rq = dynamic_cast<const RandQuantizer*>(op.get());
      if (!rq) { r_min.reset(); break; }
      r_min = r_min ? std::min(*r_min, rq->rate_bits()) : rq->rate_bits();
    }
    if (r_min)
      rep.excess_msd_bound =
          excess_msd_bound(rep.mu, rep.zeta, rep.nu, problem.dimension(), *r_min, *inputs.c_q);
  }
  rep.c_q_fitted = inputs.c_q_fitted;
  return rep;
}

StabilityReport diagnose(const CombinationMatrix& a, const RegressionProblem& problem,
                         const AlgoConfig& config) {
  const std::size_t n = problem.size();
  const Vector pi = perron(a).pi;
  std::vector<double> alpha(n);
  Vector p(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) {
    alpha[k] = config.alpha(k);
    p[static_cast<Eigen::Index>(k)] = alpha[k] * pi[static_cast<Eigen::Index>(k)];
  }
  const auto spec = spectrum(a);
  const auto transform = network_transform(a, spec);
  return diagnose(a, problem, config, default_theory_inputs(transform, constants(problem, p), alpha));
}

}  // namespace actc
