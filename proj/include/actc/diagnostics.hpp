#pragma once

#include "actc/algorithms.hpp"
#include "actc/graph.hpp"
#include "actc/problems.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace actc {

class DiagnosticsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Compression constants (Delta_bar, Delta_check) of the transformed
/// network recursion.
struct Deltas {
  double bar = 0.0;    ///< |V^-1|^2 max_k pi_k^2 omega_k
  double check = 0.0;  ///< |V^-1|^2 max_{l>=2,k} |v_lk|^2 omega_k
};

Deltas deltas(const NetworkTransform& transform, const std::vector<double>& omegas,
              const Vector& pi);

/// (N-1)x(N-1) matrix ((1 - zeta) I + zeta Lambda Lambda^* / |lambda_2|)
/// + 2 zeta / (1 - |lambda_2|) U built from the reduced Jordan structure.
Matrix build_e0(const SpectralSummary& spec, double zeta);

struct ErrorMatrix {
  Matrix e;
  double spectral_radius = 0.0;
};

/// E = E0 + 16 zeta^2 Delta_check 1 1^T.
ErrorMatrix build_e(const Matrix& e0, double zeta, double delta_check);

/// 1 / (16 Delta_check gamma); nullopt means unbounded (Delta_check = 0).
std::optional<double> zeta_max(double gamma_a, double delta_check);

/// Proof constants with no closed form. The sigma bounds have norm-based
/// defaults; phi and c_q must come from the user (or a fit).
struct TheoryInputs {
  double sigma12 = 0.0;
  double sigma21 = 0.0;
  double sigma22 = 0.0;
  std::optional<double> phi;
  std::optional<double> c_q;
  bool c_q_fitted = false;
  std::optional<double> epsilon;  ///< defaults to 0.01 (1 - rho(E))

  void validate() const;
};

/// sigma_12 = sigma_21 = sigma_22 = max_k alpha_k eta_k |V| |V^-1|: an upper
/// bound in the spirit of the block-norm argument, not a tight value.
TheoryInputs default_theory_inputs(const NetworkTransform& transform,
                                   const ProblemConstants& constants,
                                   const std::vector<double>& alpha);

/// Positive root of a mu^2 + b mu - c = 0 with
/// a = (1 + sigma12^2 / nu^2) gamma / (1 - 16 zeta Delta_check gamma),
/// b = zeta (1 + 16 Delta_bar) / nu, c = 1 / phi.
double mu_star(const TheoryInputs& inputs, double nu, double gamma_a, double delta_bar,
               double delta_check, double zeta);

/// Coefficients (a, b, c) of the quadratic above, for back-substitution.
struct MuQuadratic {
  double a, b, c;
  double residual(double mu) const { return a * mu * mu + b * mu - c; }
};
MuQuadratic mu_star_quadratic(const TheoryInputs& inputs, double nu, double gamma_a,
                              double delta_bar, double delta_check, double zeta);

struct Rates {
  double rho_cen = 0.0;  ///< (1 - mu zeta nu)^2
  double rho_net = 0.0;  ///< rho(E) + epsilon
};

Rates rates(double mu, double zeta, double nu, double e_spectral_radius,
            std::optional<double> epsilon = std::nullopt);

struct SteadyState {
  double first_order = 0.0;       ///< mu zeta sum pi alpha^2 sigma^2 / (2 nu)
  double compression_loss = 0.0;  ///< mu zeta c_q Omega (1 + Omega)
};

SteadyState steady_state_prediction(double mu, double zeta, const Vector& pi,
                                    const std::vector<double>& alpha,
                                    const std::vector<double>& sigma_k2, double nu,
                                    double omega_max, double c_q);

/// mu zeta c_q M / (2^r_min - 1)^2.
double excess_msd_bound(double mu, double zeta, double nu, std::size_t dimension,
                        unsigned r_min, double c_q);

/// 2 M / L^2, the bound on Omega (1 + Omega) for the stochastic quantizer.
double omega_growth_bound(std::size_t dimension, unsigned r_min);

/// b_k = alpha_k grad J_k(w*).
std::vector<Vector> bias(const RegressionProblem& problem, const std::vector<double>& alpha,
                         const Vector& w_star);

/// Everything the theory predicts for one (A, problem, config) triple.
struct StabilityReport {
  double mu = 0.0;
  double zeta = 0.0;
  double nu = 0.0;
  double eta = 0.0;
  double lambda2_mag = 0.0;
  double gamma_a = 0.0;
  std::optional<double> zeta_max;
  double mu_lemma3_bound = 0.0;  ///< 2 / (zeta (eta + nu))
  std::optional<double> mu_star;
  double rho_e = 0.0;
  double rho_cen = 0.0;
  double rho_net = 0.0;
  double delta_bar = 0.0;
  double delta_check = 0.0;
  double omega_max = 0.0;
  double steady_state_first_order = 0.0;
  std::optional<double> compression_loss;
  std::optional<double> excess_msd_bound;
  bool c_q_fitted = false;
  bool zeta_admissible = false;
  bool mu_admissible = false;
  Vector pi;

  /// Ordered key/value pairs for printing and export.
  std::vector<std::pair<std::string, std::string>> table() const;
};

StabilityReport diagnose(const CombinationMatrix& a, const RegressionProblem& problem,
                         const AlgoConfig& config, const TheoryInputs& inputs);

/// Same, with default sigma constants and no phi / c_q.
StabilityReport diagnose(const CombinationMatrix& a, const RegressionProblem& problem,
                         const AlgoConfig& config);

}  // namespace actc
