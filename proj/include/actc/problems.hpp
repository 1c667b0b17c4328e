#pragma once

#include "actc/graph.hpp"
#include "actc/rng.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

namespace actc {

class ProblemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Streaming data model of one agent: d = u^T target + v with
/// u ~ N(0, R_u), v ~ N(0, sigma_v^2).
struct AgentModel {
  Matrix covariance;      ///< R_u, symmetric PSD
  double noise_variance;  ///< sigma_v^2 > 0
  /// Parameter generating this agent's observations. Equal to the shared w*
  /// in the regression model; may differ only in diagnostic constructions.
  Vector target;
  /// u = factor * z with z standard normal; factor * factor^T = covariance.
  Matrix factor;
  bool diagonal = false;
  /// Set when coordinate .second copies coordinate .first.
  std::optional<std::pair<std::size_t, std::size_t>> duplicate;
};

class RegressionProblem {
 public:
  /// Builds agents with diagonal covariance `variances[k]`.
  static RegressionProblem diagonal(const Vector& w_star, const std::vector<Vector>& variances,
                                    const std::vector<double>& noise_variances);

  RegressionProblem(Vector w_star, std::vector<AgentModel> agents);

  /// Agent model from a full covariance; the sampling factor is derived here.
  static AgentModel make_agent(const Matrix& covariance, double noise_variance,
                               const Vector& target);

  std::size_t dimension() const { return static_cast<std::size_t>(w_star_.size()); }
  std::size_t size() const { return agents_.size(); }
  const Vector& w_star() const { return w_star_; }
  const AgentModel& agent(std::size_t k) const { return agents_.at(k); }
  const std::vector<AgentModel>& agents() const { return agents_; }

  /// Problem restricted to one agent (non-cooperative baselines).
  RegressionProblem single_agent(std::size_t k) const;

  /// Draws u into `u` (preallocated, size M).
  void draw_regressor(std::size_t k, CounterRng& rng, Vector& u) const;
  double draw_noise(std::size_t k, CounterRng& rng) const;

 private:
  Vector w_star_;
  std::vector<AgentModel> agents_;
};

struct GradientSample {
  std::size_t agent = 0;
  Vector u;
  double d = 0.0;

  /// 2 u (u^T w - d)
  Vector gradient(const Vector& w) const { return 2.0 * u * (u.dot(w) - d); }
};

GradientSample sample(const RegressionProblem& problem, std::size_t k,
                      CounterRng& regressor_rng, CounterRng& noise_rng);
GradientSample sample(const RegressionProblem& problem, std::size_t k, CounterRng& rng);

/// 2 (R_u w - r_du) with r_du = R_u target.
Vector true_gradient(const RegressionProblem& problem, std::size_t k, const Vector& w);

/// J_k(w) = E (d - u^T w)^2 in closed form.
double cost(const RegressionProblem& problem, std::size_t k, const Vector& w);

/// Solves (sum p_k R_k) w = sum p_k R_k target_k. Throws when the aggregate
/// covariance is singular (globally unidentifiable).
Vector global_minimizer(const RegressionProblem& problem, const Vector& p);

/// Agent k's regressors get coordinate j equal to coordinate i.
RegressionProblem make_singular_agent(const RegressionProblem& base, std::size_t k,
                                      std::size_t i, std::size_t j);

struct ProblemConstants {
  double nu = 0.0;               ///< 2 lambda_min(sum p_k R_k)
  double eta = 0.0;              ///< sum p_k eta_k
  std::vector<double> eta_k;     ///< 2 lambda_max(R_k)
  std::vector<double> sigma_k2;  ///< 4 sigma_v^2 tr(R_k)
  std::vector<double> beta_k2;   ///< 8 lambda_max(R_k)^2
};

ProblemConstants constants(const RegressionProblem& problem, const Vector& p);

struct RandomProblemSpec {
  std::size_t n_agents = 10;
  std::size_t dimension = 10;
  double variance_lo = 1.0;
  double variance_hi = 4.0;
  double noise_lo = 0.25;
  double noise_hi = 1.0;
  double w_star_scale = 1.0;  ///< w* entries ~ N(0, scale^2)
  std::uint64_t seed = 1;
};

/// Diagonal covariances with entries U(variance_lo, variance_hi), noise
/// variances U(noise_lo, noise_hi), Gaussian w*.
RegressionProblem random_diagonal_problem(const RandomProblemSpec& spec);

}  // namespace actc
