#include "actc/problems.hpp"

#include <cmath>
#include <sstream>

namespace actc {

namespace {

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      if (r != c && m(r, c) != 0.0) return false;
  return true;
}

Eigen::SelfAdjointEigenSolver<Matrix> eig_sym(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
  if (solver.info() != Eigen::Success) throw ProblemError("symmetric eigensolver failed");
  return solver;
}

void validate_covariance(const Matrix& r) {
  if (r.rows() != r.cols()) throw ProblemError("covariance is not square");
  const double scale = std::max(1.0, r.cwiseAbs().maxCoeff());
  if ((r - r.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ProblemError("covariance is not symmetric");
  if (eig_sym(r).eigenvalues().minCoeff() < -1e-10 * scale)
    throw ProblemError("covariance is not positive semidefinite");
}

}  // namespace

AgentModel RegressionProblem::make_agent(const Matrix& covariance, double noise_variance,
                                         const Vector& target) {
  validate_covariance(covariance);
  if (!(noise_variance > 0.0)) throw ProblemError("noise variance must be positive");
  AgentModel a;
  a.covariance = covariance;
  a.noise_variance = noise_variance;
  a.target = target;
  a.diagonal = is_diagonal(covariance);
  if (a.diagonal) {
    a.factor = covariance.diagonal().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  } else {
    const auto solver = eig_sym(covariance);
    a.factor = solver.eigenvectors() *
               solver.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  return a;
}

RegressionProblem::RegressionProblem(Vector w_star, std::vector<AgentModel> agents)
    : w_star_(std::move(w_star)), agents_(std::move(agents)) {
  if (agents_.empty()) throw ProblemError("problem has no agents");
  const Eigen::Index m = w_star_.size();
  if (m == 0) throw ProblemError("dimension must be at least 1");
  for (const auto& a : agents_) {
    if (a.covariance.rows() != m || a.factor.rows() != m || a.target.size() != m)
      throw ProblemError("agent model dimension does not match w*");
    if (!(a.noise_variance > 0.0)) throw ProblemError("noise variance must be positive");
  }
}

RegressionProblem RegressionProblem::diagonal(const Vector& w_star,
                                              const std::vector<Vector>& variances,
                                              const std::vector<double>& noise_variances) {
  if (variances.size() != noise_variances.size())
    throw ProblemError("one noise variance per agent is required");
  std::vector<AgentModel> agents;
  for (std::size_t k = 0; k < variances.size(); ++k) {
    if (variances[k].size() != w_star.size())
      throw ProblemError("variance vector length does not match w*");
    agents.push_back(make_agent(variances[k].asDiagonal().toDenseMatrix(), noise_variances[k],
                                w_star));
  }
  return RegressionProblem(w_star, std::move(agents));
}

RegressionProblem RegressionProblem::single_agent(std::size_t k) const {
  return RegressionProblem(w_star_, {agent(k)});
}

void RegressionProblem::draw_regressor(std::size_t k, CounterRng& rng, Vector& u) const {
  const AgentModel& a = agents_[k];
  const Eigen::Index m = w_star_.size();
  if (a.diagonal) {
    for (Eigen::Index i = 0; i < m; ++i) u[i] = a.factor(i, i) * rng.normal();
  } else {
    Vector z(m);
    for (Eigen::Index i = 0; i < m; ++i) z[i] = rng.normal();
    u.noalias() = a.factor * z;
  }
}

double RegressionProblem::draw_noise(std::size_t k, CounterRng& rng) const {
  return std::sqrt(agents_[k].noise_variance) * rng.normal();
}

GradientSample sample(const RegressionProblem& problem, std::size_t k,
                      CounterRng& regressor_rng, CounterRng& noise_rng) {
  if (k >= problem.size()) throw ProblemError("agent index out of range");
  GradientSample s;
  s.agent = k;
  s.u.resize(static_cast<Eigen::Index>(problem.dimension()));
  problem.draw_regressor(k, regressor_rng, s.u);
  s.d = s.u.dot(problem.agent(k).target) + problem.draw_noise(k, noise_rng);
  return s;
}

GradientSample sample(const RegressionProblem& problem, std::size_t k, CounterRng& rng) {
  return sample(problem, k, rng, rng);
}

Vector true_gradient(const RegressionProblem& problem, std::size_t k, const Vector& w) {
  const AgentModel& a = problem.agent(k);
  return 2.0 * a.covariance * (w - a.target);
}

double cost(const RegressionProblem& problem, std::size_t k, const Vector& w) {
  const AgentModel& a = problem.agent(k);
  const Vector e = w - a.target;
  return e.dot(a.covariance * e) + a.noise_variance;
}

Vector global_minimizer(const RegressionProblem& problem, const Vector& p) {
  if (static_cast<std::size_t>(p.size()) != problem.size())
    throw ProblemError("weight vector length does not match agent count");
  const auto m = static_cast<Eigen::Index>(problem.dimension());
  Matrix h = Matrix::Zero(m, m);
  Vector rhs = Vector::Zero(m);
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const AgentModel& a = problem.agent(k);
    const double pk = p[static_cast<Eigen::Index>(k)];
    h += pk * a.covariance;
    rhs += pk * (a.covariance * a.target);
  }
  const auto solver = eig_sym(h);
  const double lmax = solver.eigenvalues().maxCoeff();
  const double lmin = solver.eigenvalues().minCoeff();
  if (!(lmin > 1e-10 * std::max(1.0, lmax)))
    throw ProblemError("globally unidentifiable: aggregate covariance is singular");
  return h.ldlt().solve(rhs);
}

RegressionProblem make_singular_agent(const RegressionProblem& base, std::size_t k,
                                      std::size_t i, std::size_t j) {
  const std::size_t m = base.dimension();
  if (i == j) throw ProblemError("duplicated columns must differ");
  if (i >= m || j >= m) throw ProblemError("duplicated column out of range");
  if (k >= base.size()) throw ProblemError("agent index out of range");
  std::vector<AgentModel> agents = base.agents();
  AgentModel& a = agents[k];
  Matrix factor = a.factor;
  factor.row(static_cast<Eigen::Index>(j)) = factor.row(static_cast<Eigen::Index>(i));
  a.factor = factor;
  a.covariance = factor * factor.transpose();
  a.diagonal = false;
  a.duplicate = std::make_pair(i, j);
  return RegressionProblem(base.w_star(), std::move(agents));
}

ProblemConstants constants(const RegressionProblem& problem, const Vector& p) {
  if (static_cast<std::size_t>(p.size()) != problem.size())
    throw ProblemError("weight vector length does not match agent count");
  const auto m = static_cast<Eigen::Index>(problem.dimension());
  ProblemConstants c;
  Matrix h = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < problem.size(); ++k) {
    const AgentModel& a = problem.agent(k);
    const double pk = p[static_cast<Eigen::Index>(k)];
    h += pk * a.covariance;
    const double lmax = eig_sym(a.covariance).eigenvalues().maxCoeff();
    c.eta_k.push_back(2.0 * lmax);
    c.eta += pk * 2.0 * lmax;
    c.sigma_k2.push_back(4.0 * a.noise_variance * a.covariance.trace());
    c.beta_k2.push_back(8.0 * lmax * lmax);
  }
  c.nu = 2.0 * std::max(0.0, eig_sym(h).eigenvalues().minCoeff());
  return c;
}

RegressionProblem random_diagonal_problem(const RandomProblemSpec& spec) {
  if (spec.n_agents == 0 || spec.dimension == 0)
    throw ProblemError("random problem needs at least one agent and one dimension");
  if (!(spec.variance_lo > 0.0 && spec.variance_hi >= spec.variance_lo))
    throw ProblemError("invalid regressor variance range");
  if (!(spec.noise_lo > 0.0 && spec.noise_hi >= spec.noise_lo))
    throw ProblemError("invalid noise variance range");
  CounterRng rng = make_stream(spec.seed, 0, 0, 0, Purpose::scenario);
  const auto m = static_cast<Eigen::Index>(spec.dimension);
  Vector w_star(m);
  for (Eigen::Index i = 0; i < m; ++i) w_star[i] = spec.w_star_scale * rng.normal();
  std::vector<Vector> variances;
  std::vector<double> noises;
  for (std::size_t k = 0; k < spec.n_agents; ++k) {
    Vector v(m);
    for (Eigen::Index i = 0; i < m; ++i)
      v[i] = spec.variance_lo + (spec.variance_hi - spec.variance_lo) * rng.uniform();
    variances.push_back(v);
    noises.push_back(spec.noise_lo + (spec.noise_hi - spec.noise_lo) * rng.uniform());
  }
  return RegressionProblem::diagonal(w_star, variances, noises);
}

}  // namespace actc
