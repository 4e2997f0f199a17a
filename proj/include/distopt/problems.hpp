#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace distopt {

// Local cost f_i(w) = w^T A w + b^T w with A symmetric (possibly indefinite).
// Gradient convention: grad f = 2 A w + b.
struct QuadraticLocal {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;

  double value(const Eigen::VectorXd& w) const { return w.dot(A * w) + b.dot(w); }
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const { return 2.0 * (A * w) + b; }
};

// Plugin cost for non-quadratic problems; the caller supplies the gradient
// Lipschitz constant and the strong-convexity parameter of the sum.
struct LocalCost {
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

// N local costs whose average F(w) = (1/N) sum f_i(w) is strongly convex
// with parameter alpha; individual f_i need not be convex. lipschitz() is
// the largest Lipschitz constant among the local gradients. Immutable after
// construction; gradient evaluation is reentrant.
class CostEnsemble {
 public:
  // alpha and L are computed by eigensolve: alpha = lambda_min((2/N) sum A_i),
  // L = max_i sigma_max(2 A_i). Throws if the sum is not positive definite.
  static CostEnsemble quadratic(std::vector<QuadraticLocal> locals);

  // Non-quadratic plugin path; constants are caller-supplied.
  static CostEnsemble custom(int dim, std::vector<LocalCost> locals, double lipschitz,
                             double alpha);

  // Matrix-list text format: header "N n", then each A_i row-major, then
  // each b_i, 17 significant digits.
  static CostEnsemble load(const std::string& path);
  void save(const std::string& path) const;

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(n_agents_); }
  double alpha() const { return alpha_; }
  double lipschitz() const { return lipschitz_; }

  double local_value(int i, const Eigen::VectorXd& w) const;
  Eigen::VectorXd local_gradient(int i, const Eigen::VectorXd& w) const;

  // F and grad F; the sum is accumulated in agent order, then divided by N.
  double value(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;

  bool is_quadratic() const { return !quadratics_.empty(); }
  const std::vector<QuadraticLocal>& quadratics() const;

  // Ensemble with local i removed / appended; quadratic only (constants are
  // recomputed from the matrices).
  CostEnsemble without_local(int i) const;
  CostEnsemble with_local(QuadraticLocal extra) const;

 private:
  CostEnsemble() = default;

  int dim_ = 0;
  std::size_t n_agents_ = 0;
  std::vector<QuadraticLocal> quadratics_;
  std::vector<LocalCost> customs_;
  double alpha_ = 0.0;
  double lipschitz_ = 0.0;
};

// Random quadratic ensemble with pinned sum spectrum: the maximum eigenvalue
// of (1/N) sum A_i lands on target_max_eig and the condition number of the
// sum on target_condition (both within 5%). For n_agents >= 3 and dim >= 2
// at least one A_i is made indefinite (for dim == 1, negative) by shifting
// mass between two agents without touching the sum. Deterministic per seed.
CostEnsemble random_quadratic_ensemble(int n_agents, int dim, double target_max_eig,
                                       double target_condition, std::uint64_t seed);

// argmin of F. Quadratics solve (sum A_i) w = -(sum b_i)/2 directly; custom
// ensembles run damped Newton (finite-difference Hessian) to |grad F| < 1e-12.
Eigen::VectorXd minimizer(const CostEnsemble& ensemble);

struct HeavyBallEquilibrium {
  Eigen::VectorXd w_star;
  std::vector<Eigen::VectorXd> z_star;  // z_i* = -grad f_i(w*) / (2 sqrt(alpha))
};

HeavyBallEquilibrium heavy_ball_equilibrium(const CostEnsemble& ensemble);

}  // namespace distopt
