#pragma once

#include <Eigen/Dense>
#include <functional>

#include "distopt/graph.hpp"

namespace distopt {

// Output map y = E x together with deterministic orthonormal bases of
// ker(E) (columns of Z) and its complement (columns of W), so that
// [Z W] is orthogonal, E Z = 0, and E W is invertible.
class OutputMap {
 public:
  int state_dim() const { return static_cast<int>(e_.cols()); }   // n
  int output_dim() const { return static_cast<int>(e_.rows()); }  // q
  int kernel_dim() const { return state_dim() - output_dim(); }

  const Eigen::MatrixXd& E() const { return e_; }
  const Eigen::MatrixXd& Z() const { return z_; }
  const Eigen::MatrixXd& W() const { return w_; }
  // K = E W W^T E^T, symmetric positive definite.
  const Eigen::MatrixXd& K() const { return k_; }

  double sigma_min_E() const { return sigma_min_; }
  double sigma_max_E() const { return sigma_max_; }

 private:
  friend OutputMap split_output_map(const Eigen::MatrixXd& e);
  OutputMap() = default;

  Eigen::MatrixXd e_, z_, w_, k_;
  double sigma_min_ = 0.0, sigma_max_ = 0.0;
};

// Bases come from a Householder QR of E^T with every column of the
// orthogonal factor sign-normalized (largest-magnitude entry positive), so
// the decomposition is deterministic and structured maps like [I 0] keep
// their natural bases. Throws on rank-deficient E, naming the rank found.
OutputMap split_output_map(const Eigen::MatrixXd& e);

// Per-agent drift h_i for the node dynamics xdot_i = h_i(x_i) + u_i.
struct AgentDynamics {
  int state_dim = 0;
  std::function<Eigen::VectorXd(int agent, const Eigen::VectorXd& x_i)> drift;
};

// Coordinates adapted to the coupling: per-agent kernel components z_i,
// output average w_bar, output disagreement w_tilde = (R^T (x) I_q) w, and
// the same split for the integrator state xi.
struct TransformedState {
  Eigen::VectorXd z;         // stacked z_i, N*(n-q)
  Eigen::VectorXd w_bar;     // q
  Eigen::VectorXd w_tilde;   // (N-1)*q
  Eigen::VectorXd xi_bar;    // q
  Eigen::VectorXd xi_tilde;  // (N-1)*q
};

TransformedState to_transformed(const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                                const OutputMap& om, const Graph& g);

// Inverse of to_transformed: returns (x, xi).
std::pair<Eigen::VectorXd, Eigen::VectorXd> from_transformed(const TransformedState& ts,
                                                             const OutputMap& om, const Graph& g);

// Reduced dynamics on the output-consensus manifold:
//   zdot_i  = Z^T h_i(Z z_i + W w_bar)
//   wbardot = (1/N) sum_i W^T h_i(Z z_i + W w_bar)
struct BlendedDerivative {
  Eigen::VectorXd z_dot;
  Eigen::VectorXd w_bar_dot;
};

BlendedDerivative blended_vector_field(const Eigen::VectorXd& z, const Eigen::VectorXd& w_bar,
                                       const AgentDynamics& dynamics, int n_agents,
                                       const OutputMap& om);

// Equilibrium of the full coupled system induced by a blended equilibrium
// (z*, w_bar*): x* = (I (x) Z) z* + (1 (x) W) w_bar* and
// xi_tilde* = (1/k_I) (Lambda_I (x) W^T E^T)^{-1} (R^T (x) W^T) h(x*).
struct FullEquilibrium {
  Eigen::VectorXd x_star;         // N*n
  Eigen::VectorXd xi_tilde_star;  // (N-1)*q
};

enum class CouplingMode { A, B };

FullEquilibrium full_equilibrium(const Eigen::VectorXd& z_star, const Eigen::VectorXd& w_bar_star,
                                 const AgentDynamics& dynamics, const OutputMap& om, const Graph& g,
                                 CouplingMode mode, double k_i);

// Assembles xi from its transformed pieces (inverse of the xi split).
Eigen::VectorXd assemble_xi(const Eigen::VectorXd& xi_bar, const Eigen::VectorXd& xi_tilde,
                            const Graph& g);

// Time derivative of the transformed state under the coupled dynamics,
// written directly in the (z, w_bar, w_tilde, xi_bar, xi_tilde) coordinates:
//   zdot_i      = Z^T h_i(x_i)
//   w_bar_dot   = (1/N) sum W^T h_i(x_i)            [- k_I W^T E^T xi_bar, mode B]
//   w_tilde_dot = (R^T (x) W^T) h(x) - k_P (Lambda_P (x) W^T E^T E W) w_tilde
//                 - k_I (Lambda_I (x) W^T E^T) xi_tilde
//   xi_bar_dot  = 0
//   xi_tilde_dot = kappa (Lambda_P (x) K E W) w_tilde
// Transforming the stacked field gives the same result; the pair is the
// correctness oracle for this module.
TransformedState transformed_vector_field(const TransformedState& ts,
                                          const AgentDynamics& dynamics, const OutputMap& om,
                                          const Graph& g, CouplingMode mode, double k_p,
                                          double k_i, double kappa,
                                          const Eigen::MatrixXd& k_matrix);

}  // namespace distopt
