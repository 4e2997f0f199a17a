#pragma once

#include "distopt/graph.hpp"
#include "distopt/network.hpp"
#include "distopt/transforms.hpp"

namespace distopt {

// Spectral quantities entering the gain bounds: extreme singular values of
// the output map E, extreme eigenvalues of Lambda_P = R^T L R and of
// Lambda_I (Lambda_P for coupling mode A, the identity for mode B), the
// drift Lipschitz constant, and the agent count.
struct SpectralData {
  double sig_m_E = 0.0;
  double sig_M_E = 0.0;
  double sig_m_LP = 0.0;
  double sig_M_LP = 0.0;
  double sig_m_LI = 0.0;
  double sig_M_LI = 0.0;
  double lipschitz = 0.0;
  int n_agents = 0;

  static SpectralData from_parts(const Graph& graph, const OutputMap& om, CouplingMode mode,
                                 double lipschitz);
  static SpectralData from_system(const NetworkSystem& system);

  void validate() const;

  // |X| and sigma_m(X) for X = Lambda_P (x) W^T E^T E W, computed from the
  // identities sigma(X) = sigma(Lambda_P) * sigma(E)^2 rather than by
  // forming X.
  double sig_m_X() const { return sig_m_LP * sig_m_E * sig_m_E; }
  double sig_M_X() const { return sig_M_LP * sig_M_E * sig_M_E; }
};

// Converse-Lyapunov inputs: c1, c3 are the non-constructive comparison
// constants (heuristic defaults of 1), mu the blended-dynamics decay rate,
// upsilon the rate slack with 0 < upsilon < mu.
struct LyapunovParams {
  double c1 = 1.0;
  double c3 = 1.0;
  double mu = 0.0;
  double upsilon = 0.0;

  // mu = alpha for a gradient-flow blend, sqrt(alpha)/2 for a heavy-ball
  // blend; upsilon = fraction * mu; c1 = c3 = 1 (declared heuristic).
  static LyapunovParams heuristic(double mu, double upsilon_fraction = 0.5);
  static LyapunovParams heuristic_for(Algorithm algorithm, double alpha,
                                      double upsilon_fraction = 0.5);

  void validate() const;
};

struct ThetaConstants {
  double theta0 = 0.0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double theta3 = 0.0;
  double theta4 = 0.0;
  double theta5 = 0.0;
};

ThetaConstants theta_constants(const SpectralData& sd, const LyapunovParams& lp);

// Sufficient proportional gain for exponential stability at given
// (kappa, k_I) with 2*kappa > k_I: the four-way max over the phi bounds,
// the integrator-rate bound, and the positive quadratic root phi_1.
double kp_star(double kappa, double k_i, const SpectralData& sd, const LyapunovParams& lp);

// Upper bound on the admissible coupling ratio phi*:
// min(theta1, theta2, sigma_m(X)/sqrt(theta4)).
double phi_star_bound(const SpectralData& sd);

struct VarthetaConstants {
  double vartheta1 = 0.0;
  double vartheta2 = 0.0;
  double vartheta3 = 0.0;
  double eta = 0.0;
};

VarthetaConstants vartheta_constants(double phi_star, const SpectralData& sd,
                                     const LyapunovParams& lp);

// Sufficient k_P for recovering the blended rate up to upsilon under
// kappa = k_I = phi* k_P. Throws when vartheta3 <= 0 (phi* too large).
double kp_double_star(double phi_star, const SpectralData& sd, const LyapunovParams& lp);

}  // namespace distopt
