#include "distopt/gains.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace distopt {

SpectralData SpectralData::from_parts(const Graph& graph, const OutputMap& om, CouplingMode mode,
                                      double lipschitz) {
  if (graph.n_nodes() < 2)
    throw std::invalid_argument("spectral data: gain bounds need at least two agents");
  const Eigen::VectorXd lp_eigs =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(graph.reduced_laplacian()).eigenvalues();
  SpectralData sd;
  sd.sig_m_E = om.sigma_min_E();
  sd.sig_M_E = om.sigma_max_E();
  sd.sig_m_LP = lp_eigs.minCoeff();
  sd.sig_M_LP = lp_eigs.maxCoeff();
  if (mode == CouplingMode::A) {
    sd.sig_m_LI = sd.sig_m_LP;
    sd.sig_M_LI = sd.sig_M_LP;
  } else {
    sd.sig_m_LI = 1.0;
    sd.sig_M_LI = 1.0;
  }
  sd.lipschitz = lipschitz;
  sd.n_agents = graph.n_nodes();
  sd.validate();
  return sd;
}

SpectralData SpectralData::from_system(const NetworkSystem& system) {
  return from_parts(system.graph(), system.output_map(), system.coupling().mode,
                    system.drift_lipschitz());
}

void SpectralData::validate() const {
  const bool positive = sig_m_E > 0.0 && sig_M_E > 0.0 && sig_m_LP > 0.0 && sig_M_LP > 0.0 &&
                        sig_m_LI > 0.0 && sig_M_LI > 0.0 && lipschitz > 0.0 && n_agents > 0;
  if (!positive) throw std::invalid_argument("spectral data: all quantities must be positive");
  if (sig_m_E > sig_M_E || sig_m_LP > sig_M_LP || sig_m_LI > sig_M_LI)
    throw std::invalid_argument("spectral data: min exceeds max");
}

LyapunovParams LyapunovParams::heuristic(double mu, double upsilon_fraction) {
  LyapunovParams lp;
  lp.mu = mu;
  lp.upsilon = upsilon_fraction * mu;
  lp.validate();
  return lp;
}

LyapunovParams LyapunovParams::heuristic_for(Algorithm algorithm, double alpha,
                                             double upsilon_fraction) {
  const bool heavy_ball =
      algorithm == Algorithm::DistHBState || algorithm == Algorithm::DistHBOutput ||
      algorithm == Algorithm::CentralHB;
  return heuristic(heavy_ball ? std::sqrt(alpha) / 2.0 : alpha, upsilon_fraction);
}

void LyapunovParams::validate() const {
  if (!(c1 > 0.0 && c3 > 0.0))
    throw std::invalid_argument("lyapunov params: c1 and c3 must be positive");
  if (!(upsilon > 0.0 && upsilon < mu))
    throw std::invalid_argument("lyapunov params: need 0 < upsilon < mu");
}

ThetaConstants theta_constants(const SpectralData& sd, const LyapunovParams& lp) {
  sd.validate();
  lp.validate();
  const double l = sd.lipschitz;
  const double n = static_cast<double>(sd.n_agents);
  const double norm_x = sd.sig_M_X();

  ThetaConstants t;
  t.theta0 = 3.0 * lp.c3 * lp.c3 * l * l / (4.0 * lp.upsilon * lp.c1) +
             3.0 * norm_x * norm_x * l * l * n / (lp.upsilon * lp.c1) + norm_x * l;
  t.theta1 = std::sqrt(2.0) * std::sqrt(sd.sig_m_LP / sd.sig_M_LI) * (sd.sig_m_E / sd.sig_M_E);
  t.theta2 = std::max(sd.sig_M_LP * sd.sig_M_E / sd.sig_M_LI, 2.0 / sd.sig_M_E);
  t.theta3 = 4.0 * sd.sig_M_LI * sd.sig_M_LI * sd.sig_M_E * sd.sig_M_E * l * l * n /
             (sd.sig_m_LI * sd.sig_m_LI * sd.sig_m_E * sd.sig_m_E * lp.upsilon * lp.c1);
  t.theta4 = sd.sig_M_LP * sd.sig_M_LI * std::pow(sd.sig_M_E, 4);
  t.theta5 = sd.sig_M_LI * sd.sig_M_LI * sd.sig_M_E * sd.sig_M_E * l * l /
             (sd.sig_m_LI * sd.sig_m_LI * sd.sig_m_E * sd.sig_m_E);
  return t;
}

double kp_star(double kappa, double k_i, const SpectralData& sd, const LyapunovParams& lp) {
  if (!(k_i > 0.0) || !(2.0 * kappa > k_i)) {
    std::ostringstream msg;
    msg << "kp_star: requires 2*kappa > k_I > 0 (kappa = " << kappa << ", k_I = " << k_i << ")";
    throw std::invalid_argument(msg.str());
  }
  const ThetaConstants t = theta_constants(sd, lp);
  const double gap = 2.0 * kappa - k_i;
  const double sig_m_x2 = sd.sig_m_X() * sd.sig_m_X();
  const double phi1 =
      (t.theta0 +
       std::sqrt(t.theta0 * t.theta0 + 4.0 * gap * (kappa * t.theta4 + t.theta5 / k_i) * sig_m_x2)) /
      (2.0 * sig_m_x2);
  return std::max({gap / t.theta1, gap / t.theta2, gap / k_i * t.theta3, phi1});
}

double phi_star_bound(const SpectralData& sd) {
  sd.validate();
  const double theta1 =
      std::sqrt(2.0) * std::sqrt(sd.sig_m_LP / sd.sig_M_LI) * (sd.sig_m_E / sd.sig_M_E);
  const double theta2 = std::max(sd.sig_M_LP * sd.sig_M_E / sd.sig_M_LI, 2.0 / sd.sig_M_E);
  const double theta4 = sd.sig_M_LP * sd.sig_M_LI * std::pow(sd.sig_M_E, 4);
  return std::min({theta1, theta2, sd.sig_m_X() / std::sqrt(theta4)});
}

VarthetaConstants vartheta_constants(double phi_star, const SpectralData& sd,
                                     const LyapunovParams& lp) {
  sd.validate();
  lp.validate();
  if (!(phi_star > 0.0)) throw std::invalid_argument("vartheta: phi_star must be positive");
  const ThetaConstants t = theta_constants(sd, lp);
  const double l = sd.lipschitz;
  const double n = static_cast<double>(sd.n_agents);

  VarthetaConstants v;
  v.eta = std::max(sd.sig_M_LP * sd.sig_M_E * sd.sig_M_E, 2.0 * sd.sig_M_LI);
  v.vartheta1 = 2.0 * 4.0 * sd.sig_M_LI * sd.sig_M_LI * sd.sig_M_E * sd.sig_M_E * l * l * n /
                (sd.sig_m_LI * sd.sig_m_LI * sd.sig_m_E * sd.sig_m_E * lp.upsilon * lp.c1);
  v.vartheta2 = 2.0 * 8.0 * (lp.mu - lp.upsilon) * v.eta /
                (3.0 * sd.sig_m_LI * sd.sig_m_LI * sd.sig_m_E * sd.sig_m_E);
  v.vartheta3 =
      sd.sig_m_LP * sd.sig_m_LP * std::pow(sd.sig_m_E, 4) - phi_star * phi_star * t.theta4;
  return v;
}

double kp_double_star(double phi_star, const SpectralData& sd, const LyapunovParams& lp) {
  const ThetaConstants t = theta_constants(sd, lp);
  const VarthetaConstants v = vartheta_constants(phi_star, sd, lp);
  if (!(v.vartheta3 > 0.0)) {
    std::ostringstream msg;
    msg << "kp_double_star: phi_star = " << phi_star
        << " too large (vartheta3 = " << v.vartheta3 << " <= 0)";
    throw std::invalid_argument(msg.str());
  }
  const double shifted = t.theta0 + 2.0 * (lp.mu - lp.upsilon) * v.eta;
  const double root =
      (shifted + std::sqrt(shifted * shifted + 4.0 * v.vartheta3 * t.theta5)) /
      (2.0 * v.vartheta3);
  return std::max({v.vartheta1, v.vartheta2 / (phi_star * phi_star), root});
}

}  // namespace distopt
