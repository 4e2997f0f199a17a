#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "distopt/graph.hpp"
#include "distopt/problems.hpp"
#include "distopt/transforms.hpp"

namespace distopt {

// Custom tags systems built by assemble_custom (arbitrary drift + output map).
enum class Algorithm { DistGD, DistHBState, DistHBOutput, CentralGD, CentralHB, Custom };

std::string algorithm_name(Algorithm a);
Algorithm algorithm_from_name(const std::string& name);
bool is_distributed(Algorithm a);

// PI coupling gains. kappa is the integrator drive gain; K defaults to
// E W W^T E^T at assembly when left empty. Zero gains are accepted (they
// switch the coupling off), negative ones are not.
struct CouplingConfig {
  CouplingMode mode = CouplingMode::A;
  double k_p = 0.0;
  double k_i = 0.0;
  double kappa = 0.0;
  std::optional<Eigen::MatrixXd> k_matrix;  // override for K

  // kappa = k_i, the default used by all the distributed algorithms here.
  static CouplingConfig pi(CouplingMode mode, double k_p, double k_i);
  static CouplingConfig full(CouplingMode mode, double k_p, double k_i, double kappa);

  // Gain regime of the small-gain stability result: 2*kappa > k_I.
  bool theorem_a_regime() const { return 2.0 * kappa > k_i; }
};

// Gain schedule kappa = k_I = beta, k_P = beta^{3/2}; the implied coupling
// ratio is phi_star = 1/sqrt(beta). beta < 1 is flagged as outside the
// rate-recovery regime.
struct BetaGains {
  double beta = 0.0;
  double k_p = 0.0;
  double k_i = 0.0;
  double kappa = 0.0;
  double phi_star = 0.0;
  bool small_beta = false;

  CouplingConfig to_coupling(CouplingMode mode) const;
};

BetaGains beta_rule(double beta);

class NetworkSystem;

// Builds the stacked system for the chosen algorithm. Heavy-ball variants
// take the damping 2*sqrt(ensemble.alpha()) unless hb_damping_override is
// set. The coupling's K defaults to E W W^T E^T.
NetworkSystem assemble(Algorithm algorithm, const Graph& graph, const CostEnsemble& ensemble,
                       const CouplingConfig& coupling,
                       std::optional<double> hb_damping_override = std::nullopt);

// General coupled system for arbitrary agent drift and output map; used for
// analysis and tests beyond the named algorithms.
NetworkSystem assemble_custom(const Graph& graph, const AgentDynamics& dynamics,
                              const Eigen::MatrixXd& e, const CouplingConfig& coupling,
                              double drift_lipschitz);

struct ChurnEvent {
  enum class Kind { Leave, Join };
  Kind kind = Kind::Leave;
  int agent = -1;                      // leave: 0-based index
  QuadraticLocal cost;                 // join: local cost of the new agent
  std::vector<int> neighbors;          // join: edges to existing agents
  std::optional<Eigen::VectorXd> x0;   // join: initial x (default zero)
  std::optional<Eigen::VectorXd> xi0;  // join: initial xi (default zero)
};

struct JoinLeaveResult;

JoinLeaveResult join_leave(const NetworkSystem& system, const ChurnEvent& event,
                           const Eigen::VectorXd& carry_state);

// Stacked ODE for one algorithm on one graph/ensemble. Immutable after
// assembly; vector_field is reentrant. Distributed state layout is
// [x_1; ...; x_N; xi_1; ...; xi_N]; centralized systems carry no xi.
class NetworkSystem {
 public:
  Algorithm algorithm() const { return algorithm_; }
  const Graph& graph() const;
  const CostEnsemble& ensemble() const;
  const OutputMap& output_map() const;
  const CouplingConfig& coupling() const { return coupling_; }

  int n_agents() const;
  int agent_state_dim() const { return agent_dim_; }
  int output_dim() const;
  int state_dim() const;
  int problem_dim() const { return problem_dim_; }
  double hb_damping() const { return damping_; }

  Eigen::VectorXd vector_field(const Eigen::VectorXd& state) const;

  const AgentDynamics& agent_dynamics() const { return dynamics_; }

  // Columns are the per-agent optimization variables w_i (problem dim); a
  // single column for centralized systems.
  Eigen::MatrixXd extract_w(const Eigen::VectorXd& state) const;
  // z_i variables of the heavy-ball systems (throws for the others).
  Eigen::MatrixXd extract_z(const Eigen::VectorXd& state) const;
  Eigen::VectorXd xi_part(const Eigen::VectorXd& state) const;
  // Mean of the xi_i blocks, the conserved quantity of the coupling.
  Eigen::VectorXd xi_average(const Eigen::VectorXd& state) const;

  // Mode B demands sum xi_i(0) = 0 (tolerance 1e-12) unless the system came
  // out of a churn event, which is exactly the case the initialization-free
  // coupling exists for.
  void validate_initial_state(const Eigen::VectorXd& state) const;
  bool churn_inherited() const { return churn_inherited_; }

  // Crude largest-eigenvalue scale of the coupled field, used for the
  // explicit-integrator stability warning: k_P * lambda_max(L) * sigma_max(E)^2
  // plus the drift Lipschitz constant.
  double stiffness_estimate() const;
  double drift_lipschitz() const { return drift_lipschitz_; }

  // Convenience delegations to the transforms module.
  BlendedDerivative blended_field(const Eigen::VectorXd& z, const Eigen::VectorXd& w_bar) const;
  FullEquilibrium equilibrium_from_blended(const Eigen::VectorXd& z_star,
                                           const Eigen::VectorXd& w_bar_star) const;
  TransformedState to_transformed_state(const Eigen::VectorXd& state) const;
  Eigen::VectorXd from_transformed_state(const TransformedState& ts) const;
  TransformedState transformed_field(const TransformedState& ts) const;

 private:
  friend NetworkSystem assemble(Algorithm, const Graph&, const CostEnsemble&,
                                const CouplingConfig&, std::optional<double>);
  friend NetworkSystem assemble_custom(const Graph&, const AgentDynamics&, const Eigen::MatrixXd&,
                                       const CouplingConfig&, double);
  friend JoinLeaveResult join_leave(const NetworkSystem&, const ChurnEvent&,
                                    const Eigen::VectorXd&);
  NetworkSystem() = default;

  Algorithm algorithm_ = Algorithm::DistGD;
  std::optional<Graph> graph_;
  std::optional<CostEnsemble> ensemble_;
  std::optional<OutputMap> output_map_;
  CouplingConfig coupling_;
  AgentDynamics dynamics_;
  Eigen::MatrixXd k_eff_;  // resolved K
  int agent_dim_ = 0;
  int problem_dim_ = 0;
  double damping_ = 0.0;          // heavy-ball damping 2*sqrt(alpha) (or override)
  double drift_lipschitz_ = 0.0;  // Lipschitz constant of the stacked drift h
  bool churn_inherited_ = false;
};

struct JoinLeaveResult {
  NetworkSystem system;
  Eigen::VectorXd state;
};

// Per-neighbor, per-exchange communicated vector dimension: 2q for mode A
// (output plus integrator state), q for mode B (output only). Throws for
// centralized algorithms.
int message_dimension(Algorithm algorithm, CouplingMode mode, int problem_dim);

}  // namespace distopt
