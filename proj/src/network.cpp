#include "distopt/network.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace distopt {

std::string algorithm_name(Algorithm a) {
  switch (a) {
    case Algorithm::DistGD: return "dist_gd";
    case Algorithm::DistHBState: return "dist_hb_state";
    case Algorithm::DistHBOutput: return "dist_hb_output";
    case Algorithm::CentralGD: return "central_gd";
    case Algorithm::CentralHB: return "central_hb";
    case Algorithm::Custom: return "custom";
  }
  throw std::logic_error("unknown algorithm");
}

Algorithm algorithm_from_name(const std::string& name) {
  if (name == "dist_gd") return Algorithm::DistGD;
  if (name == "dist_hb_state") return Algorithm::DistHBState;
  if (name == "dist_hb_output") return Algorithm::DistHBOutput;
  if (name == "central_gd") return Algorithm::CentralGD;
  if (name == "central_hb") return Algorithm::CentralHB;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

bool is_distributed(Algorithm a) {
  return a == Algorithm::DistGD || a == Algorithm::DistHBState ||
         a == Algorithm::DistHBOutput || a == Algorithm::Custom;
}

namespace {

void check_gains(const CouplingConfig& c) {
  if (c.k_p < 0.0 || c.k_i < 0.0 || c.kappa < 0.0)
    throw std::invalid_argument("coupling: gains must be non-negative");
}

}  // namespace

CouplingConfig CouplingConfig::pi(CouplingMode mode, double k_p, double k_i) {
  return full(mode, k_p, k_i, k_i);
}

CouplingConfig CouplingConfig::full(CouplingMode mode, double k_p, double k_i, double kappa) {
  CouplingConfig c;
  c.mode = mode;
  c.k_p = k_p;
  c.k_i = k_i;
  c.kappa = kappa;
  check_gains(c);
  return c;
}

BetaGains beta_rule(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("beta_rule: beta must be positive");
  BetaGains g;
  g.beta = beta;
  g.k_i = beta;
  g.kappa = beta;
  g.k_p = std::pow(beta, 1.5);
  g.phi_star = 1.0 / std::sqrt(beta);
  g.small_beta = beta < 1.0;
  return g;
}

CouplingConfig BetaGains::to_coupling(CouplingMode mode) const {
  return CouplingConfig::full(mode, k_p, k_i, kappa);
}

const Graph& NetworkSystem::graph() const {
  if (!graph_) throw std::logic_error("system: centralized algorithm has no graph");
  return *graph_;
}

const CostEnsemble& NetworkSystem::ensemble() const {
  if (!ensemble_) throw std::logic_error("system: custom dynamics carry no ensemble");
  return *ensemble_;
}

const OutputMap& NetworkSystem::output_map() const {
  if (!output_map_) throw std::logic_error("system: centralized algorithm has no output map");
  return *output_map_;
}

int NetworkSystem::n_agents() const {
  return is_distributed(algorithm_) || !ensemble_ ? graph().n_nodes() : 1;
}

int NetworkSystem::output_dim() const { return output_map().output_dim(); }

int NetworkSystem::state_dim() const {
  if (!is_distributed(algorithm_) && ensemble_) return agent_dim_;
  return graph().n_nodes() * (agent_dim_ + output_map().output_dim());
}

Eigen::VectorXd NetworkSystem::vector_field(const Eigen::VectorXd& state) const {
  if (state.size() != state_dim()) throw std::invalid_argument("vector_field: wrong state size");

  if (!is_distributed(algorithm_) && ensemble_) {
    // No coupling: the drift is the whole field.
    return dynamics_.drift(0, state);
  }

  const int n_agents = graph().n_nodes();
  const int d = agent_dim_;
  const int q = output_map().output_dim();
  const Eigen::MatrixXd& e = output_map().E();
  const auto& neighbors = graph().neighbors();
  const bool mode_a = coupling_.mode == CouplingMode::A;

  // y_i = E x_i
  Eigen::MatrixXd y(q, n_agents);
  for (int i = 0; i < n_agents; ++i)
    y.col(i).noalias() = e * state.segment(static_cast<Eigen::Index>(i) * d, d);

  Eigen::VectorXd deriv(state.size());
  const Eigen::Index xi_base = static_cast<Eigen::Index>(n_agents) * d;
  for (int i = 0; i < n_agents; ++i) {
    Eigen::VectorXd y_diff = Eigen::VectorXd::Zero(q);   // sum_j (y_j - y_i)
    Eigen::VectorXd xi_diff = Eigen::VectorXd::Zero(q);  // sum_j (xi_j - xi_i), mode A
    const auto xi_i = state.segment(xi_base + static_cast<Eigen::Index>(i) * q, q);
    for (int j : neighbors[i]) {
      y_diff += y.col(j) - y.col(i);
      if (mode_a) xi_diff += state.segment(xi_base + static_cast<Eigen::Index>(j) * q, q) - xi_i;
    }

    const auto x_i = state.segment(static_cast<Eigen::Index>(i) * d, d);
    Eigen::VectorXd dx = dynamics_.drift(i, x_i);
    dx.noalias() += coupling_.k_p * (e.transpose() * y_diff);
    if (mode_a)
      dx.noalias() += coupling_.k_i * (e.transpose() * xi_diff);
    else
      dx.noalias() -= coupling_.k_i * (e.transpose() * xi_i);
    deriv.segment(static_cast<Eigen::Index>(i) * d, d) = dx;

    deriv.segment(xi_base + static_cast<Eigen::Index>(i) * q, q).noalias() =
        -coupling_.kappa * (k_eff_ * y_diff);
  }
  return deriv;
}

Eigen::MatrixXd NetworkSystem::extract_w(const Eigen::VectorXd& state) const {
  const int n = problem_dim_;
  if (!is_distributed(algorithm_) && ensemble_) {
    Eigen::MatrixXd w(n, 1);
    w.col(0) = state.head(n);
    return w;
  }
  const int n_agents = graph().n_nodes();
  Eigen::MatrixXd w(n, n_agents);
  for (int i = 0; i < n_agents; ++i)
    w.col(i) = state.segment(static_cast<Eigen::Index>(i) * agent_dim_, n);
  return w;
}

Eigen::MatrixXd NetworkSystem::extract_z(const Eigen::VectorXd& state) const {
  if (agent_dim_ != 2 * problem_dim_)
    throw std::logic_error("extract_z: system has no momentum variables");
  const int n = problem_dim_;
  if (!is_distributed(algorithm_) && ensemble_) {
    Eigen::MatrixXd z(n, 1);
    z.col(0) = state.segment(n, n);
    return z;
  }
  const int n_agents = graph().n_nodes();
  Eigen::MatrixXd z(n, n_agents);
  for (int i = 0; i < n_agents; ++i)
    z.col(i) = state.segment(static_cast<Eigen::Index>(i) * agent_dim_ + n, n);
  return z;
}

Eigen::VectorXd NetworkSystem::xi_part(const Eigen::VectorXd& state) const {
  const int n_agents = graph().n_nodes();
  return state.tail(static_cast<Eigen::Index>(n_agents) * output_map().output_dim());
}

Eigen::VectorXd NetworkSystem::xi_average(const Eigen::VectorXd& state) const {
  const int n_agents = graph().n_nodes();
  const int q = output_map().output_dim();
  const Eigen::VectorXd xi = xi_part(state);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(q);
  for (int i = 0; i < n_agents; ++i) avg += xi.segment(static_cast<Eigen::Index>(i) * q, q);
  return avg / static_cast<double>(n_agents);
}

void NetworkSystem::validate_initial_state(const Eigen::VectorXd& state) const {
  if (state.size() != state_dim())
    throw std::invalid_argument("initial state: wrong dimension");
  if (!state.allFinite()) throw std::invalid_argument("initial state: non-finite entries");
  if (is_distributed(algorithm_) && coupling_.mode == CouplingMode::B && !churn_inherited_) {
    const double sum_norm = xi_average(state).norm() * n_agents();
    if (sum_norm > 1e-12) {
      std::ostringstream msg;
      msg << "initial state: coupling mode B requires sum xi_i(0) = 0, got |sum| = " << sum_norm;
      throw std::invalid_argument(msg.str());
    }
  }
}

double NetworkSystem::stiffness_estimate() const {
  double coupling_scale = 0.0;
  if (is_distributed(algorithm_)) {
    const double s = output_map().sigma_max_E();
    coupling_scale = coupling_.k_p * graph().lambda_max() * s * s;
  }
  return coupling_scale + drift_lipschitz_;
}

BlendedDerivative NetworkSystem::blended_field(const Eigen::VectorXd& z,
                                               const Eigen::VectorXd& w_bar) const {
  return blended_vector_field(z, w_bar, dynamics_, n_agents(), output_map());
}

FullEquilibrium NetworkSystem::equilibrium_from_blended(const Eigen::VectorXd& z_star,
                                                        const Eigen::VectorXd& w_bar_star) const {
  return full_equilibrium(z_star, w_bar_star, dynamics_, output_map(), graph(), coupling_.mode,
                          coupling_.k_i);
}

TransformedState NetworkSystem::to_transformed_state(const Eigen::VectorXd& state) const {
  const Eigen::Index x_len = static_cast<Eigen::Index>(n_agents()) * agent_dim_;
  return to_transformed(state.head(x_len), state.tail(state.size() - x_len), output_map(),
                        graph());
}

Eigen::VectorXd NetworkSystem::from_transformed_state(const TransformedState& ts) const {
  const auto [x, xi] = from_transformed(ts, output_map(), graph());
  Eigen::VectorXd state(x.size() + xi.size());
  state << x, xi;
  return state;
}

TransformedState NetworkSystem::transformed_field(const TransformedState& ts) const {
  return transformed_vector_field(ts, dynamics_, output_map(), graph(), coupling_.mode,
                                  coupling_.k_p, coupling_.k_i, coupling_.kappa, k_eff_);
}

namespace {

AgentDynamics make_dynamics(Algorithm algorithm, const CostEnsemble& ensemble, double damping) {
  const int n = ensemble.dim();
  AgentDynamics dyn;
  switch (algorithm) {
    case Algorithm::DistGD:
      dyn.state_dim = n;
      dyn.drift = [ensemble](int i, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -ensemble.local_gradient(i, x);
      };
      break;
    case Algorithm::CentralGD:
      dyn.state_dim = n;
      dyn.drift = [ensemble](int, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return -ensemble.gradient(x);
      };
      break;
    case Algorithm::DistHBState:
    case Algorithm::DistHBOutput:
      dyn.state_dim = 2 * n;
      dyn.drift = [ensemble, damping, n](int i, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd d(2 * n);
        d.head(n) = x.tail(n);
        d.tail(n) = -damping * x.tail(n) - ensemble.local_gradient(i, x.head(n));
        return d;
      };
      break;
    case Algorithm::CentralHB:
      dyn.state_dim = 2 * n;
      dyn.drift = [ensemble, damping, n](int, const Eigen::VectorXd& x) -> Eigen::VectorXd {
        Eigen::VectorXd d(2 * n);
        d.head(n) = x.tail(n);
        d.tail(n) = -damping * x.tail(n) - ensemble.gradient(x.head(n));
        return d;
      };
      break;
    case Algorithm::Custom:
      throw std::logic_error("make_dynamics: custom systems supply their own drift");
  }
  return dyn;
}

// Exact Lipschitz constant of the stacked drift for quadratic ensembles
// (max over agents of the constant Jacobian norm), a service bound otherwise.
double drift_lipschitz_constant(Algorithm algorithm, const CostEnsemble& ensemble,
                                double damping) {
  const int n = ensemble.dim();
  const bool heavy_ball = algorithm == Algorithm::DistHBState ||
                          algorithm == Algorithm::DistHBOutput ||
                          algorithm == Algorithm::CentralHB;
  if (!heavy_ball) return ensemble.lipschitz();
  if (!ensemble.is_quadratic()) return 1.0 + ensemble.lipschitz() + damping;
  double worst = 0.0;
  for (const auto& local : ensemble.quadratics()) {
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    jac.topRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    jac.bottomLeftCorner(n, n) = -2.0 * local.A;
    jac.bottomRightCorner(n, n) = -damping * Eigen::MatrixXd::Identity(n, n);
    worst = std::max(worst, jac.jacobiSvd().singularValues()(0));
  }
  return worst;
}

Eigen::MatrixXd output_matrix(Algorithm algorithm, int n) {
  switch (algorithm) {
    case Algorithm::DistGD:
      return Eigen::MatrixXd::Identity(n, n);
    case Algorithm::DistHBState:
      return Eigen::MatrixXd::Identity(2 * n, 2 * n);
    case Algorithm::DistHBOutput: {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, 2 * n);
      e.leftCols(n) = Eigen::MatrixXd::Identity(n, n);
      return e;
    }
    default:
      throw std::logic_error("output_matrix: centralized algorithm");
  }
}

}  // namespace

NetworkSystem assemble(Algorithm algorithm, const Graph& graph, const CostEnsemble& ensemble,
                       const CouplingConfig& coupling, std::optional<double> hb_damping_override) {
  check_gains(coupling);
  if (algorithm == Algorithm::Custom)
    throw std::invalid_argument("assemble: build custom systems with assemble_custom");
  const bool heavy_ball = algorithm == Algorithm::DistHBState ||
                          algorithm == Algorithm::DistHBOutput ||
                          algorithm == Algorithm::CentralHB;
  if (heavy_ball && !(ensemble.alpha() > 0.0))
    throw std::invalid_argument("assemble: heavy-ball dynamics need alpha > 0");
  if (is_distributed(algorithm) && graph.n_nodes() != ensemble.size())
    throw std::invalid_argument("assemble: graph size and ensemble size differ");

  NetworkSystem sys;
  sys.algorithm_ = algorithm;
  sys.graph_ = graph;
  sys.ensemble_ = ensemble;
  sys.coupling_ = coupling;
  sys.problem_dim_ = ensemble.dim();
  sys.damping_ = heavy_ball
                     ? hb_damping_override.value_or(2.0 * std::sqrt(ensemble.alpha()))
                     : 0.0;
  sys.dynamics_ = make_dynamics(algorithm, ensemble, sys.damping_);
  sys.agent_dim_ = sys.dynamics_.state_dim;
  sys.drift_lipschitz_ = drift_lipschitz_constant(algorithm, ensemble, sys.damping_);

  if (is_distributed(algorithm)) {
    sys.output_map_ = split_output_map(output_matrix(algorithm, ensemble.dim()));
    sys.k_eff_ = coupling.k_matrix.value_or(sys.output_map_->K());
    const int q = sys.output_map_->output_dim();
    if (sys.k_eff_.rows() != q || sys.k_eff_.cols() != q)
      throw std::invalid_argument("assemble: K override has wrong dimensions");
  }
  return sys;
}

NetworkSystem assemble_custom(const Graph& graph, const AgentDynamics& dynamics,
                              const Eigen::MatrixXd& e, const CouplingConfig& coupling,
                              double drift_lipschitz) {
  check_gains(coupling);
  if (static_cast<int>(e.cols()) != dynamics.state_dim)
    throw std::invalid_argument("assemble_custom: E and dynamics dimensions differ");

  NetworkSystem sys;
  sys.algorithm_ = Algorithm::Custom;
  sys.graph_ = graph;
  sys.coupling_ = coupling;
  sys.dynamics_ = dynamics;
  sys.agent_dim_ = dynamics.state_dim;
  sys.problem_dim_ = dynamics.state_dim;
  sys.drift_lipschitz_ = drift_lipschitz;
  sys.output_map_ = split_output_map(e);
  sys.k_eff_ = coupling.k_matrix.value_or(sys.output_map_->K());
  return sys;
}

int message_dimension(Algorithm algorithm, CouplingMode mode, int problem_dim) {
  if (!is_distributed(algorithm))
    throw std::invalid_argument("message_dimension: " + algorithm_name(algorithm) +
                                " does not communicate");
  const int q = algorithm == Algorithm::DistHBState ? 2 * problem_dim : problem_dim;
  return mode == CouplingMode::A ? 2 * q : q;
}

JoinLeaveResult join_leave(const NetworkSystem& system, const ChurnEvent& event,
                           const Eigen::VectorXd& carry_state) {
  if (!is_distributed(system.algorithm()))
    throw std::invalid_argument("join_leave: centralized systems have no membership");
  if (carry_state.size() != system.state_dim())
    throw std::invalid_argument("join_leave: carried state has wrong dimension");

  const int d = system.agent_state_dim();
  const int q = system.output_dim();
  const int n_old = system.n_agents();
  const Eigen::Index xi_base = static_cast<Eigen::Index>(n_old) * d;

  Graph new_graph = event.kind == ChurnEvent::Kind::Leave ? system.graph().without_node(event.agent)
                                                          : system.graph().with_node(event.neighbors);
  CostEnsemble new_ensemble = event.kind == ChurnEvent::Kind::Leave
                                  ? system.ensemble().without_local(event.agent)
                                  : system.ensemble().with_local(event.cost);

  NetworkSystem new_system = assemble(system.algorithm(), new_graph, new_ensemble, system.coupling());
  new_system.churn_inherited_ = true;
  JoinLeaveResult result{std::move(new_system), Eigen::VectorXd()};

  const int n_new = result.system.n_agents();
  result.state.resize(result.system.state_dim());
  const Eigen::Index new_xi_base = static_cast<Eigen::Index>(n_new) * d;
  int dst = 0;
  for (int i = 0; i < n_old; ++i) {
    if (event.kind == ChurnEvent::Kind::Leave && i == event.agent) continue;
    result.state.segment(static_cast<Eigen::Index>(dst) * d, d) =
        carry_state.segment(static_cast<Eigen::Index>(i) * d, d);
    result.state.segment(new_xi_base + static_cast<Eigen::Index>(dst) * q, q) =
        carry_state.segment(xi_base + static_cast<Eigen::Index>(i) * q, q);
    ++dst;
  }
  if (event.kind == ChurnEvent::Kind::Join) {
    Eigen::VectorXd x0 = event.x0.value_or(Eigen::VectorXd::Zero(d));
    Eigen::VectorXd xi0 = event.xi0.value_or(Eigen::VectorXd::Zero(q));
    if (x0.size() != d || xi0.size() != q)
      throw std::invalid_argument("join_leave: new-agent state has wrong dimension");
    result.state.segment(static_cast<Eigen::Index>(dst) * d, d) = x0;
    result.state.segment(new_xi_base + static_cast<Eigen::Index>(dst) * q, q) = xi0;
  }
  return result;
}

}  // namespace distopt
