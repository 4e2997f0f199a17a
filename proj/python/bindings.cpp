// Python bindings for the simulator core: graphs, cost ensembles, system
// assembly, integration, rate estimation, and the gain-bound formulas.

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "distopt/gains.hpp"
#include "distopt/harness.hpp"
#include "distopt/network.hpp"
#include "distopt/problems.hpp"
#include "distopt/solver.hpp"
#include "distopt/transforms.hpp"

namespace py = pybind11;
using namespace distopt;

namespace {

Eigen::MatrixXd states_matrix(const Trajectory& traj) {
  if (traj.states.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(traj.states.size()), traj.states.front().size());
  for (std::size_t k = 0; k < traj.states.size(); ++k) m.row(static_cast<Eigen::Index>(k)) = traj.states[k];
  return m;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "continuous-time distributed optimization simulator";

  py::enum_<Algorithm>(m, "Algorithm")
      .value("DIST_GD", Algorithm::DistGD)
      .value("DIST_HB_STATE", Algorithm::DistHBState)
      .value("DIST_HB_OUTPUT", Algorithm::DistHBOutput)
      .value("CENTRAL_GD", Algorithm::CentralGD)
      .value("CENTRAL_HB", Algorithm::CentralHB);

  py::enum_<CouplingMode>(m, "CouplingMode")
      .value("A", CouplingMode::A)
      .value("B", CouplingMode::B);

  py::class_<Graph>(m, "Graph")
      .def_static("erdos_renyi", &Graph::erdos_renyi, py::arg("n_nodes"), py::arg("edge_prob"),
                  py::arg("seed"))
      .def_static(
          "from_edges",
          [](int n, const std::vector<std::pair<int, int>>& edges) {
            return Graph::from_edges(n, edges);
          },
          py::arg("n_nodes"), py::arg("edges"))
      .def_static("load", &Graph::load, py::arg("path"))
      .def("save", &Graph::save, py::arg("path"))
      .def_property_readonly("n_nodes", &Graph::n_nodes)
      .def_property_readonly("edges", &Graph::edges)
      .def("laplacian", &Graph::laplacian)
      .def("r_basis", &Graph::r_basis)
      .def("spectrum", &Graph::spectrum)
      .def("reduced_laplacian", &Graph::reduced_laplacian)
      .def("lambda2", &Graph::lambda2)
      .def("lambda_max", &Graph::lambda_max)
      .def("__eq__", [](const Graph& a, const Graph& b) { return a == b; });

  py::class_<QuadraticLocal>(m, "QuadraticLocal")
      .def(py::init([](Eigen::MatrixXd a, Eigen::VectorXd b) {
             return QuadraticLocal{std::move(a), std::move(b)};
           }),
           py::arg("A"), py::arg("b"))
      .def_readonly("A", &QuadraticLocal::A)
      .def_readonly("b", &QuadraticLocal::b)
      .def("value", &QuadraticLocal::value)
      .def("gradient", &QuadraticLocal::gradient);

  py::class_<CostEnsemble>(m, "CostEnsemble")
      .def_static(
          "quadratic",
          [](std::vector<QuadraticLocal> locals) { return CostEnsemble::quadratic(std::move(locals)); },
          py::arg("locals"))
      .def_static("load", &CostEnsemble::load, py::arg("path"))
      .def("save", &CostEnsemble::save, py::arg("path"))
      .def_property_readonly("dim", &CostEnsemble::dim)
      .def_property_readonly("size", &CostEnsemble::size)
      .def_property_readonly("alpha", &CostEnsemble::alpha)
      .def_property_readonly("lipschitz", &CostEnsemble::lipschitz)
      .def("value", &CostEnsemble::value, py::arg("w"))
      .def("gradient", &CostEnsemble::gradient, py::arg("w"))
      .def("local_value", &CostEnsemble::local_value, py::arg("i"), py::arg("w"))
      .def("local_gradient", &CostEnsemble::local_gradient, py::arg("i"), py::arg("w"))
      .def_property_readonly("is_quadratic", &CostEnsemble::is_quadratic)
      .def_property_readonly("quadratics", &CostEnsemble::quadratics);

  m.def("random_quadratic_ensemble", &random_quadratic_ensemble, py::arg("n_agents"),
        py::arg("dim"), py::arg("target_max_eig"), py::arg("target_condition"), py::arg("seed"));
  m.def("minimizer", &minimizer, py::arg("ensemble"));

  py::class_<HeavyBallEquilibrium>(m, "HeavyBallEquilibrium")
      .def_readonly("w_star", &HeavyBallEquilibrium::w_star)
      .def_readonly("z_star", &HeavyBallEquilibrium::z_star);
  m.def("heavy_ball_equilibrium", &heavy_ball_equilibrium, py::arg("ensemble"));

  py::class_<OutputMap>(m, "OutputMap")
      .def_property_readonly("E", &OutputMap::E)
      .def_property_readonly("Z", &OutputMap::Z)
      .def_property_readonly("W", &OutputMap::W)
      .def_property_readonly("K", &OutputMap::K)
      .def_property_readonly("state_dim", &OutputMap::state_dim)
      .def_property_readonly("output_dim", &OutputMap::output_dim)
      .def_property_readonly("sigma_min_E", &OutputMap::sigma_min_E)
      .def_property_readonly("sigma_max_E", &OutputMap::sigma_max_E);
  m.def("split_output_map", &split_output_map, py::arg("E"));

  py::class_<CouplingConfig>(m, "CouplingConfig")
      .def_static("pi", &CouplingConfig::pi, py::arg("mode"), py::arg("k_p"), py::arg("k_i"))
      .def_static("full", &CouplingConfig::full, py::arg("mode"), py::arg("k_p"), py::arg("k_i"),
                  py::arg("kappa"))
      .def_readonly("mode", &CouplingConfig::mode)
      .def_readonly("k_p", &CouplingConfig::k_p)
      .def_readonly("k_i", &CouplingConfig::k_i)
      .def_readonly("kappa", &CouplingConfig::kappa)
      .def("theorem_a_regime", &CouplingConfig::theorem_a_regime);

  py::class_<BetaGains>(m, "BetaGains")
      .def_readonly("beta", &BetaGains::beta)
      .def_readonly("k_p", &BetaGains::k_p)
      .def_readonly("k_i", &BetaGains::k_i)
      .def_readonly("kappa", &BetaGains::kappa)
      .def_readonly("phi_star", &BetaGains::phi_star)
      .def_readonly("small_beta", &BetaGains::small_beta)
      .def("to_coupling", &BetaGains::to_coupling, py::arg("mode"));
  m.def("beta_rule", &beta_rule, py::arg("beta"));

  py::class_<NetworkSystem>(m, "NetworkSystem")
      .def_property_readonly("algorithm", &NetworkSystem::algorithm)
      .def_property_readonly("state_dim", &NetworkSystem::state_dim)
      .def_property_readonly("n_agents", &NetworkSystem::n_agents)
      .def_property_readonly("agent_state_dim", &NetworkSystem::agent_state_dim)
      .def_property_readonly("problem_dim", &NetworkSystem::problem_dim)
      .def_property_readonly("hb_damping", &NetworkSystem::hb_damping)
      .def("vector_field", &NetworkSystem::vector_field, py::arg("state"))
      .def("extract_w", &NetworkSystem::extract_w, py::arg("state"))
      .def("xi_average", &NetworkSystem::xi_average, py::arg("state"))
      .def("graph", &NetworkSystem::graph, py::return_value_policy::reference_internal)
      .def("ensemble", &NetworkSystem::ensemble, py::return_value_policy::reference_internal)
      .def("output_map", &NetworkSystem::output_map, py::return_value_policy::reference_internal)
      .def("coupling", &NetworkSystem::coupling, py::return_value_policy::reference_internal)
      .def("stiffness_estimate", &NetworkSystem::stiffness_estimate)
      .def("blended_field",
           [](const NetworkSystem& sys, const Eigen::VectorXd& z, const Eigen::VectorXd& w_bar) {
             const BlendedDerivative d = sys.blended_field(z, w_bar);
             return py::make_tuple(d.z_dot, d.w_bar_dot);
           },
           py::arg("z"), py::arg("w_bar"))
      .def("equilibrium_from_blended",
           [](const NetworkSystem& sys, const Eigen::VectorXd& z_star,
              const Eigen::VectorXd& w_bar_star) {
             const FullEquilibrium eq = sys.equilibrium_from_blended(z_star, w_bar_star);
             return py::make_tuple(eq.x_star, eq.xi_tilde_star);
           },
           py::arg("z_star"), py::arg("w_bar_star"));

  m.def("assemble", &assemble, py::arg("algorithm"), py::arg("graph"), py::arg("ensemble"),
        py::arg("coupling"), py::arg("hb_damping_override") = std::nullopt);
  m.def("message_dimension", &message_dimension, py::arg("algorithm"), py::arg("mode"),
        py::arg("problem_dim"));

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("times",
                             [](const Trajectory& t) {
                               return Eigen::Map<const Eigen::VectorXd>(
                                   t.times.data(), static_cast<Eigen::Index>(t.times.size()));
                             })
      .def_property_readonly("states", &states_matrix)
      .def_property_readonly("final_state", &Trajectory::final_state)
      .def_property_readonly("final_time", &Trajectory::final_time);

  m.def(
      "integrate",
      [](const NetworkSystem& system, const Eigen::VectorXd& state0, double step, double t_end,
         int record_every, const std::string& descriptor, std::uint64_t seed) {
        IntegrateOptions opts;
        opts.step = step;
        opts.t_end = t_end;
        opts.record_every = record_every;
        return integrate(system, state0, opts, descriptor, seed);
      },
      py::arg("system"), py::arg("state0"), py::arg("step") = 1e-3, py::arg("t_end") = 50.0,
      py::arg("record_every") = 10, py::arg("descriptor") = "", py::arg("seed") = 0);

  m.def("error_metric", &error_metric, py::arg("trajectory"), py::arg("w_star"), py::arg("system"));

  py::class_<RateEstimate>(m, "RateEstimate")
      .def_readonly("rate", &RateEstimate::rate)
      .def_readonly("intercept", &RateEstimate::intercept)
      .def_readonly("window_start", &RateEstimate::window_start)
      .def_readonly("window_end", &RateEstimate::window_end)
      .def_readonly("r_squared", &RateEstimate::r_squared)
      .def_readonly("trusted", &RateEstimate::trusted);
  m.def("estimate_rate", &estimate_rate, py::arg("times"), py::arg("values"),
        py::arg("window_start"), py::arg("window_end"), py::arg("r_squared_floor") = 0.99);
  m.def("default_rate_window", &default_rate_window, py::arg("times"), py::arg("values"),
        py::arg("floor_value") = 1e-10);

  py::class_<SpectralData>(m, "SpectralData")
      .def(py::init<>())
      .def_static("from_system", &SpectralData::from_system, py::arg("system"))
      .def_readwrite("sig_m_E", &SpectralData::sig_m_E)
      .def_readwrite("sig_M_E", &SpectralData::sig_M_E)
      .def_readwrite("sig_m_LP", &SpectralData::sig_m_LP)
      .def_readwrite("sig_M_LP", &SpectralData::sig_M_LP)
      .def_readwrite("sig_m_LI", &SpectralData::sig_m_LI)
      .def_readwrite("sig_M_LI", &SpectralData::sig_M_LI)
      .def_readwrite("lipschitz", &SpectralData::lipschitz)
      .def_readwrite("n_agents", &SpectralData::n_agents);

  py::class_<LyapunovParams>(m, "LyapunovParams")
      .def(py::init<>())
      .def_static("heuristic", &LyapunovParams::heuristic, py::arg("mu"),
                  py::arg("upsilon_fraction") = 0.5)
      .def_static("heuristic_for", &LyapunovParams::heuristic_for, py::arg("algorithm"),
                  py::arg("alpha"), py::arg("upsilon_fraction") = 0.5)
      .def_readwrite("c1", &LyapunovParams::c1)
      .def_readwrite("c3", &LyapunovParams::c3)
      .def_readwrite("mu", &LyapunovParams::mu)
      .def_readwrite("upsilon", &LyapunovParams::upsilon);

  py::class_<ThetaConstants>(m, "ThetaConstants")
      .def_readonly("theta0", &ThetaConstants::theta0)
      .def_readonly("theta1", &ThetaConstants::theta1)
      .def_readonly("theta2", &ThetaConstants::theta2)
      .def_readonly("theta3", &ThetaConstants::theta3)
      .def_readonly("theta4", &ThetaConstants::theta4)
      .def_readonly("theta5", &ThetaConstants::theta5);
  m.def("theta_constants", &theta_constants, py::arg("spectral"), py::arg("lyapunov"));
  m.def("kp_star", &kp_star, py::arg("kappa"), py::arg("k_i"), py::arg("spectral"),
        py::arg("lyapunov"));
  m.def("phi_star_bound", &phi_star_bound, py::arg("spectral"));

  py::class_<VarthetaConstants>(m, "VarthetaConstants")
      .def_readonly("vartheta1", &VarthetaConstants::vartheta1)
      .def_readonly("vartheta2", &VarthetaConstants::vartheta2)
      .def_readonly("vartheta3", &VarthetaConstants::vartheta3)
      .def_readonly("eta", &VarthetaConstants::eta);
  m.def("vartheta_constants", &vartheta_constants, py::arg("phi_star"), py::arg("spectral"),
        py::arg("lyapunov"));
  m.def("kp_double_star", &kp_double_star, py::arg("phi_star"), py::arg("spectral"),
        py::arg("lyapunov"));
}
