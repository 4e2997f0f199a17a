#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "distopt/network.hpp"
#include "distopt/problems.hpp"
#include "distopt/rng.hpp"
#include "distopt/transforms.hpp"

using namespace distopt;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.normal();
  return v;
}

double ts_max_abs_diff(const TransformedState& a, const TransformedState& b) {
  double worst = 0.0;
  auto upd = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    if (x.size() > 0) worst = std::max(worst, (x - y).cwiseAbs().maxCoeff());
  };
  upd(a.z, b.z);
  upd(a.w_bar, b.w_bar);
  upd(a.w_tilde, b.w_tilde);
  upd(a.xi_bar, b.xi_bar);
  upd(a.xi_tilde, b.xi_tilde);
  return worst;
}

}  // namespace

TEST_CASE("identity output map has no kernel and keeps W = I") {
  const OutputMap om = split_output_map(Eigen::MatrixXd::Identity(3, 3));
  CHECK(om.kernel_dim() == 0);
  CHECK(om.W() == Eigen::MatrixXd::Identity(3, 3));
  CHECK(om.K() == Eigen::MatrixXd::Identity(3, 3));
}

TEST_CASE("the [I 0] output map keeps the natural bases") {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(2, 4);
  e.leftCols(2) = Eigen::MatrixXd::Identity(2, 2);
  const OutputMap om = split_output_map(e);
  Eigen::MatrixXd w_expected = Eigen::MatrixXd::Zero(4, 2);
  w_expected.topRows(2) = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd z_expected = Eigen::MatrixXd::Zero(4, 2);
  z_expected.bottomRows(2) = Eigen::MatrixXd::Identity(2, 2);
  CHECK((om.W() - w_expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((om.Z() - z_expected).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("random full-rank output maps split cleanly") {
  Rng rng(6);
  Eigen::MatrixXd e(2, 4);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 4; ++c) e(r, c) = rng.normal();
  const OutputMap om = split_output_map(e);

  CHECK((e * om.Z()).cwiseAbs().maxCoeff() < 1e-12);
  Eigen::MatrixXd basis(4, 4);
  basis << om.Z(), om.W();
  CHECK((basis.transpose() * basis - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((e * om.W()).jacobiSvd().singularValues().minCoeff() > 1e-10);

  const Eigen::VectorXd k_eigs =
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(om.K()).eigenvalues();
  CHECK(k_eigs.minCoeff() > 0.0);
  CHECK((om.K() - om.K().transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rank-deficient maps are rejected with the rank found") {
  Eigen::MatrixXd e(2, 3);
  e << 1.0, 2.0, 3.0, 2.0, 4.0, 6.0;
  try {
    split_output_map(e);
    FAIL("expected a rank failure");
  } catch (const std::invalid_argument& err) {
    CHECK(std::string(err.what()).find("rank 1") != std::string::npos);
  }
}

TEST_CASE("transform round-trip is the identity") {
  Rng rng(19);
  const Graph g = Graph::erdos_renyi(5, 0.6, 2);
  Eigen::MatrixXd e(2, 3);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) e(r, c) = rng.normal();
  const OutputMap om = split_output_map(e);

  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::VectorXd x = random_vector(5 * 3, rng);
    const Eigen::VectorXd xi = random_vector(5 * 2, rng);
    const TransformedState ts = to_transformed(x, xi, om, g);
    const auto [x2, xi2] = from_transformed(ts, om, g);
    CHECK((x - x2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((xi - xi2).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("consensus states have zero disagreement") {
  Rng rng(20);
  const Graph g = Graph::erdos_renyi(6, 0.5, 9);
  Eigen::MatrixXd e(1, 2);
  e << 1.0, 0.5;
  const OutputMap om = split_output_map(e);

  const Eigen::VectorXd x0 = random_vector(2, rng);
  Eigen::VectorXd x(6 * 2);
  for (int i = 0; i < 6; ++i) x.segment(2 * i, 2) = x0;
  Eigen::VectorXd xi = random_vector(6 * 1, rng);
  xi[5] = -xi.head(5).sum();  // sum xi_i = 0

  const TransformedState ts = to_transformed(x, xi, om, g);
  CHECK(ts.w_tilde.cwiseAbs().maxCoeff() < 1e-12);
  CHECK(ts.xi_bar.cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < 6; ++i) {
    CHECK((ts.z.segment(i, 1) - om.Z().transpose() * x0).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK((ts.w_bar - om.W().transpose() * x0).cwiseAbs().maxCoeff() < 1e-12);

  // Conversely, nonzero disagreement means outputs differ somewhere.
  Eigen::VectorXd x_off = x;
  x_off[0] += 1.0;
  const TransformedState ts_off = to_transformed(x_off, xi, om, g);
  CHECK(ts_off.w_tilde.cwiseAbs().maxCoeff() > 1e-3);
}

TEST_CASE("gradient-flow blend equals the centralized gradient field") {
  const Graph g = Graph::erdos_renyi(7, 0.5, 3);
  const CostEnsemble ensemble = random_quadratic_ensemble(7, 4, 1.0, 12.0, 8);
  const NetworkSystem sys =
      assemble(Algorithm::DistGD, g, ensemble, CouplingConfig::pi(CouplingMode::A, 1.0, 0.5));

  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd w_bar = random_vector(4, rng);
    const BlendedDerivative d = sys.blended_field(Eigen::VectorXd(0), w_bar);
    const Eigen::VectorXd expected = -ensemble.gradient(w_bar);
    CHECK((d.w_bar_dot - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("output-coupled heavy-ball blend matches its reduced form") {
  const int n = 3, agents = 5;
  const Graph g = Graph::erdos_renyi(agents, 0.7, 4);
  const CostEnsemble ensemble = random_quadratic_ensemble(agents, n, 1.0, 6.0, 10);
  const NetworkSystem sys = assemble(Algorithm::DistHBOutput, g, ensemble,
                                     CouplingConfig::pi(CouplingMode::A, 1.0, 0.5));
  const double damping = 2.0 * std::sqrt(ensemble.alpha());

  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd z = random_vector(agents * n, rng);
    const Eigen::VectorXd w_bar = random_vector(n, rng);
    const BlendedDerivative d = sys.blended_field(z, w_bar);

    Eigen::VectorXd z_mean = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < agents; ++i) z_mean += z.segment(n * i, n);
    z_mean /= agents;
    CHECK((d.w_bar_dot - z_mean).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < agents; ++i) {
      const Eigen::VectorXd expected =
          -damping * z.segment(n * i, n) - ensemble.local_gradient(i, w_bar);
      CHECK((d.z_dot.segment(n * i, n) - expected).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("identical agents blend to the projected single-agent field") {
  const int agents = 4;
  std::vector<QuadraticLocal> locals(
      agents, {Eigen::MatrixXd::Identity(2, 2) * 1.5, Eigen::VectorXd::Constant(2, -1.0)});
  const CostEnsemble ensemble = CostEnsemble::quadratic(std::move(locals));
  const Graph g = Graph::erdos_renyi(agents, 1.0, 5);
  const NetworkSystem sys = assemble(Algorithm::DistHBOutput, g, ensemble,
                                     CouplingConfig::pi(CouplingMode::A, 1.0, 0.5));

  Rng rng(33);
  const Eigen::VectorXd z_single = random_vector(2, rng);
  Eigen::VectorXd z(agents * 2);
  for (int i = 0; i < agents; ++i) z.segment(2 * i, 2) = z_single;
  const Eigen::VectorXd w_bar = random_vector(2, rng);

  const BlendedDerivative d = sys.blended_field(z, w_bar);
  Eigen::VectorXd x_single(4);
  x_single << w_bar, z_single;
  const Eigen::VectorXd h = sys.agent_dynamics().drift(0, x_single);
  CHECK((d.w_bar_dot - sys.output_map().W().transpose() * h).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < agents; ++i)
    CHECK((d.z_dot.segment(2 * i, 2) - sys.output_map().Z().transpose() * h)
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("full equilibrium of the gradient-flow network is consensus at w*") {
  const Graph g = Graph::erdos_renyi(6, 0.5, 12);
  const CostEnsemble ensemble = random_quadratic_ensemble(6, 3, 1.0, 10.0, 14);
  const Eigen::VectorXd w_star = minimizer(ensemble);

  for (CouplingMode mode : {CouplingMode::A, CouplingMode::B}) {
    const NetworkSystem sys =
        assemble(Algorithm::DistGD, g, ensemble, CouplingConfig::pi(mode, 0.8, 0.4));
    const FullEquilibrium eq = sys.equilibrium_from_blended(Eigen::VectorXd(0), w_star);
    for (int i = 0; i < 6; ++i)
      CHECK((eq.x_star.segment(3 * i, 3) - w_star).cwiseAbs().maxCoeff() < 1e-12);

    Eigen::VectorXd state(sys.state_dim());
    state << eq.x_star, assemble_xi(Eigen::VectorXd::Zero(3), eq.xi_tilde_star, g);
    CHECK(sys.vector_field(state).norm() < 1e-9);
  }
}

TEST_CASE("full equilibrium of the output-coupled heavy-ball network") {
  const Graph g = Graph::erdos_renyi(6, 0.5, 12);
  const CostEnsemble ensemble = random_quadratic_ensemble(6, 3, 1.0, 10.0, 14);
  const HeavyBallEquilibrium hb = heavy_ball_equilibrium(ensemble);
  const NetworkSystem sys = assemble(Algorithm::DistHBOutput, g, ensemble,
                                     CouplingConfig::pi(CouplingMode::A, 0.8, 0.4));

  Eigen::VectorXd z_star(6 * 3);
  for (int i = 0; i < 6; ++i) z_star.segment(3 * i, 3) = hb.z_star[i];
  const FullEquilibrium eq = sys.equilibrium_from_blended(z_star, hb.w_star);
  for (int i = 0; i < 6; ++i) {
    CHECK((eq.x_star.segment(6 * i, 3) - hb.w_star).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((eq.x_star.segment(6 * i + 3, 3) - hb.z_star[i]).cwiseAbs().maxCoeff() < 1e-12);
  }

  Eigen::VectorXd state(sys.state_dim());
  state << eq.x_star, assemble_xi(Eigen::VectorXd::Zero(3), eq.xi_tilde_star, g);
  CHECK(sys.vector_field(state).norm() < 1e-9);
}

TEST_CASE("identical agents with zero-sum integrators need no correction") {
  const int agents = 5;
  std::vector<QuadraticLocal> locals(
      agents, {Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Constant(2, 1.0)});
  const CostEnsemble ensemble = CostEnsemble::quadratic(std::move(locals));
  const Graph g = Graph::erdos_renyi(agents, 0.8, 3);
  const NetworkSystem sys =
      assemble(Algorithm::DistGD, g, ensemble, CouplingConfig::pi(CouplingMode::A, 1.0, 0.5));
  const FullEquilibrium eq = sys.equilibrium_from_blended(Eigen::VectorXd(0), minimizer(ensemble));
  CHECK(eq.xi_tilde_star.norm() < 1e-9);
}

TEST_CASE("transformed field equals the transformed stacked field") {
  Rng rng(77);
  const Graph g = Graph::erdos_renyi(6, 0.5, 23);
  const CostEnsemble ensemble = random_quadratic_ensemble(6, 3, 1.0, 10.0, 24);

  // Named algorithms in both coupling modes, plus a general output map.
  std::vector<NetworkSystem> systems;
  for (CouplingMode mode : {CouplingMode::A, CouplingMode::B}) {
    systems.push_back(assemble(Algorithm::DistGD, g, ensemble,
                               CouplingConfig::full(mode, 1.2, 0.7, 0.9)));
    systems.push_back(assemble(Algorithm::DistHBOutput, g, ensemble,
                               CouplingConfig::full(mode, 1.2, 0.7, 0.9)));
  }
  {
    Eigen::MatrixXd e(2, 3);
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) e(r, c) = rng.normal();
    AgentDynamics dyn;
    dyn.state_dim = 3;
    Eigen::MatrixXd mix(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) mix(r, c) = rng.normal();
    dyn.drift = [mix](int agent, const Eigen::VectorXd& x) -> Eigen::VectorXd {
      return -static_cast<double>(agent + 1) * (mix * x) + Eigen::VectorXd::Constant(3, 0.3);
    };
    for (CouplingMode mode : {CouplingMode::A, CouplingMode::B})
      systems.push_back(assemble_custom(g, dyn, e, CouplingConfig::full(mode, 1.2, 0.7, 0.9),
                                        6.0 * mix.norm()));
  }

  for (const auto& sys : systems) {
    for (int trial = 0; trial < 50; ++trial) {
      const Eigen::VectorXd state = random_vector(sys.state_dim(), rng);
      const TransformedState ts = sys.to_transformed_state(state);
      const TransformedState direct = sys.transformed_field(ts);
      const TransformedState via_stacked = sys.to_transformed_state(sys.vector_field(state));
      CHECK(ts_max_abs_diff(direct, via_stacked) < 1e-10);
    }
  }
}

TEST_CASE("zero disagreement silences the coupling terms") {
  Rng rng(88);
  const Graph g = Graph::erdos_renyi(5, 0.6, 31);
  const CostEnsemble ensemble = random_quadratic_ensemble(5, 2, 1.0, 5.0, 32);
  const NetworkSystem sys = assemble(Algorithm::DistHBOutput, g, ensemble,
                                     CouplingConfig::pi(CouplingMode::A, 2.0, 1.0));

  // Output consensus with matched integrators: w_tilde = 0 and xi_tilde = 0.
  TransformedState ts = sys.to_transformed_state(random_vector(sys.state_dim(), rng));
  ts.w_tilde.setZero();
  ts.xi_tilde.setZero();
  const TransformedState d = sys.transformed_field(ts);
  CHECK(d.xi_tilde.cwiseAbs().maxCoeff() < 1e-12);

  // Against a drift-only rebuild: every coupling contribution is gone.
  const NetworkSystem free_sys = assemble(Algorithm::DistHBOutput, g, ensemble,
                                          CouplingConfig::full(CouplingMode::A, 0.0, 0.0, 0.0));
  const TransformedState d_free = free_sys.transformed_field(ts);
  CHECK(ts_max_abs_diff(d, d_free) < 1e-12);
}
