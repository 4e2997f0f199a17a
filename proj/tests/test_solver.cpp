#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "distopt/rng.hpp"
#include "distopt/solver.hpp"

using namespace distopt;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index k = 0; k < n; ++k) v[k] = rng.normal();
  return v;
}

// Scalar exponential decay as a one-agent custom system (no coupling active
// on a single node).
NetworkSystem scalar_decay_system() {
  const Graph g = Graph::erdos_renyi(2, 1.0, 1);
  AgentDynamics dyn;
  dyn.state_dim = 1;
  dyn.drift = [](int, const Eigen::VectorXd& x) { return Eigen::VectorXd(-x); };
  return assemble_custom(g, dyn, Eigen::MatrixXd::Identity(1, 1),
                         CouplingConfig::full(CouplingMode::A, 0.0, 0.0, 0.0), 1.0);
}

// Exact affine flow via the augmented matrix exponential:
// d/dt [s; 1] = [[M, c], [0, 0]] [s; 1].
Eigen::VectorXd affine_flow_oracle(const Eigen::MatrixXd& m, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& s0, double t) {
  const Eigen::Index n = s0.size();
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + 1, n + 1);
  aug.topLeftCorner(n, n) = m;
  aug.topRightCorner(n, 1) = c;
  Eigen::VectorXd v(n + 1);
  v << s0, 1.0;
  const Eigen::MatrixXd expm = (t * aug).exp();
  return (expm * v).head(n);
}

// The stacked fields here are affine; sample the matrix and offset exactly.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> linearize(const NetworkSystem& sys) {
  const int n = sys.state_dim();
  const Eigen::VectorXd c = sys.vector_field(Eigen::VectorXd::Zero(n));
  Eigen::MatrixXd m(n, n);
  for (int k = 0; k < n; ++k)
    m.col(k) = sys.vector_field(Eigen::VectorXd::Unit(n, k)) - c;
  return {m, c};
}

}  // namespace

TEST_CASE("scalar decay reaches 1/e after one unit of time") {
  const NetworkSystem sys = scalar_decay_system();
  Eigen::VectorXd s0(4);
  s0 << 1.0, 1.0, 0.0, 0.0;  // both agents start at 1; integrators at 0
  const Trajectory traj = integrate(sys, s0, {0.01, 1.0, 1, true});
  CHECK(traj.final_time() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(traj.final_state()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-8));
}

TEST_CASE("centralized gradient flow matches its eigendecomposition closed form") {
  const CostEnsemble e = random_quadratic_ensemble(4, 3, 1.0, 8.0, 61);
  const Graph g = Graph::erdos_renyi(4, 1.0, 1);
  const NetworkSystem sys =
      assemble(Algorithm::CentralGD, g, e, CouplingConfig::full(CouplingMode::A, 0, 0, 0));

  // wdot = -(H w + b0) with H = (2/N) sum A_i, b0 = (1/N) sum b_i.
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(3, 3);
  Eigen::VectorXd b0 = Eigen::VectorXd::Zero(3);
  for (const auto& q : e.quadratics()) {
    h += 0.5 * q.A;
    b0 += 0.25 * q.b;
  }
  const Eigen::VectorXd w_star = minimizer(e);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);

  Rng rng(62);
  const Eigen::VectorXd w0 = random_vector(3, rng);
  const double t_end = 2.0;
  const Trajectory traj = integrate(sys, w0, {1e-3, t_end, 10, true});

  const Eigen::VectorXd decay =
      (-t_end * es.eigenvalues().array()).exp().matrix();
  const Eigen::VectorXd closed_form =
      w_star + es.eigenvectors() * decay.asDiagonal() *
                   (es.eigenvectors().transpose() * (w0 - w_star));
  CHECK((traj.final_state() - closed_form).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("two-agent distributed gradient flow matches the matrix exponential") {
  std::vector<QuadraticLocal> locals = {
      {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Constant(1, -6.0)},
      {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::VectorXd::Constant(1, -10.0)}};
  const CostEnsemble e = CostEnsemble::quadratic(std::move(locals));
  const Graph k2 = Graph::erdos_renyi(2, 1.0, 1);
  const NetworkSystem sys =
      assemble(Algorithm::DistGD, k2, e, CouplingConfig::pi(CouplingMode::A, 0.9, 0.4));

  const auto [m, c] = linearize(sys);
  Rng rng(63);
  const Eigen::VectorXd s0 = random_vector(4, rng);
  const double t_end = 3.0;
  const Trajectory traj = integrate(sys, s0, {1e-3, t_end, 10, true});
  const Eigen::VectorXd oracle = affine_flow_oracle(m, c, s0, t_end);
  CHECK((traj.final_state() - oracle).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("global error scales as h^4") {
  const NetworkSystem sys = scalar_decay_system();
  // Mildly oscillatory linear test block keeps the error observable.
  const CostEnsemble e = random_quadratic_ensemble(4, 2, 1.0, 5.0, 67);
  const Graph g = Graph::erdos_renyi(4, 1.0, 2);
  const NetworkSystem hb =
      assemble(Algorithm::CentralHB, g, e, CouplingConfig::full(CouplingMode::A, 0, 0, 0));

  Rng rng(68);
  const Eigen::VectorXd s0 = random_vector(hb.state_dim(), rng);
  auto endpoint = [&](double h) {
    return integrate(hb, s0, {h, 1.0, 1000000, false}).final_state();
  };

  std::vector<double> errors;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const Eigen::VectorXd ref = endpoint(h / 16.0);
    errors.push_back((endpoint(h) - ref).norm());
  }
  for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
    const double ratio = errors[k] / errors[k + 1];
    CHECK(ratio > 16.0 / 4.0);
    CHECK(ratio < 16.0 * 4.0);
  }
}

TEST_CASE("divergence raises an error carrying the first bad time") {
  AgentDynamics dyn;
  dyn.state_dim = 1;
  dyn.drift = [](int, const Eigen::VectorXd& x) { return Eigen::VectorXd(100.0 * x); };
  const Graph g = Graph::erdos_renyi(2, 1.0, 1);
  const NetworkSystem sys = assemble_custom(g, dyn, Eigen::MatrixXd::Identity(1, 1),
                                            CouplingConfig::full(CouplingMode::A, 0, 0, 0), 100.0);
  Eigen::VectorXd s0(4);
  s0 << 1.0, 1.0, 0.0, 0.0;
  try {
    integrate(sys, s0, {1.0, 100.0, 1, false});  // way past the stability limit
    FAIL("expected divergence");
  } catch (const DivergenceError& err) {
    CHECK(err.time() > 0.0);
    CHECK(err.time() <= 100.0);
  }
}

TEST_CASE("integrator-average drift stays at rounding level along trajectories") {
  const CostEnsemble e = random_quadratic_ensemble(5, 2, 1.0, 8.0, 71);
  const Graph g = Graph::erdos_renyi(5, 0.6, 6);
  Rng rng(72);
  for (CouplingMode mode : {CouplingMode::A, CouplingMode::B}) {
    const NetworkSystem sys =
        assemble(Algorithm::DistGD, g, e, CouplingConfig::pi(mode, 1.0, 0.5));
    Eigen::VectorXd s0 = Eigen::VectorXd::Zero(sys.state_dim());
    for (int k = 0; k < 10; ++k) s0[k] = rng.normal();
    const Eigen::VectorXd xi_bar0 = sys.xi_average(s0);
    const Trajectory traj = integrate(sys, s0, {1e-3, 5.0, 100, true});
    for (std::size_t s = 0; s < traj.states.size(); ++s) {
      const double drift = (sys.xi_average(traj.states[s]) - xi_bar0).norm();
      CHECK(drift < 1e-10 * (1.0 + traj.times[s]));
    }
  }
}

TEST_CASE("error metric definition") {
  const CostEnsemble e = random_quadratic_ensemble(4, 2, 1.0, 5.0, 73);
  const Graph g = Graph::erdos_renyi(4, 1.0, 3);
  const NetworkSystem sys =
      assemble(Algorithm::DistGD, g, e, CouplingConfig::pi(CouplingMode::A, 1.0, 0.5));
  const Eigen::VectorXd w_star = minimizer(e);

  Trajectory traj;
  traj.times = {0.0};
  Eigen::VectorXd consensus = Eigen::VectorXd::Zero(sys.state_dim());
  for (int i = 0; i < 4; ++i) consensus.segment(2 * i, 2) = w_star;
  traj.states = {consensus};
  CHECK(error_metric(traj, w_star, sys)[0] == 0.0);

  Eigen::VectorXd off = consensus;
  off[0] += 0.8;  // one agent off by 0.8 in one coordinate
  traj.states = {off};
  CHECK(error_metric(traj, w_star, sys)[0] == doctest::Approx(0.8 / 4.0).epsilon(1e-12));
}

TEST_CASE("rate estimation recovers an exact exponential") {
  std::vector<double> times, values;
  for (int k = 0; k <= 200; ++k) {
    const double t = 0.05 * k;
    times.push_back(t);
    values.push_back(3.0 * std::exp(-2.0 * t));
  }
  const RateEstimate est = estimate_rate(times, values, 0.0, 10.0);
  CHECK(est.rate == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(est.intercept == doctest::Approx(std::log(3.0)).epsilon(1e-9));
  CHECK(est.trusted);

  // Scale invariance: the rate field ignores a global factor.
  std::vector<double> scaled = values;
  for (double& v : scaled) v *= 17.0;
  const RateEstimate est2 = estimate_rate(times, scaled, 0.0, 10.0);
  CHECK(std::abs(est2.rate - est.rate) < 1e-12);

  std::vector<double> with_zero = values;
  with_zero[100] = 0.0;
  CHECK_THROWS_AS(estimate_rate(times, with_zero, 0.0, 10.0), std::invalid_argument);
}

TEST_CASE("noisy series are flagged untrusted") {
  Rng rng(74);
  std::vector<double> times, values;
  for (int k = 0; k <= 100; ++k) {
    times.push_back(0.1 * k);
    values.push_back(std::exp(-0.05 * times.back()) * (1.0 + 0.8 * std::abs(rng.normal())));
  }
  const RateEstimate est = estimate_rate(times, values, 0.0, 10.0);
  CHECK_FALSE(est.trusted);
}

TEST_CASE("default window takes the last half above the floor") {
  std::vector<double> times, values;
  for (int k = 0; k <= 100; ++k) {
    times.push_back(0.1 * k);
    values.push_back(std::exp(-3.0 * times.back()));
  }
  const auto [t0, t1] = default_rate_window(times, values);
  CHECK(t1 <= 10.0 + 1e-12);
  CHECK(values[static_cast<std::size_t>(std::llround(t1 / 0.1))] > 1e-10);
  CHECK(t0 < t1);
  CHECK(t0 >= 0.3 * t1);  // roughly the midpoint of the usable range
}

TEST_CASE("centralized rates reach their analytic floors") {
  const CostEnsemble e = random_quadratic_ensemble(6, 3, 1.0, 10.0, 81);
  const Graph g = Graph::erdos_renyi(6, 0.5, 7);
  const Eigen::VectorXd w_star = minimizer(e);
  Rng rng(82);

  {
    const NetworkSystem sys =
        assemble(Algorithm::CentralGD, g, e, CouplingConfig::full(CouplingMode::A, 0, 0, 0));
    const Trajectory traj = integrate(sys, random_vector(3, rng), {1e-3, 40.0, 10, true});
    const auto errors = error_metric(traj, w_star, sys);
    const auto [t0, t1] = default_rate_window(traj.times, errors);
    const RateEstimate est = estimate_rate(traj.times, errors, t0, t1);
    CHECK(est.rate >= e.alpha() * 0.95);
  }
  {
    const NetworkSystem sys =
        assemble(Algorithm::CentralHB, g, e, CouplingConfig::full(CouplingMode::A, 0, 0, 0));
    const Trajectory traj = integrate(sys, random_vector(6, rng), {1e-3, 40.0, 10, true});
    const auto errors = error_metric(traj, w_star, sys);
    const auto [t0, t1] = default_rate_window(traj.times, errors);
    const RateEstimate est = estimate_rate(traj.times, errors, t0, t1);
    CHECK(est.rate >= 0.9 * std::sqrt(e.alpha()) / 2.0);
  }
}

TEST_CASE("recording cadence and metadata") {
  const NetworkSystem sys = scalar_decay_system();
  Eigen::VectorXd s0(4);
  s0 << 1.0, 0.5, 0.0, 0.0;
  const Trajectory traj = integrate(sys, s0, {0.01, 0.5, 5, true}, "decay", 99);
  CHECK(traj.metadata.descriptor == "decay");
  CHECK(traj.metadata.seed == 99);
  CHECK(traj.metadata.step == 0.01);
  REQUIRE(traj.times.size() >= 3);
  CHECK(traj.times[1] - traj.times[0] == doctest::Approx(0.05).epsilon(1e-12));
  CHECK(traj.times[2] - traj.times[1] == doctest::Approx(0.05).epsilon(1e-12));
}
