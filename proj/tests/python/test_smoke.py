import numpy as np
import pytest

import distopt


def test_graph_spectrum():
    g = distopt.Graph.erdos_renyi(5, 1.0, 1)
    ev = g.spectrum()
    assert abs(ev[0]) < 1e-10
    assert np.allclose(ev[1:], 5.0, atol=1e-10)
    assert g.lambda2() == pytest.approx(5.0)

    same = distopt.Graph.erdos_renyi(12, 0.2, 42)
    again = distopt.Graph.erdos_renyi(12, 0.2, 42)
    assert same == again


def test_ensemble_and_minimizer():
    e = distopt.random_quadratic_ensemble(6, 3, 1.0, 10.0, 7)
    assert e.size == 6
    assert e.dim == 3
    assert e.alpha == pytest.approx(0.2, rel=0.05)
    w_star = distopt.minimizer(e)
    assert np.linalg.norm(e.gradient(w_star)) < 1e-10

    hb = distopt.heavy_ball_equilibrium(e)
    assert np.linalg.norm(sum(hb.z_star)) / 6 < 1e-10


def test_message_dimensions():
    n = 6
    A, B = distopt.CouplingMode.A, distopt.CouplingMode.B
    assert distopt.message_dimension(distopt.Algorithm.DIST_HB_OUTPUT, A, n) == 2 * n
    assert distopt.message_dimension(distopt.Algorithm.DIST_HB_OUTPUT, B, n) == n
    assert distopt.message_dimension(distopt.Algorithm.DIST_HB_STATE, A, n) == 4 * n
    with pytest.raises(ValueError):
        distopt.message_dimension(distopt.Algorithm.CENTRAL_GD, A, n)


def test_integration_converges_and_is_deterministic():
    g = distopt.Graph.erdos_renyi(5, 0.8, 3)
    e = distopt.random_quadratic_ensemble(5, 2, 1.0, 3.0, 4)
    coupling = distopt.beta_rule(4.0).to_coupling(distopt.CouplingMode.A)
    sys = distopt.assemble(distopt.Algorithm.DIST_GD, g, e, coupling)

    rng = np.random.default_rng(5)
    state0 = np.zeros(sys.state_dim)
    state0[: 5 * 2] = rng.standard_normal(10)

    traj = distopt.integrate(sys, state0, step=1e-3, t_end=30.0, record_every=10)
    w_star = distopt.minimizer(e)
    errors = distopt.error_metric(traj, w_star, sys)
    assert errors[-1] < 1e-4
    assert errors[-1] < errors[0]

    t0, t1 = distopt.default_rate_window(list(traj.times), list(errors))
    est = distopt.estimate_rate(list(traj.times), list(errors), t0, t1)
    assert est.rate > 0.1

    again = distopt.integrate(sys, state0, step=1e-3, t_end=30.0, record_every=10)
    assert np.array_equal(traj.states, again.states)


def test_gain_formulas():
    sd = distopt.SpectralData()
    sd.sig_m_E = sd.sig_M_E = 1.0
    sd.sig_m_LP = sd.sig_M_LP = 2.0
    sd.sig_m_LI = sd.sig_M_LI = 2.0
    sd.lipschitz = 1.0
    sd.n_agents = 2
    lp = distopt.LyapunovParams.heuristic(1.0, 0.1)

    thetas = distopt.theta_constants(sd, lp)
    assert thetas.theta1 == pytest.approx(np.sqrt(2.0))
    assert distopt.phi_star_bound(sd) == pytest.approx(1.0)
    assert distopt.kp_star(1.0, 1.0, sd, lp) > 0
    assert distopt.kp_double_star(0.5, sd, lp) > 0

    gains = distopt.beta_rule(4.0)
    assert gains.k_p == pytest.approx(8.0)
    assert gains.phi_star == pytest.approx(0.5)
