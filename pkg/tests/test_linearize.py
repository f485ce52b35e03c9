import numpy as np
import pytest

import tyrefield as tf
from tyrefield.linearize import fd_source_gradients

from conftest import table2_vehicle


class TestEquilibrium:
    def test_zero_input_zero_equilibrium(self, rigid_model):
        eq = tf.find_equilibrium(rigid_model, np.zeros(2))
        np.testing.assert_allclose(eq.x_star, 0.0, atol=1e-12)
        np.testing.assert_allclose(eq.v_star, 0.0, atol=1e-12)
        xs = np.linspace(0, 1, 9)
        assert np.all(eq.z_values(xs) == 0.0)
        assert eq.residual <= 1e-10

    def test_residual_contract(self, rigid_model):
        eq = tf.find_equilibrium(rigid_model, [np.deg2rad(2.0), 0.0])
        assert eq.residual <= 1e-10
        # both balance equations hold: recompute them from the fields
        F = eq.F_star
        cfg = rigid_model.cfg
        assert abs(eq.x_star[1] + (F[0] + F[1]) / (cfg.m * cfg.v_x)) <= 1e-10
        assert abs(cfg.l1 * F[0] - cfg.l2 * F[1]) <= 1e-9

    def test_zero_slip_iff_zero_profile(self, rigid_model):
        eq = tf.find_equilibrium(rigid_model, [np.deg2rad(2.0), 0.0])
        assert np.all(np.abs(eq.v_star) > 0)
        assert np.all(np.abs(eq.z_values(np.array([1.0]))) > 0)
        assert np.all(eq.z_values(np.array([0.0])) == 0.0)  # leading edge

    def test_degenerate_family_not_a_solution(self, rigid_model):
        """Choosing (v_y*, r*=0) with delta1 = v_y*/v_x zeroes the front slip
        but not the moment balance; the solver must return a root of both
        equations instead."""
        delta1 = np.deg2rad(2.0)
        x_degenerate = np.array([20.0 * delta1, 0.0])
        v = rigid_model.slip(x_degenerate, [delta1, 0.0])
        assert abs(v[0]) < 1e-12  # front slip vanishes on the degenerate guess
        F = rigid_model.steady_axle_forces(v)
        assert abs(1.0 * F[0] - 1.6 * F[1]) > 1.0  # moment balance violated
        eq = tf.find_equilibrium(rigid_model, [delta1, 0.0])
        assert eq.residual <= 1e-10
        assert np.linalg.norm(eq.x_star - x_degenerate) > 1e-3

    def test_matches_long_simulation(self, rigid_model):
        # d_xi = 0.01 keeps the spatial truncation bias below the 1% gate
        eq = tf.find_equilibrium(rigid_model, [np.deg2rad(2.0), 0.0])
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=2.0)
        traj = tf.simulate(rigid_model, sc, tf.SimGrid(d_xi=0.01))
        assert traj.v_y[-1] == pytest.approx(eq.x_star[0], rel=1e-2)
        assert traj.r[-1] == pytest.approx(eq.x_star[1], rel=1e-2)

    def test_stribeck_law_equilibrium(self):
        law = tf.FrictionLaw(eps=0.0)  # Stribeck with eps = 0
        model = tf.assemble_model(table2_vehicle(tf.RIGID, law=law))
        eq = tf.find_equilibrium(model, [np.deg2rad(1.0), 0.0])
        assert eq.residual <= 1e-10


class TestLinearize:
    def test_flexible_zero_equilibrium(self):
        model = tf.assemble_model(table2_vehicle(tf.FLEXIBLE, eps=0.0))
        eq = tf.find_equilibrium(model, np.zeros(2))
        lin = tf.linearize(model, eq)
        phi = np.array([a.phi for a in model.cfg.axles])
        np.testing.assert_allclose(lin.H2_const, 2.0 * phi, rtol=1e-14)
        np.testing.assert_allclose(lin.H2_exp, 0.0, atol=1e-16)
        np.testing.assert_allclose(lin.H1, 0.0, atol=1e-16)
        # A2t constant in xi
        a2t = lin.A2t(np.array([0.1, 0.9]))
        np.testing.assert_allclose(a2t[0], a2t[1], rtol=1e-14)

    def test_rigid_zero_equilibrium_unit_mu(self):
        law = tf.FrictionLaw(constant_mu=1.0, eps=0.0)
        model = tf.assemble_model(table2_vehicle(tf.RIGID, law=law))
        eq = tf.find_equilibrium(model, np.zeros(2))
        lin = tf.linearize(model, eq)
        np.testing.assert_allclose(lin.H1, 0.0, atol=1e-16)
        np.testing.assert_allclose(lin.H2(np.array([0.3]))[0], [2.0, 2.0], rtol=1e-14)
        np.testing.assert_allclose(lin.A1t, model.A1 + model.G1 @ (0.0 * model.A2), rtol=1e-14)

    def test_gradients_match_fd_at_nonzero_equilibrium(self):
        law = tf.FrictionLaw(eps=1e-6)
        model = tf.assemble_model(table2_vehicle(tf.RIGID, sigma_1=0.1, sigma_2=0.02,
                                                 chi_1=1, law=law))
        v = np.array([3.0, 3.0])
        fd_sig, fd_h1, fd_h2 = fd_source_gradients(model, v)
        np.testing.assert_allclose(model.dSigma(v), fd_sig, rtol=1e-6)
        np.testing.assert_allclose(model.dh1(v), fd_h1, rtol=1e-6)
        np.testing.assert_allclose(model.dh2(v), fd_h2, rtol=1e-6)

    def test_h_matrices_structure(self, rigid_model):
        eq = tf.find_equilibrium(rigid_model, [np.deg2rad(2.0), 0.0])
        lin = tf.linearize(rigid_model, eq)
        # B1t = diag(H1) G2 and A1t = A1 + G1 diag(H1) A2
        np.testing.assert_allclose(lin.B1t, lin.H1[:, None] * rigid_model.G2, rtol=1e-14)
        np.testing.assert_allclose(
            lin.A1t, rigid_model.A1 + rigid_model.G1 @ (lin.H1[:, None] * rigid_model.A2),
            rtol=1e-14)
        # H2(xi) follows the stationary profile shape
        xs = np.array([0.0, 0.5, 1.0])
        H2 = lin.H2(xs)
        zs = eq.z_values(xs)
        expected = rigid_model.dh2(eq.v_star) + rigid_model.dSigma(eq.v_star) * zs
        np.testing.assert_allclose(H2, expected, rtol=1e-12)

    def test_linear_response_matches_nonlinear_small_amplitude(self):
        """Nonlinear simulation at 0.01 deg matches the linearised response
        to 1% relative L2 over 2 s (both integrated the same way)."""
        from tyrefield.spectral import simulate_linear
        model = tf.assemble_model(table2_vehicle(tf.RIGID, v_x=20.0))
        eq = tf.find_equilibrium(model, np.zeros(2))
        lin = tf.linearize(model, eq)
        amp = np.deg2rad(0.01)
        omega = 2.0
        T, dt, N = 2.0, 1e-4, 50
        sc = tf.build_scenario("sine_sweep", delta1_amp=amp, omega=omega, T=T)
        traj = tf.simulate(model, sc, tf.SimGrid(dt=dt))
        t, xs, Fs = simulate_linear(lin, lambda tt: np.array([amp * np.sin(omega * tt), 0.0]),
                                    T=T, dt=dt, N=N, substeps=2)
        for nonlin, lin_resp in ((traj.v_y, xs[:, 0]), (traj.r, xs[:, 1]),
                                 (traj.F_y1, Fs[:, 0]), (traj.F_y2, Fs[:, 1])):
            err = np.linalg.norm(nonlin - lin_resp) / np.linalg.norm(lin_resp)
            assert err < 1e-2
