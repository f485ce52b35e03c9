import numpy as np
import pytest

import tyrefield as tf

from conftest import table2_vehicle


class TestScenario:
    def test_kinds_and_validation(self):
        with pytest.raises(ValueError):
            tf.build_scenario("ramp")
        with pytest.raises(ValueError):
            tf.build_scenario("sine_sweep", delta1_amp=0.01, T=1.0)  # omega missing
        with pytest.raises(ValueError):
            tf.Scenario(kind="constant_steer", T=0.0)
        with pytest.raises(ValueError):
            tf.Scenario(kind="free_response", delta1_amp=0.1, T=1.0)

    def test_free_response_default_kick(self):
        sc = tf.build_scenario("free_response", T=2.0)
        np.testing.assert_allclose(sc.x0, [0.01, 0.0])
        assert np.all(sc.delta(0.3) == 0.0)

    def test_sine_sweep_input(self):
        sc = tf.build_scenario("sine_sweep", delta1_amp=np.deg2rad(2.0), omega=2.0, T=1.0)
        assert sc.delta(0.0)[0] == 0.0
        t = 0.4
        assert sc.delta(t)[0] == pytest.approx(np.deg2rad(2.0) * np.sin(2.0 * t), rel=1e-15)

    def test_fig9_fig10_setups(self):
        fig9 = tf.build_scenario("sine_sweep", delta1_amp=np.deg2rad(2.0), omega=2.0, T=1.0)
        fig10 = tf.build_scenario("sine_sweep", delta1_amp=np.deg2rad(1.0), omega=50.0, T=1.0)
        assert fig9.omega == 2.0 and fig10.omega == 50.0
        assert fig10.delta1_amp == pytest.approx(np.deg2rad(1.0))


class TestGrid:
    def test_d_xi_must_divide(self):
        with pytest.raises(ValueError):
            tf.SimGrid(d_xi=0.03)
        assert tf.SimGrid(d_xi=0.02).n_cells == 50

    @pytest.mark.parametrize("v_x,expected", [(20.0, 2), (60.0, 4), (0.45, 1)])
    def test_substeps_for_cfl(self, v_x, expected):
        cfg = table2_vehicle(tf.RIGID, v_x=v_x)
        assert tf.substeps_for_cfl(cfg, tf.SimGrid()) == expected


class TestStep:
    def test_zero_state_invariant(self, rigid_model):
        st = tf.SimState(np.zeros(2), np.zeros((51, 2)))
        out = tf.step(rigid_model, st, np.zeros(2), 5e-5)
        assert np.all(out.x == 0.0) and np.all(out.z == 0.0)

    def test_single_step_from_rest(self, rigid_model):
        """One Euler step with positive front steering: the front slip
        velocity goes negative, the source pushes z negative on the interior
        nodes, and the leading edge stays pinned."""
        st = tf.SimState(np.zeros(2), np.zeros((51, 2)))
        delta = np.array([np.deg2rad(2.0), 0.0])
        dt = 5e-5
        out = tf.step(rigid_model, st, delta, dt)
        v1 = -20.0 * np.deg2rad(2.0)
        assert v1 < 0
        # h2 = 2 mu v / g = 2 v for the constant law
        np.testing.assert_allclose(out.z[1:, 0], dt * 2.0 * v1, rtol=1e-12)
        assert np.all(out.z[0] == 0.0)
        np.testing.assert_allclose(out.x, 0.0)  # forces are still zero

    def test_discrete_fixed_point_drift(self, rigid_model):
        delta = np.array([np.deg2rad(2.0), 0.0])
        grid = tf.SimGrid()
        eq = tf.find_equilibrium(rigid_model, delta)
        z0 = eq.z_values(np.linspace(0, 1, 51))
        deq = tf.discrete_equilibrium(rigid_model, grid, delta, x0=eq.x_star, z0=z0)
        st = tf.SimState(deq.x.copy(), deq.z.copy())
        out = tf.step(rigid_model, st, delta, 5e-5)
        scale = max(np.max(np.abs(deq.z)), np.max(np.abs(deq.x)))
        assert np.max(np.abs(out.x - deq.x)) <= 1e-10 * scale
        assert np.max(np.abs(out.z - deq.z)) <= 1e-10 * scale

    def test_blow_up_diagnostic(self, rigid_model):
        st = tf.SimState(np.array([1e12, 0.0]), np.full((51, 2), np.nan))
        st.z[0] = 0
        with pytest.raises(tf.SimulationBlowUp):
            tf.step(rigid_model, st, np.zeros(2), 1e-4)


class TestSimulate:
    def test_constant_steer_settles(self, rigid_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=2.0)
        traj = tf.simulate(rigid_model, sc, tf.SimGrid())
        assert len(traj.t) == 20001
        assert np.all(np.diff(traj.t) > 0)
        # by the last half second the outputs are flat to 0.5%
        i = int(1.5 / 1e-4)
        for name in ("v_y", "r", "F_y1", "F_y2"):
            a = getattr(traj, name)
            assert abs(a[-1] - a[i]) <= 5e-3 * abs(a[-1])

    def test_final_state_matches_equilibrium(self, rigid_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=2.0)
        traj = tf.simulate(rigid_model, sc, tf.SimGrid())
        eq = tf.find_equilibrium(rigid_model, [np.deg2rad(2.0), 0.0])
        assert traj.v_y[-1] == pytest.approx(eq.x_star[0], rel=2e-2)
        assert traj.r[-1] == pytest.approx(eq.x_star[1], rel=2e-2)
        # forces against the analytic steady forces at the converged slips
        v_conv = rigid_model.slip([traj.v_y[-1], traj.r[-1]], [np.deg2rad(2.0), 0.0])
        F = rigid_model.steady_axle_forces(v_conv)
        assert traj.F_y1[-1] == pytest.approx(F[0], rel=6e-3)
        assert traj.F_y2[-1] == pytest.approx(F[1], rel=6e-3)

    def test_ay_definition(self, rigid_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(1.0), T=0.05)
        traj = tf.simulate(rigid_model, sc, tf.SimGrid())
        np.testing.assert_allclose(
            traj.ay_g, -(traj.F_y1 + traj.F_y2) / (1300.0 * tf.GRAVITY), rtol=1e-12)

    def test_odd_symmetry(self):
        """Constant friction coefficient: negating input and initial state
        negates the whole trajectory."""
        model = tf.assemble_model(table2_vehicle(tf.RIGID, sigma_1=0.1, v_x=20.0))
        grid = tf.SimGrid(dt=1e-4)
        sp = tf.build_scenario("sine_sweep", delta1_amp=np.deg2rad(1.0), omega=4.0, T=0.3,
                               x0=np.array([0.02, -0.01]))
        sm = tf.build_scenario("sine_sweep", delta1_amp=-np.deg2rad(1.0), omega=4.0, T=0.3,
                               x0=np.array([-0.02, 0.01]))
        tp = tf.simulate(model, sp, grid)
        tm = tf.simulate(model, sm, grid)
        for name in ("v_y", "r", "F_y1", "F_y2", "ay_g"):
            np.testing.assert_allclose(getattr(tp, name), -getattr(tm, name),
                                       rtol=1e-12, atol=1e-14)

    def test_grid_convergence_first_order(self, rigid_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=1.0)
        coarse = tf.simulate(rigid_model, sc, tf.SimGrid(d_xi=0.02))
        fine = tf.simulate(rigid_model, sc, tf.SimGrid(d_xi=0.01))
        for name in ("v_y", "r", "F_y1", "F_y2"):
            a, b = getattr(coarse, name)[-1], getattr(fine, name)[-1]
            assert abs(a - b) <= 2e-2 * abs(b)

    def test_regularisation_insensitivity(self):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=1.0)
        grid = tf.SimGrid()
        t0 = tf.simulate(tf.assemble_model(table2_vehicle(tf.RIGID, eps=0.0)), sc, grid)
        t1 = tf.simulate(tf.assemble_model(table2_vehicle(tf.RIGID, eps=1e-6)), sc, grid)
        for name in ("v_y", "r", "F_y1", "F_y2"):
            a, b = getattr(t0, name), getattr(t1, name)
            scale = np.max(np.abs(b))
            assert np.max(np.abs(a - b)) <= 5e-3 * scale

    def test_flexible_requires_no_damping_paths(self, flexible_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(2.0), T=0.02)
        traj = tf.simulate(flexible_model, sc, tf.SimGrid())
        assert np.all(np.isfinite(traj.F_y1))

    def test_snapshots(self, rigid_model):
        sc = tf.build_scenario("constant_steer", delta1_amp=np.deg2rad(1.0), T=0.01)
        traj = tf.simulate(rigid_model, sc, tf.SimGrid(), snapshot_every=50)
        assert traj.z_snapshots and 0.0 in traj.z_snapshots
        assert traj.z_snapshots[0.0].shape == (51, 2)

    def test_cfl_guard(self, rigid_model):
        with pytest.raises(ValueError):
            tf.simulate(rigid_model, tf.build_scenario("constant_steer", T=0.01),
                        tf.SimGrid(substeps=1))  # CFL 1.11 at v_x = 20


class TestMicroShimmy:
    def test_free_response_decays(self):
        model = tf.assemble_model(table2_vehicle(tf.RIGID, v_x=0.45))
        sc = tf.build_scenario("free_response", T=4.0)
        traj = tf.simulate(model, sc, tf.SimGrid())
        t = traj.t
        early = np.max(np.abs(traj.F_y1[(t >= 0.5) & (t <= 1.5)]))
        late = np.max(np.abs(traj.F_y1[(t >= 3.0) & (t <= 4.0)]))
        assert early > 1.0  # oscillation excited
        assert late < 0.2 * early

    def test_flexible_oscillates_longer(self):
        grid = tf.SimGrid()
        sc = tf.build_scenario("free_response", T=3.0)
        tr = tf.simulate(tf.assemble_model(table2_vehicle(tf.RIGID, v_x=0.45)), sc, grid)
        tfl = tf.simulate(tf.assemble_model(table2_vehicle(tf.FLEXIBLE, v_x=0.45)), sc, grid)
        t = tr.t
        win = (t >= 1.0) & (t <= 2.0)
        assert np.max(np.abs(tfl.F_y1[win])) > np.max(np.abs(tr.F_y1[win]))
