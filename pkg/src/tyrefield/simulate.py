"""Time-domain simulation of the coupled lumped/distributed dynamics.

First-order upwind transport (the rolling speed is strictly positive, so
backward differences) with explicit-Euler time stepping and CFL-driven
sub-stepping below the output interval. This is the nonlinear reference for
the spectral analysis: micro-shimmy at walking speeds and steering
manoeuvres at cruising speed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .vehicle import FLEXIBLE, GRAVITY, GridFunction, StateSpaceModel, VehicleConfig
from .quadrature import trapezoid_weights

BLOWUP_LIMIT = 1e9

SCENARIO_KINDS = ("constant_steer", "sine_sweep", "free_response")


class SimulationBlowUp(RuntimeError):
    def __init__(self, t: float, max_z: float):
        self.t = t
        self.max_z = max_z
        super().__init__(f"state blew up at t = {t:.6g} s (max |z| = {max_z:.3e})")


@dataclass(frozen=True)
class Scenario:
    """Steering input and horizon of one simulation run."""

    kind: str
    delta1_amp: float = 0.0  # rad
    delta2_amp: float = 0.0  # rad
    omega: float = 0.0  # rad/s, sine sweep only
    T: float = 1.0  # s
    x0: np.ndarray = field(default_factory=lambda: np.zeros(2))
    z0: np.ndarray | None = None  # (N+1, 2) or None for zeros

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ValueError(f"scenario kind must be one of {SCENARIO_KINDS}, got {self.kind!r}")
        if not self.T > 0:
            raise ValueError(f"duration T must be > 0, got {self.T}")
        if self.kind == "sine_sweep" and not self.omega > 0:
            raise ValueError("sine_sweep requires omega > 0")
        if self.kind == "free_response" and (self.delta1_amp != 0.0 or self.delta2_amp != 0.0):
            raise ValueError("free_response has zero steering input")
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))

    def delta(self, t: float) -> np.ndarray:
        if self.kind == "constant_steer":
            return np.array([self.delta1_amp, self.delta2_amp])
        if self.kind == "sine_sweep":
            s = math.sin(self.omega * t)
            return np.array([self.delta1_amp * s, self.delta2_amp * s])
        return np.zeros(2)


def build_scenario(kind: str, *, delta1_amp: float = 0.0, delta2_amp: float = 0.0,
                   omega: float = 0.0, T: float = 1.0,
                   x0=None, z0=None) -> Scenario:
    """Construct a scenario; the free response defaults to a small lateral kick.

    The micro-shimmy studies start from v_y(0) = 0.01 m/s with everything
    else at rest: any small perturbation excites the instability.
    """
    if kind == "free_response" and x0 is None:
        x0 = np.array([0.01, 0.0])
    if x0 is None:
        x0 = np.zeros(2)
    return Scenario(kind=kind, delta1_amp=delta1_amp, delta2_amp=delta2_amp,
                    omega=omega, T=T, x0=x0, z0=z0)


@dataclass(frozen=True)
class SimGrid:
    """Spatial step, output time step, and optional explicit sub-step count."""

    d_xi: float = 0.02
    dt: float = 1e-4
    substeps: int | None = None

    def __post_init__(self):
        n = 1.0 / self.d_xi
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"d_xi = {self.d_xi} must divide [0, 1] evenly")
        if not self.dt > 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.substeps is not None and self.substeps < 1:
            raise ValueError("substeps must be >= 1")

    @property
    def n_cells(self) -> int:
        return round(1.0 / self.d_xi)


@dataclass
class SimState:
    x: np.ndarray  # (2,)
    z: np.ndarray  # (N+1, 2), node 0 pinned to 0

    def copy(self) -> "SimState":
        return SimState(self.x.copy(), self.z.copy())


@dataclass
class Trajectory:
    """Recorded outputs of a simulation run."""

    t: np.ndarray
    v_y: np.ndarray
    r: np.ndarray
    F_y1: np.ndarray
    F_y2: np.ndarray
    ay_g: np.ndarray
    z_snapshots: dict | None = None


def substeps_for_cfl(cfg: VehicleConfig, grid: SimGrid) -> int:
    """Smallest sub-step count keeping the upwind CFL number at or below one."""
    lam_max = max(cfg.v_x / a.L for a in cfg.axles)
    n = math.ceil(lam_max * grid.dt / grid.d_xi - 1e-12)
    return max(n, 1)


class _Stepper:
    """Per-(model, grid) cache of kernel samples and trapezoid weights.

    The Euler step runs ~1e5 times per second of simulated time, so the
    source terms are evaluated with scalar math on unpacked per-axle
    parameters and the contact integrals with plain dot products.
    """

    def __init__(self, model: StateSpaceModel, N: int):
        self.model = model
        self.N = N
        self.d_xi = 1.0 / N
        xi = np.linspace(0.0, 1.0, N + 1)
        self.w = trapezoid_weights(N + 1, self.d_xi)
        self.K1g = model.K1(xi)  # (N+1, 2) diagonal entries
        self.K3g = model.K3(xi)
        self.K4g = model.K4(xi)
        self.K5g = model.K5(xi)
        self.pbar = model.pbar(xi)
        self.has_damping = bool(np.any(model._s1 > 0.0))
        # weighted kernel columns for fast dot-product quadrature
        self.wK1 = self.w[:, None] * self.K1g
        self.wK3 = self.w[:, None] * self.K3g
        self.wK4 = self.w[:, None] * self.K4g
        self.wK5 = self.w[:, None] * self.K5g
        self.K3_zero = not np.any(self.K3g)
        self.K4_zero = not np.any(self.K4g)
        self.K5_zero = not np.any(self.K5g)
        # unpacked per-axle scalars for the fast source path
        cfg = model.cfg
        self.flexible = cfg.variant == FLEXIBLE
        self.vx = cfg.v_x
        self.l1, self.l2, self.chi3 = cfg.l1, cfg.l2, cfg.chi_3
        self.Lam0, self.Lam1 = float(model.Lam[0]), float(model.Lam[1])
        self.G1m = model.G1
        self.K2_0, self.K2_1 = float(model.K2[0]), float(model.K2[1])
        self.K6_0, self.K6_1 = float(model.K6[0]), float(model.K6[1])
        ax = []
        for i, a in enumerate(cfg.axles):
            law = a.friction
            ax.append(dict(
                const_mu=law.constant_mu, mu_d=law.mu_d, dmu=law.mu_s - law.mu_d,
                inv_vs2=1.0 / law.v_s**2, s3=law.sigma_3, eps=law.eps,
                c1s1=cfg.chi_1 * a.sigma_1, s0=a.sigma_0, s1=a.sigma_1,
                s2=a.sigma_2, Fz=a.F_z,
                phi=(a.phi if self.flexible else 0.0),
            ))
        self.ax = ax

    def _sources(self, v0: float, v1: float):
        """(sig, h1, h2) per axle as plain floats."""
        out = []
        for p, v in zip(self.ax, (v0, v1)):
            abs_e = math.sqrt(v * v + p["eps"])
            if p["const_mu"] is not None:
                mu = p["const_mu"]
            else:
                mu = p["mu_d"] + p["dmu"] * math.exp(-v * v * p["inv_vs2"]) + p["s3"] * v
                if mu <= 0.0:
                    from .friction import FrictionRangeError
                    raise FrictionRangeError(
                        f"friction coefficient {mu:.6g} <= 0 at v = {v:.6g}"
                    )
            g = p["c1s1"] * abs_e + mu
            if self.flexible:
                out.append((-p["s0"] * abs_e / mu, 0.0, 2.0 * p["phi"] * v))
            else:
                out.append((
                    -p["s0"] * abs_e / g,
                    2.0 * p["Fz"] * (p["s1"] * mu / g + p["s2"]) * v,
                    2.0 * mu / g * v,
                ))
        return out

    def _slip(self, x, delta):
        v0 = x[0] + self.l1 * x[1] - self.vx * delta[0]
        v1 = x[0] - self.l2 * x[1] - self.vx * self.chi3 * delta[1]
        return v0, v1

    def rhs(self, x, z, delta):
        """Right-hand sides: (xdot, zdot, dz_total, v, F_y).

        ``dz_total`` is the semilinear right-hand side of the transport
        equation, i.e. the total time derivative of the bristle field.
        """
        m = self.model
        v0, v1 = self._slip(x, delta)
        (sig0, h10, h20), (sig1, h11, h21) = self._sources(v0, v1)
        z0, z1 = z[:, 0], z[:, 1]
        zN0, zN1 = z[-1, 0], z[-1, 1]
        k1z0 = float(self.wK1[:, 0] @ z0) + self.K2_0 * zN0
        k1z1 = float(self.wK1[:, 1] @ z1) + self.K2_1 * zN1
        k2z0 = 0.0 if self.K3_zero else float(self.wK3[:, 0] @ z0)
        k2z1 = 0.0 if self.K3_zero else float(self.wK3[:, 1] @ z1)
        k3z0 = 0.0 if self.K4_zero else float(self.wK4[:, 0] @ z0)
        k3z1 = 0.0 if self.K4_zero else float(self.wK4[:, 1] @ z1)
        k4z0 = (0.0 if self.K5_zero else float(self.wK5[:, 0] @ z0)) + self.K6_0 * zN0
        k4z1 = (0.0 if self.K5_zero else float(self.wK5[:, 1] @ z1)) + self.K6_1 * zN1

        Fy0 = k1z0 + sig0 * k2z0 + h10
        Fy1 = k1z1 + sig1 * k2z1 + h11
        G1 = self.G1m
        xdot = np.array([
            -self.vx * x[1] + G1[0, 0] * Fy0 + G1[0, 1] * Fy1,
            G1[1, 0] * Fy0 + G1[1, 1] * Fy1,
        ])

        dz_total = np.empty_like(z)
        dz_total[:, 0] = sig0 * z0
        dz_total[:, 1] = sig1 * z1
        dz_total[:, 0] += sig0 * k3z0 + k4z0 + h20
        dz_total[:, 1] += sig1 * k3z1 + k4z1 + h21
        zdot = dz_total.copy()
        zdot[1:, 0] -= (self.Lam0 / self.d_xi) * (z0[1:] - z0[:-1])
        zdot[1:, 1] -= (self.Lam1 / self.d_xi) * (z1[1:] - z1[:-1])
        zdot[0] = 0.0  # leading edge pinned
        return xdot, zdot, dz_total, np.array([v0, v1]), np.array([Fy0, Fy1])

    def forces(self, z, dz_total, v):
        """Force integral with the damping and viscous contributions."""
        m = self.model
        integrand = m._s0 * z
        if self.has_damping:
            dz_dxi = np.empty_like(z)
            dz_dxi[1:] = (z[1:] - z[:-1]) / self.d_xi
            dz_dxi[0] = (z[1] - z[0]) / self.d_xi
            transport = m.cfg.chi_2 * m.cfg.v_x / m._L * dz_dxi
            integrand = integrand + m._s1 * (dz_total - transport)
        integrand = integrand + 2.0 * m._s2 * v
        return m._Fz * np.einsum("j,jc,jc->c", self.w, self.pbar, integrand)

    def euler_step(self, x, z, delta, dt):
        xdot, zdot, _, _, _ = self.rhs(x, z, delta)
        return x + dt * xdot, z + dt * zdot


def _stepper(model: StateSpaceModel, N: int) -> _Stepper:
    cache = getattr(model, "_stepper_cache", None)
    if cache is None:
        cache = {}
        model._stepper_cache = cache
    if N not in cache:
        cache[N] = _Stepper(model, N)
    return cache[N]


def step(model: StateSpaceModel, state: SimState, delta, dt_sub: float) -> SimState:
    """One explicit-Euler step of length ``dt_sub``; node 0 held at zero."""
    st = _stepper(model, state.z.shape[0] - 1)
    x, z = st.euler_step(state.x, state.z, np.asarray(delta, dtype=float), dt_sub)
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
        raise SimulationBlowUp(float("nan"), float(np.nanmax(np.abs(z))))
    return SimState(x, z)


def simulate(model: StateSpaceModel, scenario: Scenario, grid: SimGrid,
             snapshot_every: int | None = None) -> Trajectory:
    """Run a scenario, recording outputs every ``grid.dt``.

    Forces are evaluated through the force integral, feeding the total
    bristle time derivative (the evaluated PDE right-hand side) into the
    damping term whenever sigma_1 > 0.
    """
    N = grid.n_cells
    nsub = grid.substeps or substeps_for_cfl(model.cfg, grid)
    cfl = max(model.Lam) * (grid.dt / nsub) / grid.d_xi
    if cfl > 1.0 + 1e-12:
        raise ValueError(f"CFL number {cfl:.3f} > 1 with {nsub} substeps")
    dt_sub = grid.dt / nsub
    st = _stepper(model, N)

    n_out = int(math.floor(scenario.T / grid.dt + 1e-9)) + 1
    t = np.arange(n_out) * grid.dt
    out = np.empty((n_out, 5))
    snaps = {} if snapshot_every else None

    x = scenario.x0.astype(float).copy()
    if scenario.z0 is not None:
        z = np.asarray(scenario.z0, dtype=float).copy()
        if z.shape != (N + 1, 2):
            raise ValueError(f"initial bristle grid must have shape ({N + 1}, 2)")
    else:
        z = np.zeros((N + 1, 2))

    mg = model.cfg.m * GRAVITY
    for k in range(n_out):
        tk = t[k]
        _, _, dz_total, v, _ = st.rhs(x, z, scenario.delta(tk))
        F = st.forces(z, dz_total, v)
        out[k] = (x[0], x[1], F[0], F[1], -(F[0] + F[1]) / mg)
        if snaps is not None and k % snapshot_every == 0:
            snaps[float(tk)] = z.copy()
        if k == n_out - 1:
            break
        for j in range(nsub):
            x, z = st.euler_step(x, z, scenario.delta(tk + j * dt_sub), dt_sub)
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(x))) or \
                max(np.max(np.abs(z)), np.max(np.abs(x))) > BLOWUP_LIMIT:
            finite = z[np.isfinite(z)]
            raise SimulationBlowUp(float(tk), float(np.max(np.abs(finite))) if finite.size else float("inf"))

    return Trajectory(t=t, v_y=out[:, 0], r=out[:, 1], F_y1=out[:, 2], F_y2=out[:, 3],
                      ay_g=out[:, 4], z_snapshots=snaps)


def discrete_equilibrium(model: StateSpaceModel, grid: SimGrid, delta,
                         x0=None, z0=None) -> SimState:
    """Fixed point of the spatially discretised right-hand side.

    Newton-refines (via scipy's hybrid solver) the stationary state of the
    discrete map, removing the spatial truncation error that the analytic
    equilibrium would leave behind in step-invariance tests.
    """
    N = grid.n_cells
    st = _stepper(model, N)
    delta = np.asarray(delta, dtype=float)

    def residual(u):
        x = u[:2]
        z = np.zeros((N + 1, 2))
        z[1:] = u[2:].reshape(N, 2)
        xdot, zdot, _, _, _ = st.rhs(x, z, delta)
        return np.concatenate([xdot, zdot[1:].ravel()])

    if x0 is None:
        x0 = np.zeros(2)
    if z0 is None:
        z0 = np.zeros((N + 1, 2))
    u0 = np.concatenate([np.asarray(x0, float), np.asarray(z0, float)[1:].ravel()])
    sol = optimize.root(residual, u0, method="hybr", tol=1e-13)
    if not sol.success and np.linalg.norm(residual(sol.x)) > 1e-9:
        raise RuntimeError(f"discrete equilibrium not found: {sol.message}")
    x = sol.x[:2]
    z = np.zeros((N + 1, 2))
    z[1:] = sol.x[2:].reshape(N, 2)
    return SimState(x, z)
