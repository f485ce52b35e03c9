"""Single-track vehicle model with distributed tyre friction.

Assembles the unified semilinear state-space form shared by the rigid- and
flexible-carcass variants: lumped matrices, diagonal transport matrix,
integral-operator kernels, nonlinear source terms, plus derived quantities
(cornering stiffness, relaxation length, understeer index) and the
dissipativity / growth-bound checks.

State layout: x = [v_y, r] (lateral velocity, yaw rate) and a two-channel
bristle field z(xi) on [0, 1] (front = channel 0, rear = channel 1). All
kernels and source matrices are diagonal; they are stored as length-2
arrays of diagonal entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import friction as fr
from .quadrature import gauss_legendre_01, trapezoid_weights

RIGID = "rigid"
FLEXIBLE = "flexible"

GRAVITY = 9.81  # m/s^2, used only to normalise lateral acceleration


@dataclass(frozen=True)
class AxleConfig:
    """Per-axle tyre constants."""

    L: float
    F_z: float
    sigma_0: float
    sigma_1: float = 0.0
    sigma_2: float = 0.0
    w: float | None = None  # carcass lateral stiffness, flexible variant
    pressure: fr.PressureProfile = field(default_factory=fr.PressureProfile)
    friction: fr.FrictionLaw = field(default_factory=fr.FrictionLaw)
    l: float = 0.0  # signed lever arm: +l1 front, -l2 rear

    def __post_init__(self):
        for name in ("L", "F_z", "sigma_0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.sigma_1 < 0 or self.sigma_2 < 0:
            raise ValueError("sigma_1 and sigma_2 must be >= 0")
        if self.w is not None and not self.w > 0:
            raise ValueError(f"carcass stiffness w must be > 0, got {self.w}")

    @property
    def phi(self) -> float:
        """Carcass share of the series bristle/carcass compliance, in (0, 1)."""
        if self.w is None:
            raise ValueError("phi requires the carcass stiffness w")
        return self.w / (self.sigma_0 * self.F_z + self.w)

    @property
    def psi(self) -> float:
        """Bristle share, psi = 1 - phi."""
        if self.w is None:
            raise ValueError("psi requires the carcass stiffness w")
        return self.sigma_0 * self.F_z / (self.sigma_0 * self.F_z + self.w)


@dataclass(frozen=True)
class VehicleConfig:
    """Chassis constants, parametrisation flags, and the two axles."""

    m: float = 1300.0
    I_z: float = 2000.0
    l1: float = 1.0
    l2: float = 1.6
    v_x: float = 20.0
    chi_1: int = 0
    chi_2: int = 0
    chi_3: int = 0
    variant: str = RIGID
    front: AxleConfig = None
    rear: AxleConfig = None

    def __post_init__(self):
        for name in ("m", "I_z", "l1", "l2", "v_x"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("chi_1", "chi_2", "chi_3"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {getattr(self, name)}")
        if self.variant not in (RIGID, FLEXIBLE):
            raise ValueError(f"variant must be {RIGID!r} or {FLEXIBLE!r}, got {self.variant!r}")
        if self.front is None or self.rear is None:
            raise ValueError("both axle configurations are required")
        if self.variant == FLEXIBLE:
            for name, axle in (("front", self.front), ("rear", self.rear)):
                if axle.sigma_1 != 0.0 or axle.sigma_2 != 0.0:
                    raise ValueError(
                        f"flexible carcass requires sigma_1 = sigma_2 = 0 on the {name} axle"
                    )
                if axle.w is None:
                    raise ValueError(f"flexible carcass requires w on the {name} axle")

    @property
    def axles(self) -> tuple[AxleConfig, AxleConfig]:
        return (self.front, self.rear)


@dataclass
class GridFunction:
    """Two-channel grid function on nodes xi_j = j/N, with node 0 pinned to 0."""

    N: int
    values: np.ndarray  # (N+1, 2)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.N + 1, 2):
            raise ValueError(f"values must have shape ({self.N + 1}, 2), got {self.values.shape}")
        if np.any(self.values[0] != 0.0):
            raise ValueError("boundary condition violated: z(0) must be exactly 0")

    @classmethod
    def zeros(cls, N: int) -> "GridFunction":
        return cls(N, np.zeros((N + 1, 2)))

    @property
    def xi(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.N + 1)


class StateSpaceModel:
    """Assembled semilinear ODE-PDE single-track model.

    Immutable after construction; diagonal kernels are exposed as functions
    of xi returning arrays with a trailing axis of length 2.
    """

    def __init__(self, cfg: VehicleConfig):
        self.cfg = cfg
        self.variant = cfg.variant
        vx = cfg.v_x
        self.A1 = np.array([[0.0, -vx], [0.0, 0.0]])
        self.G1 = -np.array([[1.0 / cfg.m, 1.0 / cfg.m],
                             [cfg.l1 / cfg.I_z, -cfg.l2 / cfg.I_z]])
        self.A2 = np.array([[1.0, cfg.l1], [1.0, -cfg.l2]])
        self.G2 = -vx * np.array([[1.0, 0.0], [0.0, float(cfg.chi_3)]])
        self.Lam = np.array([vx / a.L for a in cfg.axles])

        self._s0 = np.array([a.sigma_0 for a in cfg.axles])
        self._s1 = np.array([a.sigma_1 for a in cfg.axles])
        self._s2 = np.array([a.sigma_2 for a in cfg.axles])
        self._Fz = np.array([a.F_z for a in cfg.axles])
        self._L = np.array([a.L for a in cfg.axles])

        pb1 = np.array([fr.eval_pressure(a.pressure, 1.0)[0] for a in cfg.axles])
        if cfg.variant == RIGID:
            self.K2 = -cfg.chi_2 * self._Fz * vx * self._s1 / self._L * pb1
            self.K6 = np.zeros(2)
        else:
            psi = np.array([a.psi for a in cfg.axles])
            self._psi = psi
            self._phi = np.array([a.phi for a in cfg.axles])
            self.K2 = np.zeros(2)
            self.K6 = vx * psi / self._L * pb1

    # -- pressure profiles -------------------------------------------------

    def pbar(self, xi) -> np.ndarray:
        """Normalised pressures of both axles, shape (..., 2)."""
        cols = [fr.eval_pressure(a.pressure, xi)[0] for a in self.cfg.axles]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    def dpbar(self, xi) -> np.ndarray:
        cols = [fr.eval_pressure(a.pressure, xi)[1] for a in self.cfg.axles]
        return np.stack(np.broadcast_arrays(*cols), axis=-1)

    # -- diagonal kernels (length-2 diagonal entries) ----------------------

    def K1(self, xi) -> np.ndarray:
        if self.variant == RIGID:
            return self._Fz * (
                self._s0 * self.pbar(xi)
                + self.cfg.chi_2 * self.cfg.v_x * self._s1 / self._L * self.dpbar(xi)
            )
        return self._Fz * self._s0 * self.pbar(xi)

    def K3(self, xi) -> np.ndarray:
        if self.variant == RIGID:
            return self._Fz * self._s1 * self.pbar(xi)
        return np.zeros(np.shape(np.asarray(xi)) + (2,))

    def K4(self, xi) -> np.ndarray:
        if self.variant == RIGID:
            return np.zeros(np.shape(np.asarray(xi)) + (2,))
        return -self._psi * self.pbar(xi)

    def K5(self, xi) -> np.ndarray:
        if self.variant == RIGID:
            return np.zeros(np.shape(np.asarray(xi)) + (2,))
        return -self.cfg.v_x * self._psi / self._L * self.dpbar(xi)

    # -- per-axle friction quantities --------------------------------------

    def mu(self, v) -> np.ndarray:
        return np.array([fr.eval_friction(a.friction, vi) for a, vi in zip(self.cfg.axles, v)])

    def g(self, v) -> np.ndarray:
        out = []
        for a, vi in zip(self.cfg.axles, v):
            abs_e, _ = fr.abs_sgn_eps(vi, a.friction.eps)
            out.append(self.cfg.chi_1 * a.sigma_1 * abs_e + fr.eval_friction(a.friction, vi))
        return np.array(out)

    # -- nonlinear sources --------------------------------------------------

    def Sigma(self, v) -> np.ndarray:
        """Diagonal entries of the source matrix (non-positive)."""
        out = np.empty(2)
        for i, (a, vi) in enumerate(zip(self.cfg.axles, v)):
            abs_e, _ = fr.abs_sgn_eps(vi, a.friction.eps)
            mu = fr.eval_friction(a.friction, vi)
            den = mu if self.variant == FLEXIBLE else (
                self.cfg.chi_1 * a.sigma_1 * abs_e + mu
            )
            out[i] = -a.sigma_0 * abs_e / den
        return out

    def h1(self, v) -> np.ndarray:
        if self.variant == FLEXIBLE:
            return np.zeros(2)
        mu = self.mu(v)
        g = self.g(v)
        return 2.0 * self._Fz * (self._s1 * mu / g + self._s2) * np.asarray(v)

    def h2(self, v) -> np.ndarray:
        if self.variant == FLEXIBLE:
            return 2.0 * self._phi * np.asarray(v)
        return 2.0 * self.mu(v) / self.g(v) * np.asarray(v)

    # -- gradients of the sources (diagonal entries), used by linearisation --

    def dSigma(self, v) -> np.ndarray:
        out = np.empty(2)
        for i, (a, vi) in enumerate(zip(self.cfg.axles, v)):
            law = a.friction
            abs_e, sgn = fr.abs_sgn_eps(vi, law.eps)
            mu = fr.eval_friction(law, vi)
            dmu = fr.mu_prime(law, vi)
            if self.variant == FLEXIBLE:
                den, dden = mu, dmu
            else:
                den = self.cfg.chi_1 * a.sigma_1 * abs_e + mu
                dden = self.cfg.chi_1 * a.sigma_1 * sgn + dmu
            out[i] = -a.sigma_0 * (sgn * den - abs_e * dden) / den**2
        return out

    def dh1(self, v) -> np.ndarray:
        if self.variant == FLEXIBLE:
            return np.zeros(2)
        out = np.empty(2)
        for i, (a, vi) in enumerate(zip(self.cfg.axles, v)):
            law = a.friction
            _, sgn = fr.abs_sgn_eps(vi, law.eps)
            mu = fr.eval_friction(law, vi)
            dmu = fr.mu_prime(law, vi)
            g = self.cfg.chi_1 * a.sigma_1 * fr.abs_sgn_eps(vi, law.eps)[0] + mu
            dg = self.cfg.chi_1 * a.sigma_1 * sgn + dmu
            ratio = mu / g
            dratio = (dmu * g - mu * dg) / g**2
            out[i] = 2.0 * a.F_z * (a.sigma_1 * (ratio + vi * dratio) + a.sigma_2)
        return out

    def dh2(self, v) -> np.ndarray:
        if self.variant == FLEXIBLE:
            return 2.0 * self._phi.copy()
        out = np.empty(2)
        for i, (a, vi) in enumerate(zip(self.cfg.axles, v)):
            law = a.friction
            abs_e, sgn = fr.abs_sgn_eps(vi, law.eps)
            mu = fr.eval_friction(law, vi)
            dmu = fr.mu_prime(law, vi)
            g = self.cfg.chi_1 * a.sigma_1 * abs_e + mu
            dg = self.cfg.chi_1 * a.sigma_1 * sgn + dmu
            out[i] = 2.0 * ((dmu * vi + mu) * g - mu * vi * dg) / g**2
        return out

    # -- kinematics and steady state ----------------------------------------

    def slip(self, x, delta) -> np.ndarray:
        """Rigid relative (slip) velocities v = A2 x + G2 delta."""
        return self.A2 @ np.asarray(x, dtype=float) + self.G2 @ np.asarray(delta, dtype=float)

    def axle_env(self, i: int) -> fr.BristleEnv:
        """Bristle environment of axle ``i`` with the axle transport velocity."""
        a = self.cfg.axles[i]
        return fr.BristleEnv(
            sigma_0=a.sigma_0, sigma_1=a.sigma_1, sigma_2=a.sigma_2,
            V=self.cfg.v_x / a.L, L=a.L, F_z=a.F_z,
            chi_1=self.cfg.chi_1, chi_2=self.cfg.chi_2,
        )

    def steady_profile(self, v) -> tuple[fr.SteadyBristle, fr.SteadyBristle]:
        """Stationary bristle profiles of both axles (axle factor 2)."""
        return tuple(
            fr.steady_bristle(a.friction, self.axle_env(i), v[i], axle_factor=2.0)
            for i, a in enumerate(self.cfg.axles)
        )

    def steady_axle_forces(self, v) -> np.ndarray:
        """Analytic steady-state axle forces at frozen slip velocities."""
        return np.array([
            fr.steady_force(a.friction, self.axle_env(i), a.pressure, v[i], axle_factor=2.0)
            for i, a in enumerate(self.cfg.axles)
        ])


def assemble_model(cfg: VehicleConfig) -> StateSpaceModel:
    """Build the state-space model for a validated configuration."""
    return StateSpaceModel(cfg)


def slip_kinematics(model: StateSpaceModel, x, delta) -> np.ndarray:
    """Slip velocities from the lumped state and steering input."""
    return model.slip(x, delta)


def eval_sources(model: StateSpaceModel, v):
    """Source terms at slip velocities v: (Sigma as 2x2 diagonal, h1, h2)."""
    return np.diag(model.Sigma(v)), model.h1(v), model.h2(v)


def apply_nonlocal(model: StateSpaceModel, z: GridFunction):
    """The four integral operators applied to a grid function (trapezoid rule).

    Returns (K1z, K2z, K3z, K4z): the operators with kernels (K1, K2),
    K3, K4, and (K5, K6) respectively; each a length-2 vector.
    """
    xi = z.xi
    w = trapezoid_weights(z.N + 1, 1.0 / z.N)
    zv = z.values
    z1 = zv[-1]
    k1 = np.einsum("j,jc,jc->c", w, model.K1(xi), zv) + model.K2 * z1
    k2 = np.einsum("j,jc,jc->c", w, model.K3(xi), zv)
    k3 = np.einsum("j,jc,jc->c", w, model.K4(xi), zv)
    k4 = np.einsum("j,jc,jc->c", w, model.K5(xi), zv) + model.K6 * z1
    return k1, k2, k3, k4


def axle_forces(model: StateSpaceModel, z: GridFunction, v,
                dz_total: GridFunction | None = None) -> np.ndarray:
    """Axle forces from the force integral (trapezoid / one-sided differences).

    ``dz_total`` is the total time derivative of the bristle field, required
    whenever sigma_1 > 0 in the rigid variant (the simulator supplies the
    evaluated PDE right-hand side).
    """
    xi = z.xi
    w = trapezoid_weights(z.N + 1, 1.0 / z.N)
    pb = model.pbar(xi)
    zv = z.values
    integrand = model._s0 * zv
    if np.any(model._s1 > 0.0):
        if dz_total is None:
            raise ValueError("sigma_1 > 0 requires the total-derivative grid dz_total")
        dz_dxi = np.empty_like(zv)
        dz_dxi[1:] = (zv[1:] - zv[:-1]) * z.N  # backward differences
        dz_dxi[0] = (zv[1] - zv[0]) * z.N
        transport = model.cfg.chi_2 * model.cfg.v_x / model._L * dz_dxi
        integrand = integrand + model._s1 * (dz_total.values - transport)
    integrand = integrand + 2.0 * model._s2 * np.asarray(v)
    return model._Fz * np.einsum("j,jc,jc->c", w, pb, integrand)


@dataclass(frozen=True)
class DerivedParams:
    C1: float  # front cornering stiffness, N/rad
    C2: float  # rear cornering stiffness, N/rad
    lambda1: float  # front relaxation length, m
    lambda2: float  # rear relaxation length, m
    chi_us: float  # understeer index C1 l1 / (C2 l2)


def derived_params(cfg: VehicleConfig) -> DerivedParams:
    """Cornering stiffnesses, relaxation lengths, and understeer index."""
    C = [a.L * a.F_z * a.sigma_0 for a in cfg.axles]
    lam = []
    for a in cfg.axles:
        if a.w is None:
            raise ValueError("relaxation lengths require the carcass stiffness w")
        lam.append(a.L * (a.F_z * a.sigma_0 + a.w) / (2.0 * a.w))
    chi_us = C[0] * cfg.l1 / (C[1] * cfg.l2)
    return DerivedParams(C[0], C[1], lam[0], lam[1], chi_us)


def spectral_norm_2x2(M: np.ndarray) -> float:
    """Largest singular value of a real 2x2 matrix, in closed form."""
    M = np.asarray(M, dtype=float)
    f2 = float(np.sum(M * M))
    det = float(M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0])
    disc = max(f2 * f2 - 4.0 * det * det, 0.0)
    return math.sqrt(0.5 * (f2 + math.sqrt(disc)))


def growth_bound(model: StateSpaceModel) -> float:
    """Quasi-dissipativity growth constant of the boundary-coupled transport part.

    omega_0 = max(||A1|| + ||G1 K2||^2 / lambda_min(Lam), ||K6||^2 / lambda_min(Lam))
    with spectral norms.
    """
    lam_min = float(np.min(model.Lam))
    nG1K2 = spectral_norm_2x2(model.G1 @ np.diag(model.K2))
    nK6 = spectral_norm_2x2(np.diag(model.K6))
    return max(spectral_norm_2x2(model.A1) + nG1K2**2 / lam_min, nK6**2 / lam_min)


@dataclass(frozen=True)
class DissipativityReport:
    holds_H1: bool
    holds_H2: bool
    max_psi_pbar: float
    prop1_checked: bool
    prop1_max: float
    note: str


def check_dissipativity(cfg: VehicleConfig, n_random: int = 1000, n_grid: int = 200,
                        seed: int = 0) -> DissipativityReport:
    """Verify the global well-posedness hypotheses for a configuration.

    H.1 requires the boundary/damping kernels to vanish and a positive
    weight P making the source quadratic form non-positive; for the flexible
    carcass the sufficient condition is psi_i * sup(pbar_i) <= 1 with a
    strictly positive pressure. H.2 requires a bounded source matrix. A
    randomized check of the weighted-form inequality (P = diag(pbar)) runs
    whenever the H.1 sufficient condition applies.
    """
    model = assemble_model(cfg)
    xs = np.linspace(0.0, 1.0, 10_000)
    pb = model.pbar(xs)
    pb_max = pb.max(axis=0)
    pb_min = pb.min(axis=0)
    strictly_positive = bool(np.all(pb_min > 0.0))

    if cfg.variant == FLEXIBLE:
        psi = np.array([a.psi for a in cfg.axles])
        max_psi_pbar = float(np.max(psi * pb_max))
        kernels_zero = True  # K2 = K3 = 0 by construction
        if not strictly_positive:
            holds_H1 = False
            note = "H.1 not applicable: pressure profile is not strictly positive on [0, 1]"
        elif max_psi_pbar > 1.0:
            holds_H1 = False
            note = f"psi * sup(pbar) = {max_psi_pbar:.6g} > 1; sufficient condition fails"
        else:
            holds_H1 = True
            note = ""
    else:
        max_psi_pbar = 0.0
        kernels_zero = bool(np.all(model.K2 == 0.0)) and all(
            a.sigma_1 == 0.0 for a in cfg.axles
        )
        if kernels_zero:
            holds_H1 = True
            note = ""
        else:
            holds_H1 = False
            note = "H.1 requires K2 = K3 = 0 (rigid variant with sigma_1 = 0)"

    # H.2: bounded source matrix over the law's validity range
    def law_linear_growth(a: AxleConfig) -> bool:
        return a.friction.constant_mu is None and a.friction.sigma_3 > 0.0

    if cfg.variant == RIGID:
        holds_H2 = all(
            (cfg.chi_1 == 1 and a.sigma_1 > 0.0) or law_linear_growth(a) for a in cfg.axles
        )
    else:
        holds_H2 = all(law_linear_growth(a) for a in cfg.axles)

    # randomized verification of the weighted-form inequality
    prop1_checked = holds_H1
    prop1_max = float("-inf")
    if prop1_checked:
        rng = np.random.default_rng(seed)
        xi = np.linspace(0.0, 1.0, n_grid + 1)
        wq = trapezoid_weights(n_grid + 1, 1.0 / n_grid)
        P = model.pbar(xi)
        K4v = model.K4(xi)
        for _ in range(n_random):
            zeta = rng.standard_normal((n_grid + 1, 2))
            y = rng.uniform(-10.0, 10.0, size=2)
            try:
                sig = model.Sigma(y)
            except fr.FrictionRangeError:
                continue
            k3z = np.einsum("j,jc,jc->c", wq, K4v, zeta)
            form = np.einsum("j,jc,jc->", wq, zeta * P, sig * (zeta + k3z))
            prop1_max = max(prop1_max, form)
    else:
        prop1_max = float("nan")

    return DissipativityReport(
        holds_H1=holds_H1,
        holds_H2=holds_H2,
        max_psi_pbar=max_psi_pbar,
        prop1_checked=prop1_checked,
        prop1_max=prop1_max,
        note=note,
    )
