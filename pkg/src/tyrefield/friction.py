"""Scalar distributed-friction primitives.

Friction laws with Stribeck and viscous terms, normalised contact pressure
profiles, stationary bristle-deflection profiles, and the steady-state
frictional force (closed forms for constant and exponential pressure,
Gauss-Legendre quadrature for everything else).

Conventions: the bristle PDE lives on the unit domain, so the transport
velocity ``V`` carries units of 1/s (rolling speed divided by contact
length). ``axle_factor=2`` switches every formula to the axle convention
where the distributed state is the sum over both tyres of an axle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_legendre_01

PRESSURE_KINDS = ("constant", "exponential", "parabolic")


class FrictionRangeError(ValueError):
    """Friction coefficient evaluated to a non-positive value.

    The viscous term can dominate the Coulomb level outside the operating
    envelope; the model is not valid there, so we refuse to continue.
    """


class QuadratureError(RuntimeError):
    """Force quadrature failed its internal convergence check."""

    def __init__(self, achieved: float, required: float):
        self.achieved = achieved
        self.required = required
        super().__init__(
            f"force quadrature converged to {achieved:.3e} (required {required:.3e})"
        )


@dataclass(frozen=True)
class FrictionLaw:
    """Velocity-dependent friction coefficient.

    mu(v) = mu_d + (mu_s - mu_d) * exp(-(v/v_s)^2) + sigma_3 * v, or a
    constant when ``constant_mu`` is set. ``eps`` regularises the absolute
    value used throughout the bristle dynamics.
    """

    mu_d: float = 0.8
    mu_s: float = 1.2
    v_s: float = 0.6
    sigma_3: float = 0.0018
    eps: float = 0.0
    constant_mu: float | None = None

    def __post_init__(self):
        if self.constant_mu is None:
            if not self.mu_d > 0:
                raise ValueError(f"mu_d must be > 0, got {self.mu_d}")
            if self.mu_s < self.mu_d:
                raise ValueError(f"mu_s must be >= mu_d, got {self.mu_s} < {self.mu_d}")
            if not self.v_s > 0:
                raise ValueError(f"v_s must be > 0, got {self.v_s}")
            if self.sigma_3 < 0:
                raise ValueError(f"sigma_3 must be >= 0, got {self.sigma_3}")
        elif not self.constant_mu > 0:
            raise ValueError(f"constant_mu must be > 0, got {self.constant_mu}")
        if self.eps < 0:
            raise ValueError(f"eps must be >= 0, got {self.eps}")


@dataclass(frozen=True)
class PressureProfile:
    """Normalised contact-pressure profile on [0, 1]; integrates to one."""

    kind: str = "constant"
    a: float = 0.1

    def __post_init__(self):
        if self.kind not in PRESSURE_KINDS:
            raise ValueError(f"pressure kind must be one of {PRESSURE_KINDS}, got {self.kind!r}")
        if self.kind == "exponential" and not self.a > 0:
            raise ValueError(f"exponential pressure needs a > 0, got {self.a}")

    def max_value(self) -> float:
        """Exact supremum of the profile over [0, 1]."""
        if self.kind == "constant":
            return 1.0
        if self.kind == "exponential":
            return self.a / -math.expm1(-self.a)
        return 1.5  # parabolic vertex

    def strictly_positive(self) -> bool:
        return self.kind != "parabolic"


@dataclass(frozen=True)
class BristleEnv:
    """Operating environment of one distributed bristle field."""

    sigma_0: float
    sigma_1: float = 0.0
    sigma_2: float = 0.0
    V: float = 1.0  # transport velocity on the unit domain, 1/s
    L: float = 0.1
    F_z: float = 3000.0
    chi_1: int = 1
    chi_2: int = 0

    def __post_init__(self):
        if not self.sigma_0 > 0:
            raise ValueError(f"sigma_0 must be > 0, got {self.sigma_0}")
        if self.sigma_1 < 0 or self.sigma_2 < 0:
            raise ValueError("sigma_1 and sigma_2 must be >= 0")
        if not self.V > 0:
            raise ValueError(f"V must be > 0, got {self.V}")
        if not self.L > 0:
            raise ValueError(f"L must be > 0, got {self.L}")
        if not self.F_z > 0:
            raise ValueError(f"F_z must be > 0, got {self.F_z}")
        if self.chi_1 not in (0, 1) or self.chi_2 not in (0, 1):
            raise ValueError("chi_1 and chi_2 must be 0 or 1")


def abs_sgn_eps(v, eps: float):
    """Regularised absolute value and sign.

    |v|_eps = sqrt(v^2 + eps) and sgn_eps(v) = v / |v|_eps, with the
    convention sgn_eps(0) = 0 when eps = 0 (removable limit). The eps = 0
    branch uses the exact absolute value (v*v underflows for tiny v).
    """
    v = np.asarray(v, dtype=float)
    if eps == 0.0:
        abs_e = np.abs(v)
        sgn = np.sign(v)
    else:
        abs_e = np.sqrt(v * v + eps)
        sgn = v / abs_e
    if v.ndim == 0:
        return float(abs_e), float(sgn)
    return abs_e, sgn


def eval_friction(law: FrictionLaw, v):
    """Friction coefficient mu(v); raises FrictionRangeError if it is <= 0."""
    v = np.asarray(v, dtype=float)
    if law.constant_mu is not None:
        mu = np.full_like(v, law.constant_mu)
    else:
        mu = law.mu_d + (law.mu_s - law.mu_d) * np.exp(-((v / law.v_s) ** 2)) + law.sigma_3 * v
    if np.any(mu <= 0.0):
        bad = np.min(mu)
        raise FrictionRangeError(
            f"friction coefficient {bad:.6g} <= 0 (viscous term dominating); "
            "velocity outside the model's operating envelope"
        )
    return float(mu) if v.ndim == 0 else mu


def mu_prime(law: FrictionLaw, v):
    """Derivative d mu / d v of the friction law (smooth everywhere)."""
    v = np.asarray(v, dtype=float)
    if law.constant_mu is not None:
        out = np.zeros_like(v)
    else:
        out = (
            -2.0 * v / law.v_s**2 * (law.mu_s - law.mu_d) * np.exp(-((v / law.v_s) ** 2))
            + law.sigma_3
        )
    return float(out) if v.ndim == 0 else out


def eval_g(law: FrictionLaw, env: BristleEnv, v):
    """Denominator g(v) = chi_1 * sigma_1 * |v|_eps + mu(v) of the bristle PDE."""
    abs_e, _ = abs_sgn_eps(v, law.eps)
    return env.chi_1 * env.sigma_1 * abs_e + eval_friction(law, v)


def g_prime(law: FrictionLaw, env: BristleEnv, v):
    """Derivative of g(v); uses sgn_eps for the regularised absolute value."""
    _, sgn = abs_sgn_eps(v, law.eps)
    return env.chi_1 * env.sigma_1 * sgn + mu_prime(law, v)


def eval_pressure(profile: PressureProfile, xi):
    """Normalised pressure and its spatial derivative at xi in [0, 1]."""
    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0.0) or np.any(xi > 1.0):
        raise ValueError("pressure evaluated outside the contact patch [0, 1]")
    if profile.kind == "constant":
        p = np.ones_like(xi)
        dp = np.zeros_like(xi)
    elif profile.kind == "exponential":
        a = profile.a
        scale = a / -math.expm1(-a)
        p = scale * np.exp(-a * xi)
        dp = -a * p
    else:  # parabolic
        p = 6.0 * xi * (1.0 - xi)
        dp = 6.0 - 12.0 * xi
    if xi.ndim == 0:
        return float(p), float(dp)
    return p, dp


@dataclass(frozen=True)
class SteadyBristle:
    """Stationary bristle profile z*(xi) = amplitude * (1 - exp(-rate * xi)).

    ``amplitude`` carries the sign of the relative velocity; ``rate`` is the
    spatial saturation rate sigma_0 |v|_eps / (V g(v)).
    """

    amplitude: float
    rate: float

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        out = self.amplitude * -np.expm1(-self.rate * xi)
        return float(out) if xi.ndim == 0 else out

    def derivative(self, xi):
        """Spatial derivative dz*/dxi."""
        xi = np.asarray(xi, dtype=float)
        out = self.amplitude * self.rate * np.exp(-self.rate * xi)
        return float(out) if xi.ndim == 0 else out


def steady_bristle(law: FrictionLaw, env: BristleEnv, v: float, axle_factor: float = 1.0) -> SteadyBristle:
    """Stationary solution of the bristle PDE for a frozen relative velocity.

    ``axle_factor=2`` gives the axle convention (distributed state summed
    over the two tyres of an axle).
    """
    abs_e, sgn = abs_sgn_eps(v, law.eps)
    if abs_e == 0.0:
        return SteadyBristle(0.0, 0.0)
    mu = eval_friction(law, v)
    g = eval_g(law, env, v)
    rate = env.sigma_0 * abs_e / (env.V * g)
    amplitude = axle_factor * sgn * mu / env.sigma_0
    return SteadyBristle(amplitude, rate)


def _force_integrand(law, env, profile, v, xi, axle_factor):
    """Steady-state force integrand F_z * pbar * [sigma_0 z + sigma_1 (...) + f*sigma_2 v]."""
    z = steady_bristle(law, env, v, axle_factor)
    p, _ = eval_pressure(profile, xi)
    # at steady state dz/dt (total) = V dz/dxi, so the chi_2 switch leaves
    # (1 - chi_2) * V * dz/dxi inside the damping term
    dz_term = (1.0 - env.chi_2) * env.V * z.derivative(xi)
    return env.F_z * p * (env.sigma_0 * z(xi) + env.sigma_1 * dz_term + axle_factor * env.sigma_2 * v)


def _steady_force_quadrature(law, env, profile, v, axle_factor):
    x64, w64 = gauss_legendre_01(64)
    x128, w128 = gauss_legendre_01(128)
    f64 = float(w64 @ _force_integrand(law, env, profile, v, x64, axle_factor))
    f128 = float(w128 @ _force_integrand(law, env, profile, v, x128, axle_factor))
    err = abs(f128 - f64)
    tol = 1e-10 * max(1.0, abs(f128))
    if err > tol:
        raise QuadratureError(achieved=err / max(1.0, abs(f128)), required=1e-10)
    return f64


def _steady_force_closed(law, env, profile, v, axle_factor):
    abs_e, sgn = abs_sgn_eps(v, law.eps)
    if abs_e == 0.0:
        return 0.0
    mu = eval_friction(law, v)
    g = eval_g(law, env, v)
    s0, s1, s2, V, chi2 = env.sigma_0, env.sigma_1, env.sigma_2, env.V, env.chi_2
    s0bar = s0 * (1.0 - s1 * abs_e / g)
    s2bar = s2 + s1 * mu / g
    kappa = s0 * abs_e / (V * g)

    if profile.kind == "constant":
        Lp0 = env.F_z  # L * p0 with p0 = F_z / L
        F = (
            v * Lp0 * V * s0bar * mu * g / (s0**2 * abs_e**2)
            * (kappa + math.exp(-kappa) - 1.0)
            + Lp0 * s2bar * v
            - chi2 * sgn * Lp0 * V * s1 * mu / s0 * -math.expm1(-kappa)
        )
    elif profile.kind == "exponential":
        a = profile.a
        Lp0 = env.F_z * a / -math.expm1(-a)  # L * p0 for the exponential profile
        c = s0bar - chi2 * a * V * s1
        # the boundary term carries sigma_1 (it stems from the damping
        # integral's integration by parts; dimensional analysis requires it)
        F = (
            sgn * Lp0 * V * mu * g / (s0 * (a * V * g + s0 * abs_e))
            * c * (math.exp(-(a * V * g + s0 * abs_e) / (V * g)) - 1.0)
            + Lp0 * -math.expm1(-a) / a * (sgn * c * mu / s0 + s2bar * v)
            - chi2 * sgn * Lp0 * V * s1 * math.exp(-a) * mu / s0 * -math.expm1(-kappa)
        )
    else:
        raise ValueError(f"no closed-form force for {profile.kind!r} pressure")
    return axle_factor * F


def steady_force(law: FrictionLaw, env: BristleEnv, profile: PressureProfile, v: float,
                 axle_factor: float = 1.0, method: str = "auto") -> float:
    """Total steady-state frictional force at relative velocity ``v``.

    ``method`` selects the closed form ("closed", constant/exponential
    pressure only), 64-point Gauss-Legendre quadrature of the force integral
    ("quadrature", any profile), or the closed form whenever it exists
    ("auto").
    """
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if method == "closed" or (method == "auto" and profile.kind in ("constant", "exponential")):
        return _steady_force_closed(law, env, profile, v, axle_factor)
    return _steady_force_quadrature(law, env, profile, v, axle_factor)
