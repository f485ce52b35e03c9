"""Spectral analysis of the linearised model and its frequency response.

Everything is built on the analytic resolvent of the frozen transport
operator: the diagonal structure reduces the state-transition kernel to a
pair of scalar exponentials, all lambda-dependent contact integrals to
scalar convolutions with closed forms, and the characteristic matrix to a
6x6 complex matrix whose determinant's right-half-plane zeros decide
exponential stability. Root counting uses the argument principle along
rectangle contours with adaptive phase tracking.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .linearize import Equilibrium, LinearModel, find_equilibrium, linearize
from .quadrature import gauss_legendre_01, trapezoid_weights
from .vehicle import (
    FLEXIBLE,
    AxleConfig,
    StateSpaceModel,
    VehicleConfig,
    assemble_model,
)


class PoleError(RuntimeError):
    def __init__(self, s: complex, det_abs: float):
        self.s = s
        self.det_abs = det_abs
        super().__init__(f"characteristic matrix singular at s = {s:.6g} (|D| = {det_abs:.3e})")


class ContourError(RuntimeError):
    """Adaptive contour refinement could not resolve the winding number."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned root-counting rectangle [sigma_min, sigma_max] x [-omega_max, omega_max]."""

    sigma_max: float = 50.0
    omega_max: float = 500.0
    sigma_min: float = 0.0

    def __post_init__(self):
        if not (self.sigma_max > self.sigma_min and self.omega_max > 0):
            raise ValueError("rectangle bounds must satisfy sigma_max > sigma_min, omega_max > 0")


@dataclass
class CharMatrix:
    """Characteristic matrix at one complex frequency."""

    lam: complex
    blocks: np.ndarray  # (6, 6) complex
    det: complex


def _gamma1(u: np.ndarray) -> np.ndarray:
    """(exp(u) - 1) / u with a 4-term Taylor expansion near the removable zero."""
    u = np.asarray(u, dtype=complex)
    small = np.abs(u) < 1e-6
    us = np.where(small, 0.0, u)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(small, 1.0 + u / 2.0 + u * u / 6.0 + u * u * u / 24.0,
                       np.expm1(us) / np.where(small, 1.0, u))
    return out


class _SpectralCache:
    """Per-LinearModel samples of the lambda-independent kernel combinations."""

    def __init__(self, lin: LinearModel):
        x, w = gauss_legendre_01(64)
        self.x = x
        self.w = w
        m = lin.model
        sig = lin.Sigma_star
        # K-tilde-1 kernel: K1 + Sigma* K3; boundary weight K2
        self.KA = m.K1(x) + sig * m.K3(x)  # (64, 2)
        self.bA = m.K2
        # K-tilde-2 kernel: Sigma* K4 + K5; boundary weight K6
        self.KB = sig * m.K4(x) + m.K5(x)
        self.bB = m.K6


def _cache(lin: LinearModel) -> _SpectralCache:
    c = getattr(lin, "_spectral_cache", None)
    if c is None:
        c = _SpectralCache(lin)
        object.__setattr__(lin, "_spectral_cache", c)
    return c


def _char_pieces(lin: LinearModel, lams: np.ndarray):
    """theta1, theta2, q1, q2 (each (M, 2)) for a batch of complex frequencies.

    Gamma is the running integral of the diagonal transition kernel; J is
    the convolution of the kernel with H2, both in closed form. The contact
    integrals against the kernels use the fixed 64-point rule.
    """
    c = _cache(lin)
    lams = np.asarray(lams, dtype=complex).ravel()
    a = (lin.Sigma_star[None, :] - lams[:, None]) / lin.Lam[None, :]  # (M, 2)
    beta = lin.rate[None, :]
    xi = c.x[None, :, None]  # (1, 64, 1)

    axi = a[:, None, :] * xi
    gam = c.x[None, :, None] * _gamma1(axi)  # (M, 64, 2): Gamma_i(xi_k)
    gam1 = _gamma1(a)  # Gamma_i(1) = gamma1(a)
    # J_i(xi) = H2c * Gamma_a(xi) + H2e * exp(-beta xi) * xi * gamma1((a+beta) xi)
    abx = (a[:, None, :] + beta[:, None, :]) * xi
    Jxi = (lin.H2_const[None, None, :] * gam
           + lin.H2_exp[None, None, :] * np.exp(-beta[:, None, :] * xi) * xi * _gamma1(abx))
    J1 = (lin.H2_const[None, :] * gam1
          + lin.H2_exp[None, :] * np.exp(-beta) * _gamma1(a + beta))

    wA = c.w[None, :, None] * c.KA[None, :, :]
    wB = c.w[None, :, None] * c.KB[None, :, :]
    theta1 = (np.sum(wA * gam, axis=1) + c.bA[None, :] * gam1) / lin.Lam[None, :]
    theta2 = (np.sum(wB * gam, axis=1) + c.bB[None, :] * gam1) / lin.Lam[None, :]
    q1 = (np.sum(wA * Jxi, axis=1) + c.bA[None, :] * J1) / lin.Lam[None, :]
    q2 = (np.sum(wB * Jxi, axis=1) + c.bB[None, :] * J1) / lin.Lam[None, :]
    return theta1, theta2, q1, q2


def resolvent_profiles(lin: LinearModel, lam: complex, xi) -> tuple[np.ndarray, np.ndarray]:
    """Gamma_i(xi, lambda) and J_i(xi, lambda) sampled along the patch.

    Gamma is the running integral of the diagonal transition kernel and J
    its convolution with H2, so the resolvent's distributed component is
    zeta_1(xi) = Gamma(xi) Lam^-1 (K2~ zeta_1) + diag(J(xi)/Lam) A2 y_1 + (K0~ zeta_2)(xi).
    """
    xi = np.asarray(xi, dtype=float)[:, None]
    a = (lin.Sigma_star[None, :] - lam) / lin.Lam[None, :]
    beta = lin.rate[None, :]
    gam = xi * _gamma1(a * xi)
    J = lin.H2_const[None, :] * gam + lin.H2_exp[None, :] * np.exp(-beta * xi) * xi * _gamma1((a + beta) * xi)
    return gam, J


def _char_matrices(lin: LinearModel, lams: np.ndarray) -> np.ndarray:
    """Assemble the (M, 6, 6) characteristic matrices for a frequency batch."""
    lams = np.asarray(lams, dtype=complex).ravel()
    theta1, theta2, q1, q2 = _char_pieces(lin, lams)
    M = lams.size
    A = np.zeros((M, 6, 6), dtype=complex)
    A2 = lin.model.A2
    A[:, :2, :2] = lin.A1t[None, :, :] - lams[:, None, None] * np.eye(2)
    A[:, :2, 2:4] = lin.model.G1[None, :, :]
    # Psi_1 = diag(q1) A2, Psi_2 = diag(q2) A2
    A[:, 2:4, :2] = -q1[:, :, None] * A2[None, :, :]
    A[:, 4:6, :2] = -q2[:, :, None] * A2[None, :, :]
    A[:, 2:4, 2:4] = np.eye(2)
    A[:, 4:6, 4:6] = np.eye(2)
    idx = np.arange(2)
    A[:, 2 + idx, 4 + idx] = -theta1
    A[:, 4 + idx, 4 + idx] = 1.0 - theta2
    return A


def char_det(lin: LinearModel, lams) -> np.ndarray:
    """Characteristic determinant D(lambda) for an array of frequencies."""
    scalar = np.isscalar(lams) or np.asarray(lams).ndim == 0
    D = np.linalg.det(_char_matrices(lin, np.atleast_1d(np.asarray(lams, dtype=complex))))
    return complex(D[0]) if scalar else D


def char_matrix(lin: LinearModel, lam: complex) -> CharMatrix:
    """Characteristic matrix and determinant at one complex frequency."""
    A = _char_matrices(lin, np.array([lam], dtype=complex))[0]
    return CharMatrix(lam=complex(lam), blocks=A, det=complex(np.linalg.det(A)))


# ---------------------------------------------------------------------------
# root counting via the argument principle
# ---------------------------------------------------------------------------

def _box_of(rect: Rect) -> tuple[float, float, float, float]:
    return (rect.sigma_min, rect.sigma_max, -rect.omega_max, rect.omega_max)


def _winding_box(lin: LinearModel, box, nudge: float = 0.0,
                 n0: int = 32, max_points: int = 200_000) -> int:
    """Winding number of D along the box boundary by adaptive phase tracking.

    Segments are bisected while the phase step is large or the modulus jumps
    (the latter catches near-contour roots that pure phase tracking can walk
    straight past); the count is then confirmed by doubling every segment
    until two consecutive refinement levels agree.
    """
    re0, re1, im0, im1 = box
    corners = [complex(re0 + nudge, im0), complex(re1 + nudge, im0),
               complex(re1 + nudge, im1), complex(re0 + nudge, im1),
               complex(re0 + nudge, im0)]
    pts: list[complex] = []
    for c0, c1 in zip(corners[:-1], corners[1:]):
        seg = c0 + (c1 - c0) * np.linspace(0.0, 1.0, n0, endpoint=False)
        pts.extend(seg.tolist())
    pts.append(corners[-1])
    pts = np.array(pts, dtype=complex)
    vals = char_det(lin, pts)
    scale = max(re1 - re0, im1 - im0)

    def check(v):
        if np.any(v == 0.0) or np.any(~np.isfinite(v)):
            raise ContourError("determinant vanished or overflowed on the contour")

    check(vals)

    def refine(pts, vals):
        while True:
            ratios = vals[1:] / vals[:-1]
            dphi = np.angle(ratios)
            jump = np.abs(np.log(np.abs(ratios)))
            bad = (np.abs(dphi) >= 1.0) | (jump >= 1.5)
            if not np.any(bad):
                return pts, vals, float(np.sum(dphi))
            if pts.size > max_points:
                raise ContourError("contour refinement budget exhausted")
            (idx,) = np.nonzero(bad)
            gaps = np.abs(pts[idx + 1] - pts[idx])
            if np.any(gaps < 1e-13 * scale):
                raise ContourError("refinement stalled at vanishing segment length "
                                   "(root on or near the contour)")
            mids = 0.5 * (pts[idx] + pts[idx + 1])
            mvals = char_det(lin, mids)
            check(mvals)
            pts = np.insert(pts, idx + 1, mids)
            vals = np.insert(vals, idx + 1, mvals)

    pts, vals, total = refine(pts, vals)
    while True:
        # confirmation sweep: halve every segment and re-track
        mids = 0.5 * (pts[1:] + pts[:-1])
        mvals = char_det(lin, mids)
        check(mvals)
        pts2 = np.empty(pts.size + mids.size, dtype=complex)
        vals2 = np.empty_like(pts2)
        pts2[0::2], pts2[1::2] = pts, mids
        vals2[0::2], vals2[1::2] = vals, mvals
        pts2, vals2, total2 = refine(pts2, vals2)
        if abs(total2 - total) < 0.25 * 2.0 * math.pi:
            w = total2 / (2.0 * math.pi)
            wi = round(w)
            if abs(w - wi) > 0.25:
                raise ContourError(f"winding number {w:.3f} did not settle to an integer")
            return int(wi)
        if pts2.size > max_points:
            raise ContourError("contour confirmation budget exhausted")
        pts, vals, total = pts2, vals2, total2


def _count_box(lin: LinearModel, box) -> int:
    nudge = 0.0
    for attempt in range(4):
        try:
            return _winding_box(lin, box, nudge=nudge)
        except ContourError:
            if attempt == 3:
                raise
            nudge += 1e-6
    raise AssertionError("unreachable")


def count_unstable_roots(lin: LinearModel, rect: Rect = Rect()) -> int:
    """Zeros of D (with multiplicity) inside the rectangle, by winding number.

    If the contour passes too close to a root it is nudged right by 1e-6
    and retried, so marginal roots sitting exactly on the boundary are not
    counted.
    """
    return _count_box(lin, _box_of(rect))


def find_unstable_roots(lin: LinearModel, rect: Rect = Rect(),
                        tol: float = 1e-10) -> list[complex]:
    """Locate the zeros of D inside the rectangle by bisection + Newton polish.

    Boxes are bisected (with slightly off-centre cuts retried if a root sits
    on the cut) until each contains a single root cluster small enough for a
    safeguarded Newton iteration; polished roots are validated against the
    isolating box.
    """
    roots: list[complex] = []

    def emit(box, count: int):
        z = _polish_root(lin, box, tol)
        roots.extend([z] * count)

    def recurse(box, count: int, depth: int):
        if count == 0:
            return
        re0, re1, im0, im1 = box
        size = max(re1 - re0, im1 - im0)
        tiny = 1e-6 * (1.0 + abs(complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))))
        if size < tiny or depth > 80:
            emit(box, count)
            return
        horizontal = re1 - re0 >= im1 - im0
        for offset in (0.512345, 0.467890, 0.543210, 0.490123):
            if horizontal:
                mid = re0 + offset * (re1 - re0)
                halves = [(re0, mid, im0, im1), (mid, re1, im0, im1)]
            else:
                mid = im0 + offset * (im1 - im0)
                halves = [(re0, re1, im0, mid), (re0, re1, mid, im1)]
            try:
                counted = [(h, _count_box(lin, h)) for h in halves]
            except ContourError:
                continue
            if sum(c for _, c in counted) == count:
                for half, c in counted:
                    recurse(half, c, depth + 1)
                return
        emit(box, count)  # every cut failed; polish from the current box

    total = count_unstable_roots(lin, rect)
    recurse(_box_of(rect), total, 0)
    return roots


def _polish_root(lin: LinearModel, box, tol: float) -> complex:
    re0, re1, im0, im1 = box
    center = complex(0.5 * (re0 + re1), 0.5 * (im0 + im1))
    scale = max(re1 - re0, im1 - im0, 1e-12)

    def newton(z0):
        z = z0
        for _ in range(100):
            h = 1e-7 * (1.0 + abs(z))
            d0, dp, dm = char_det(lin, np.array([z, z + h, z - h]))
            if d0 == 0.0:
                return z
            dprime = (dp - dm) / (2.0 * h)
            if dprime == 0:
                return None
            dz = -d0 / dprime
            if abs(dz) > scale:
                dz *= scale / abs(dz)
            z = z + dz
            if abs(dz) < tol * (1.0 + abs(z)):
                return z
        return z

    def inside(z):
        pad = 0.5 * scale + 1e-9
        return (re0 - pad <= z.real <= re1 + pad) and (im0 - pad <= z.imag <= im1 + pad)

    seeds = [center,
             complex(re0 + 0.25 * (re1 - re0), im0 + 0.25 * (im1 - im0)),
             complex(re0 + 0.75 * (re1 - re0), im0 + 0.25 * (im1 - im0)),
             complex(re0 + 0.25 * (re1 - re0), im0 + 0.75 * (im1 - im0)),
             complex(re0 + 0.75 * (re1 - re0), im0 + 0.75 * (im1 - im0))]
    best = None
    for s in seeds:
        z = newton(s)
        if z is None or not np.isfinite(z):
            continue
        if inside(z):
            return z
        if best is None:
            best = z
    return best if best is not None else center


# ---------------------------------------------------------------------------
# stability charts
# ---------------------------------------------------------------------------

def zero_equilibrium_linear_model(cfg: VehicleConfig) -> LinearModel:
    """Linearisation around the trivial equilibrium (zero steering)."""
    model = assemble_model(cfg)
    eq = find_equilibrium(model, np.zeros(2))
    return linearize(model, eq)


def carcass_stiffness_for_relaxation_length(L: float, F_z: float, sigma_0: float,
                                            lam: float) -> float:
    """Invert lambda = L (F_z sigma_0 + w) / (2 w) for the carcass stiffness."""
    if not lam > 0.5 * L:
        raise ValueError(f"relaxation length {lam} must exceed L/2 = {0.5 * L}")
    return L * F_z * sigma_0 / (2.0 * lam - L)


def make_chart_factory(base_cfg: VehicleConfig, lambda1: float, lambda2: float):
    """Factory (chi, v_x) -> LinearModel for stability charts.

    The understeer index is swept by rescaling the front micro-stiffness to
    hit the target C1 l1 / (C2 l2); the carcass stiffnesses are re-solved
    from the chart's relaxation lengths so lambda_1, lambda_2 stay at their
    stated values across the sweep.
    """
    rear = base_cfg.rear
    C2l2 = rear.L * rear.F_z * rear.sigma_0 * base_cfg.l2

    def factory(chi: float, v_x: float) -> LinearModel:
        front = base_cfg.front
        sigma_01 = chi * C2l2 / (front.L * front.F_z * base_cfg.l1)
        w1 = carcass_stiffness_for_relaxation_length(front.L, front.F_z, sigma_01, lambda1)
        w2 = carcass_stiffness_for_relaxation_length(rear.L, rear.F_z, rear.sigma_0, lambda2)
        cfg = replace(base_cfg, v_x=v_x,
                      front=replace(front, sigma_0=sigma_01, w=w1),
                      rear=replace(rear, w=w2))
        return zero_equilibrium_linear_model(cfg)

    return factory


def default_chart_rect(lin: LinearModel, sigma_max: float = 50.0,
                       families: float = 3.5) -> Rect:
    """Counting window covering the first few transport-resonance families.

    Micro-shimmy roots sit near a fixed structural frequency; the k-th
    island is the speed band where k bristle wavelengths fit the contact
    patch, i.e. omega ~ k * 2*pi*Lambda. The default window keeps the first
    three families (the content of the published charts); enlarging it
    admits ever higher families accumulating at vanishing speed.
    """
    lam_mean = float(np.mean(lin.Lam))
    return Rect(sigma_max=sigma_max, omega_max=families * 2.0 * math.pi * lam_mean)


def stability_chart(lin_factory, chi_values, vx_values, rect=None,
                    workers: int | None = None):
    """Grid of unstable-root counts over (chi, v_x).

    ``rect`` may be a Rect, a callable (lin, chi, vx) -> Rect, or None for
    the speed-scaled default. Returns (counts, errors): counts has shape
    (len(chi_values), len(vx_values)) with -1 marking failed cells, and
    errors maps (i, j) to the exception string.
    """
    chi_values = np.asarray(chi_values, dtype=float)
    vx_values = np.asarray(vx_values, dtype=float)
    counts = np.full((chi_values.size, vx_values.size), -1, dtype=int)
    errors: dict[tuple[int, int], str] = {}

    def cell(ij):
        i, j = ij
        try:
            lin = lin_factory(chi_values[i], vx_values[j])
            if rect is None:
                r = default_chart_rect(lin)
            elif callable(rect):
                r = rect(lin, chi_values[i], vx_values[j])
            else:
                r = rect
            return i, j, count_unstable_roots(lin, r), None
        except Exception as exc:  # per-cell failures are recorded, not fatal
            return i, j, -1, f"{type(exc).__name__}: {exc}"

    jobs = [(i, j) for i in range(chi_values.size) for j in range(vx_values.size)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(cell, jobs))
    else:
        results = [cell(ij) for ij in jobs]
    for i, j, cnt, err in results:
        counts[i, j] = cnt
        if err is not None:
            errors[(i, j)] = err
    return counts, errors


# ---------------------------------------------------------------------------
# transfer function and frequency response
# ---------------------------------------------------------------------------

def transfer_function_many(lin: LinearModel, s_values) -> np.ndarray:
    """Transfer matrices (M, 5, 2) from steering perturbations to
    (v_y, r, F_y1, F_y2, a_y/g) at a batch of complex frequencies."""
    s_values = np.asarray(s_values, dtype=complex).ravel()
    A = _char_matrices(lin, s_values)
    D = np.linalg.det(A)
    # Hadamard-style scale for the singularity test
    row_norms = np.sqrt(np.sum(np.abs(A) ** 2, axis=2))
    scale = np.prod(row_norms, axis=1)
    bad = np.abs(D) < 1e-12 * scale
    if np.any(bad):
        k = int(np.argmax(bad))
        raise PoleError(complex(s_values[k]), float(np.abs(D[k])))

    _, _, q1, q2 = _char_pieces(lin, s_values)
    G2 = lin.model.G2
    R = np.zeros((s_values.size, 6, 2), dtype=complex)
    R[:, :2, :] = (lin.model.G1 @ lin.B1t)[None, :, :]
    R[:, 2:4, :] = -q1[:, :, None] * G2[None, :, :]
    R[:, 4:6, :] = -q2[:, :, None] * G2[None, :, :]
    X = np.linalg.solve(A, R)  # (M, 6, 2)

    P = np.zeros((4, 6))
    P[:2, :2] = np.eye(2)
    P[2:, :2] = lin.H1[:, None] * lin.model.A2
    P[2:, 2:4] = np.eye(2)
    S = np.zeros((4, 2))
    S[2:, :] = lin.B1t
    Y = np.einsum("pq,mqr->mpr", P, X) - S[None, :, :]
    C = lin.output_matrix
    return -np.einsum("cp,mpr->mcr", C, Y)


def transfer_function(lin: LinearModel, s: complex) -> np.ndarray:
    """Transfer matrix (5, 2) at a single complex frequency."""
    return transfer_function_many(lin, [s])[0]


@dataclass
class BodeData:
    omegas: np.ndarray  # (n,) rad/s
    mag_db: np.ndarray  # (n, 5, 2)
    phase_deg: np.ndarray  # (n, 5, 2), unwrapped along the sweep
    response: np.ndarray  # (n, 5, 2) complex


def bode_sweep(lin: LinearModel, omegas) -> BodeData:
    """Frequency response over a list of angular frequencies."""
    omegas = np.asarray(omegas, dtype=float)
    G = transfer_function_many(lin, 1j * omegas)
    mag_db = 20.0 * np.log10(np.abs(G))
    phase = np.unwrap(np.angle(G), axis=0)
    return BodeData(omegas=omegas, mag_db=mag_db, phase_deg=np.degrees(phase), response=G)


# ---------------------------------------------------------------------------
# discretised generator (independent eigenvalue oracle) and linear simulation
# ---------------------------------------------------------------------------

def discretize_generator(lin: LinearModel, N: int) -> np.ndarray:
    """Dense upwind discretisation of the linear generator on N cells.

    State layout: [x (2); z-channel 0 at nodes 1..N; z-channel 1 at nodes
    1..N]; the pinned node 0 is eliminated.
    """
    m = lin.model
    n = 2 + 2 * N
    xi = np.linspace(0.0, 1.0, N + 1)
    w = trapezoid_weights(N + 1, 1.0 / N)
    sig = lin.Sigma_star
    KA = m.K1(xi) + sig * m.K3(xi)  # (N+1, 2)
    KB = sig * m.K4(xi) + m.K5(xi)
    H2 = lin.H2(xi)  # (N+1, 2)
    A = np.zeros((n, n))
    A[:2, :2] = lin.A1t
    dxi = 1.0 / N
    for i in range(2):
        sl = slice(2 + i * N, 2 + (i + 1) * N)
        # x-rows: G1 column i times the K-tilde-1 quadrature row
        row = w[1:] * KA[1:, i]
        row[-1] += m.K2[i]
        A[:2, sl] += np.outer(m.G1[:, i], row)
        # transport + local source
        T = np.zeros((N, N))
        idx = np.arange(N)
        T[idx, idx] = -m.Lam[i] / dxi + sig[i]
        T[idx[1:], idx[1:] - 1] = m.Lam[i] / dxi
        A[sl, sl] = T
        # nonlocal K-tilde-2 row, added to every interior node of channel i
        rowB = w[1:] * KB[1:, i]
        rowB[-1] += m.K6[i]
        A[sl, sl] += np.tile(rowB, (N, 1))
        # coupling to the lumped state: A2t(xi_j) rows
        A[sl, :2] = H2[1:, i, None] * m.A2[i][None, :]
    return A


def simulate_linear(lin: LinearModel, delta_fn, T: float, dt: float, N: int,
                    substeps: int = 1):
    """Explicit-Euler run of the discretised linear dynamics.

    Returns (t, x_history (n, 2), F_history (n, 2)) with the same stepping
    scheme as the nonlinear simulator, for like-for-like comparisons.
    """
    m = lin.model
    A = discretize_generator(lin, N)
    n = 2 + 2 * N
    B = np.zeros((n, 2))
    B[:2, :] = m.G1 @ lin.B1t
    xi = np.linspace(0.0, 1.0, N + 1)
    H2 = lin.H2(xi)
    for i in range(2):
        sl = slice(2 + i * N, 2 + (i + 1) * N)
        B[sl, :] = H2[1:, i, None] * m.G2[i][None, :]

    # output rows for the perturbed axle forces
    w = trapezoid_weights(N + 1, 1.0 / N)
    sig = lin.Sigma_star
    KA = m.K1(xi) + sig * m.K3(xi)
    Fx = lin.H1[:, None] * m.A2  # (2, 2)
    Frow = np.zeros((2, n))
    Frow[:, :2] = Fx
    for i in range(2):
        sl = slice(2 + i * N, 2 + (i + 1) * N)
        row = w[1:] * KA[1:, i]
        row[-1] += m.K2[i]
        Frow[i, sl] = row

    n_out = int(math.floor(T / dt + 1e-9)) + 1
    t = np.arange(n_out) * dt
    y = np.zeros(n)
    xs = np.empty((n_out, 2))
    Fs = np.empty((n_out, 2))
    dt_sub = dt / substeps
    for k in range(n_out):
        d = delta_fn(t[k])
        xs[k] = y[:2]
        Fs[k] = Frow @ y + lin.B1t @ d
        if k == n_out - 1:
            break
        for j in range(substeps):
            d = delta_fn(t[k] + j * dt_sub)
            y = y + dt_sub * (A @ y + B @ d)
    return t, xs, Fs
