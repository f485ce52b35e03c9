"""Fixed Gauss-Legendre quadrature on the unit interval.

All contact-patch integrals in this package run over [0, 1]. The integrands
are smooth products of exponentials and low-order polynomials, so a fixed
64-point rule is accurate to machine precision; a 128-point rule is kept
around as a convergence check.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=8)
def gauss_legendre_01(n: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule mapped to [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def integrate_01(f, n: int = 64) -> np.ndarray:
    """Integrate a vectorised callable over [0, 1].

    ``f`` receives the node array and may return extra trailing axes; the
    quadrature sum is taken over the leading (node) axis.
    """
    x, w = gauss_legendre_01(n)
    fx = np.asarray(f(x))
    return np.tensordot(w, fx, axes=(0, 0))


def trapezoid_weights(n_nodes: int, dx: float) -> np.ndarray:
    """Composite trapezoid weights for ``n_nodes`` uniformly spaced nodes."""
    w = np.full(n_nodes, dx)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w
