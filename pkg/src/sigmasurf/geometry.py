"""Pointwise differential geometry of spacelike graphs in Minkowski space.

A spacelike graph ``x_{n+1} = u(x)`` with ``|Du| < 1`` carries the induced
Riemannian metric ``g = I - Du Du^T`` and second fundamental form
``h = D2u / sqrt(1 - |Du|^2)`` with respect to the future-directed timelike
normal.  The dual picture lives on the open unit ball of gradients
``xi = Du``: there the matrix ``w * gstar D2ustar gstar`` (with
``w = sqrt(1 - |xi|^2)`` and ``gstar`` the metric square root) has the
curvature radii ``1 / kappa_i`` as eigenvalues.

Sign convention: the hyperboloid ``u = sqrt(R^2 + |x|^2)`` has all principal
curvatures equal to ``+1/R``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .symfunc import check_symmetric

__all__ = [
    "SPACELIKE_MARGIN",
    "PrimalJet",
    "DualJet",
    "lorentz_dot",
    "what",
    "gamma_star",
    "primal_curvatures",
    "dual_curvature_radii",
    "gauss_map",
    "support_function",
]

SPACELIKE_MARGIN = 1e-12


def lorentz_dot(X, Y) -> float:
    """Minkowski inner product: spatial part positive, last coordinate negative."""
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.shape != Y.shape or X.ndim != 1:
        raise ValueError("arguments must be 1-d vectors of equal length")
    return float(np.dot(X[:-1], Y[:-1]) - X[-1] * Y[-1])


def what(xi) -> float:
    """sqrt(1 - |xi|^2), the conformal factor of the gradient ball."""
    xi = np.asarray(xi, dtype=float)
    s = 1.0 - float(np.dot(xi, xi))
    if s <= 0.0:
        raise ValueError("point must lie strictly inside the unit ball")
    return float(np.sqrt(s))


def gamma_star(xi) -> np.ndarray:
    """Square root of ``I - xi xi^T``: the rank-one update ``I - xi xi^T / (1 + w)``."""
    xi = np.asarray(xi, dtype=float)
    w = what(xi)
    return np.eye(xi.size) - np.outer(xi, xi) / (1.0 + w)


@dataclass(frozen=True)
class PrimalJet:
    """Second-order jet (x, u, Du, D2u) of a spacelike graph at one point."""

    x: np.ndarray
    u: float
    Du: np.ndarray
    D2u: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        Du = np.asarray(self.Du, dtype=float)
        D2u = check_symmetric(self.D2u)
        if x.shape != Du.shape or x.ndim != 1 or D2u.shape != (x.size, x.size):
            raise ValueError("inconsistent jet shapes")
        if float(np.linalg.norm(Du)) >= 1.0 - SPACELIKE_MARGIN:
            raise ValueError("jet violates the spacelike condition |Du| < 1")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "Du", Du)
        object.__setattr__(self, "D2u", D2u)

    @property
    def n(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class DualJet:
    """Second-order jet (xi, ustar, Dustar, D2ustar) on the gradient ball."""

    xi: np.ndarray
    ustar: float
    Dustar: np.ndarray
    D2ustar: np.ndarray

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=float)
        Dustar = np.asarray(self.Dustar, dtype=float)
        D2ustar = check_symmetric(self.D2ustar)
        if xi.shape != Dustar.shape or xi.ndim != 1:
            raise ValueError("inconsistent jet shapes")
        if D2ustar.shape != (xi.size, xi.size):
            raise ValueError("inconsistent Hessian shape")
        if float(np.linalg.norm(xi)) >= 1.0:
            raise ValueError("dual point must lie strictly inside the unit ball")
        object.__setattr__(self, "xi", xi)
        object.__setattr__(self, "ustar", float(self.ustar))
        object.__setattr__(self, "Dustar", Dustar)
        object.__setattr__(self, "D2ustar", D2ustar)

    @property
    def n(self) -> int:
        return self.xi.size


def primal_curvatures(jet: PrimalJet) -> np.ndarray:
    """Principal curvatures of the graph at the jet, sorted ascending.

    Computed as eigenvalues of the symmetric conjugation
    ``g^{-1/2} h g^{-1/2}`` (same spectrum as the shape operator
    ``g^{-1} h`` but guaranteed real and stably computed).
    """
    Du = jet.Du
    w = what(Du)  # |Du| < 1, so this is the spacelike root
    n = jet.n
    g_inv_half = np.eye(n) + np.outer(Du, Du) / (w * (1.0 + w))
    h = jet.D2u / w
    sym = g_inv_half @ h @ g_inv_half
    return np.linalg.eigvalsh(0.5 * (sym + sym.T))


def dual_curvature_radii(jet: DualJet) -> np.ndarray:
    """Curvature radii 1/kappa_i as eigenvalues of ``w gstar D2ustar gstar``.

    Sorted ascending.  For a non-convex Hessian the radii are still returned
    with their signs; callers flag nonpositive entries.
    """
    g = gamma_star(jet.xi)
    M = what(jet.xi) * (g @ jet.D2ustar @ g)
    return np.linalg.eigvalsh(0.5 * (M + M.T))


def gauss_map(jet: PrimalJet) -> np.ndarray:
    """Image of the future normal in the unit ball: the gradient itself."""
    return jet.Du.copy()


def support_function(jet: PrimalJet) -> float:
    """Lorentzian support ``<X, nu> = (x . Du - u) / sqrt(1 - |Du|^2)``.

    Coincides with ``ustar / sqrt(1 - |xi|^2)`` at ``xi = Du``.
    """
    w = what(jet.Du)
    return float((np.dot(jet.x, jet.Du) - jet.u) / w)
