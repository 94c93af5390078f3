"""Discrete Legendre transform between the graph and its dual potential.

The pointwise transform exchanges second-order jets of a strictly convex
function and its convex conjugate; on grids, a dual field is pushed to a
scattered primal cloud node by node through central differences, and a
brute-force conjugate (sup over grid nodes of ``x . xi - u``) serves as the
independent oracle for testing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import DualJet, PrimalJet, gamma_star
from .grid import BallStencils, MaskedGridField
from .symfunc import esym_all

__all__ = [
    "legendre_pointwise",
    "legendre_primal_to_dual",
    "PrimalCloud",
    "dual_field_to_primal_cloud",
    "conjugate_bruteforce",
    "cloud_to_csv",
]


def legendre_pointwise(jet: DualJet) -> PrimalJet:
    """Primal jet of the conjugate at the dual point.

    ``x = D ustar``, ``u = xi . D ustar - ustar``, ``Du = xi``, and the
    Hessians are mutual inverses.
    """
    try:
        D2u = np.linalg.inv(jet.D2ustar)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate transform: singular dual Hessian") from exc
    x = jet.Dustar.copy()
    u = float(np.dot(jet.xi, jet.Dustar) - jet.ustar)
    return PrimalJet(x=x, u=u, Du=jet.xi.copy(), D2u=0.5 * (D2u + D2u.T))


def legendre_primal_to_dual(jet: PrimalJet) -> DualJet:
    """Dual jet of the conjugate at the primal point (the inverse map)."""
    try:
        D2ustar = np.linalg.inv(jet.D2u)
    except np.linalg.LinAlgError as exc:
        raise ValueError("degenerate transform: singular Hessian") from exc
    ustar = float(np.dot(jet.x, jet.Du) - jet.u)
    return DualJet(
        xi=jet.Du.copy(),
        ustar=ustar,
        Dustar=jet.x.copy(),
        D2ustar=0.5 * (D2ustar + D2ustar.T),
    )


@dataclass
class PrimalCloud:
    """Scattered second-order data pushed forward from a dual grid field.

    One row per convex dual node: dual point ``xi``, primal point ``x``,
    height ``u``, curvature radii and curvatures (each sorted ascending), and
    the curvature-equation residual ``sigma_{n-1}(kappa) - 1``.  Nodes where
    the discrete dual Hessian was not positive definite are excluded and
    counted in ``num_flagged``.
    """

    n: int
    h: float
    xi: np.ndarray
    x: np.ndarray
    u: np.ndarray
    radii: np.ndarray
    kappa: np.ndarray
    residual: np.ndarray
    num_flagged: int


def _curvature_matrices(stencils: BallStencils, hess: np.ndarray):
    """Batched ``w gstar H gstar`` over all nodes of a stencil set."""
    xi = stencils.coords
    w = np.sqrt(1.0 - np.sum(xi * xi, axis=1))
    gstars = np.stack([gamma_star(p) for p in xi])
    M = np.einsum("nij,njk,nkl->nil", gstars, hess, gstars)
    return w[:, None, None] * M, w


def dual_field_to_primal_cloud(
    fld: MaskedGridField, bvals: np.ndarray | None = None,
    stencils: BallStencils | None = None,
) -> PrimalCloud:
    """Push a dual potential on a ball mask to the primal side node by node.

    ``bvals`` are the Dirichlet values at the stencil boundary points; when
    omitted, only fully interior nodes (no clipped stencil leg) are used.
    """
    if fld.domain_radius is None:
        raise ValueError("field must carry a ball mask with a known radius")
    if stencils is None:
        stencils = BallStencils(fld.n, fld.domain_radius, fld.h)
    u = stencils.flat_from_field(fld)
    if bvals is None:
        use = stencils.fully_interior
        bvals = np.zeros(stencils.boundary_points.shape[0])
    else:
        use = np.ones(stencils.num_nodes, dtype=bool)
    grads = stencils.gradients(u, bvals)
    hess = stencils.hessians(u, bvals)
    M, w = _curvature_matrices(stencils, hess)
    radii = np.linalg.eigvalsh(M)
    convex = radii[:, 0] > 0.0
    keep = use & convex
    num_flagged = int(np.sum(use & ~convex))

    xi = stencils.coords[keep]
    g = grads[keep]
    x = g
    uval = np.sum(xi * g, axis=1) - u[keep]
    rad = radii[keep]
    kap = np.sort(1.0 / rad, axis=1)
    n = fld.n
    res = esym_all(kap)[:, n - 1] - 1.0
    return PrimalCloud(
        n=n,
        h=fld.h,
        xi=xi,
        x=x,
        u=uval,
        radii=rad,
        kappa=kap,
        residual=res,
        num_flagged=num_flagged,
    )


def conjugate_bruteforce(fld: MaskedGridField, xi) -> float:
    """Convex conjugate by brute force: max over grid nodes of ``x.xi - u``.

    Lower-bounds the true conjugate within O(h) times the Lipschitz constant
    whenever the maximizing slope lies inside the gradient image of the mask.
    """
    xi = np.asarray(xi, dtype=float)
    coords = fld.node_coordinates()
    if coords.shape[0] == 0:
        raise ValueError("empty mask")
    vals = fld.masked_values()
    return float(np.max(coords @ xi - vals))


def cloud_to_csv(cloud: PrimalCloud, path) -> None:
    """Write the cloud as CSV: x columns, u, sorted curvatures, residual."""
    n = cloud.n
    header = (
        ",".join(f"x{i + 1}" for i in range(n))
        + ",u,"
        + ",".join(f"kappa_{i + 1}" for i in range(n))
        + ",residual"
    )
    rows = np.column_stack([cloud.x, cloud.u, cloud.kappa, cloud.residual])
    with open(path, "w") as f:
        f.write(header + "\n")
        for row in rows:
            f.write(",".join(format(v, ".17g") for v in row) + "\n")
