"""Masked Cartesian grids on balls and their finite-difference calculus.

The dual Dirichlet problem lives on a ball of radius ``r < 1`` in gradient
space.  We discretize with one uniform lattice centered at the origin and a
boolean mask selecting nodes strictly inside the ball.  Second derivatives
use three-point stencils along the lattice axes and both diagonals of every
axis pair; where a stencil leg exits the ball it is clipped at the exact
sphere intersection (Shortley-Weller), so Dirichlet data enters at true
boundary points and no boundary-layer unknowns exist.

Mixed second derivatives come from the two diagonal directional second
derivatives of the pair:

    u_ab = (D^2_{(e_a + e_b)/sqrt 2} u - D^2_{(e_a - e_b)/sqrt 2} u) / 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, product

import numpy as np
import scipy.sparse as sp

__all__ = ["MaskedGridField", "BallStencils"]

# shortest admissible clipped leg, in units of h (protects conditioning)
_MIN_CLIP = 1e-6


@dataclass
class MaskedGridField:
    """Scalar field on a uniform lattice restricted to a mask.

    ``values`` is dense with the same shape as ``mask``; entries outside the
    mask are carried as NaN and never read.  ``origin`` is the coordinate of
    lattice index ``(0, ..., 0)``.
    """

    n: int
    origin: np.ndarray
    h: float
    mask: np.ndarray
    values: np.ndarray
    domain_radius: float | None = None

    def __post_init__(self):
        self.origin = np.asarray(self.origin, dtype=float)
        self.mask = np.asarray(self.mask, dtype=bool)
        self.values = np.asarray(self.values, dtype=float)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.mask.shape != self.values.shape or self.mask.ndim != self.n:
            raise ValueError("mask/values shape mismatch")
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValueError("masked node values must be finite")

    @classmethod
    def ball(cls, n: int, radius: float, h: float, fill: float = 0.0):
        """Field on the lattice covering the ball of the given radius."""
        sten = BallStencils(n, radius, h)
        vals = np.full(sten.grid_shape, np.nan)
        vals[sten.mask] = fill
        return cls(
            n=n,
            origin=sten.grid_origin,
            h=h,
            mask=sten.mask.copy(),
            values=vals,
            domain_radius=radius,
        )

    def node_coordinates(self) -> np.ndarray:
        """Coordinates of the masked nodes, shape (N, n)."""
        idx = np.argwhere(self.mask)
        return self.origin + idx * self.h

    def masked_values(self) -> np.ndarray:
        return self.values[self.mask]

    def with_masked_values(self, flat: np.ndarray) -> "MaskedGridField":
        vals = np.full_like(self.values, np.nan)
        vals[self.mask] = np.asarray(flat, dtype=float)
        return MaskedGridField(
            n=self.n,
            origin=self.origin.copy(),
            h=self.h,
            mask=self.mask.copy(),
            values=vals,
            domain_radius=self.domain_radius,
        )

    def validate_connected(self) -> bool:
        """BFS check that masked nodes are face-connected and contain the
        node nearest the origin."""
        idx_near = tuple(
            int(np.clip(round(-o / self.h), 0, s - 1))
            for o, s in zip(self.origin, self.mask.shape)
        )
        if not self.mask[idx_near]:
            return False
        seen = np.zeros_like(self.mask)
        stack = [idx_near]
        seen[idx_near] = True
        while stack:
            cur = stack.pop()
            for d in range(self.n):
                for s in (-1, 1):
                    nb = list(cur)
                    nb[d] += s
                    if not 0 <= nb[d] < self.mask.shape[d]:
                        continue
                    nb = tuple(nb)
                    if self.mask[nb] and not seen[nb]:
                        seen[nb] = True
                        stack.append(nb)
        return bool(np.array_equal(seen, self.mask))


class BallStencils:
    """Finite-difference stencils for a ball mask with exact boundary clips.

    Node ordering is the flat order of ``np.argwhere(mask)``.  Directions are
    the ``n`` lattice axes followed by the two diagonals of every axis pair;
    per direction and side each node stores either a neighbor node id or a
    boundary-point slot with the exact distance to the sphere.
    """

    def __init__(self, n: int, radius: float, h: float):
        if n not in (2, 3):
            raise ValueError("spatial dimension must be 2 or 3")
        if not 0.0 < radius < 1.0:
            raise ValueError("ball radius must be in (0, 1)")
        if h <= 0 or h >= radius:
            raise ValueError("grid spacing must satisfy 0 < h < radius")
        self.n = n
        self.radius = float(radius)
        self.h = float(h)

        K = int(np.ceil(radius / h))
        axis = (np.arange(2 * K + 1) - K) * h
        grids = np.meshgrid(*([axis] * n), indexing="ij")
        coords_grid = np.stack(grids, axis=-1)
        rho2 = np.sum(coords_grid**2, axis=-1)
        self.grid_shape = rho2.shape
        self.grid_origin = np.full(n, -K * h)
        # exclude nodes closer to the sphere than the clip floor
        rmask = radius - _MIN_CLIP * h
        self.mask = rho2 < rmask * rmask

        self.node_index = np.full(self.grid_shape, -1, dtype=np.int64)
        order = np.argwhere(self.mask)
        self.num_nodes = order.shape[0]
        self.node_index[self.mask] = np.arange(self.num_nodes)
        self.index_coords = order - K  # integer lattice coordinates
        self.coords = coords_grid[self.mask]

        self.directions: list[np.ndarray] = [
            np.eye(n, dtype=np.int64)[d] for d in range(n)
        ]
        self.axis_dirs = list(range(n))
        self.pair_dirs: dict[tuple[int, int], tuple[int, int]] = {}
        for a, b in combinations(range(n), 2):
            plus = np.zeros(n, dtype=np.int64)
            plus[[a, b]] = 1
            minus = np.zeros(n, dtype=np.int64)
            minus[a], minus[b] = 1, -1
            self.pair_dirs[(a, b)] = (len(self.directions), len(self.directions) + 1)
            self.directions.append(plus)
            self.directions.append(minus)

        padded = np.pad(self.node_index, 1, constant_values=-1)
        bpoints: list[np.ndarray] = []
        self._nbr = []
        self._dist = []
        self._bslot = []
        for v in self.directions:
            step = float(np.linalg.norm(v)) * h
            unit = v * h / step
            per_side_nbr = []
            per_side_dist = []
            per_side_slot = []
            for sign in (+1, -1):
                off = sign * v
                sl = tuple(slice(1 + o, 1 + o + s) for o, s in zip(off, self.grid_shape))
                nbr = padded[sl][self.mask]
                dist = np.full(self.num_nodes, step)
                slot = np.full(self.num_nodes, -1, dtype=np.int64)
                out = nbr < 0
                if np.any(out):
                    x0 = self.coords[out]
                    d = sign * unit
                    p = x0 @ d
                    disc = p * p + radius * radius - np.sum(x0 * x0, axis=1)
                    t = -p + np.sqrt(np.maximum(disc, 0.0))
                    t = np.clip(t, _MIN_CLIP * h, step)
                    dist[out] = t
                    pts = x0 + t[:, None] * d
                    slot[out] = np.arange(len(bpoints), len(bpoints) + pts.shape[0])
                    bpoints.extend(pts)
                per_side_nbr.append(nbr)
                per_side_dist.append(dist)
                per_side_slot.append(slot)
            self._nbr.append(per_side_nbr)
            self._dist.append(per_side_dist)
            self._bslot.append(per_side_slot)
        self.boundary_points = (
            np.array(bpoints) if bpoints else np.zeros((0, n))
        )
        clipped = np.zeros(self.num_nodes, dtype=bool)
        for d in range(len(self.directions)):
            clipped |= (self._nbr[d][0] < 0) | (self._nbr[d][1] < 0)
        self.fully_interior = ~clipped

    # -- basic queries ------------------------------------------------------

    def boundary_directions(self) -> np.ndarray:
        """Unit directions of the boundary points (for trace evaluation)."""
        if self.boundary_points.shape[0] == 0:
            return self.boundary_points
        return self.boundary_points / np.linalg.norm(
            self.boundary_points, axis=1, keepdims=True
        )

    def to_field(self, flat: np.ndarray) -> MaskedGridField:
        vals = np.full(self.grid_shape, np.nan)
        vals[self.mask] = np.asarray(flat, dtype=float)
        return MaskedGridField(
            n=self.n,
            origin=self.grid_origin.copy(),
            h=self.h,
            mask=self.mask.copy(),
            values=vals,
            domain_radius=self.radius,
        )

    def flat_from_field(self, fld: MaskedGridField) -> np.ndarray:
        if fld.mask.shape != self.grid_shape or not np.array_equal(fld.mask, self.mask):
            raise ValueError("field does not match this stencil set")
        return fld.values[self.mask].copy()

    def lookup(self, index_coords: np.ndarray) -> np.ndarray:
        """Node ids at the given integer lattice coordinates (-1 if absent)."""
        K = (self.grid_shape[0] - 1) // 2
        idx = np.asarray(index_coords) + K
        ok = np.all((idx >= 0) & (idx < self.grid_shape[0]), axis=1)
        out = np.full(idx.shape[0], -1, dtype=np.int64)
        out[ok] = self.node_index[tuple(idx[ok].T)]
        return out

    # -- difference operators ----------------------------------------------

    def _side_values(self, d: int, side: int, u: np.ndarray, bvals: np.ndarray):
        nbr = self._nbr[d][side]
        slot = self._bslot[d][side]
        out = np.where(nbr >= 0, u[np.maximum(nbr, 0)], 0.0)
        clip = nbr < 0
        if np.any(clip):
            out[clip] = bvals[slot[clip]]
        return out

    def second_difference(self, d: int, u: np.ndarray, bvals: np.ndarray):
        """Directional second derivative along direction ``d`` at every node."""
        up = self._side_values(d, 0, u, bvals)
        um = self._side_values(d, 1, u, bvals)
        hp = self._dist[d][0]
        hm = self._dist[d][1]
        return 2.0 * (hm * up + hp * um - (hp + hm) * u) / (hp * hm * (hp + hm))

    def hessians(self, u: np.ndarray, bvals: np.ndarray) -> np.ndarray:
        """Discrete Hessians at all nodes, shape (N, n, n)."""
        n = self.n
        H = np.empty((self.num_nodes, n, n))
        for a in range(n):
            H[:, a, a] = self.second_difference(a, u, bvals)
        for (a, b), (dp, dm) in self.pair_dirs.items():
            qp = self.second_difference(dp, u, bvals)
            qm = self.second_difference(dm, u, bvals)
            H[:, a, b] = H[:, b, a] = 0.5 * (qp - qm)
        return H

    def gradients(self, u: np.ndarray, bvals: np.ndarray) -> np.ndarray:
        """Discrete gradients (axis directions, nonuniform central formula)."""
        out = np.empty((self.num_nodes, self.n))
        for a in range(self.n):
            up = self._side_values(a, 0, u, bvals)
            um = self._side_values(a, 1, u, bvals)
            hp = self._dist[a][0]
            hm = self._dist[a][1]
            out[:, a] = (
                hm * hm * up - hp * hp * um + (hp * hp - hm * hm) * u
            ) / (hp * hm * (hp + hm))
        return out

    def _direction_weights(self, d: int):
        hp = self._dist[d][0]
        hm = self._dist[d][1]
        w0 = -2.0 / (hp * hm)
        wp = 2.0 / (hp * (hp + hm))
        wm = 2.0 / (hm * (hp + hm))
        return w0, wp, wm

    def operator_matrix(self, coeffs: np.ndarray) -> sp.csr_matrix:
        """Sparse operator ``sum_d coeffs[d] * D2_d`` acting on node values.

        ``coeffs`` has shape (ndirs, N).  Boundary legs contribute no columns
        (their values are Dirichlet constants).
        """
        rows, cols, data = [], [], []
        node_ids = np.arange(self.num_nodes)
        for d in range(len(self.directions)):
            w0, wp, wm = self._direction_weights(d)
            c = coeffs[d]
            rows.append(node_ids)
            cols.append(node_ids)
            data.append(c * w0)
            for side, w in ((0, wp), (1, wm)):
                nbr = self._nbr[d][side]
                ok = nbr >= 0
                rows.append(node_ids[ok])
                cols.append(nbr[ok])
                data.append((c * w)[ok])
        mat = sp.coo_matrix(
            (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
            shape=(self.num_nodes, self.num_nodes),
        )
        return mat.tocsr()

    def operator_boundary_term(self, coeffs: np.ndarray, bvals: np.ndarray):
        """Constant part of ``sum_d coeffs[d] * D2_d`` from the Dirichlet legs."""
        out = np.zeros(self.num_nodes)
        for d in range(len(self.directions)):
            _, wp, wm = self._direction_weights(d)
            c = coeffs[d]
            for side, w in ((0, wp), (1, wm)):
                nbr = self._nbr[d][side]
                slot = self._bslot[d][side]
                clip = nbr < 0
                if np.any(clip):
                    out[clip] += (c * w)[clip] * bvals[slot[clip]]
        return out

    def laplace_solve(self, bvals: np.ndarray) -> np.ndarray:
        """Discrete harmonic extension of the boundary values into the ball."""
        ndirs = len(self.directions)
        coeffs = np.zeros((ndirs, self.num_nodes))
        for a in self.axis_dirs:
            coeffs[a] = 1.0
        A = self.operator_matrix(coeffs)
        rhs = -self.operator_boundary_term(coeffs, bvals)
        return _sparse_solve(A, rhs)


def _sparse_solve(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    from scipy.sparse.linalg import spsolve

    return spsolve(A.tocsc(), b)
