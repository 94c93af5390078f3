"""Damped Newton solver for the dual curvature equation on gradient balls.

The unknown is the dual potential sampled at the masked lattice nodes of a
ball of radius ``r < 1``; Dirichlet data enters only through the exact
boundary clips of the stencils.  The equation is driven in logarithmic form

    G = (log det M - log trace M) / (n - 1),      M = w gstar D2u gstar,

whose root is the unit level set of the quotient curvature function.  The
log form makes the scaling law exact (multiplying the potential by ``t``
shifts ``G`` by ``log t``) and its derivative ``(M^{-1} - I / tr M)/(n-1)``
is positive definite precisely on convex iterates, which is what the
safeguarding preserves: steps that would push any nodal ``M`` below the
eigenvalue floor are rejected, never projected.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .boundary import BoundaryData
from .grid import BallStencils, MaskedGridField

__all__ = [
    "SolverConfig",
    "SolveResult",
    "EllipticityLossError",
    "InitializationError",
    "special_subsolution",
    "extend_boundary",
    "initial_guess",
    "residual",
    "linearize",
    "newton_solve",
    "continuation_solve",
]


class EllipticityLossError(RuntimeError):
    """Backtracking could not restore positive definiteness of the iterate."""


class InitializationError(RuntimeError):
    """No admissible starting potential found (barrier amplitude cap hit)."""


@dataclass(frozen=True)
class SolverConfig:
    """Continuation and Newton parameters.

    ``barrier_amplitude`` is the subsolution amplitude A; ``None`` selects
    the heuristic ``n^(1/(n-1)) + 2 |phi|_C1 + 1`` (doubled on demand, with
    a factor-1024 cap).  ``convexity_floor`` scales the per-node eigenvalue
    floor ``floor * trace(M)/n`` enforced by step rejection.
    """

    r_schedule: tuple
    h: float
    newton_tol: float = 1e-9
    max_newton_iters: int = 50
    shrink: float = 0.5
    min_step: float = 2.0**-10
    convexity_floor: float = 1e-10
    barrier_amplitude: float | None = None
    armijo: float = 1e-4

    def __post_init__(self):
        rs = tuple(float(r) for r in self.r_schedule)
        if not rs or any(not 0.0 < r < 1.0 for r in rs):
            raise ValueError("r_schedule entries must lie strictly in (0, 1)")
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("r_schedule must be strictly increasing")
        object.__setattr__(self, "r_schedule", rs)
        if self.h <= 0:
            raise ValueError("grid spacing must be positive")
        if self.convexity_floor < 0:
            raise ValueError("convexity floor must be nonnegative")
        if self.barrier_amplitude is not None and self.barrier_amplitude <= 0:
            raise ValueError("barrier amplitude must be positive")


@dataclass
class SolveResult:
    """One converged (or failed) solve with its iteration log."""

    n: int
    r: float
    h: float
    converged: bool
    field: MaskedGridField
    log: dict
    used_A: float
    warm_started: bool
    phi_fingerprint: str
    stencils: BallStencils = field(repr=False, default=None)
    boundary_values: np.ndarray = field(repr=False, default=None)


def special_subsolution(xi, a=None, c: float = 0.0) -> np.ndarray:
    """The translated dual hyperboloid ``-n^(1/(n-1)) w + a . xi + c``.

    This is the lower barrier: the unique rotationally invariant solution
    with unit quotient curvature, shifted by an affine function.
    """
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    n = xi.shape[1]
    if a is None:
        a = np.zeros(n)
    a = np.asarray(a, dtype=float)
    w = np.sqrt(np.maximum(0.0, 1.0 - np.sum(xi * xi, axis=1)))
    out = -(n ** (1.0 / (n - 1))) * w + xi @ a + c
    return out if out.size > 1 else float(out[0])


# ---------------------------------------------------------------------------
# nodal geometry and the nonlinear operator
# ---------------------------------------------------------------------------

class _Workspace:
    """Per-stencil precomputations: conformal factor and metric square root."""

    def __init__(self, st: BallStencils):
        self.st = st
        xi = st.coords
        self.w = np.sqrt(1.0 - np.sum(xi * xi, axis=1))
        n = st.n
        eye = np.eye(n)
        self.gstar = eye[None, :, :] - (
            xi[:, :, None] * xi[:, None, :] / (1.0 + self.w)[:, None, None]
        )

    def curvature_matrix(self, u: np.ndarray, bvals: np.ndarray) -> np.ndarray:
        H = self.st.hessians(u, bvals)
        M = np.einsum("nij,njk,nkl->nil", self.gstar, H, self.gstar)
        return self.w[:, None, None] * M


def _dets(M: np.ndarray) -> np.ndarray:
    n = M.shape[-1]
    if n == 2:
        return M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]
    return (
        M[:, 0, 0] * (M[:, 1, 1] * M[:, 2, 2] - M[:, 1, 2] * M[:, 2, 1])
        - M[:, 0, 1] * (M[:, 1, 0] * M[:, 2, 2] - M[:, 1, 2] * M[:, 2, 0])
        + M[:, 0, 2] * (M[:, 1, 0] * M[:, 2, 1] - M[:, 1, 1] * M[:, 2, 0])
    )


def _pd_mask(M: np.ndarray) -> np.ndarray:
    n = M.shape[-1]
    ok = M[:, 0, 0] > 0.0
    ok &= (M[:, 0, 0] * M[:, 1, 1] - M[:, 0, 1] * M[:, 1, 0]) > 0.0
    if n == 3:
        ok &= _dets(M) > 0.0
    return ok


def _g_values(M: np.ndarray) -> np.ndarray:
    n = M.shape[-1]
    det = _dets(M)
    tr = np.trace(M, axis1=1, axis2=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        return (np.log(det) - np.log(tr)) / (n - 1)


def extend_boundary(phi: BoundaryData, st: BallStencils) -> MaskedGridField:
    """Discrete harmonic extension of ``phi(xi/|xi|)`` from the ball boundary."""
    bvals = phi.evaluate(st.boundary_directions())
    return st.to_field(st.laplace_solve(bvals))


def initial_guess(
    phi_ext: MaskedGridField,
    A: float,
    st: BallStencils | None = None,
    bvals: np.ndarray | None = None,
    max_doublings: int = 10,
):
    """Barrier-shaped start ``-A (w - w_r) + phi_ext`` with convexity check.

    The barrier is the subsolution shape ``-A w`` lifted by the constant
    ``A w_r = A sqrt(1 - r^2)`` so that its trace on the solve ball boundary
    matches the Dirichlet data exactly (the raw shape only vanishes on the
    unit sphere).  A is doubled (up to ``2**max_doublings`` times the input)
    until the discrete curvature matrix is positive definite at every node
    against the pinned boundary values; the amplitude actually used is
    returned alongside the nodal values.
    """
    if st is None:
        st = BallStencils(phi_ext.n, phi_ext.domain_radius, phi_ext.h)
    ws = _Workspace(st)
    ext = st.flat_from_field(phi_ext)
    if bvals is None:
        bvals = np.zeros(st.boundary_points.shape[0])
    w_r = np.sqrt(max(0.0, 1.0 - st.radius**2))
    for d in range(max_doublings + 1):
        A_try = A * 2.0**d
        u = -A_try * (ws.w - w_r) + ext
        M = ws.curvature_matrix(u, bvals)
        if np.all(_pd_mask(M)):
            return u, float(A_try)
    raise InitializationError(
        f"no convex start after {max_doublings} doublings of A={A!r}"
    )


def residual(
    fld: MaskedGridField, phi: BoundaryData, st: BallStencils | None = None
) -> MaskedGridField:
    """Nodal values of G for a dual potential field (NaN where not convex)."""
    if st is None:
        st = BallStencils(fld.n, fld.domain_radius, fld.h)
    ws = _Workspace(st)
    bvals = phi.evaluate(st.boundary_directions())
    M = ws.curvature_matrix(st.flat_from_field(fld), bvals)
    G = _g_values(M)
    if not np.all(_pd_mask(M)):
        bad = int(np.argmin(_pd_mask(M)))
        raise EllipticityLossError(
            f"curvature matrix not positive definite at node {bad} "
            f"(coords {st.coords[bad]})"
        )
    return st.to_field(G)


def _jacobian(ws: _Workspace, M: np.ndarray) -> sp.csr_matrix:
    st = ws.st
    n = st.n
    Minv = np.linalg.inv(M)
    tr = np.trace(M, axis1=1, axis2=2)
    Bmat = (Minv - np.eye(n)[None, :, :] / tr[:, None, None]) / (n - 1)
    gamma = ws.w[:, None, None] * np.einsum(
        "nij,njk,nkl->nil", ws.gstar, Bmat, ws.gstar
    )
    ndirs = len(st.directions)
    coeffs = np.zeros((ndirs, st.num_nodes))
    for a in st.axis_dirs:
        coeffs[a] = gamma[:, a, a]
    for (a, b), (dp, dm) in st.pair_dirs.items():
        coeffs[dp] = gamma[:, a, b]
        coeffs[dm] = -gamma[:, a, b]
    return st.operator_matrix(coeffs)


def linearize(
    fld: MaskedGridField, phi: BoundaryData, st: BallStencils | None = None
) -> sp.csr_matrix:
    """Jacobian of the nodal G values with respect to the nodal potential."""
    if st is None:
        st = BallStencils(fld.n, fld.domain_radius, fld.h)
    ws = _Workspace(st)
    bvals = phi.evaluate(st.boundary_directions())
    M = ws.curvature_matrix(st.flat_from_field(fld), bvals)
    return _jacobian(ws, M)


def _solve_linear(J: sp.csr_matrix, rhs: np.ndarray) -> np.ndarray:
    return spsolve(J.tocsc(), rhs)


def _floor_ok(M: np.ndarray, floor_coef: float) -> bool:
    if not np.all(_pd_mask(M)):
        return False
    if floor_coef <= 0.0:
        return True
    n = M.shape[-1]
    eigs = np.linalg.eigvalsh(M)
    tr = np.trace(M, axis1=1, axis2=2)
    return bool(np.all(eigs[:, 0] >= floor_coef * tr / n))


def newton_solve(
    phi: BoundaryData,
    r: float,
    cfg: SolverConfig,
    warm_start: MaskedGridField | None = None,
    st: BallStencils | None = None,
) -> SolveResult:
    """Solve the Dirichlet problem on the ball of radius ``r``.

    Damped Newton iteration on the nodal G values: full steps with
    residual-norm backtracking, and rejection of any step whose curvature
    matrix drops below the convexity floor at some node.  Nonconvergence
    within the iteration budget is reported in the result, not raised.
    """
    t_start = time.perf_counter()
    n = phi.n
    if st is None:
        st = BallStencils(n, r, cfg.h)
    ws = _Workspace(st)
    bvals = phi.evaluate(st.boundary_directions())
    ext = st.laplace_solve(bvals)

    warm_started = False
    u = None
    if warm_start is not None:
        try:
            cand = st.flat_from_field(warm_start)
        except ValueError:
            cand = None
        if cand is not None and np.all(np.isfinite(cand)):
            M = ws.curvature_matrix(cand, bvals)
            if np.all(_pd_mask(M)):
                u = cand
                warm_started = True
    A_used = cfg.barrier_amplitude
    if A_used is None:
        A_used = n ** (1.0 / (n - 1)) + 2.0 * phi.c1_estimate() + 1.0
    if u is None:
        u, A_used = initial_guess(st.to_field(ext), A_used, st, bvals)

    log = {
        "residual_norm": [],
        "step": [],
        "min_curvature_eig": [],
        "iterations": 0,
        "nodes": int(st.num_nodes),
        "stalled": False,
    }
    converged = False
    for _ in range(cfg.max_newton_iters):
        M = ws.curvature_matrix(u, bvals)
        G = _g_values(M)
        norm = float(np.max(np.abs(G)))
        min_eig = float(np.min(np.linalg.eigvalsh(M)[:, 0]))
        log["residual_norm"].append(norm)
        log["min_curvature_eig"].append(min_eig)
        if norm <= cfg.newton_tol:
            converged = True
            log["step"].append(0.0)
            break
        J = _jacobian(ws, M)
        delta = _solve_linear(J, -G)
        alpha = 1.0
        accepted = False
        pd_seen = False
        while alpha >= cfg.min_step:
            u_try = u + alpha * delta
            M_try = ws.curvature_matrix(u_try, bvals)
            if _floor_ok(M_try, cfg.convexity_floor):
                pd_seen = True
                norm_try = float(np.max(np.abs(_g_values(M_try))))
                if norm_try <= (1.0 - cfg.armijo * alpha) * norm:
                    u = u_try
                    log["step"].append(alpha)
                    accepted = True
                    break
            alpha *= cfg.shrink
        log["iterations"] += 1
        if not accepted:
            if not pd_seen:
                raise EllipticityLossError(
                    f"no admissible step at r={r}: convexity lost down to "
                    f"step {cfg.min_step}"
                )
            log["stalled"] = True
            break
    log["elapsed_seconds"] = time.perf_counter() - t_start
    return SolveResult(
        n=n,
        r=float(r),
        h=cfg.h,
        converged=converged,
        field=st.to_field(u),
        log=log,
        used_A=float(A_used),
        warm_started=warm_started,
        phi_fingerprint=phi.fingerprint(),
        stencils=st,
        boundary_values=bvals,
    )


def _blend_previous(
    prev: SolveResult, st_new: BallStencils, u0: np.ndarray
) -> np.ndarray:
    """Graft the previous solution into the new initial guess.

    A smoothstep in the radius keeps the previous values in the deep
    interior and falls back to the barrier start in the band near the old
    boundary; the caller re-checks convexity and discards on failure.
    """
    ids = prev.stencils.lookup(st_new.index_coords)
    prev_vals = prev.stencils.flat_from_field(prev.field)
    rho = np.linalg.norm(st_new.coords, axis=1)
    band = max(6.0 * st_new.h, 0.25 * (st_new.radius - prev.r))
    t = np.clip((prev.r - 2.0 * st_new.h - rho) / band, 0.0, 1.0)
    chi = t * t * (3.0 - 2.0 * t)
    chi[ids < 0] = 0.0
    lifted = u0.copy()
    have = ids >= 0
    lifted[have] += chi[have] * (prev_vals[ids[have]] - u0[have])
    return lifted


def continuation_solve(phi: BoundaryData, cfg: SolverConfig) -> list[SolveResult]:
    """Sequential solves over the radius schedule with warm starting.

    Each stage seeds the next; failures propagate with the failing radius
    attached.  Interior-stabilization diagnostics (max change of the
    potential on the common earlier mask) are appended to each log.
    """
    results: list[SolveResult] = []
    prev: SolveResult | None = None
    for r in cfg.r_schedule:
        st = BallStencils(phi.n, r, cfg.h)
        warm = None
        if prev is not None and prev.converged:
            bvals = phi.evaluate(st.boundary_directions())
            ext = st.laplace_solve(bvals)
            A0 = cfg.barrier_amplitude
            if A0 is None:
                A0 = phi.n ** (1.0 / (phi.n - 1)) + 2.0 * phi.c1_estimate() + 1.0
            u0, _ = initial_guess(st.to_field(ext), A0, st, bvals)
            warm = st.to_field(_blend_previous(prev, st, u0))
        try:
            res = newton_solve(phi, r, cfg, warm_start=warm, st=st)
        except EllipticityLossError as exc:
            raise EllipticityLossError(f"r={r}: {exc}") from exc
        if prev is not None:
            ids = prev.stencils.lookup(st.index_coords)
            have = ids >= 0
            prev_vals = prev.stencils.flat_from_field(prev.field)
            new_vals = st.flat_from_field(res.field)
            res.log["max_change_on_previous_mask"] = float(
                np.max(np.abs(new_vals[have] - prev_vals[ids[have]]))
            )
        results.append(res)
        if not res.converged:
            break
        prev = res
    return results
