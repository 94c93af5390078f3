"""Kernel matrices of the convexity inequality and their certification.

Given a curvature vector ``lam`` with a distinguished pivot entry, this module
builds the five ``(n-1) x (n-1)`` matrices

* ``T`` -- rank-one outer product of the near-top truncated polynomials,
* ``S`` -- the symmetric kernel whose positive semidefiniteness drives the
  convexity estimate,
* ``A``, ``B`` -- the rank-two / scaled-cofactor split of ``S`` with
  ``S = A + B + sigma_{n-2}(lam|pivot) * Id``,
* ``R = T (*) S`` -- the Hadamard product that is the actual quadratic form,

evaluates the reduced quadratic forms two independent ways, implements the
closed-form principal minors (with brute-force determinant oracles), and
certifies positive semidefiniteness by randomized sampling of the Garding
cone slice ``sigma_{n-1} = 1``.

Notation used in comments and docstrings: ``s(k | i j)`` abbreviates the k-th
elementary symmetric polynomial with positions i, j removed (0-based).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .symfunc import as_values, esym_all, esym_without, gaarding_test, sigma

__all__ = [
    "KernelMatrices",
    "MinorIndex",
    "PsdReport",
    "build_kernel",
    "quadratic_form_qs",
    "reduced_inequality_lhs",
    "reduced_inequality_batch",
    "minor_closed_form",
    "minor_bruteforce",
    "minor_scale",
    "minor_family_sum",
    "minor_family_scale",
    "entry_matrices",
    "principal_minor_sum",
    "poly_coef_p",
    "poly_coef_q",
    "mu_case_identities",
    "sample_cone",
    "sample_mu_branch",
    "normalize_slice",
    "build_kernel_batch",
    "psd_certify",
]

MINOR_VARIANTS = ("c", "c_cofactor", "b", "mixed_row", "mixed_two_rows", "s")


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class KernelMatrices:
    """The kernel matrices of one curvature vector and pivot choice.

    Rows/columns are indexed by the non-pivot positions of ``lam`` in stored
    order (``rest``); entry ``(a, b)`` refers to original positions
    ``rest[a], rest[b]``.
    """

    n: int
    lam: np.ndarray
    pivot: int
    rest: tuple[int, ...]
    T: np.ndarray
    S: np.ndarray
    A: np.ndarray
    B: np.ndarray
    R: np.ndarray


@dataclass(frozen=True)
class MinorIndex:
    """Selector for one principal minor of the kernel entry families.

    ``indices`` are strictly increasing 0-based non-pivot positions.  The
    ``variant`` picks the entry family; ``row`` / ``rows`` select which rows
    of a B-minor are replaced by A-rows (members of ``indices``), and
    ``cofactor`` holds the (row, column) positions deleted from a C-minor
    (0-based positions within ``indices``).
    """

    indices: tuple[int, ...]
    variant: str
    row: int | None = None
    rows: tuple[int, int] | None = None
    cofactor: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if self.variant not in MINOR_VARIANTS:
            raise ValueError(f"unknown minor variant {self.variant!r}")
        if list(self.indices) != sorted(set(self.indices)):
            raise ValueError("minor indices must be strictly increasing")
        if self.variant == "mixed_two_rows":
            if self.rows is None or len(self.rows) != 2:
                raise ValueError("mixed_two_rows requires rows=(p, q)")
            p, q = self.rows
            if p == q or p not in self.indices or q not in self.indices:
                raise ValueError("rows must be two distinct members of indices")
        if self.variant == "mixed_row" and self.row is not None:
            if self.row not in self.indices:
                raise ValueError("row must be a member of indices")
        if self.variant == "c_cofactor":
            if self.cofactor is None:
                raise ValueError("c_cofactor requires cofactor=(l, k)")
            l, k = self.cofactor
            m = len(self.indices)
            if not (0 <= l < m and 0 <= k < m) or l == k:
                raise ValueError("cofactor positions must be distinct and in range")


@dataclass(frozen=True)
class PsdReport:
    """Result of a randomized positive-semidefiniteness certification run."""

    n: int
    samples: int
    seed: int
    boundary_bias: float
    min_eig_S_normalized: float
    min_eig_R_normalized: float
    argmin_lambda: list = field(default_factory=list)
    argmin_lambda_S: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "samples": self.samples,
            "seed": self.seed,
            "boundary_bias": self.boundary_bias,
            "min_eig_S_normalized": self.min_eig_S_normalized,
            "min_eig_R_normalized": self.min_eig_R_normalized,
            "argmin_lambda": list(self.argmin_lambda),
            "argmin_lambda_S": list(self.argmin_lambda_S),
        }


def _sigma_ext(vals: np.ndarray, k: int, excl=()) -> float:
    """``sigma`` extended by the convention sigma_k = 0 for k < 0.

    The closed-form minor formulas hit negative truncation orders exactly
    when the corresponding determinant vanishes, so the extension is the
    value the formulas mean.
    """
    if k < 0:
        return 0.0
    return sigma(vals, k, excl)


def _resolve_pivot(vals: np.ndarray, pivot: int | None) -> int:
    # The theorem holds pivot by pivot; the minimum entry is the hard branch.
    if pivot is None:
        return int(np.argmin(vals))
    pivot = int(pivot)
    if not 0 <= pivot < vals.size:
        raise IndexError(f"pivot {pivot} out of range")
    return pivot


# ---------------------------------------------------------------------------
# batched sigma tables relative to a pivot at position 0
# ---------------------------------------------------------------------------

def _pivot_first(vals: np.ndarray, pivot: int) -> np.ndarray:
    n = vals.shape[-1]
    order = [pivot] + [i for i in range(n) if i != pivot]
    return vals[..., order]


def _kernel_entries(lams: np.ndarray):
    """Entry families for pivot-first batches ``lams`` of shape (..., n).

    Returns ``(T, S, A, B, C)`` with shape ``(..., n-1, n-1)`` where matrix
    index ``a`` corresponds to entry ``a + 1`` of the pivot-first vector.
    """
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[-1]
    if n < 3:
        raise ValueError("kernel matrices need dimension n >= 3")
    m = n - 1
    lead = lams.shape[:-1]
    lam1 = lams[..., 0]

    s_n2_1 = esym_without(lams, (0,))[..., n - 2]   # s(n-2 | pivot)
    s_n1_1 = esym_without(lams, (0,))[..., n - 1]   # s(n-1 | pivot)

    s_n2_1p = np.empty(lead + (m,))                 # s(n-2 | pivot p)
    s_n3_1p = np.empty(lead + (m,))                 # s(n-3 | pivot p)
    s_n2_p = np.empty(lead + (m,))                  # s(n-2 | p)
    for a in range(m):
        tab = esym_without(lams, (0, a + 1))
        s_n2_1p[..., a] = tab[..., n - 2]
        s_n3_1p[..., a] = tab[..., n - 3]
        s_n2_p[..., a] = esym_without(lams, (a + 1,))[..., n - 2]

    s_n3_1pq = np.zeros(lead + (m, m))              # s(n-3 | pivot p q)
    for a in range(m):
        for b in range(a + 1, m):
            v = esym_without(lams, (0, a + 1, b + 1))[..., n - 3]
            s_n3_1pq[..., a, b] = v
            s_n3_1pq[..., b, a] = v

    lam_rest = lams[..., 1:]
    pair_sum = lam_rest[..., :, None] + lam_rest[..., None, :]

    eye = np.eye(m)
    off = 1.0 - eye

    T = (s_n1_1[..., None, None] * s_n3_1pq) * off
    _put_diag(T, s_n2_1p**2)

    S = (s_n2_1[..., None, None]
         + (pair_sum - 2.0 * lam1[..., None, None]) * s_n3_1pq) * off
    _put_diag(S, 2.0 * s_n2_1[..., None] + 2.0 * s_n2_p)

    A = (pair_sum * s_n3_1pq + s_n2_1[..., None, None]) * off
    _put_diag(A, 2.0 * s_n2_1p + s_n2_1[..., None])

    C = -s_n3_1pq * off
    _put_diag(C, s_n3_1p)
    B = 2.0 * lam1[..., None, None] * C

    return T, S, A, B, C


def _put_diag(mats: np.ndarray, diag: np.ndarray) -> None:
    m = mats.shape[-1]
    idx = np.arange(m)
    mats[..., idx, idx] = diag


def build_kernel_batch(lams: np.ndarray):
    """Batched ``(T, S, R)`` for pivot-first vectors ``lams`` of shape (..., n)."""
    T, S, _, _, _ = _kernel_entries(lams)
    return T, S, T * S


def build_kernel(lam, pivot: int | None = None) -> KernelMatrices:
    """Assemble the kernel matrices of ``lam`` for the given pivot entry.

    The pivot defaults to the position of the minimum entry.  Requires
    ``n >= 3``.
    """
    vals = as_values(lam)
    n = vals.size
    if n < 3:
        raise ValueError("kernel matrices need dimension n >= 3")
    pivot = _resolve_pivot(vals, pivot)
    rest = tuple(i for i in range(n) if i != pivot)
    T, S, A, B, _ = _kernel_entries(_pivot_first(vals, pivot))
    return KernelMatrices(
        n=n, lam=vals, pivot=pivot, rest=rest, T=T, S=S, A=A, B=B, R=T * S
    )


# ---------------------------------------------------------------------------
# quadratic forms
# ---------------------------------------------------------------------------

def quadratic_form_qs(lam, xi, pivot: int | None = None) -> float:
    """Quadratic form of S evaluated from the coefficient formulas directly.

    Deliberately reimplements the entries with scalar ``sigma`` calls, so it
    cross-checks ``build_kernel`` rather than reusing it.
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    rest = [i for i in range(n) if i != pivot]
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (n - 1,):
        raise ValueError(f"xi must have length n-1={n - 1}")
    lam1 = vals[pivot]
    s_n2_1 = sigma(vals, n - 2, (pivot,))
    total = 0.0
    for a, p in enumerate(rest):
        total += (2.0 * s_n2_1 + 2.0 * sigma(vals, n - 2, (p,))) * xi[a] ** 2
    for a, p in enumerate(rest):
        for b, q in enumerate(rest):
            if a == b:
                continue
            coeff = s_n2_1 + (vals[p] + vals[q] - 2.0 * lam1) * sigma(
                vals, n - 3, (pivot, p, q)
            )
            total += coeff * xi[a] * xi[b]
    return float(total)


def reduced_inequality_batch(lams: np.ndarray, hs: np.ndarray):
    """Both sides of the reduced convexity inequality, batched.

    ``lams`` are pivot-first vectors of shape (..., n); ``hs`` has shape
    (..., n-1) and holds the second-fundamental-form derivatives of the
    non-pivot entries.  Returns ``(direct, quad)`` where ``direct`` evaluates
    the symmetric-function derivative definition with the pivot derivative
    eliminated through the differentiated equation, and ``quad`` is the
    quadratic form of ``R``.  The two agree identically in exact arithmetic.
    """
    lams = np.asarray(lams, dtype=float)
    hs = np.asarray(hs, dtype=float)
    n = lams.shape[-1]
    m = n - 1
    lead = lams.shape[:-1]

    tab1 = np.empty(lead + (n, 2))      # [:, i, :] = (s(n-2 | i), s(n-1 | i))
    for i in range(n):
        t = esym_without(lams, (i,))
        tab1[..., i, 0] = t[..., n - 2]
        tab1[..., i, 1] = t[..., n - 1]

    s_n2_pq = np.zeros(lead + (n, n))   # s(n-2 | p q)
    s_n3_pq = np.zeros(lead + (n, n))   # s(n-3 | p q)
    for p in range(n):
        for q in range(p + 1, n):
            t = esym_without(lams, (p, q))
            s_n2_pq[..., p, q] = s_n2_pq[..., q, p] = t[..., n - 2]
            s_n3_pq[..., p, q] = s_n3_pq[..., q, p] = t[..., n - 3]

    # Full derivative vector with the pivot component eliminated.
    H = np.empty(lead + (n,))
    H[..., 1:] = hs
    H[..., 0] = -np.sum(tab1[..., 1:, 0] * hs, axis=-1) / tab1[..., 0, 0]

    # Diagonal block: j ranges over non-pivot entries.
    diag_coeff = (
        tab1[..., 1:, 0] * s_n2_pq[..., 0, 1:]
        - tab1[..., 1:, 1] * s_n3_pq[..., 0, 1:]
    )
    term1 = 2.0 * np.sum(diag_coeff * hs**2, axis=-1)

    # Off-diagonal block over all ordered pairs p != q (pivot included).
    pair_coeff = (
        tab1[..., 0, 0, None, None] * s_n2_pq
        - tab1[..., 0, 1, None, None] * s_n3_pq
    )
    HH = H[..., :, None] * H[..., None, :]
    idx = np.arange(n)
    off_mask = np.ones((n, n))
    off_mask[idx, idx] = 0.0
    term2 = np.sum(pair_coeff * HH * off_mask, axis=(-2, -1))

    direct = tab1[..., 0, 0] * (term1 - term2)

    _, _, R = build_kernel_batch(lams)
    quad = np.einsum("...a,...ab,...b->...", hs, R, hs)
    return direct, quad


def reduced_inequality_lhs(lam, h, pivot: int | None = None):
    """Scalar form of :func:`reduced_inequality_batch` with validation.

    Requires ``lam`` in the Garding cone Gamma_{n-1} normalized to
    ``sigma_{n-1}(lam) = 1`` (within 1e-10).
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    if not gaarding_test(vals, n - 1):
        raise ValueError("lam must lie in the Garding cone Gamma_{n-1}")
    sn1 = sigma(vals, n - 1)
    if abs(sn1 - 1.0) > 1e-10:
        raise ValueError(f"lam must satisfy sigma_(n-1) = 1, got {sn1!r}")
    h = np.asarray(h, dtype=float)
    if h.shape != (n - 1,):
        raise ValueError(f"h must have length n-1={n - 1}")
    direct, quad = reduced_inequality_batch(_pivot_first(vals, pivot), h)
    return float(direct), float(quad)


# ---------------------------------------------------------------------------
# principal minors: closed forms and determinant oracles
# ---------------------------------------------------------------------------

def _minor_positions(vals: np.ndarray, pivot: int, indices: tuple[int, ...]):
    n = vals.size
    for i in indices:
        if not 0 <= i < n or i == pivot:
            raise IndexError(f"minor index {i} invalid for n={n}, pivot={pivot}")
    rest = [i for i in range(n) if i != pivot]
    return [rest.index(i) for i in indices]


def minor_closed_form(lam, idx: MinorIndex, pivot: int | None = None) -> float:
    """Closed-form value of the selected principal minor.

    Per-row mixed minors have no closed form; for ``mixed_row`` with
    ``row=None`` the value is the closed-form SUM over all row choices.
    The ``s`` variant has no closed form either (only the sum over all
    minors of one size does; see :func:`principal_minor_sum`).
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    _minor_positions(vals, pivot, idx.indices)
    m = len(idx.indices)
    lam1 = vals[pivot]
    s_n2_1 = sigma(vals, n - 2, (pivot,))
    excl = (pivot,) + idx.indices

    if idx.variant == "c":
        return float(s_n2_1 ** (m - 1) * _sigma_ext(vals, n - m - 2, excl))
    if idx.variant == "c_cofactor":
        l, k = idx.cofactor
        sign = -1.0 if (l + k) % 2 else 1.0
        return float(sign * s_n2_1 ** (m - 2) * _sigma_ext(vals, n - m - 1, excl))
    if idx.variant == "b":
        return float(
            (2.0 * lam1) ** m * s_n2_1 ** (m - 1) * _sigma_ext(vals, n - m - 2, excl)
        )
    if idx.variant == "mixed_row":
        if idx.row is not None:
            raise ValueError("per-row mixed minors are brute-force only")
        hat = sum(
            _sigma_ext(vals, n - m - 1, (pivot,) + tuple(j for j in idx.indices if j != s))
            for s in idx.indices
        )
        return float(
            (2.0 * lam1) ** (m - 1)
            * s_n2_1 ** (m - 1)
            * ((m + 1) * m * _sigma_ext(vals, n - m - 1, excl) + hat)
        )
    if idx.variant == "mixed_two_rows":
        p, q = idx.rows
        return float(
            -((2.0 * lam1) ** (m - 2))
            * s_n2_1 ** (m - 2)
            * (vals[p] - vals[q]) ** 2
            * sigma(vals, n - 3, (pivot, p, q))
            * _sigma_ext(vals, n - m - 1, excl)
        )
    raise ValueError(f"no closed form for variant {idx.variant!r}")


def entry_matrices(lam, pivot: int | None = None):
    """The raw entry families ``(T, S, A, B, C)`` for one vector and pivot."""
    vals = as_values(lam)
    pivot = _resolve_pivot(vals, pivot)
    T, S, A, B, C = _kernel_entries(_pivot_first(vals, pivot)[None, :])
    return T[0], S[0], A[0], B[0], C[0]


def _minor_submatrices(vals: np.ndarray, idx: MinorIndex, pivot: int):
    """The list of submatrices whose determinants the brute-force minor sums."""
    pos = _minor_positions(vals, pivot, idx.indices)
    _, S, A, B, C = entry_matrices(vals, pivot)

    if idx.variant == "c":
        return [C[np.ix_(pos, pos)]]
    if idx.variant == "c_cofactor":
        l, k = idx.cofactor
        sub = C[np.ix_(pos, pos)]
        return [np.delete(np.delete(sub, l, axis=0), k, axis=1)]
    if idx.variant == "b":
        return [B[np.ix_(pos, pos)]]
    if idx.variant == "s":
        return [S[np.ix_(pos, pos)]]
    if idx.variant == "mixed_row":
        rows = idx.indices if idx.row is None else (idx.row,)
        subs = []
        for r in rows:
            sub = B[np.ix_(pos, pos)].copy()
            a = idx.indices.index(r)
            sub[a, :] = A[np.ix_([pos[a]], pos)]
            subs.append(sub)
        return subs
    if idx.variant == "mixed_two_rows":
        p, q = idx.rows
        sub = B[np.ix_(pos, pos)].copy()
        for r in (p, q):
            a = idx.indices.index(r)
            sub[a, :] = A[np.ix_([pos[a]], pos)]
        return [sub]
    raise ValueError(f"unknown variant {idx.variant!r}")


def minor_bruteforce(lam, idx: MinorIndex, pivot: int | None = None) -> float:
    """Evaluate the selected minor as a plain determinant (LU elimination).

    This is the oracle side: entries are assembled from their definitions and
    the determinant is computed numerically, with no use of the closed-form
    identities.
    """
    vals = as_values(lam)
    pivot = _resolve_pivot(vals, pivot)
    subs = _minor_submatrices(vals, idx, pivot)
    return float(sum(np.linalg.det(sub) for sub in subs))


def minor_scale(lam, idx: MinorIndex, pivot: int | None = None) -> float:
    """Hadamard-bound magnitude of the brute-force minor.

    Sum of the products of row norms of the evaluated submatrices; the
    natural denominator for relative closed-form/oracle comparisons when the
    determinant itself vanishes.
    """
    vals = as_values(lam)
    pivot = _resolve_pivot(vals, pivot)
    subs = _minor_submatrices(vals, idx, pivot)
    total = 0.0
    for sub in subs:
        if sub.size == 0:
            total += 1.0
        else:
            total += float(np.prod(np.linalg.norm(sub, axis=1)))
    return total


def minor_family_sum(
    lam,
    kind: str,
    outer: int,
    inner: int,
    method: str = "closed",
    pivot: int | None = None,
    enumerate_outer: bool = False,
) -> float:
    """Sum of mixed/B minors over the nested subset family.

    Sums ``D(J)`` over all inner index sets ``J`` of size ``inner`` contained
    in outer sets of size ``outer`` (each J weighted by the number of outer
    sets containing it).  ``kind`` is one of ``'b'``, ``'mixed_row'``,
    ``'mixed_two_rows'``.  With ``enumerate_outer=True`` the brute-force path
    literally enumerates the double family instead of counting multiplicity.
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    rest = [i for i in range(n) if i != pivot]
    if not 1 <= inner <= outer <= n - 1:
        raise ValueError("need 1 <= inner <= outer <= n-1")
    k = outer + 1
    s = inner + 1
    lam1 = vals[pivot]
    s_n2_1 = sigma(vals, n - 2, (pivot,))

    if method == "closed":
        fac = math.factorial
        if kind == "b":
            coeff = s * fac(n - s) // (fac(k - s) * fac(n - k))
            return float(
                coeff * (2.0 * lam1) ** (s - 1) * s_n2_1 ** (s - 2)
                * _sigma_ext(vals, n - s - 1, (pivot,))
            )
        if kind == "mixed_row":
            coeff = (n + 1) * (s - 1) * fac(n - s) // (fac(k - s) * fac(n - k))
            return float(
                coeff * (2.0 * lam1) ** (s - 2) * s_n2_1 ** (s - 2)
                * _sigma_ext(vals, n - s, (pivot,))
            )
        if kind == "mixed_two_rows":
            if inner < 2:
                raise ValueError("mixed_two_rows needs inner >= 2")
            c1 = (n - 1) * (s - 1) * fac(n - s) // (fac(k - s) * fac(n - k))
            c2 = fac(n - s + 1) // (fac(k - s) * fac(n - k))
            return float(
                c1 * (2.0 * lam1) ** (s - 3) * s_n2_1 ** (s - 3)
                * sigma(vals, n - 1, (pivot,)) * _sigma_ext(vals, n - s, (pivot,))
                - c2 * (2.0 * lam1) ** (s - 3) * s_n2_1 ** (s - 2)
                * _sigma_ext(vals, n - s + 1, (pivot,))
            )
        raise ValueError(f"unknown family kind {kind!r}")

    if method != "bruteforce":
        raise ValueError("method must be 'closed' or 'bruteforce'")

    def one(J: tuple[int, ...], fn) -> float:
        if kind == "b":
            return fn(vals, MinorIndex(J, "b"), pivot)
        if kind == "mixed_row":
            return fn(vals, MinorIndex(J, "mixed_row"), pivot)
        if kind == "mixed_two_rows":
            return sum(
                fn(vals, MinorIndex(J, "mixed_two_rows", rows=(p, q)), pivot)
                for p, q in combinations(J, 2)
            )
        raise ValueError(f"unknown family kind {kind!r}")

    total = 0.0
    if enumerate_outer:
        for I in combinations(rest, outer):
            for J in combinations(I, inner):
                total += one(J, minor_bruteforce)
    else:
        mult = math.comb(n - s, k - s)  # outer sets containing a fixed J
        for J in combinations(rest, inner):
            total += mult * one(J, minor_bruteforce)
    return float(total)


def minor_family_scale(
    lam, kind: str, outer: int, inner: int, pivot: int | None = None
) -> float:
    """Hadamard-bound magnitude of the brute-force family sum."""
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    rest = [i for i in range(n) if i != pivot]
    mult = math.comb(n - inner - 1, outer - inner)
    total = 0.0
    for J in combinations(rest, inner):
        if kind == "mixed_two_rows":
            total += mult * sum(
                minor_scale(vals, MinorIndex(J, "mixed_two_rows", rows=(p, q)), pivot)
                for p, q in combinations(J, 2)
            )
        else:
            total += mult * minor_scale(vals, MinorIndex(J, kind), pivot)
    return float(total)


def poly_coef_p(n: int, k: int, s: int) -> int:
    """Exact integer coefficient P(s) of the minor-sum expansion."""
    return (
        (s + 1) * _fratio(n - s - 1, k - s - 1, n - k)
        + (n + 1) * (s + 1) * _fratio(n - s - 2, k - s - 2, n - k)
        - _fratio(n - s - 2, k - s - 3, n - k)
    )


def poly_coef_q(n: int, k: int, s: int) -> int:
    """Exact integer coefficient Q(s) of the minor-sum expansion."""
    return (n - 1) * (s + 2) * _fratio(n - s - 3, k - s - 3, n - k)


def _fratio(a: int, b: int, c: int) -> int:
    """a! / (b! c!) as an exact integer; zero when any argument is negative."""
    if a < 0 or b < 0 or c < 0:
        return 0
    num = math.factorial(a)
    den = math.factorial(b) * math.factorial(c)
    q, r = divmod(num, den)
    if r:
        raise ArithmeticError(f"factorial ratio {a}!/({b}!{c}!) is not integral")
    return q


def principal_minor_sum(
    lam, m: int, method: str = "bruteforce", pivot: int | None = None
) -> float:
    """Sum of all m-th principal minors of the kernel matrix S.

    ``method='bruteforce'`` sums determinants of all size-m principal
    submatrices; ``method='expansion'`` evaluates the closed polynomial in
    ``2 * lam[pivot]`` with the exact integer coefficients P, Q (valid on the
    ``lam[pivot] > 0`` branch only).
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    if not 1 <= m <= n - 1:
        raise ValueError(f"minor order must satisfy 1 <= m <= n-1, got {m}")
    rest = [i for i in range(n) if i != pivot]

    if method == "bruteforce":
        S = build_kernel(vals, pivot).S
        total = 0.0
        for pos in combinations(range(n - 1), m):
            total += float(np.linalg.det(S[np.ix_(pos, pos)]))
        return total

    if method != "expansion":
        raise ValueError("method must be 'bruteforce' or 'expansion'")
    lam1 = vals[pivot]
    if lam1 <= 0.0:
        raise ValueError(
            "expansion method requires lam[pivot] > 0 (use the mu-substitution "
            "branch otherwise)"
        )
    s_n2_1 = sigma(vals, n - 2, (pivot,))
    s_n1_1 = sigma(vals, n - 1, (pivot,))
    if m == 1:
        total = 0.0
        for p in rest:
            total += 2.0 * s_n2_1 + 2.0 * sigma(vals, n - 2, (p,))
        return float(total)

    k = m + 1
    x = 2.0 * lam1
    total = 0.0
    for s in range(0, k - 2):
        total += (
            x**s
            * s_n2_1 ** (k - 3)
            * (
                poly_coef_p(n, k, s) * s_n2_1 * _sigma_ext(vals, n - s - 2, (pivot,))
                + poly_coef_q(n, k, s) * s_n1_1 * _sigma_ext(vals, n - s - 3, (pivot,))
            )
        )
    total += (
        (k - 1) * (2 * n + 2 - k) * x ** (k - 2)
        * s_n2_1 ** (k - 2) * _sigma_ext(vals, n - k, (pivot,))
    )
    total += k * x ** (k - 1) * s_n2_1 ** (k - 2) * _sigma_ext(vals, n - k - 1, (pivot,))
    return float(total)


# ---------------------------------------------------------------------------
# mu-substitution identities (the lam[pivot] <= 0 branch)
# ---------------------------------------------------------------------------

def mu_case_identities(lam, pivot: int | None = None) -> dict:
    """Relative residuals of the reciprocal-substitution identities.

    Valid for ``lam`` in Gamma_{n-1} with ``sigma_{n-1}(lam) = 1`` and
    ``lam[pivot] <= 0`` (so all other entries are positive and their
    reciprocals ``mu`` are defined).  Returns the worst relative residual of

    * ``pivot_reconstruction`` -- the pivot entry recovered from the equation,
    * ``sigma_n3_expansion`` -- the two-term expansion of ``s(n-3 | pivot j)``,
    * ``diag_mu_form`` -- the diagonal S-entries in mu variables,
    * ``offdiag_mu_form`` -- the off-diagonal S-entries in mu variables.
    """
    vals = as_values(lam)
    n = vals.size
    pivot = _resolve_pivot(vals, pivot)
    if not gaarding_test(vals, n - 1):
        raise ValueError("lam must lie in the Garding cone Gamma_{n-1}")
    if abs(sigma(vals, n - 1) - 1.0) > 1e-8:
        raise ValueError("lam must satisfy sigma_(n-1) = 1")
    lam1 = vals[pivot]
    if lam1 > 0.0:
        raise ValueError("mu-substitution branch requires lam[pivot] <= 0")
    rest = [i for i in range(n) if i != pivot]
    rest_vals = vals[rest]
    if np.any(rest_vals == 0.0):
        raise ZeroDivisionError("non-pivot entries must be nonzero")
    mu = 1.0 / rest_vals
    mu_tab = esym_all(mu)
    s1_mu, sn1_mu = mu_tab[1], mu_tab[n - 1]

    s_n2_1 = sigma(vals, n - 2, (pivot,))
    s_n1_1 = sigma(vals, n - 1, (pivot,))

    def rel(lhs: float, rhs: float) -> float:
        return abs(lhs - rhs) / (abs(lhs) + abs(rhs) + 1e-300)

    res = {}
    res["pivot_reconstruction"] = rel(lam1, (1.0 - s_n1_1) / s_n2_1)

    worst = 0.0
    for j in rest:
        lhs = sigma(vals, n - 3, (pivot, j))
        rhs = s_n2_1 / vals[j] - s_n1_1 / vals[j] ** 2
        worst = max(worst, rel(lhs, rhs))
    res["sigma_n3_expansion"] = worst

    worst = 0.0
    for a, j in enumerate(rest):
        lhs = 2.0 * s_n2_1 + 2.0 * sigma(vals, n - 2, (j,))
        rhs = (2.0 * s1_mu**2 + 2.0 * mu[a] ** 2) / (s1_mu * sn1_mu) + (
            2.0 * sigma(vals, n - 3, (pivot, j)) / s_n2_1
        )
        worst = max(worst, rel(lhs, rhs))
    res["diag_mu_form"] = worst

    worst = 0.0
    for (a, p), (b, q) in combinations(list(enumerate(rest)), 2):
        lhs = s_n2_1 + (vals[p] + vals[q] - 2.0 * lam1) * sigma(
            vals, n - 3, (pivot, p, q)
        )
        rhs = (s1_mu**2 + (mu[a] + mu[b]) * s1_mu + 2.0 * mu[a] * mu[b]) / (
            s1_mu * sn1_mu
        ) - 2.0 * sigma(vals, n - 3, (pivot, p, q)) / s_n2_1
        worst = max(worst, rel(lhs, rhs))
    res["offdiag_mu_form"] = worst
    return res


# ---------------------------------------------------------------------------
# cone sampling and certification
# ---------------------------------------------------------------------------

def normalize_slice(lams: np.ndarray) -> np.ndarray:
    """Rescale each row so that sigma_{n-1} = 1 (unique positive scale)."""
    lams = np.asarray(lams, dtype=float)
    n = lams.shape[-1]
    sn1 = esym_all(lams)[..., n - 1]
    if np.any(sn1 <= 0.0):
        raise ValueError("sigma_(n-1) must be positive to normalize")
    return lams * sn1[..., None] ** (-1.0 / (n - 1))


def _cone_mask(lams: np.ndarray, k: int) -> np.ndarray:
    tab = esym_all(lams)
    return np.all(tab[..., 1 : k + 1] > 0.0, axis=-1)


def sample_cone(
    n: int,
    count: int,
    rng: np.random.Generator,
    k: int | None = None,
    normalize: bool = True,
    boundary_bias: float = 0.0,
    max_batches: int = 10_000,
) -> np.ndarray:
    """Draw ``count`` vectors from the Garding cone Gamma_k.

    Uniform directions on the sphere are rejection-filtered for cone
    membership; a ``boundary_bias`` fraction of the accepted samples is then
    pushed close to the cone boundary (line search toward a random exit
    direction) to stress near-degenerate margins.  With ``normalize=True``
    the result is rescaled onto the slice ``sigma_{n-1} = 1``.
    """
    if k is None:
        k = n - 1
    out = np.empty((count, n))
    got = 0
    batch = max(2048, 4 * count)
    tries = 0
    while got < count:
        tries += 1
        if tries > max_batches:
            raise RuntimeError("cone sampler failed to reach the target count")
        draw = rng.standard_normal((batch, n))
        draw /= np.linalg.norm(draw, axis=1, keepdims=True)
        keep = draw[_cone_mask(draw, k)]
        take = min(count - got, keep.shape[0])
        out[got : got + take] = keep[:take]
        got += take
    if boundary_bias > 0.0:
        nb = int(round(boundary_bias * count))
        if nb:
            idx = rng.choice(count, size=nb, replace=False)
            out[idx] = _push_to_boundary(out[idx], k, rng)
    if normalize:
        out = normalize_slice(out)
    return out


def _push_to_boundary(lams: np.ndarray, k: int, rng: np.random.Generator):
    """Move cone members close to the cone boundary along random rays."""
    nb, n = lams.shape
    d = rng.standard_normal((nb, n))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    t_hi = np.ones(nb)
    # double until outside (rays inside the recession cone are left alone)
    escaped = np.zeros(nb, dtype=bool)
    for _ in range(40):
        outside = ~_cone_mask(lams + t_hi[:, None] * d, k)
        escaped |= outside
        t_hi = np.where(outside, t_hi, 2.0 * t_hi)
        if escaped.all():
            break
    t_lo = np.zeros(nb)
    hi = t_hi.copy()
    for _ in range(60):
        mid = 0.5 * (t_lo + hi)
        inside = _cone_mask(lams + mid[:, None] * d, k)
        t_lo = np.where(inside, mid, t_lo)
        hi = np.where(inside, hi, mid)
    frac = rng.uniform(0.9, 0.999, size=nb)
    step = np.where(escaped, frac * t_lo, 0.0)
    return lams + step[:, None] * d


def sample_mu_branch(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Normalized cone samples with a nonpositive minimum entry.

    Constructive: positive entries are drawn and rescaled so their product is
    at least one, the remaining entry is recovered from the normalization
    identity (which makes sigma_{n-1} = 1 exact), and non-members of
    Gamma_{n-1} are rejected.  The nonpositive entry is stored first.
    """
    out = np.empty((count, n))
    got = 0
    guard = 0
    while got < count:
        guard += 1
        if guard > 10_000:
            raise RuntimeError("mu-branch sampler failed to converge")
        batch = max(1024, 2 * (count - got))
        rest = np.exp(rng.standard_normal((batch, n - 1)) * 0.5)
        # offset keeps 1 - target away from cancellation at the lam1 = 0 edge
        target = 1.001 + np.abs(rng.standard_normal(batch))
        prod = np.prod(rest, axis=1)
        rest *= (target / prod)[:, None] ** (1.0 / (n - 1))
        s_n2 = esym_all(rest)[..., n - 2]
        lam1 = (1.0 - target) / s_n2
        lams = np.concatenate([lam1[:, None], rest], axis=1)
        keep = lams[_cone_mask(lams, n - 1)]
        take = min(count - got, keep.shape[0])
        out[got : got + take] = keep[:take]
        got += take
    return out


def psd_certify(
    n: int,
    samples: int,
    seed: int,
    boundary_bias: float = 0.2,
    chunk: int = 20_000,
) -> PsdReport:
    """Randomized PSD certification of S and R on the normalized cone slice.

    Samples are drawn in fixed-size chunks with chunk-indexed RNG streams, so
    the report is deterministic for a given seed regardless of how the chunks
    are scheduled.  Eigenvalues are normalized by the largest absolute
    eigenvalue of the same matrix.
    """
    if n < 3:
        raise ValueError("certification needs n >= 3")
    if samples < 1:
        raise ValueError("need at least one sample")
    min_S = np.inf
    min_R = np.inf
    arg_S = None
    arg_R = None
    done = 0
    ci = 0
    while done < samples:
        take = min(chunk, samples - done)
        rng = np.random.default_rng(np.random.SeedSequence((seed, n, ci)))
        lams = sample_cone(
            n, take, rng, k=n - 1, normalize=True, boundary_bias=boundary_bias
        )
        lams = np.sort(lams, axis=1)  # pivot-first = minimum entry
        _, S, R = build_kernel_batch(lams)
        eig_S = np.linalg.eigvalsh(S)
        eig_R = np.linalg.eigvalsh(R)
        norm_S = eig_S[:, 0] / np.max(np.abs(eig_S), axis=1)
        norm_R = eig_R[:, 0] / np.max(np.abs(eig_R), axis=1)
        iS = int(np.argmin(norm_S))
        iR = int(np.argmin(norm_R))
        if norm_S[iS] < min_S:
            min_S = float(norm_S[iS])
            arg_S = lams[iS].tolist()
        if norm_R[iR] < min_R:
            min_R = float(norm_R[iR])
            arg_R = lams[iR].tolist()
        done += take
        ci += 1
    return PsdReport(
        n=n,
        samples=samples,
        seed=seed,
        boundary_bias=boundary_bias,
        min_eig_S_normalized=min_S,
        min_eig_R_normalized=min_R,
        argmin_lambda=arg_R or [],
        argmin_lambda_S=arg_S or [],
    )
