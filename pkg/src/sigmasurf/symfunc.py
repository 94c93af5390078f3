"""Elementary symmetric polynomials, truncations, cone tests, and the dual
curvature function.

Everything here is pure computation on plain ``numpy`` arrays.  Index
conventions: positions inside a curvature vector are 0-based throughout the
code and in all external file formats (the mathematical literature customarily
counts from 1; the shift is mechanical).

The central objects are

* ``sigma(lam, k, excl)`` -- the k-th elementary symmetric polynomial of the
  entries of ``lam`` outside the excluded index set,
* the Garding cone test ``gaarding_test`` (sigma_1 .. sigma_k all positive),
* ``f_quotient`` -- the degree-one curvature function
  ``(sigma_n / sigma_1) ** (1 / (n - 1))`` acting on curvature radii, and its
  derivative as a matrix function.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CurvatureVector",
    "as_values",
    "esym_all",
    "esym_without",
    "sigma",
    "sigma_grad",
    "sigma_hess",
    "gaarding_test",
    "f_quotient",
    "f_quotient_grad",
    "f_matrix_derivative",
    "check_symmetric",
]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CurvatureVector:
    """Ordered tuple of principal curvatures with an optional cone tag.

    ``cone_k`` asserts membership in the Garding cone Gamma_k; attaching a tag
    that the vector does not satisfy raises immediately, so a tagged vector is
    always a certified one.
    """

    values: np.ndarray
    cone_k: int | None = field(default=None)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 2:
            raise ValueError("curvature vector must be 1-d with n >= 2 entries")
        if not np.all(np.isfinite(vals)):
            raise ValueError("curvature vector entries must be finite")
        object.__setattr__(self, "values", vals)
        if self.cone_k is not None:
            if not gaarding_test(vals, self.cone_k):
                raise ValueError(
                    f"vector is not in the Garding cone Gamma_{self.cone_k}"
                )

    @property
    def n(self) -> int:
        return self.values.size


def as_values(lam) -> np.ndarray:
    """Accept a CurvatureVector or any array-like; return a float 1-d array."""
    if isinstance(lam, CurvatureVector):
        return lam.values
    vals = np.asarray(lam, dtype=float)
    if vals.ndim != 1:
        raise ValueError("expected a 1-d vector of curvatures")
    return vals


# ---------------------------------------------------------------------------
# elementary symmetric polynomials
# ---------------------------------------------------------------------------

def esym_all(values: np.ndarray) -> np.ndarray:
    """All elementary symmetric polynomials e_0 .. e_m of ``values``.

    ``values`` may have shape ``(..., m)``; the result has shape
    ``(..., m + 1)`` with ``out[..., j] = sigma_j``.  Computed by the stable
    coefficient recurrence for ``prod(x + v_i)`` (never by inclusion-
    exclusion, which cancels catastrophically for mixed signs).
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[-1]
    out = np.zeros(values.shape[:-1] + (m + 1,), dtype=float)
    out[..., 0] = 1.0
    for i in range(m):
        v = values[..., i : i + 1]
        out[..., 1 : i + 2] = out[..., 1 : i + 2] + v * out[..., 0 : i + 1]
    return out


def esym_without(values: np.ndarray, excl: tuple[int, ...]) -> np.ndarray:
    """``esym_all`` of ``values`` with the 0-based positions ``excl`` removed.

    Batched over leading axes; ``excl`` applies to the last axis.
    """
    values = np.asarray(values, dtype=float)
    m = values.shape[-1]
    excl = _check_excl(excl, m)
    if excl:
        keep = [i for i in range(m) if i not in excl]
        values = values[..., keep]
    return esym_all(values)


def _check_excl(excl, m: int) -> tuple[int, ...]:
    excl = tuple(int(i) for i in excl)
    for i in excl:
        if not 0 <= i < m:
            raise IndexError(f"excluded index {i} out of range for n={m}")
    if len(set(excl)) != len(excl):
        raise ValueError("excluded indices must be distinct")
    return excl


def sigma(lam, k: int, excl=()) -> float:
    """k-th elementary symmetric polynomial of the retained entries.

    ``excl`` lists 0-based positions removed before evaluation.  By
    convention ``sigma_0 = 1`` and ``sigma_k = 0`` whenever fewer than ``k``
    entries remain.
    """
    vals = as_values(lam)
    if k < 0:
        raise ValueError("sigma index k must be nonnegative")
    coeffs = esym_without(vals, tuple(excl))
    if k >= coeffs.shape[-1]:
        return 0.0
    return float(coeffs[k])


def sigma_grad(lam, k: int) -> np.ndarray:
    """Gradient of sigma_k: component p is ``sigma(lam, k - 1, {p})``."""
    vals = as_values(lam)
    n = vals.size
    if not 1 <= k <= n:
        raise ValueError(f"sigma_grad requires 1 <= k <= n, got k={k}, n={n}")
    return np.array([sigma(vals, k - 1, (p,)) for p in range(n)])


def sigma_hess(lam, k: int) -> np.ndarray:
    """Second derivative of sigma_k in the eigenvalue variables.

    Entry (p, q) is ``sigma_{k-2}(lam | p q)`` off the diagonal; the diagonal
    vanishes identically (sigma_k is affine in each single variable).
    """
    vals = as_values(lam)
    n = vals.size
    if not 2 <= k <= n:
        raise ValueError(f"sigma_hess requires 2 <= k <= n, got k={k}, n={n}")
    out = np.zeros((n, n))
    for p in range(n):
        for q in range(p + 1, n):
            out[p, q] = out[q, p] = sigma(vals, k - 2, (p, q))
    return out


def gaarding_test(lam, k: int) -> bool:
    """True iff sigma_m(lam) > 0 strictly for every m = 1 .. k.

    Exact zeros on the boundary are rejected; no tolerance band is applied
    (callers that need slack should perturb before testing).
    """
    vals = as_values(lam)
    n = vals.size
    if not 1 <= k <= n:
        raise ValueError(f"cone order must satisfy 1 <= k <= n, got k={k}")
    coeffs = esym_all(vals)
    return bool(np.all(coeffs[1 : k + 1] > 0.0))


# ---------------------------------------------------------------------------
# the curvature function F = (sigma_n / sigma_1) ** (1 / (n - 1))
# ---------------------------------------------------------------------------

def f_quotient(lamstar) -> float:
    """Quotient curvature function of a vector of curvature radii.

    For positive ``lamstar`` this is the function whose unit level set
    encodes the constant sigma_{n-1} curvature equation in the dual picture:
    ``f_quotient(1 / kappa) * sigma_{n-1}(kappa) ** (1 / (n-1)) == 1``.
    """
    vals = as_values(lamstar)
    n = vals.size
    coeffs = esym_all(vals)
    s1, sn = coeffs[1], coeffs[n]
    if s1 == 0.0:
        raise ZeroDivisionError("sigma_1 of the argument vanishes")
    rad = sn / s1
    if rad <= 0.0:
        raise ValueError("sigma_n / sigma_1 must be positive")
    return float(rad ** (1.0 / (n - 1)))


def f_quotient_grad(lamstar) -> np.ndarray:
    """Gradient of ``f_quotient`` in the eigenvalue variables.

    d/dlam_i of (sigma_n / sigma_1)^(1/(n-1)) equals
    ``f / (n-1) * (sigma_{n-1}(lam|i) / sigma_n - 1 / sigma_1)``; well defined
    under repeated eigenvalues, which is why the matrix derivative below can
    use it directly.
    """
    vals = as_values(lamstar)
    n = vals.size
    f = f_quotient(vals)
    coeffs = esym_all(vals)
    s1, sn = coeffs[1], coeffs[n]
    grad_sn = np.array([sigma(vals, n - 1, (i,)) for i in range(n)])
    return f / (n - 1) * (grad_sn / sn - 1.0 / s1)


def check_symmetric(M: np.ndarray) -> np.ndarray:
    """Validate that ``M`` is a square symmetric float matrix as stored."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.array_equal(M, M.T):
        raise ValueError("matrix is not symmetric as stored")
    return M


def f_matrix_derivative(M) -> np.ndarray:
    """First derivative of ``f_quotient`` as a matrix function.

    Returns the symmetric matrix ``sum_i f_i v_i v_i^T`` where ``v_i`` are
    orthonormal eigenvectors of ``M`` and ``f_i`` the gradient of
    ``f_quotient`` at the eigenvalues.  For diagonal input the result is
    diagonal with the gradient on the diagonal.
    """
    M = check_symmetric(M)
    try:
        eigvals, eigvecs = np.linalg.eigh(M)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise ValueError("eigendecomposition failed") from exc
    if np.any(eigvals <= 0.0):
        raise ValueError("matrix eigenvalues must be positive (elliptic domain)")
    grad = f_quotient_grad(eigvals)
    out = (eigvecs * grad) @ eigvecs.T
    return 0.5 * (out + out.T)
