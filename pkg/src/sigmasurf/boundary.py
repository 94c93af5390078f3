"""Boundary data on the unit sphere and its configuration formats.

A :class:`BoundaryData` wraps a function of unit directions.  The solver
evaluates it at exact sphere intersections of the clipped stencils, so the
class must work at arbitrary directions, not just on a sample grid; tabulated
data is interpolated.  Derivative magnitudes are estimated by finite
differences of rotated samples and feed the default barrier amplitude.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np
from scipy.special import lpmv

__all__ = ["BoundaryData", "real_spherical_harmonic"]


def real_spherical_harmonic(l: int, m: int, dirs: np.ndarray) -> np.ndarray:
    """Real orthonormal spherical harmonic Y_{l,m} at unit directions (n=3)."""
    if abs(m) > l:
        raise ValueError("order must satisfy |m| <= l")
    x, y, z = dirs[:, 0], dirs[:, 1], dirs[:, 2]
    phi = np.arctan2(y, x)
    ct = np.clip(z, -1.0, 1.0)
    am = abs(m)
    norm = np.sqrt(
        (2 * l + 1)
        / (4.0 * np.pi)
        * math.factorial(l - am)
        / math.factorial(l + am)
    )
    P = lpmv(am, l, ct)
    if m == 0:
        return norm * P
    if m > 0:
        return np.sqrt(2.0) * norm * P * np.cos(am * phi)
    return np.sqrt(2.0) * norm * P * np.sin(am * phi)


class BoundaryData:
    """C^2 boundary function phi on the unit sphere S^{n-1}."""

    def __init__(self, n: int, fn, description: str = "callable"):
        if n not in (2, 3):
            raise ValueError("boundary data supports n = 2 or 3")
        self.n = n
        self._fn = fn
        self.description = description

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, n: int, value: float) -> "BoundaryData":
        value = float(value)
        return cls(n, lambda d: np.full(d.shape[0], value), f"const {value}")

    @classmethod
    def from_fourier(cls, sin_coeffs=(), cos_coeffs=(), const: float = 0.0):
        """n=2 data: const + sum a_k sin(k theta) + sum b_k cos(k theta).

        Coefficient lists hold ``[k, amplitude]`` pairs.
        """
        sin_coeffs = [(int(k), float(a)) for k, a in sin_coeffs]
        cos_coeffs = [(int(k), float(b)) for k, b in cos_coeffs]
        const = float(const)

        def fn(dirs):
            theta = np.arctan2(dirs[:, 1], dirs[:, 0])
            out = np.full(dirs.shape[0], const)
            for k, a in sin_coeffs:
                out += a * np.sin(k * theta)
            for k, b in cos_coeffs:
                out += b * np.cos(k * theta)
            return out

        return cls(2, fn, f"fourier sin={sin_coeffs} cos={cos_coeffs} const={const}")

    @classmethod
    def from_sphharm(cls, terms, const: float = 0.0) -> "BoundaryData":
        """n=3 data: const + sum of real spherical harmonics ``[l, m, amp]``."""
        terms = [(int(l), int(m), float(a)) for l, m, a in terms]
        const = float(const)

        def fn(dirs):
            out = np.full(dirs.shape[0], const)
            for l, m, a in terms:
                out += a * real_spherical_harmonic(l, m, dirs)
            return out

        return cls(3, fn, f"sphharm {terms} const={const}")

    @classmethod
    def from_table(cls, n: int, table) -> "BoundaryData":
        """Tabulated sphere samples.

        n=2 rows are ``(theta, value)`` (periodic linear interpolation);
        n=3 rows are ``(x, y, z, value)`` (inverse-distance weighting over the
        four nearest samples; adequate for dense tables only).
        """
        table = np.asarray(table, dtype=float)
        if n == 2:
            if table.ndim != 2 or table.shape[1] != 2:
                raise ValueError("n=2 table rows must be (theta, value)")
            order = np.argsort(table[:, 0] % (2 * np.pi))
            th = (table[:, 0] % (2 * np.pi))[order]
            va = table[:, 1][order]
            th_ext = np.concatenate([th, th[:1] + 2 * np.pi])
            va_ext = np.concatenate([va, va[:1]])

            def fn(dirs):
                theta = np.arctan2(dirs[:, 1], dirs[:, 0]) % (2 * np.pi)
                return np.interp(theta, th_ext, va_ext)

            return cls(2, fn, f"tabulated ({table.shape[0]} angles)")

        if table.ndim != 2 or table.shape[1] != 4:
            raise ValueError("n=3 table rows must be (x, y, z, value)")
        pts = table[:, :3]
        pts = pts / np.linalg.norm(pts, axis=1, keepdims=True)
        va = table[:, 3]

        def fn(dirs):
            d2 = np.maximum(
                2.0 - 2.0 * dirs @ pts.T, 1e-300
            )  # squared chordal distance
            out = np.empty(dirs.shape[0])
            k = min(4, pts.shape[0])
            nearest = np.argpartition(d2, k - 1, axis=1)[:, :k]
            rows = np.arange(dirs.shape[0])[:, None]
            w = 1.0 / d2[rows, nearest]
            out = np.sum(w * va[nearest], axis=1) / np.sum(w, axis=1)
            exact = d2.min(axis=1) < 1e-24
            if np.any(exact):
                out[exact] = va[np.argmin(d2[exact], axis=1)]
            return out

        return cls(3, fn, f"tabulated ({table.shape[0]} sphere points)")

    @classmethod
    def from_config(cls, n: int, cfg: dict) -> "BoundaryData":
        """Build from the JSON configuration fragment of the solve commands."""
        kind = cfg.get("kind")
        if kind == "const":
            return cls.constant(n, cfg.get("value", 0.0))
        if kind == "fourier":
            if n != 2:
                raise ValueError("fourier boundary data is for n=2")
            return cls.from_fourier(
                cfg.get("coeffs", ()), cfg.get("cos_coeffs", ()), cfg.get("const", 0.0)
            )
        if kind == "sphharm":
            if n != 3:
                raise ValueError("sphharm boundary data is for n=3")
            return cls.from_sphharm(cfg.get("coeffs", ()), cfg.get("const", 0.0))
        if kind == "tabulated":
            path = cfg.get("path")
            if path is None:
                raise ValueError("tabulated boundary data needs a 'path'")
            table = np.loadtxt(path, delimiter=",", skiprows=1)
            return cls.from_table(n, np.atleast_2d(table))
        raise ValueError(f"unknown boundary kind {kind!r}")

    # -- evaluation and estimates --------------------------------------------

    def evaluate(self, dirs: np.ndarray) -> np.ndarray:
        dirs = np.atleast_2d(np.asarray(dirs, dtype=float))
        if dirs.shape[1] != self.n:
            raise ValueError("direction dimension mismatch")
        norms = np.linalg.norm(dirs, axis=1, keepdims=True)
        if np.any(norms == 0.0):
            raise ValueError("zero direction")
        out = np.asarray(self._fn(dirs / norms), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError("boundary data produced non-finite values")
        return out

    def _sample_directions(self, count: int = 720) -> np.ndarray:
        if self.n == 2:
            th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
            return np.stack([np.cos(th), np.sin(th)], axis=1)
        i = np.arange(count, dtype=float) + 0.5  # Fibonacci sphere
        z = 1.0 - 2.0 * i / count
        rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        golden = np.pi * (3.0 - np.sqrt(5.0))
        return np.stack([rho * np.cos(golden * i), rho * np.sin(golden * i), z], axis=1)

    def _tangent_derivatives(self, delta: float = 1e-3):
        dirs = self._sample_directions()
        f0 = self.evaluate(dirs)
        grads = []
        seconds = []
        # rotate each sample direction inside great circles spanned with a
        # tangent frame; centered differences give the angular derivatives
        for t in _tangent_frames(dirs):
            fp = self.evaluate(np.cos(delta) * dirs + np.sin(delta) * t)
            fm = self.evaluate(np.cos(delta) * dirs - np.sin(delta) * t)
            grads.append((fp - fm) / (2 * delta))
            seconds.append((fp - 2 * f0 + fm) / delta**2)
        grad_norm = np.sqrt(np.sum(np.square(grads), axis=0))
        sec_norm = np.max(np.abs(seconds), axis=0)
        return f0, grad_norm, sec_norm

    def c0_estimate(self) -> float:
        return float(np.max(np.abs(self._tangent_derivatives()[0])))

    def c1_estimate(self) -> float:
        """Finite-difference estimate of |phi|_{C^1} on the sphere."""
        f0, g, _ = self._tangent_derivatives()
        return float(np.max(np.abs(f0)) + np.max(g))

    def c2_estimate(self) -> float:
        f0, g, s = self._tangent_derivatives()
        return float(np.max(np.abs(f0)) + np.max(g) + np.max(s))

    def fingerprint(self) -> str:
        """Stable hash of dense samples; identifies the data across reports."""
        vals = self.evaluate(self._sample_directions(256))
        payload = np.round(vals, 12).tobytes()
        return hashlib.sha256(payload).hexdigest()[:16]


def _tangent_frames(dirs: np.ndarray):
    n = dirs.shape[1]
    if n == 2:
        yield np.stack([-dirs[:, 1], dirs[:, 0]], axis=1)
        return
    helper = np.zeros_like(dirs)
    smallest = np.argmin(np.abs(dirs), axis=1)
    helper[np.arange(dirs.shape[0]), smallest] = 1.0
    t1 = np.cross(dirs, helper)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(dirs, t1)
    yield t1
    yield t2
