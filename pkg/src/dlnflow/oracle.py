"""Independent reference computations, used only for verification.

Nothing here shares code with the production paths it checks: gradients come
from central differences instead of the closed form, quadratic forms from
explicit double loops instead of matvecs, and the smallest generalized
eigenvalue from a self-contained Cholesky reduction plus cyclic Jacobi
rotations. Built for d up to ~32; no attempt at performance beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .scatter import ScatterPair


@dataclass(frozen=True)
class GeneralizedEigenResult:
    """Smallest eigenpair of s_w v = lambda s_b v.

    `v_min` has unit 2-norm and its first nonzero component is positive, so
    results are comparable across runs. `lambda_min` is strictly positive for
    an SPD pair.
    """

    lambda_min: float
    v_min: np.ndarray


def fd_gradient(f: Callable[[np.ndarray], float], w, h: float) -> np.ndarray:
    """Central-difference gradient (f(w + h e_i) - f(w - h e_i)) / (2h)."""
    if not h > 0:
        raise ValueError(f"step h must be positive, got {h}")
    w = np.asarray(w, dtype=np.float64)
    g = np.empty_like(w)
    for i in range(w.size):
        e = np.zeros_like(w)
        e[i] = h
        hi, lo = f(w + e), f(w - e)
        if not (np.isfinite(hi) and np.isfinite(lo)):
            raise ValueError(f"non-finite evaluation of f near coordinate {i}")
        g[i] = (hi - lo) / (2.0 * h)
    return g


def brute_quadratic_form(m, w) -> float:
    """Quadratic form w . M w by explicit double loop (no matvec)."""
    m = np.asarray(m, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    total = 0.0
    for i in range(w.size):
        for j in range(w.size):
            total += w[i] * m[i, j] * w[j]
    return total


def brute_rayleigh_loss(w, pair: ScatterPair) -> float:
    """Quotient loss recomputed entirely from double-loop quadratic forms."""
    return brute_quadratic_form(pair.s_w, w) / brute_quadratic_form(pair.s_b, w)


def cholesky_lower(m: np.ndarray) -> np.ndarray:
    """Lower-triangular R with m = R R^T; raises on a non-positive pivot."""
    m = np.asarray(m, dtype=np.float64)
    n = m.shape[0]
    r = np.zeros((n, n))
    for j in range(n):
        pivot = m[j, j] - r[j, :j] @ r[j, :j]
        if pivot <= 0.0:
            raise np.linalg.LinAlgError(f"non-positive pivot at column {j}: {pivot}")
        r[j, j] = np.sqrt(pivot)
        r[j + 1 :, j] = (m[j + 1 :, j] - r[j + 1 :, :j] @ r[j, :j]) / r[j, j]
    return r


def _solve_lower(r: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution for R x = b, R lower triangular; b may be a matrix."""
    b = np.array(b, dtype=np.float64)
    x = np.zeros_like(b)
    for i in range(r.shape[0]):
        x[i] = (b[i] - r[i, :i] @ x[:i]) / r[i, i]
    return x


def _solve_upper(rt: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution for R^T x = b, R^T upper triangular."""
    b = np.array(b, dtype=np.float64)
    n = rt.shape[0]
    x = np.zeros_like(b)
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - rt[i, i + 1 :] @ x[i + 1 :]) / rt[i, i]
    return x


def jacobi_eigh(a: np.ndarray, tol: float = 1e-12, max_sweeps: int = 60):
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps continue until the off-diagonal Frobenius norm is at or below
    `tol`, or below the rounding floor of the matrix scale, or stalls;
    convergence is quadratic so the extra sweeps past `tol` are cheap.
    Returns (eigenvalues, eigenvectors), column k of the second matching
    entry k of the first; eigenvalues are unsorted.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), v
    idx = np.arange(n)
    # Ill-conditioned reductions can leave the achievable off-norm above tol;
    # the rounding floor keeps the sweep loop from spinning in that case.
    floor = n * np.finfo(np.float64).eps * np.linalg.norm(a)
    target = max(tol, floor)

    def off_norm(m):
        return np.linalg.norm(m - np.diag(np.diag(m)))

    prev_off = np.inf
    for _ in range(max_sweeps):
        off = off_norm(a)
        if off <= target or off >= prev_off:
            break
        prev_off = off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                # Stable rotation angle: theta from the symmetric Schur form.
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                mask = (idx != p) & (idx != q)
                aip = a[mask, p].copy()
                aiq = a[mask, q].copy()
                a[mask, p] = a[p, mask] = c * aip - s * aiq
                a[mask, q] = a[q, mask] = s * aip + c * aiq
                app = a[p, p]
                aqq = a[q, q]
                a[p, p] = c * c * app - 2.0 * s * c * apq + s * s * aqq
                a[q, q] = s * s * app + 2.0 * s * c * apq + c * c * aqq
                a[p, q] = a[q, p] = 0.0
                vip = v[:, p].copy()
                v[:, p] = c * vip - s * v[:, q]
                v[:, q] = s * vip + c * v[:, q]
    else:
        raise np.linalg.LinAlgError(f"Jacobi sweeps did not converge below {target}")
    return np.diag(a).copy(), v


def generalized_eig_min(pair: ScatterPair) -> GeneralizedEigenResult:
    """Smallest generalized eigenpair of (s_w, s_b).

    Reduces to an ordinary symmetric problem through s_b = R R^T: the matrix
    A = R^-1 s_w R^-T has the same eigenvalues, with eigenvectors y = R^T v.
    A is diagonalized by `jacobi_eigh` and the minimal pair is mapped back.
    The reduction can lose eigenvector accuracy when s_b is ill-conditioned,
    so the vector is polished by two inverse-iteration steps on the shifted
    pencil s_w - sigma s_b (sigma just below the eigenvalue keeps it positive
    definite), then normalized with its first nonzero component positive.
    """
    r = cholesky_lower(pair.s_b)  # raises on non-PD input
    y = _solve_lower(r, pair.s_w)
    a = _solve_lower(r, y.T).T
    a = (a + a.T) / 2.0
    eigvals, eigvecs = jacobi_eigh(a)
    k = int(np.argmin(eigvals))
    lam = float(eigvals[k])
    v = _solve_upper(r.T, eigvecs[:, k])
    v = v / np.linalg.norm(v)
    try:
        shifted = cholesky_lower(pair.s_w - (1.0 - 1e-2) * lam * pair.s_b)
        for _ in range(2):
            v = _solve_upper(shifted.T, _solve_lower(shifted, pair.s_b @ v))
            v = v / np.linalg.norm(v)
    except np.linalg.LinAlgError:
        pass  # pencil too close to singular to polish; keep the mapped vector
    nonzero = np.nonzero(v)[0]
    if nonzero.size and v[nonzero[0]] < 0.0:
        v = -v
    return GeneralizedEigenResult(lambda_min=lam, v_min=v)
