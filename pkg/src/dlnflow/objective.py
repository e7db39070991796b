"""The generalized Rayleigh quotient loss and its structural properties.

The loss is L(w) = (w . s_w w) / (w . s_b w) over nonzero weight vectors w,
and it is *minimized*: the optimum is the smallest generalized eigenvalue of
the pencil (s_w, s_b). Note this is the opposite orientation to the classical
discriminant-analysis convention of maximizing the quotient.

Two exact properties drive everything downstream:

* degree-0 homogeneity, L(a*w) = L(w) for any a != 0, and
* gradient orthogonality, w . grad L(w) = 0,

the second being the differential consequence of the first. The gradient is
implemented from its closed form (quotient rule),

    grad L(w) = (2 / (w . s_b w)) * (s_w w - L(w) * s_b w),

so orthogonality holds to rounding by construction. Weight vectors are plain
1-D float arrays throughout.
"""

from __future__ import annotations

import numpy as np

from .scatter import ScatterPair

# Guards the zero-gradient case in the normalized orthogonality residual.
_ORTHO_GUARD = 1e-30


def _checked(w, pair: ScatterPair) -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.shape[0] != pair.dim:
        raise ValueError(f"weights must be a length-{pair.dim} vector, got shape {w.shape}")
    if not np.any(w):
        raise ValueError("weights must not be the zero vector")
    return w


def rayleigh_loss(w, pair: ScatterPair) -> float:
    """Quotient of the two quadratic forms, (w . s_w w) / (w . s_b w).

    Strictly positive for any nonzero w since both matrices are positive
    definite. Rejects the zero vector and dimension mismatches.
    """
    w = _checked(w, pair)
    num = w @ (pair.s_w @ w)
    den = w @ (pair.s_b @ w)
    if den <= 0.0:
        raise ValueError("denominator quadratic form is not positive; pair is not SPD")
    return float(num / den)


def rayleigh_gradient(w, pair: ScatterPair) -> np.ndarray:
    """Analytic gradient of the quotient loss (closed form, quotient rule)."""
    w = _checked(w, pair)
    sww = pair.s_w @ w
    sbw = pair.s_b @ w
    den = w @ sbw
    if den <= 0.0:
        raise ValueError("denominator quadratic form is not positive; pair is not SPD")
    loss = (w @ sww) / den
    return (2.0 / den) * (sww - loss * sbw)


def homogeneity_residual(w, pair: ScatterPair, alpha: float) -> float:
    """Relative scale-invariance defect |L(a*w) - L(w)| / |L(w)|.

    Exactly zero in real arithmetic for any a != 0; in floats it stays below
    1e-12 for a in [1e-3, 1e3].
    """
    if alpha == 0.0:
        raise ValueError("alpha must be nonzero")
    base = rayleigh_loss(w, pair)
    scaled = rayleigh_loss(alpha * np.asarray(w, dtype=np.float64), pair)
    return abs(scaled - base) / abs(base)


def orthogonality_residual(w, pair: ScatterPair) -> float:
    """Normalized defect |w . grad L| / (|w| |grad L| + 1e-30).

    The tiny guard keeps the residual well-defined at critical points, where
    the gradient vanishes identically (e.g. s_w proportional to s_b). Stays
    below 1e-10 in floats; zero in exact arithmetic.
    """
    w = _checked(w, pair)
    g = rayleigh_gradient(w, pair)
    denom = np.linalg.norm(w) * np.linalg.norm(g) + _ORTHO_GUARD
    return float(abs(w @ g) / denom)
