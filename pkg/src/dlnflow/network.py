"""Deep diagonal linear networks: layer stacks, balanced init, chain rule.

A depth-L diagonal network carries one independent multiplicative path per
feature dimension: the effective weight on path i is the product of the L
per-layer weights u[k][i]. All layer weights are strictly positive; the
positive orthant is where the depth-L reparameterization (fractional powers
of the effective weights) is well-defined, and constructors enforce it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LayerStack:
    """Per-layer diagonal weights, shape (depth, dim), strictly positive.

    Immutable value type: operations never mutate a stack, they return new
    arrays or new stacks.
    """

    u: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64)
        if u.ndim != 2:
            raise ValueError(f"layer stack must be a 2-D (depth, dim) array, got shape {u.shape}")
        if not np.all(np.isfinite(u)):
            raise ValueError("layer stack entries must be finite")
        if not np.all(u > 0.0):
            raise ValueError("layer stack entries must be strictly positive")
        u.flags.writeable = False
        object.__setattr__(self, "u", u)

    @property
    def depth(self) -> int:
        return self.u.shape[0]

    @property
    def dim(self) -> int:
        return self.u.shape[1]


@dataclass(frozen=True)
class BalanceReport:
    """Largest deviation of squared layer weights across layer pairs.

    ``per_pair[k, m]`` is max over i of |u[k,i]^2 - u[m,i]^2|; `max_residual`
    is the maximum entry. Zero everywhere for a perfectly balanced stack, and
    vacuously zero at depth 1.
    """

    max_residual: float
    per_pair: np.ndarray


def effective_weights(stack: LayerStack) -> np.ndarray:
    """Per-path product of the layer weights; strictly positive."""
    return np.prod(stack.u, axis=0)


def balanced_init(w0_magnitudes, depth: int) -> LayerStack:
    """Stack with every layer equal to the depth-th root of the target weights.

    The effective weights of the result reproduce `w0_magnitudes` to relative
    1e-14. Rejects non-positive magnitudes and depth < 1.
    """
    w0 = np.asarray(w0_magnitudes, dtype=np.float64)
    if w0.ndim != 1:
        raise ValueError(f"magnitudes must be a 1-D vector, got shape {w0.shape}")
    if not np.all(w0 > 0.0):
        raise ValueError("initial magnitudes must be strictly positive")
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth}")
    layer = w0 ** (1.0 / depth)
    return LayerStack(np.tile(layer, (depth, 1)))


def layer_gradients(stack: LayerStack, loss_grad) -> np.ndarray:
    """Chain-rule gradients on the layer weights, shape (depth, dim).

    With w the effective weights, the derivative through layer k on path i is
    loss_grad[i] * w[i] / u[k][i] (the product of the other L-1 layers).
    """
    g = np.asarray(loss_grad, dtype=np.float64)
    if g.shape != (stack.dim,):
        raise ValueError(f"loss gradient must have shape ({stack.dim},), got {g.shape}")
    w = effective_weights(stack)
    # w/u first: at depth 1 the ratio is exactly one, so g passes through intact.
    return g * (w / stack.u)


def balance_residual(stack: LayerStack) -> BalanceReport:
    """Measure how far the stack is from perfect layer balance."""
    sq = stack.u**2
    per_pair = np.max(np.abs(sq[:, None, :] - sq[None, :, :]), axis=2)
    return BalanceReport(max_residual=float(per_pair.max()), per_pair=per_pair)
