"""Synthesis and validation of the scatter-matrix pair behind the quotient loss.

A pair of symmetric positive-definite matrices (``s_w`` intra-class, ``s_b``
inter-class) fixes the objective once and for all; every experiment shares a
single pair synthesized from a ``(dim, seed, spread)`` provenance triple. The
generator is a fixed, documented algorithm (splitmix64) rather than a library
RNG, so the same triple reproduces bit-identical matrices on any platform.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# splitmix64 constants (Steele, Lea, Flood 2014). State advances by GAMMA per
# draw; each state is scrambled by two xor-shift-multiply rounds, all mod 2^64.
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)

SPD_OK = "ok"
SPD_NOT_SYMMETRIC = "not-symmetric"
SPD_NOT_POSITIVE_DEFINITE = "not-positive-definite"

_SYMMETRY_TOL = 1e-12


def splitmix64(seed: int, count: int) -> np.ndarray:
    """Return the first `count` raw outputs of splitmix64 started at `seed`.

    The k-th state is ``seed + k * 0x9E3779B97F4A7C15 (mod 2^64)`` for
    k = 1..count, and each output is

        z = (s ^ (s >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
        z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
        z =  z ^ (z >> 31)

    First three outputs for seed 0 are 0xE220A8397B1DCDAF,
    0x6E789E6AA1B965F4, 0x06C45D188009454F.
    """
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if count < 0:
        raise ValueError(f"count must be non-negative, got {count}")
    ks = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + ks * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def uniform_doubles(seed: int, count: int) -> np.ndarray:
    """`count` doubles in [0, 1): the top 53 bits of each splitmix64 output,
    scaled by 2**-53."""
    bits = splitmix64(seed, count)
    return (bits >> np.uint64(11)).astype(np.float64) * 2.0**-53


@dataclass(frozen=True)
class ScatterPair:
    """Symmetric positive-definite pair defining the quotient loss.

    `s_w` is the intra-class scatter (numerator), `s_b` the inter-class
    scatter (denominator). Arrays are stored read-only; instances are safe to
    share across threads.
    """

    s_w: np.ndarray
    s_b: np.ndarray
    dim: int = field(default=0)

    def __post_init__(self):
        s_w = np.array(self.s_w, dtype=np.float64)
        s_b = np.array(self.s_b, dtype=np.float64)
        dim = self.dim if self.dim else (s_w.shape[0] if s_w.ndim == 2 else 0)
        for name, m in (("s_w", s_w), ("s_b", s_b)):
            if m.ndim != 2 or m.shape != (dim, dim):
                raise ValueError(f"{name} must be {dim}x{dim}, got shape {m.shape}")
            verdict = validate_spd(m)
            if verdict != SPD_OK:
                raise ValueError(f"{name} rejected: {verdict}")
        s_w.flags.writeable = False
        s_b.flags.writeable = False
        object.__setattr__(self, "s_w", s_w)
        object.__setattr__(self, "s_b", s_b)
        object.__setattr__(self, "dim", dim)


def validate_spd(m: np.ndarray) -> str:
    """Classify a square matrix as "ok", "not-symmetric", or
    "not-positive-definite".

    Symmetry is element-wise within absolute 1e-12; positive definiteness is
    a Cholesky factorization succeeding (all pivots > 0). Non-square input is
    a usage error and raises instead of returning a verdict.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.abs(m - m.T) <= _SYMMETRY_TOL):
        return SPD_NOT_SYMMETRIC
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return SPD_NOT_POSITIVE_DEFINITE
    return SPD_OK


def _check_synth_args(dim: int, seed: int, spread) -> tuple[float, float]:
    if int(dim) != dim or dim < 1:
        raise ValueError(f"dim must be a positive integer, got {dim}")
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    lo, hi = float(spread[0]), float(spread[1])
    if not lo > 0:
        raise ValueError(f"spread low endpoint must be positive, got {lo}")
    # hi == lo is allowed and collapses the distribution to a point mass.
    if hi < lo:
        raise ValueError(f"spread must satisfy hi >= lo, got [{lo}, {hi}]")
    return lo, hi


def raw_uniform_factors(dim: int, seed: int, spread) -> tuple[np.ndarray, np.ndarray]:
    """Debug accessor: the two raw dim x dim factor matrices G with entries
    uniform on [lo, hi], before the Gram step.

    The two factors come from decorrelated sub-streams: the first two outputs
    of splitmix64 at the experiment seed become the stream seeds for the s_w
    and s_b factors respectively, and each stream fills its matrix row-major.
    """
    lo, hi = _check_synth_args(dim, seed, spread)
    seed_w, seed_b = (int(x) for x in splitmix64(seed, 2))
    fw = lo + (hi - lo) * uniform_doubles(seed_w, dim * dim)
    fb = lo + (hi - lo) * uniform_doubles(seed_b, dim * dim)
    return fw.reshape(dim, dim), fb.reshape(dim, dim)


def synthesize_scatter(dim: int, seed: int, spread) -> ScatterPair:
    """Synthesize a random SPD pair, deterministically from (dim, seed, spread).

    Each matrix is G G^T + eps*I where G has independent entries uniform on
    [lo, hi] (see `raw_uniform_factors` for the exact draw) and
    eps = dim * hi^2 * 1e-6 guarantees strict positive definiteness without
    visibly perturbing the dynamics. The product is symmetrized exactly,
    (M + M^T)/2, to guard against asymmetric rounding in the matmul.
    """
    lo, hi = _check_synth_args(dim, seed, spread)
    g_w, g_b = raw_uniform_factors(dim, seed, spread)
    eps = dim * hi * hi * 1e-6
    jitter = eps * np.eye(dim)

    def gram(g: np.ndarray) -> np.ndarray:
        m = g @ g.T
        return (m + m.T) / 2.0 + jitter

    return ScatterPair(gram(g_w), gram(g_b), dim)


def pair_to_json(pair: ScatterPair, seed: int, spread) -> str:
    """Serialize a pair with its provenance to a flat JSON document."""
    doc = {
        "dim": pair.dim,
        "seed": int(seed),
        "spread": [float(spread[0]), float(spread[1])],
        "s_w": pair.s_w.ravel().tolist(),
        "s_b": pair.s_b.ravel().tolist(),
    }
    return json.dumps(doc)


def pair_from_json(text: str) -> tuple[ScatterPair, int, tuple[float, float]]:
    """Inverse of `pair_to_json`: returns (pair, seed, spread)."""
    doc = json.loads(text)
    dim = int(doc["dim"])
    s_w = np.array(doc["s_w"], dtype=np.float64).reshape(dim, dim)
    s_b = np.array(doc["s_b"], dtype=np.float64).reshape(dim, dim)
    spread = (float(doc["spread"][0]), float(doc["spread"][1]))
    return ScatterPair(s_w, s_b, dim), int(doc["seed"]), spread
