"""Continuous gradient flow and discrete gradient descent of the quotient loss.

Two equivalent continuous-time systems are integrated with fixed-step
explicit Euler or classic RK4:

* the per-layer flow, du[k][i]/dt = -dL/du[k][i], over all depth*dim layer
  coordinates, and
* the effective flow on the product weights, dw[i]/dt =
  -depth * w[i]^(2 - 2/depth) * dL/dw[i], valid on the positive orthant.

From a balanced start the two produce the same w(t); along either, the sum
of |w_i|^(2/depth) and the pairwise balance of squared layer weights are
conserved exactly in continuous time, so their numerical drift measures
integrator accuracy. Discrete gradient descent updates every layer
simultaneously from the same loss evaluation and only approximately
conserves both quantities.

Continuous integration treats a coordinate falling to or below zero, or a
non-finite state, as fatal (raises); discrete descent reports them as
recoverable outcomes in the returned result with the offending epoch, since
large steps can legitimately push a path across zero where the theory ends.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .network import LayerStack, balance_residual, balanced_init
from .objective import rayleigh_gradient, rayleigh_loss
from .scatter import ScatterPair

INTEGRATORS = ("rk4", "explicit-euler")
MODES = ("per-layer", "effective")

# A snapshot-to-snapshot loss increase above 10% marks the epoch as unstable
# (step-size-driven oscillation, not an error).
_INSTABILITY_FACTOR = 1.1


class PositivityBreachError(RuntimeError):
    """A trajectory coordinate reached zero or below."""


class NonFiniteStateError(RuntimeError):
    """A trajectory state overflowed or went NaN."""


@dataclass(frozen=True)
class TrajectorySnapshot:
    """Diagnostics at one recorded time: effective weights plus the scalars
    tracked along every run. `t` is continuous time for flows and the epoch
    index for discrete descent."""

    t: float
    w: np.ndarray
    loss: float
    quasi_norm: float
    balance_residual: float
    grad_norm: float

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        w.flags.writeable = False
        object.__setattr__(self, "w", w)
        values = (self.t, self.loss, self.quasi_norm, self.balance_residual, self.grad_norm)
        if not (np.all(np.isfinite(w)) and all(np.isfinite(v) for v in values)):
            raise ValueError("snapshot fields must all be finite")
        if not (self.loss > 0.0 and self.quasi_norm > 0.0):
            raise ValueError("snapshot loss and quasi-norm must be positive")


@dataclass(frozen=True)
class FlowConfig:
    """Integration settings shared by flows and discrete descent.

    `step` is dt for flows and the learning rate for descent; `total` is the
    time horizon for flows and the epoch count for descent. Snapshots are
    recorded every `record_every` steps, always including step 0 and the
    final step.
    """

    depth: int
    step: float
    total: float
    integrator: str = "rk4"
    mode: str = "per-layer"
    record_every: int = 100

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 1:
            raise ValueError(f"depth must be a positive integer, got {self.depth}")
        if not self.step > 0.0:
            raise ValueError(f"step must be positive, got {self.step}")
        if not self.total >= 1:
            raise ValueError(f"total must be at least 1, got {self.total}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}, got {self.integrator!r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.record_every) != self.record_every or self.record_every < 1:
            raise ValueError(f"record_every must be a positive integer, got {self.record_every}")


@dataclass(frozen=True)
class RunTermination:
    """Why a discrete run stopped early: "positivity-breach" or
    "non-finite-state", with the epoch whose update failed."""

    reason: str
    epoch: int


@dataclass(frozen=True)
class GdResult:
    """Outcome of a discrete descent run.

    `snapshots` covers epochs up to the last valid state; `termination` is
    None for a run that completed all epochs. `first_unstable_epoch` is the
    first recorded epoch whose loss exceeded the previous snapshot's by more
    than 10%, or None if the loss never jumped.
    """

    snapshots: list[TrajectorySnapshot]
    termination: Optional[RunTermination] = None
    first_unstable_epoch: Optional[int] = None


@dataclass(frozen=True)
class ConservationReport:
    """Worst-case relative drift of the conserved sum along a trajectory."""

    initial: float
    max_relative_drift: float
    argmax_time: float


@dataclass(frozen=True)
class StackSnapshot:
    """Full layer state at one recorded time of a per-layer flow."""

    t: float
    stack: LayerStack


def quasi_norm(w, depth: int) -> float:
    """Sum of |w_i|^(2/depth), the quantity conserved by the flow.

    On-trajectory weights are positive, where the absolute value is inert;
    it merely keeps the expression defined off the positive orthant.
    """
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth}")
    w = np.asarray(w, dtype=np.float64)
    return float(np.sum(np.abs(w) ** (2.0 / depth)))


def effective_flow_rhs(w, pair: ScatterPair, depth: int) -> np.ndarray:
    """Right-hand side of the effective flow,
    dw_i/dt = -depth * w_i^(2 - 2/depth) * dL/dw_i.

    Only defined on the positive orthant: the fractional exponent is not
    real-valued at w_i <= 0 (depth 1, where the exponent vanishes, is not
    special-cased).
    """
    if int(depth) != depth or depth < 1:
        raise ValueError(f"depth must be a positive integer, got {depth}")
    w = np.asarray(w, dtype=np.float64)
    if not np.all(w > 0.0):
        raise ValueError("effective flow requires strictly positive weights")
    grad = rayleigh_gradient(w, pair)
    return -depth * w ** (2.0 - 2.0 / depth) * grad


def _euler_step(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    return y + dt * f(y)


def _rk4_step(f: Callable, y: np.ndarray, dt: float) -> np.ndarray:
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {"rk4": _rk4_step, "explicit-euler": _euler_step}


def _check_state(y: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(y)):
        raise NonFiniteStateError(f"non-finite state at t={t:.6g}")
    if not np.all(y > 0.0):
        k = int(np.argmin(y))
        raise PositivityBreachError(
            f"positivity breach at t={t:.6g}: coordinate {k} reached {y.flat[k]:.6g}"
        )


def _drive(rhs: Callable, y0: np.ndarray, config: FlowConfig):
    """Fixed-step integration loop; yields (step index, state) at the
    recording stride, always including step 0 and the final step."""
    stepper = _STEPPERS[config.integrator]
    dt = config.step
    n_steps = int(round(config.total / dt))
    t_now = 0.0

    def guarded(y: np.ndarray) -> np.ndarray:
        # Stage states must stay positive too, or the fractional powers and
        # layer divisions lose meaning mid-step.
        _check_state(y, t_now)
        return rhs(y)

    y = y0
    yield 0, y
    for k in range(1, n_steps + 1):
        t_now = k * dt
        y = stepper(guarded, y, dt)
        _check_state(y, t_now)
        if k % config.record_every == 0 or k == n_steps:
            yield k, y


def _flow_snapshot(t: float, w: np.ndarray, pair: ScatterPair, depth: int,
                   balance: float) -> TrajectorySnapshot:
    return TrajectorySnapshot(
        t=t,
        w=w,
        loss=rayleigh_loss(w, pair),
        quasi_norm=quasi_norm(w, depth),
        balance_residual=balance,
        grad_norm=float(np.linalg.norm(rayleigh_gradient(w, pair))),
    )


def integrate_stack_flow(stack0: LayerStack, pair: ScatterPair, config: FlowConfig) -> list[StackSnapshot]:
    """Integrate the per-layer flow from an arbitrary (possibly unbalanced)
    stack, recording full layer states.

    This is the general form behind `integrate_flow`'s per-layer mode; it
    exists separately so the pairwise balance constants of unbalanced starts
    can be tracked through time.
    """
    if stack0.depth != config.depth:
        raise ValueError(f"stack depth {stack0.depth} does not match config depth {config.depth}")
    s_w, s_b = pair.s_w, pair.s_b

    def rhs(u_flat: np.ndarray) -> np.ndarray:
        u = u_flat.reshape(stack0.depth, stack0.dim)
        w = u.prod(axis=0)
        sww = s_w @ w
        sbw = s_b @ w
        den = w @ sbw
        grad = (2.0 / den) * (sww - ((w @ sww) / den) * sbw)
        return (-grad * w / u).ravel()

    out = []
    for k, y in _drive(rhs, stack0.u.ravel().copy(), config):
        out.append(StackSnapshot(t=k * config.step, stack=LayerStack(y.reshape(stack0.depth, stack0.dim))))
    return out


def integrate_flow(w0, pair: ScatterPair, config: FlowConfig) -> list[TrajectorySnapshot]:
    """Integrate the continuous flow of the effective weights.

    In "effective" mode the d-dimensional product-weight ODE is integrated
    directly; in "per-layer" mode all depth*dim layer coordinates are
    integrated from a balanced start. The two agree on w(t) to integrator
    accuracy. Raises `PositivityBreachError` / `NonFiniteStateError` if the
    state leaves the valid region.
    """
    w0 = np.asarray(w0, dtype=np.float64)
    if not np.all(w0 > 0.0):
        raise ValueError("initial weights must be strictly positive")
    if w0.shape != (pair.dim,):
        raise ValueError(f"initial weights must have shape ({pair.dim},), got {w0.shape}")

    if config.mode == "effective":
        rhs = lambda w: effective_flow_rhs(w, pair, config.depth)
        return [
            _flow_snapshot(k * config.step, y, pair, config.depth, balance=0.0)
            for k, y in _drive(rhs, w0.copy(), config)
        ]

    snaps = []
    for s in integrate_stack_flow(balanced_init(w0, config.depth), pair, config):
        w = np.prod(s.stack.u, axis=0)
        snaps.append(
            _flow_snapshot(s.t, w, pair, config.depth, balance_residual(s.stack).max_residual)
        )
    return snaps


def gd_run(stack0: LayerStack, pair: ScatterPair, config: FlowConfig) -> GdResult:
    """Full-batch gradient descent on the layer weights.

    Every epoch updates all layers simultaneously from one loss evaluation,
    u <- u - eta * dL/du. A non-finite or non-positive update terminates the
    run gracefully: the result carries the snapshots up to the last valid
    epoch plus a `RunTermination` naming the offending epoch.
    """
    if config.mode != "per-layer":
        raise ValueError("discrete descent acts on layer weights; config.mode must be 'per-layer'")
    if stack0.depth != config.depth:
        raise ValueError(f"stack depth {stack0.depth} does not match config depth {config.depth}")
    epochs = int(config.total)
    if epochs != config.total:
        raise ValueError(f"total must be a whole number of epochs, got {config.total}")
    eta = config.step
    stride = config.record_every
    s_w, s_b = pair.s_w, pair.s_b
    depth = stack0.depth

    def snapshot(epoch: int, u: np.ndarray) -> TrajectorySnapshot:
        w = u.prod(axis=0)
        sww = s_w @ w
        sbw = s_b @ w
        den = w @ sbw
        loss = (w @ sww) / den
        grad = (2.0 / den) * (sww - loss * sbw)
        sq = u**2
        balance = float(np.max(np.abs(sq[:, None, :] - sq[None, :, :]))) if depth > 1 else 0.0
        return TrajectorySnapshot(
            t=float(epoch),
            w=w,
            loss=float(loss),
            quasi_norm=quasi_norm(w, depth),
            balance_residual=balance,
            grad_norm=float(np.linalg.norm(grad)),
        )

    u = stack0.u.copy()
    snaps = [snapshot(0, u)]
    termination = None
    first_unstable = None
    last_epoch = 0
    for epoch in range(1, epochs + 1):
        # overflow is an expected, handled outcome here, not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            w = u.prod(axis=0)
            sww = s_w @ w
            sbw = s_b @ w
            den = w @ sbw
            loss = (w @ sww) / den
            grad = (2.0 / den) * (sww - loss * sbw)
            u_next = u - eta * (grad * w / u)
        if not np.all(np.isfinite(u_next)):
            termination = RunTermination(reason="non-finite-state", epoch=epoch)
            break
        if not np.all(u_next > 0.0):
            termination = RunTermination(reason="positivity-breach", epoch=epoch)
            break
        u = u_next
        last_epoch = epoch
        if epoch % stride == 0 or epoch == epochs:
            snap = snapshot(epoch, u)
            if first_unstable is None and snap.loss > _INSTABILITY_FACTOR * snaps[-1].loss:
                first_unstable = epoch
            snaps.append(snap)
    if termination is not None and snaps[-1].t != last_epoch:
        snaps.append(snapshot(last_epoch, u))
    return GdResult(snapshots=snaps, termination=termination, first_unstable_epoch=first_unstable)


def conservation_report(snapshots: list[TrajectorySnapshot], depth: int) -> ConservationReport:
    """Worst relative deviation of the conserved sum from its initial value."""
    if not snapshots:
        raise ValueError("cannot report conservation on an empty trajectory")
    q0 = quasi_norm(snapshots[0].w, depth)
    worst = 0.0
    when = snapshots[0].t
    for snap in snapshots:
        drift = abs(quasi_norm(snap.w, depth) - q0) / q0
        if drift > worst:
            worst = drift
            when = snap.t
    return ConservationReport(initial=q0, max_relative_drift=worst, argmax_time=when)
