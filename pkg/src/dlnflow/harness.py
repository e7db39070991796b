"""Experiment runner: the depth-sweep descent experiment, trajectory tables,
and the batch verification suite.

One experiment synthesizes a single scatter pair, runs discrete descent for
every requested depth from the same balanced start, and writes one trajectory
table per depth plus an `artifact.json` summary. Everything is deterministic
end to end: identical configs produce byte-identical tables.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import dynamics, network, objective, oracle, scatter
from .dynamics import ConservationReport, FlowConfig, TrajectorySnapshot

FORMATS = ("csv", "json")
SCOPES = ("objective", "network", "dynamics", "all")

_CONFIG_FIELDS = ("dim", "depths", "eta", "epochs", "seed", "spread",
                  "init_magnitudes", "record_every", "output_dir", "format")


class ConfigError(ValueError):
    """Invalid experiment configuration (bad value, missing field, bad file)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings of one depth-sweep experiment; mirrors the flat JSON config
    document field for field."""

    dim: int
    depths: tuple[int, ...]
    eta: float
    epochs: int
    seed: int
    spread: tuple[float, float] = (0.4, 0.6)
    init_magnitudes: Union[str, tuple[float, ...]] = "ones"
    record_every: int = 100
    output_dir: str = "runs"
    format: str = "csv"

    def __post_init__(self):
        try:
            object.__setattr__(self, "dim", int(self.dim))
            object.__setattr__(self, "depths", tuple(int(d) for d in self.depths))
            object.__setattr__(self, "eta", float(self.eta))
            object.__setattr__(self, "epochs", int(self.epochs))
            object.__setattr__(self, "seed", int(self.seed))
            object.__setattr__(self, "spread", (float(self.spread[0]), float(self.spread[1])))
            object.__setattr__(self, "record_every", int(self.record_every))
            object.__setattr__(self, "output_dir", str(self.output_dir))
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"malformed config field: {exc}") from exc
        if self.dim < 1:
            raise ConfigError(f"dim must be positive, got {self.dim}")
        if not self.depths or any(d < 1 for d in self.depths):
            raise ConfigError(f"depths must be a non-empty list of positive integers, got {self.depths}")
        if not self.eta > 0:
            raise ConfigError(f"eta must be positive, got {self.eta}")
        if self.epochs < 1:
            raise ConfigError(f"epochs must be positive, got {self.epochs}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        if not (self.spread[0] > 0 and self.spread[1] >= self.spread[0]):
            raise ConfigError(f"spread must be [lo, hi] with 0 < lo <= hi, got {self.spread}")
        if self.record_every < 1:
            raise ConfigError(f"record_every must be positive, got {self.record_every}")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {FORMATS}, got {self.format!r}")
        if self.init_magnitudes != "ones":
            try:
                mags = tuple(float(x) for x in self.init_magnitudes)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"init_magnitudes must be 'ones' or a number list: {exc}") from exc
            object.__setattr__(self, "init_magnitudes", mags)
            if len(mags) != self.dim:
                raise ConfigError(f"init_magnitudes has {len(mags)} entries for dim {self.dim}")
            if any(not m > 0 for m in mags):
                raise ConfigError("init_magnitudes must all be positive")

    def initial_weights(self) -> np.ndarray:
        if self.init_magnitudes == "ones":
            return np.ones(self.dim)
        return np.array(self.init_magnitudes, dtype=np.float64)

    def to_json_dict(self) -> dict:
        doc = {name: getattr(self, name) for name in _CONFIG_FIELDS}
        doc["depths"] = list(self.depths)
        doc["spread"] = list(self.spread)
        if doc["init_magnitudes"] != "ones":
            doc["init_magnitudes"] = list(doc["init_magnitudes"])
        return doc


def load_config(path) -> ExperimentConfig:
    """Read a flat JSON config document into an ExperimentConfig."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    unknown = set(doc) - set(_CONFIG_FIELDS)
    if unknown:
        raise ConfigError(f"unknown config fields: {sorted(unknown)}")
    missing = {"dim", "depths", "eta", "epochs", "seed"} - set(doc)
    if missing:
        raise ConfigError(f"missing required config fields: {sorted(missing)}")
    return ExperimentConfig(**doc)


@dataclass(frozen=True)
class DepthRecord:
    """Per-depth outcome inside a RunArtifact."""

    depth: int
    table_path: str
    rows: int
    final_epoch: int
    initial_loss: float
    final_loss: float
    final_loss_gap: float
    conservation: ConservationReport
    first_unstable_epoch: Optional[int]
    termination_reason: Optional[str]
    termination_epoch: Optional[int]


@dataclass(frozen=True)
class RunArtifact:
    """Everything one experiment produced, as written to artifact.json."""

    config: ExperimentConfig
    scatter_seed: int
    scatter_spread: tuple[float, float]
    lambda_min: float
    depths: tuple[DepthRecord, ...]

    def to_json_dict(self) -> dict:
        return {
            "config": self.config.to_json_dict(),
            "scatter": {"seed": self.scatter_seed, "spread": list(self.scatter_spread)},
            "oracle": {
                "lambda_min": self.lambda_min,
                "final_loss_gap": {str(r.depth): r.final_loss_gap for r in self.depths},
            },
            "depths": [
                {
                    "depth": r.depth,
                    "table_path": r.table_path,
                    "rows": r.rows,
                    "final_epoch": r.final_epoch,
                    "initial_loss": r.initial_loss,
                    "final_loss": r.final_loss,
                    "final_loss_gap": r.final_loss_gap,
                    "conservation": {
                        "initial": r.conservation.initial,
                        "max_relative_drift": r.conservation.max_relative_drift,
                        "argmax_time": r.conservation.argmax_time,
                    },
                    "first_unstable_epoch": r.first_unstable_epoch,
                    "termination": None
                    if r.termination_reason is None
                    else {"reason": r.termination_reason, "epoch": r.termination_epoch},
                }
                for r in self.depths
            ],
        }


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def emit_table(snapshots: list[TrajectorySnapshot], dim: int, fmt: str = "csv") -> bytes:
    """Serialize a trajectory to bytes.

    CSV columns are exactly t, loss, grad_norm, quasi_norm, balance_residual,
    w_1..w_d, header first, every value at 17 significant digits so parsing
    recovers bit-identical doubles. The JSON variant is an array of objects
    with the same keys.
    """
    if not snapshots:
        raise ValueError("cannot emit an empty trajectory")
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    for snap in snapshots:
        if snap.w.shape != (dim,):
            raise ValueError(f"snapshot weight length {snap.w.shape} does not match dim {dim}")
    keys = ["t", "loss", "grad_norm", "quasi_norm", "balance_residual"]
    wkeys = [f"w_{i + 1}" for i in range(dim)]
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(",".join(keys + wkeys) + "\n")
        for snap in snapshots:
            row = [snap.t, snap.loss, snap.grad_norm, snap.quasi_norm, snap.balance_residual]
            buf.write(",".join(_fmt(x) for x in row) + ","
                      + ",".join(_fmt(x) for x in snap.w) + "\n")
        return buf.getvalue().encode("utf-8")
    rows = []
    for snap in snapshots:
        row = {
            "t": snap.t,
            "loss": snap.loss,
            "grad_norm": snap.grad_norm,
            "quasi_norm": snap.quasi_norm,
            "balance_residual": snap.balance_residual,
        }
        row.update({k: float(v) for k, v in zip(wkeys, snap.w)})
        rows.append(row)
    return (json.dumps(rows, indent=1) + "\n").encode("utf-8")


def parse_table(data: bytes, fmt: str = "csv") -> list[TrajectorySnapshot]:
    """Inverse of `emit_table`; emit(parse(emit(x))) is byte-identical."""
    if fmt not in FORMATS:
        raise ValueError(f"format must be one of {FORMATS}, got {fmt!r}")
    snaps = []
    if fmt == "csv":
        lines = data.decode("utf-8").splitlines()
        header = lines[0].split(",")
        dim = len(header) - 5
        for line in lines[1:]:
            vals = [float(x) for x in line.split(",")]
            snaps.append(
                TrajectorySnapshot(
                    t=vals[0], loss=vals[1], grad_norm=vals[2], quasi_norm=vals[3],
                    balance_residual=vals[4], w=np.array(vals[5 : 5 + dim]),
                )
            )
        return snaps
    for row in json.loads(data.decode("utf-8")):
        dim = len(row) - 5
        w = np.array([row[f"w_{i + 1}"] for i in range(dim)])
        snaps.append(
            TrajectorySnapshot(
                t=row["t"], loss=row["loss"], grad_norm=row["grad_norm"],
                quasi_norm=row["quasi_norm"], balance_residual=row["balance_residual"], w=w,
            )
        )
    return snaps


def run_experiment(config: ExperimentConfig) -> RunArtifact:
    """Run the depth sweep and write all outputs under config.output_dir.

    All depths share the one scatter pair synthesized from the config seed.
    A positivity breach in one depth is recorded in its DepthRecord and the
    remaining depths still run. Filesystem errors carry the offending path.
    """
    pair = scatter.synthesize_scatter(config.dim, config.seed, config.spread)
    lam = oracle.generalized_eig_min(pair).lambda_min
    w0 = config.initial_weights()
    out_dir = Path(config.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    records = []
    for depth in config.depths:
        stack0 = network.balanced_init(w0, depth)
        fc = FlowConfig(depth=depth, step=config.eta, total=config.epochs,
                        mode="per-layer", record_every=config.record_every)
        gd = dynamics.gd_run(stack0, pair, fc)
        snaps = gd.snapshots
        table = emit_table(snaps, config.dim, config.format)
        path = out_dir / f"L{depth}.{config.format}"
        try:
            path.write_bytes(table)
        except OSError as exc:
            raise OSError(f"cannot write trajectory table {path}: {exc}") from exc
        report = dynamics.conservation_report(snaps, depth)
        records.append(
            DepthRecord(
                depth=depth,
                table_path=str(path),
                rows=len(snaps),
                final_epoch=int(snaps[-1].t),
                initial_loss=snaps[0].loss,
                final_loss=snaps[-1].loss,
                final_loss_gap=snaps[-1].loss - lam,
                conservation=report,
                first_unstable_epoch=gd.first_unstable_epoch,
                termination_reason=None if gd.termination is None else gd.termination.reason,
                termination_epoch=None if gd.termination is None else gd.termination.epoch,
            )
        )

    artifact = RunArtifact(
        config=config,
        scatter_seed=config.seed,
        scatter_spread=config.spread,
        lambda_min=lam,
        depths=tuple(records),
    )
    apath = out_dir / "artifact.json"
    try:
        apath.write_text(json.dumps(artifact.to_json_dict(), indent=1) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write artifact summary {apath}: {exc}") from exc
    return artifact


# ---------------------------------------------------------------------------
# verification suite


@dataclass(frozen=True)
class CheckResult:
    name: str
    tolerance: str
    worst: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    scope: str
    trials: int
    seed: int
    checks: tuple[CheckResult, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        out = []
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            out.append(f"[{status}] {c.name}: worst {c.worst:.3e} (tolerance {c.tolerance})")
        return out


def _draw_pair(rng: np.random.Generator, dim: int, spread=(0.4, 0.6)) -> scatter.ScatterPair:
    return scatter.synthesize_scatter(dim, int(rng.integers(0, 2**63)), spread)


def _draw_weights(rng: np.random.Generator, dim: int) -> np.ndarray:
    w = rng.standard_normal(dim)
    while np.linalg.norm(w) < 1e-3:
        w = rng.standard_normal(dim)
    return w * rng.uniform(0.1, 10.0) / np.linalg.norm(w)


def _check(name: str, tol: float, worst: float) -> CheckResult:
    return CheckResult(name=name, tolerance=f"<= {tol:g}", worst=worst, passed=worst <= tol)


def _verify_objective(trials: int, rng: np.random.Generator) -> list[CheckResult]:
    alphas = (1e-3, 0.5, 2.0, 1e3)
    worst_orth = worst_hom = worst_fd = worst_bound = 0.0
    for k in range(trials):
        dim = 2 + k % 15
        pair = _draw_pair(rng, dim)
        w = _draw_weights(rng, dim)
        worst_orth = max(worst_orth, objective.orthogonality_residual(w, pair))
        worst_hom = max(worst_hom, objective.homogeneity_residual(w, pair, alphas[k % 4]))
        lam = oracle.generalized_eig_min(pair).lambda_min
        worst_bound = max(worst_bound, lam - objective.rayleigh_loss(w, pair))
        if dim <= 8:
            g = objective.rayleigh_gradient(w, pair)
            fd = oracle.fd_gradient(lambda x: objective.rayleigh_loss(x, pair), w, 1e-6)
            worst_fd = max(worst_fd, np.linalg.norm(g - fd) / np.linalg.norm(g))
    return [
        _check("objective.orthogonality", 1e-10, worst_orth),
        _check("objective.homogeneity", 1e-12, worst_hom),
        _check("objective.gradient-vs-finite-diff", 1e-6, worst_fd),
        _check("objective.loss-above-lambda-min", 1e-10, worst_bound),
    ]


def _verify_network(trials: int, rng: np.random.Generator) -> list[CheckResult]:
    worst_rt = worst_bal = worst_chain = worst_fd = 0.0
    for k in range(trials):
        dim = 2 + k % 7
        depth = 1 + k % 8
        w0 = rng.uniform(0.1, 10.0, size=dim)
        stack = network.balanced_init(w0, depth)
        back = network.effective_weights(stack)
        worst_rt = max(worst_rt, float(np.max(np.abs(back - w0) / w0)))
        worst_bal = max(worst_bal, network.balance_residual(stack).max_residual)
        pair = _draw_pair(rng, dim)
        grad = objective.rayleigh_gradient(back, pair)
        per_layer = network.layer_gradients(stack, grad)
        assembled = -np.sum((back / stack.u) * per_layer, axis=0)
        direct = dynamics.effective_flow_rhs(back, pair, depth)
        scale = np.max(np.abs(direct)) + 1e-30
        worst_chain = max(worst_chain, float(np.max(np.abs(assembled - direct)) / scale))
    for k in range(min(trials, 25)):
        pair = _draw_pair(rng, 3)
        stack = network.LayerStack(rng.uniform(0.5, 2.0, size=(4, 3)))
        grad = objective.rayleigh_gradient(network.effective_weights(stack), pair)
        per_layer = network.layer_gradients(stack, grad)
        flat = stack.u.ravel()
        fd = oracle.fd_gradient(
            lambda z: objective.rayleigh_loss(np.prod(z.reshape(4, 3), axis=0), pair), flat, 1e-6
        ).reshape(4, 3)
        worst_fd = max(worst_fd, float(np.max(np.abs(per_layer - fd)) / (np.max(np.abs(per_layer)) + 1e-30)))
    return [
        _check("network.balanced-roundtrip", 1e-14, worst_rt),
        _check("network.balanced-stack-residual", 1e-15, worst_bal),
        _check("network.chain-rule-vs-effective-rhs", 1e-10, worst_chain),
        _check("network.layer-grads-vs-finite-diff", 1e-6, worst_fd),
    ]


def _verify_dynamics(trials: int, rng: np.random.Generator) -> list[CheckResult]:
    # Integrator-accuracy invariants run on fixed reference pairs: a depth-1
    # flow on an arbitrary pair may legitimately cross zero inside the
    # horizon, which would abort the check rather than measure it.
    worst_agree = worst_drift = worst_bal = worst_mono = worst_bound = 0.0
    for depth, dim in ((1, 2), (2, 2), (5, 2), (1, 5), (2, 5), (5, 5)):
        pair = scatter.synthesize_scatter(dim, 8086, (0.4, 0.6))
        lam = oracle.generalized_eig_min(pair).lambda_min
        w0 = np.ones(dim)
        per_layer = dynamics.integrate_flow(
            w0, pair, FlowConfig(depth=depth, step=1e-3, total=10.0, mode="per-layer", record_every=1000))
        effective = dynamics.integrate_flow(
            w0, pair, FlowConfig(depth=depth, step=1e-3, total=10.0, mode="effective", record_every=1000))
        for a, b in zip(per_layer, effective):
            worst_agree = max(worst_agree, float(np.max(np.abs(a.w - b.w)) / np.max(np.abs(b.w))))
            worst_bal = max(worst_bal, a.balance_residual)
            worst_bound = max(worst_bound, lam - a.loss)
        worst_drift = max(worst_drift, dynamics.conservation_report(per_layer, depth).max_relative_drift)
        losses = [s.loss for s in per_layer]
        worst_mono = max(worst_mono, max(b - a for a, b in zip(losses, losses[1:])))
    drifts = {}
    order_pair = scatter.synthesize_scatter(5, 8086, (0.4, 2.5))
    w0 = np.array([4.0, 0.1, 2.0, 0.5, 1.0])
    for integ in ("explicit-euler", "rk4"):
        for dt in (4e-3, 2e-3, 1e-3):
            fc = FlowConfig(depth=20, step=dt, total=20.0, integrator=integ,
                            mode="effective", record_every=max(1, int(0.1 / dt)))
            traj = dynamics.integrate_flow(w0, order_pair, fc)
            drifts[integ, dt] = dynamics.conservation_report(traj, 20).max_relative_drift
    euler_ratio = min(drifts["explicit-euler", 4e-3] / drifts["explicit-euler", 2e-3],
                      drifts["explicit-euler", 2e-3] / drifts["explicit-euler", 1e-3])
    rk4_ratio = min(drifts["rk4", 4e-3] / drifts["rk4", 2e-3],
                    drifts["rk4", 2e-3] / drifts["rk4", 1e-3])
    checks = [
        _check("dynamics.per-layer-vs-effective", 1e-8, worst_agree),
        _check("dynamics.quasi-norm-drift-rk4", 1e-8, worst_drift),
        _check("dynamics.balance-along-flow", 1e-8, worst_bal),
        _check("dynamics.loss-monotone-along-flow", 1e-12, worst_mono),
        _check("dynamics.loss-above-lambda-min", 1e-10, worst_bound),
        CheckResult("dynamics.euler-drift-halving-ratio", "in [1.5, 3]", euler_ratio,
                    1.5 <= euler_ratio <= 3.0),
        CheckResult("dynamics.rk4-drift-halving-ratio", "in [8, 40]", rk4_ratio,
                    8.0 <= rk4_ratio <= 40.0),
    ]
    return checks


def verify_suite(scope: str, trials: int, seed: int) -> VerificationReport:
    """Run the randomized property checks of the named module scope.

    Returns a report with one entry per invariant: its tolerance and the
    worst residual observed over the trials. The CLI turns a failed report
    into a nonzero exit status.
    """
    if scope not in SCOPES:
        raise ConfigError(f"scope must be one of {SCOPES}, got {scope!r}")
    if trials < 1:
        raise ConfigError(f"trials must be at least 1, got {trials}")
    if not 0 <= seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    rng = np.random.default_rng(seed)
    checks = []
    if scope in ("objective", "all"):
        checks += _verify_objective(trials, rng)
    if scope in ("network", "all"):
        checks += _verify_network(trials, rng)
    if scope in ("dynamics", "all"):
        checks += _verify_dynamics(trials, rng)
    return VerificationReport(scope=scope, trials=trials, seed=seed, checks=tuple(checks))
