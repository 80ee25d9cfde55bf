"""Plain GD/SGD training loops with schedules, stopping, and recorder hooks.

A "step" updates w <- w - eta_t * grad over the current batch. GD uses the
full dataset every step; SGD draws an independent uniform size-b subset per
step by default (the covariance identity the trajectory statistics rely on
is derived for that scheme). An epoch-permutation sampling mode exists for
the epoch-level diagnostics and is flagged in run metadata by the harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import DivergedError, InvalidArgumentError, NumericDomainError
from .models import ModelSpec, grad_mean_xy
from .numerics import STREAM_BATCH, RngStream

PARAM_NORM_CAP = 1e12


@dataclass(frozen=True)
class Schedule:
    """Learning-rate schedule; fields beyond the chosen kind are ignored."""

    kind: str  # "constant" | "inverse_time" | "cosine"
    eta0: float = 0.05
    c: float = 1.0
    beta: float = 1.0
    eta_min: float = 0.0
    t_max: int = 1

    def __post_init__(self):
        if self.kind == "constant":
            if not (self.eta0 > 0 and math.isfinite(self.eta0)):
                raise InvalidArgumentError(f"constant schedule needs eta0 > 0, got {self.eta0}")
        elif self.kind == "inverse_time":
            if not (self.c > 0 and math.isfinite(self.c)):
                raise InvalidArgumentError(f"inverse_time needs c > 0, got {self.c}")
            if not (self.beta > 0 and math.isfinite(self.beta)):
                raise InvalidArgumentError(f"inverse_time needs beta > 0, got {self.beta}")
        elif self.kind == "cosine":
            if not (self.eta0 > 0 and math.isfinite(self.eta0)):
                raise InvalidArgumentError(f"cosine schedule needs eta0 > 0, got {self.eta0}")
            if self.eta_min < 0 or self.eta_min > self.eta0:
                raise InvalidArgumentError(
                    f"cosine needs 0 <= eta_min <= eta0, got eta_min={self.eta_min}"
                )
            if self.t_max < 1:
                raise InvalidArgumentError(f"cosine needs t_max >= 1, got {self.t_max}")
        else:
            raise InvalidArgumentError(f"unknown schedule kind {self.kind!r}")


def lr_at(schedule: Schedule, t: int) -> float:
    """Learning rate for step t (0-based).

    Cosine past t_max clamps to eta_min; with eta_min = 0 the endpoint rate
    is 0 and further steps are no-ops, which is the documented endpoint
    behavior rather than an error.
    """
    if t < 0:
        raise InvalidArgumentError(f"step index must be >= 0, got {t}")
    if schedule.kind == "constant":
        return schedule.eta0
    if schedule.kind == "inverse_time":
        return schedule.c / (schedule.beta * (t + 1))
    if t >= schedule.t_max:
        return schedule.eta_min
    return schedule.eta_min + 0.5 * (schedule.eta0 - schedule.eta_min) * (
        1.0 + math.cos(math.pi * t / schedule.t_max)
    )


@dataclass(frozen=True)
class OptimConfig:
    mode: str = "sgd"  # "gd" | "sgd"
    batch_size: int | None = 10  # None means full batch
    schedule: Schedule = Schedule(kind="constant", eta0=0.05)
    max_steps: int = 1000
    stop_train_loss: float | None = None
    snapshot_every: int = 1
    seed: int = 0
    sampling: str = "iid"  # "iid" | "permute" (epoch permutation)

    def __post_init__(self):
        if self.mode not in ("gd", "sgd"):
            raise InvalidArgumentError(f"unknown mode {self.mode!r}")
        if self.sampling not in ("iid", "permute"):
            raise InvalidArgumentError(f"unknown sampling {self.sampling!r}")
        if self.batch_size is not None and self.batch_size < 1:
            raise InvalidArgumentError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_steps < 0:
            raise InvalidArgumentError(f"max_steps must be >= 0, got {self.max_steps}")
        if self.snapshot_every < 1:
            raise InvalidArgumentError(f"snapshot_every must be >= 1, got {self.snapshot_every}")


@dataclass
class StepRecord:
    t: int
    eta_t: float
    batch_indices: np.ndarray
    w_after: np.ndarray
    F_B: float


@dataclass
class TrainResult:
    """Everything a single run produced, in step order."""

    w_final: np.ndarray
    snapshots: list
    records: list[StepRecord] = field(default_factory=list)
    steps_per_epoch: int = 1
    stopped_at: int = 0  # number of update steps actually taken


def resolve_batch_size(cfg: OptimConfig, n: int) -> int:
    if cfg.mode == "gd":
        if cfg.batch_size is not None and cfg.batch_size != n:
            raise InvalidArgumentError(
                f"gd uses the full batch; batch_size={cfg.batch_size} with n={n}"
            )
        return n
    b = n if cfg.batch_size is None else cfg.batch_size
    if not 1 <= b <= n:
        raise InvalidArgumentError(f"need 1 <= batch_size <= n={n}, got {b}")
    return b


def sample_batch(rng: RngStream, n: int, b: int) -> np.ndarray:
    """b distinct indices, uniform over size-b subsets, ascending order.

    The full batch b = n short-circuits to range(n) without consuming the
    stream, so an SGD run with b = n is bitwise identical to GD.
    """
    if not 1 <= b <= n:
        raise InvalidArgumentError(f"need 1 <= b <= n, got b={b}, n={n}")
    if b == n:
        return np.arange(n)
    idx = rng.generator().choice(n, size=b, replace=False)
    return np.sort(idx)


def step(spec: ModelSpec, w: np.ndarray, data: Dataset, cfg: OptimConfig, t: int,
         rng: RngStream, batch_indices: np.ndarray | None = None
         ) -> tuple[np.ndarray, StepRecord]:
    """One update w - eta_t * grad_F_B(w); raises DivergedError on blow-up."""
    b = resolve_batch_size(cfg, data.n)
    if batch_indices is None:
        batch_indices = sample_batch(rng, data.n, b)
    eta = lr_at(cfg.schedule, t)
    try:
        f_b, g_b = grad_mean_xy(spec, w, data.features[batch_indices],
                                data.labels[batch_indices])
    except NumericDomainError as exc:
        raise DivergedError(t, float(np.linalg.norm(w)), str(exc)) from exc
    if not np.all(np.isfinite(g_b)):
        raise DivergedError(t, float(np.linalg.norm(w)), f"non-finite gradient at step {t}")
    w_next = w - eta * g_b
    norm_next = float(np.linalg.norm(w_next))
    if not math.isfinite(norm_next) or norm_next > PARAM_NORM_CAP:
        raise DivergedError(t, norm_next)
    rec = StepRecord(t=t, eta_t=eta, batch_indices=batch_indices, w_after=w_next, F_B=f_b)
    return w_next, rec


def _permute_batches(gen: np.random.Generator, n: int, b: int) -> list[np.ndarray]:
    """Consecutive size-b slices of a fresh permutation (last may be short)."""
    perm = gen.permutation(n)
    return [np.sort(perm[i:i + b]) for i in range(0, n, b)]


def train(spec: ModelSpec, w0: np.ndarray, S: Dataset, S_prime: Dataset,
          cfg: OptimConfig, recorder=None) -> TrainResult:
    """Run the configured loop, invoking the recorder at snapshot steps.

    The recorder is called as recorder(t, epoch, eta_t, w) at step 0, every
    snapshot_every-th step, and the final step; it returns the snapshot it
    recorded. The early-stop rule is evaluated at snapshot steps, where F_S
    is already being computed.
    """
    if recorder is None:
        from .trajectory import TrajectoryRecorder

        recorder = TrajectoryRecorder(spec, S, S_prime)
    b = resolve_batch_size(cfg, S.n)
    steps_per_epoch = max(1, math.ceil(S.n / b))
    rng = RngStream(cfg.seed, STREAM_BATCH)
    snapshots = []
    records: list[StepRecord] = []

    def record(t_now: int, w_now: np.ndarray):
        snap = recorder(t_now, t_now // steps_per_epoch, lr_at(cfg.schedule, t_now), w_now)
        snapshots.append(snap)
        return snap

    w = np.asarray(w0, dtype=np.float64).copy()
    snap = record(0, w)
    if cfg.stop_train_loss is not None and snap.F_S < cfg.stop_train_loss:
        return TrainResult(w, snapshots, records, steps_per_epoch, 0)

    pending: list[np.ndarray] = []
    for t in range(cfg.max_steps):
        if cfg.sampling == "permute":
            if not pending:
                pending = _permute_batches(rng.generator(), S.n, b)
            batch = pending.pop(0)
        else:
            batch = None
        w, rec = step(spec, w, S, cfg, t, rng, batch_indices=batch)
        records.append(rec)
        done = t + 1 == cfg.max_steps
        if (t + 1) % cfg.snapshot_every == 0 or done:
            snap = record(t + 1, w)
            if cfg.stop_train_loss is not None and snap.F_S < cfg.stop_train_loss:
                return TrainResult(w, snapshots, records, steps_per_epoch, t + 1)
    return TrainResult(w, snapshots, records, steps_per_epoch, len(records))
