"""Experiment commands: one function per CLI subcommand.

Each command is a pure function of (config, seeds): it assembles the
dataset, model, and optimizer from the validated config, runs training
with a trajectory recorder, and writes CSV outputs (plus optional SVG
plots and a meta.json echoing the resolved configuration). Re-running a
command with the same inputs produces byte-identical files.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .bounds import (
    bound_stability_baseline,
    bound_trajectory_main,
    bound_trajectory_relaxed,
    bound_trajectory_smooth,
    estimate_constants,
    write_bounds_csv,
)
from .config import ExperimentConfig, emit_config
from .data import (
    Dataset,
    ToyConfig,
    generate_toy,
    inject_label_noise,
    load_csv_dataset,
    noise_stream,
    split_stream,
    split_train_holdout,
)
from .errors import DivergedError
from .models import (
    ModelSpec,
    hessian_vector_product,
    init_params,
    linear_spec,
    mlp_spec,
)
from .numerics import STREAM_INIT, RngStream, power_iteration_top_eig
from .optim import OptimConfig, Schedule, train
from .plots import PlotSpec, emit_svg_plots
from .trajectory import (
    SubsetEstimatorConfig,
    TrajectoryRecorder,
    replay_trajectory,
    write_trajectory_csv,
)


@dataclass
class RunParts:
    """Everything one training run needs, resolved from config + seed."""

    spec: ModelSpec
    S: Dataset
    S_prime: Dataset
    w0: np.ndarray
    ocfg: OptimConfig
    schedule: Schedule
    steps_per_epoch: int
    batch_size: int
    est: SubsetEstimatorConfig


def _resolve_beta(spec: ModelSpec, S: Dataset, w0: np.ndarray) -> float:
    """Smoothness estimate for schedules that need it before training."""
    if spec.kind == "linear":
        hess = (S.features.T @ S.features) / S.n
        return float(np.max(np.linalg.eigvalsh(hess)))
    lam, _ = power_iteration_top_eig(
        lambda v: hessian_vector_product(spec, w0, S, v), dim=w0.size
    )
    return lam


def assemble_run(cfg: ExperimentConfig, run_seed: int,
                 eta0_override: float | None = None,
                 flip_override: float | None = None) -> RunParts:
    if cfg.dataset_kind == "toy":
        S, S_prime, _teacher = generate_toy(
            ToyConfig(cfg.n_train, cfg.n_test, cfg.dim, seed=run_seed)
        )
    else:
        full = load_csv_dataset(cfg.csv_path, cfg.label_column)
        S, S_prime = split_train_holdout(full, cfg.holdout_fraction,
                                         split_stream(run_seed))
    flip = cfg.flip_fraction if flip_override is None else flip_override
    if flip > 0.0:
        S = inject_label_noise(S, flip, noise_stream(run_seed))

    if cfg.model_kind == "linear":
        spec = linear_spec(S.dim)
    else:
        out_dim = 1 if cfg.loss == "squared" else int(np.unique(S.labels).size)
        spec = mlp_spec(S.dim, cfg.hidden, out_dim, cfg.loss)
    w0 = init_params(spec, RngStream(run_seed, STREAM_INIT))

    b = S.n if cfg.mode == "gd" else cfg.batch_size
    steps_per_epoch = max(1, math.ceil(S.n / b))
    max_steps = (cfg.max_steps if cfg.max_steps is not None
                 else cfg.epochs * steps_per_epoch)
    snapshot_every = cfg.snapshot_every or steps_per_epoch

    eta0 = cfg.eta0 if eta0_override is None else eta0_override
    if cfg.schedule_kind == "constant":
        schedule = Schedule("constant", eta0=eta0)
    elif cfg.schedule_kind == "inverse_time":
        beta = cfg.beta if cfg.beta is not None else _resolve_beta(spec, S, w0)
        schedule = Schedule("inverse_time", c=cfg.c, beta=beta)
    else:
        t_max = cfg.t_max if cfg.t_max is not None else max(1, max_steps)
        schedule = Schedule("cosine", eta0=eta0, eta_min=cfg.eta_min, t_max=t_max)

    ocfg = OptimConfig(
        mode=cfg.mode,
        batch_size=None if cfg.mode == "gd" else b,
        schedule=schedule,
        max_steps=max_steps,
        stop_train_loss=cfg.stop_train_loss,
        snapshot_every=snapshot_every,
        seed=run_seed,
        sampling=cfg.sampling,
    )
    est = SubsetEstimatorConfig(k_samples=cfg.k_samples, n_sp=cfg.n_sp,
                                seed=run_seed, subset_mode=cfg.subset_mode)
    return RunParts(spec, S, S_prime, w0, ocfg, schedule, steps_per_epoch, b, est)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def _write_csv(path: str, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_meta(out_dir: str, cfg: ExperimentConfig, extra: dict) -> str:
    meta = {"experiment": cfg.experiment, "sampling": cfg.sampling,
            "seeds": list(cfg.seeds), "config": emit_config(cfg)}
    meta.update(extra)
    path = os.path.join(out_dir, "meta.json")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    return path


def _train_run(parts: RunParts, seed: int, label: str):
    rec = TrajectoryRecorder(parts.spec, parts.S, parts.S_prime, parts.est)
    try:
        res = train(parts.spec, parts.w0, parts.S, parts.S_prime, parts.ocfg, rec)
    except DivergedError as exc:
        raise DivergedError(exc.t, exc.param_norm,
                            f"{label} seed {seed}: {exc}") from exc
    return rec, res


TOY_TABLE_COLUMNS = ("seed", "gen_error", "ours_main", "ours_smooth",
                     "hardt_convex", "hardt_nonconvex", "zhang")


def cmd_toy_table(cfg: ExperimentConfig, plots: bool = False) -> dict:
    """Train the comparison task per seed and tabulate bound values.

    Writes toy_table.csv (per-seed rows plus a seed-mean row) and
    bounds.csv with the full per-seed bound reports.
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    table_rows = []
    reports = []
    report_seeds = []
    for s in cfg.seeds:
        parts = assemble_run(cfg, s)
        rec, res = _train_run(parts, s, "toy_table")
        consts = estimate_constants(parts.spec, rec.weights, rec.snapshots,
                                    res.records, parts.S, parts.S_prime, parts.est)
        r_main = bound_trajectory_main(consts, rec.snapshots)
        r_smooth = bound_trajectory_smooth(consts, rec.snapshots,
                                           parts.schedule.c, parts.schedule)
        r_relaxed = bound_trajectory_relaxed(consts, rec.snapshots)
        r_hc = bound_stability_baseline("hardt_convex", consts, res.records)
        r_hnc = bound_stability_baseline("hardt_nonconvex", consts, res.records,
                                         parts.schedule)
        r_zh = bound_stability_baseline("zhang", consts, res.records,
                                        parts.schedule)
        r_ba = bound_stability_baseline("bassily", consts, res.records)
        last = rec.snapshots[-1]
        gen = last.F_Sprime - last.F_S
        table_rows.append([s, gen, r_main.value, r_smooth.value,
                           r_hc.value, r_hnc.value, r_zh.value])
        for rep in (r_main, r_smooth, r_relaxed, r_hc, r_hnc, r_zh, r_ba):
            reports.append(rep)
            report_seeds.append(s)

    values = np.array([row[1:] for row in table_rows], dtype=np.float64)
    mean_row = ["mean"] + [float(v) for v in np.mean(values, axis=0)]
    table_path = os.path.join(out, "toy_table.csv")
    _write_csv(table_path, TOY_TABLE_COLUMNS, table_rows + [mean_row])
    bounds_path = os.path.join(out, "bounds.csv")
    write_bounds_csv(bounds_path, reports, seeds=report_seeds)
    meta_path = _write_meta(out, cfg, {})
    paths = [table_path, bounds_path, meta_path]
    if plots:
        paths += emit_svg_plots(table_path, [
            PlotSpec(x="seed", ys=("gen_error", "ours_main", "hardt_nonconvex"),
                     out_name="toy_table.svg", title="bound comparison by seed",
                     exclude=("seed", "mean")),
        ])
    mean = dict(zip(TOY_TABLE_COLUMNS[1:], mean_row[1:]))
    return {"paths": paths, "mean": mean}


def cmd_track(cfg: ExperimentConfig, plots: bool = False) -> dict:
    """Record one run and derive the complexity-tracking series.

    Writes trajectory.csv plus track.csv with F_S + C_cum and the
    per-interval ratio dC/dF_S (empty when F_S did not change).
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    s = cfg.seeds[0]
    parts = assemble_run(cfg, s)
    rec, _res = _train_run(parts, s, "track")

    traj_path = os.path.join(out, "trajectory.csv")
    write_trajectory_csv(traj_path, rec.snapshots)

    rows = []
    snaps = rec.snapshots
    for i, snap in enumerate(snaps):
        if i == 0:
            ratio = None
        else:
            df = snap.F_S - snaps[i - 1].F_S
            dc = snap.C_cum - snaps[i - 1].C_cum
            ratio = None if df == 0.0 else dc / df
        rows.append([snap.t, snap.epoch, snap.F_S, snap.F_Sprime,
                     snap.F_S + snap.C_cum, ratio])
    track_path = os.path.join(out, "track.csv")
    _write_csv(track_path, ("t", "epoch", "F_S", "F_Sprime", "F_plus_C", "dC_dF"),
               rows)
    meta_path = _write_meta(out, cfg, {"seed_used": s})
    paths = [traj_path, track_path, meta_path]
    if plots:
        paths += emit_svg_plots(track_path, [
            PlotSpec(x="epoch", ys=("F_S", "F_Sprime", "F_plus_C"),
                     out_name="track_loss.svg", title="loss and shifted complexity"),
            PlotSpec(x="epoch", ys=("dC_dF",), out_name="track_ratio.svg",
                     title="complexity-to-loss increment ratio"),
        ])
    return {"paths": paths}


def cmd_assumption(cfg: ExperimentConfig, plots: bool = False) -> dict:
    """Probe the holdout/train gradient-norm ratio along one run.

    The main series uses the held-out set; a control series replays the
    same weights with the training set standing in for the holdout, where
    the ratio is identically 1.
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    s = cfg.seeds[0]
    parts = assemble_run(cfg, s)
    rec, _res = _train_run(parts, s, "assumption")
    control = replay_trajectory(
        parts.spec, parts.S, parts.S, rec.weights,
        [sn.t for sn in rec.snapshots],
        [sn.epoch for sn in rec.snapshots],
        [sn.eta_t for sn in rec.snapshots],
        parts.est,
    )

    rows = []
    gamma_max = {}
    for label, snaps in (("main", rec.snapshots), ("control", control.snapshots)):
        defined = [sn.gamma_tilde for sn in snaps if sn.gamma_tilde is not None]
        gamma_max[label] = max(defined) if defined else None
        for sn in snaps:
            rows.append([label, sn.t, sn.epoch, sn.F_S, sn.grad_norm_S,
                         sn.grad_norm_Sprime, sn.gamma_tilde])
    path = os.path.join(out, "assumption.csv")
    _write_csv(path, ("dataset", "t", "epoch", "F_S", "grad_norm_S",
                      "grad_norm_Sprime", "gamma_tilde"), rows)
    meta_path = _write_meta(out, cfg, {
        "seed_used": s,
        "gamma_max_main": gamma_max["main"],
        "gamma_max_control": gamma_max["control"],
    })
    paths = [path, meta_path]
    if plots:
        paths += emit_svg_plots(path, [
            PlotSpec(x="epoch", ys=("gamma_tilde",), out_name="assumption_gamma.svg",
                     title="holdout/train gradient-norm ratio",
                     where=("dataset", "main")),
            PlotSpec(x="epoch", ys=("F_S",), out_name="assumption_loss.svg",
                     title="training loss", where=("dataset", "main")),
        ])
    return {"paths": paths, "gamma_max": gamma_max}


SWEEP_COLUMNS = ("sweep_param", "value", "seed", "gen_error", "C_final",
                 "stopped_at", "diverged")


def cmd_sweep(cfg: ExperimentConfig, plots: bool = False) -> dict:
    """Grid x seeds sweep recording generalization gap and final complexity.

    A diverging cell becomes a row with diverged=1 and empty metrics; it is
    excluded from the seed-mean rows and does not abort the sweep.
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    param = cfg.sweep_param
    rows = []
    per_value = {}
    for v in cfg.sweep_values:
        cells = []
        for s in cfg.seeds:
            parts = assemble_run(
                cfg, s,
                eta0_override=v if param == "lr" else None,
                flip_override=v if param == "noise" else None,
            )
            rec = TrajectoryRecorder(parts.spec, parts.S, parts.S_prime, parts.est)
            try:
                res = train(parts.spec, parts.w0, parts.S, parts.S_prime,
                            parts.ocfg, rec)
            except DivergedError as exc:
                rows.append([param, v, s, None, None, exc.t, 1])
                continue
            last = rec.snapshots[-1]
            gen = last.F_Sprime - last.F_S
            cells.append((gen, last.C_cum, res.stopped_at))
            rows.append([param, v, s, gen, last.C_cum, res.stopped_at, 0])
        if cells:
            arr = np.array(cells, dtype=np.float64)
            m = np.mean(arr, axis=0)
            per_value[v] = (float(m[0]), float(m[1]), float(m[2]))
            rows.append([param, v, "mean", float(m[0]), float(m[1]),
                         float(m[2]), None])
        else:
            per_value[v] = None
            rows.append([param, v, "mean", None, None, None, None])

    path = os.path.join(out, "sweep.csv")
    _write_csv(path, SWEEP_COLUMNS, rows)
    meta_path = _write_meta(out, cfg, {"grid": list(cfg.sweep_values),
                                       "sweep_param": param})
    paths = [path, meta_path]
    if plots:
        paths += emit_svg_plots(path, [
            PlotSpec(x="value", ys=("gen_error",), out_name="sweep_gen.svg",
                     title=f"generalization gap vs {param}",
                     where=("seed", "mean")),
            PlotSpec(x="value", ys=("C_final",), out_name="sweep_c.svg",
                     title=f"final complexity vs {param}",
                     where=("seed", "mean")),
        ])
    return {"paths": paths, "per_value": per_value}


def cmd_eos(cfg: ExperimentConfig, plots: bool = False) -> dict:
    """Relative-progress and sharpness series for one run.

    Records RP/TRP per snapshot (exact one-step ratios when the cadence is
    a single step, the epoch-boundary approximation otherwise), the top
    Hessian eigenvalue at each snapshot, and the 2/eta_eff stability
    reference. On divergence the partial series is still written, then the
    error propagates.
    """
    out = cfg.output_dir
    os.makedirs(out, exist_ok=True)
    s = cfg.seeds[0]
    parts = assemble_run(cfg, s)
    rp_mode = "step" if parts.ocfg.snapshot_every == 1 else "epoch"
    rec = TrajectoryRecorder(parts.spec, parts.S, parts.S_prime, parts.est,
                             rp_mode=rp_mode, batch_size=parts.batch_size)
    died = None
    try:
        train(parts.spec, parts.w0, parts.S, parts.S_prime, parts.ocfg, rec)
    except DivergedError as exc:
        died = exc

    n = parts.S.n
    rows = []
    for snap, w in zip(rec.snapshots, rec.weights):
        sharp, _ = power_iteration_top_eig(
            lambda v, _w=w: hessian_vector_product(parts.spec, _w, parts.S, v),
            dim=w.size, iters=120, tol=1e-7,
        )
        eta_eff = snap.eta_t if rp_mode == "step" else (n / parts.batch_size) * snap.eta_t
        rows.append([snap.t, snap.epoch, snap.eta_t, eta_eff, snap.rp, snap.trp,
                     sharp, 2.0 / eta_eff])
    path = os.path.join(out, "eos.csv")
    _write_csv(path, ("t", "epoch", "eta", "eta_eff", "rp", "trp",
                      "sharpness", "two_over_eta_eff"), rows)
    meta_path = _write_meta(out, cfg, {
        "seed_used": s,
        "rp_mode": rp_mode,
        "diverged_at": died.t if died is not None else None,
    })
    paths = [path, meta_path]
    if plots:
        paths += emit_svg_plots(path, [
            PlotSpec(x="epoch", ys=("rp", "trp"), out_name="eos_rp.svg",
                     title="relative progress"),
            PlotSpec(x="epoch", ys=("sharpness", "two_over_eta_eff"),
                     out_name="eos_sharpness.svg", title="sharpness vs 2/eta"),
        ])
    if died is not None:
        raise DivergedError(died.t, died.param_norm,
                            f"eos seed {s}: diverged at step {died.t}; "
                            f"partial series written to {path}")
    return {"paths": paths}


COMMANDS = {
    "toy_table": cmd_toy_table,
    "track": cmd_track,
    "assumption": cmd_assumption,
    "sweep_noise": cmd_sweep,
    "sweep_lr": cmd_sweep,
    "eos": cmd_eos,
}
