"""Generalization bounds evaluated on recorded trajectories.

Two families live here. The trajectory bounds price the realized training
path: the main bound is (subset amplification) x (sign-mixing ratio) x
(cumulative complexity); the smooth variant adds two explicit
inverse-time-schedule terms; the relaxed variant adds a tail correction
when the holdout/train gradient ratio drifts late in training. The
stability baselines are closed-form uniform-stability rates that depend
only on scalar constants and the step-size sequence, evaluated with
plug-in estimates.

Every report stores the constants and scalar aggregates its formula
consumed, and reevaluate_bound reproduces the value bitwise from those,
so a report on disk can always be audited.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .errors import (
    IncompleteTrajectoryError,
    InvalidArgumentError,
)
from .models import ModelSpec, hessian_vector_product, per_sample_grads
from .numerics import STREAM_MOMENT, RngStream, power_iteration_top_eig
from .optim import Schedule, StepRecord
from .trajectory import (
    SubsetEstimatorConfig,
    TrajectorySnapshot,
    signed_mean_norm_stats,
    subset_ratio_max,
)


@dataclass
class ConstantEstimates:
    """Plug-in estimates of every scalar the bound formulas consume.

    L_hat: max per-sample gradient norm seen along the trajectory.
    beta_hat: top Hessian eigenvalue estimate (exact for the linear model).
    M2_sq / M4_fourth: max over snapshots of the Monte-Carlo batch-gradient
    second / fourth moments E||grad F_B||^2 and E||grad F_B||^4.
    gamma: max holdout/train gradient-norm ratio; gamma_prime its
    subset-amplified version; gamma_prime_envelope the analytic bracket
    max_i ||grad_i|| / ||mean grad||.
    V_m: max over snapshots of the sign-mixing ratio V.
    eta_m: largest realized step size.
    zeta / T0 / gamma_early: tail-drift correction for the relaxed bound.
    """

    L_hat: float
    beta_hat: float
    M2_sq: float
    M4_fourth: float
    gamma: float
    gamma_prime: float
    V_m: float
    eta_m: float
    zeta: float
    T0: int
    n: int
    T: int
    b: int
    gamma_prime_envelope: float = 0.0
    gamma_early: float = 0.0
    flags: list[str] = field(default_factory=list)


@dataclass
class BoundReport:
    method: str
    value: float
    constants: ConstantEstimates
    trajectory_aggregates: dict[str, float]
    remainder_scale: float | None = None
    notes: str = ""


def _ratio_term(trace: float, grad_norm: float) -> float | None:
    """1 + trace/||grad||^2, degenerating to 1 at a fully stationary point."""
    if grad_norm == 0.0:
        return 1.0 if trace == 0.0 else None
    return 1.0 + trace / (grad_norm * grad_norm)


def estimate_constants(spec: ModelSpec, weights, snapshots, records,
                       S: Dataset, S_prime: Dataset,
                       cfg: SubsetEstimatorConfig | None = None,
                       k_batches: int = 64, beta_snapshots: int = 16,
                       gamma_quantile: float = 0.95) -> ConstantEstimates:
    """One pass over the snapshot weights collecting every constant.

    Per-sample gradients are computed once per snapshot and shared by the
    L, V, subset-amplification, and batch-moment estimators. The smoothness
    constant uses a dense eigensolve for the linear model and power
    iteration on Hessian-vector products (at up to beta_snapshots evenly
    spaced weights) otherwise.
    """
    cfg = cfg or SubsetEstimatorConfig()
    weights = list(weights)
    snapshots = list(snapshots)
    records = list(records)
    if not weights or not snapshots:
        raise InvalidArgumentError("constant estimation needs a non-empty trajectory")
    if len(weights) != len(snapshots):
        raise InvalidArgumentError(
            f"{len(weights)} weights vs {len(snapshots)} snapshots"
        )
    flags: list[str] = []
    n = S.n
    T = len(records)
    b = len(records[0].batch_indices) if records else n
    if not records:
        flags.append("no-steps: eta_m and batch size defaulted")

    exact_batches = b == n
    moment_rng = RngStream(cfg.seed, STREAM_MOMENT)
    l_hat = 0.0
    v_m = 0.0
    inner_subset = 0.0
    envelope = 0.0
    m2 = 0.0
    m4 = 0.0
    trivial_v = False
    for w, snap in zip(weights, snapshots):
        G = per_sample_grads(spec, w, S)  # (n, P)
        g = np.mean(G, axis=0)
        gnorm = float(np.linalg.norm(g))
        row_norms = np.sqrt(np.einsum("np,np->n", G, G))
        l_hat = max(l_hat, float(np.max(row_norms)))

        d_hat, _se = signed_mean_norm_stats(G, cfg)
        if d_hat == 0.0:
            trivial_v = True
        else:
            v_m = max(v_m, gnorm / d_hat)

        if gnorm == 0.0:
            flags.append(f"gamma-prime: zero gradient at step {snap.t} skipped")
        else:
            inner_subset = max(inner_subset, subset_ratio_max(G, cfg))
            envelope = max(envelope, float(np.max(row_norms)) / gnorm)

        if exact_batches:
            m2 = max(m2, gnorm * gnorm)
            m4 = max(m4, gnorm ** 4)
        else:
            gen = moment_rng.generator()
            sq = np.empty(k_batches)
            for j in range(k_batches):
                idx = np.sort(gen.choice(n, size=b, replace=False))
                gb = np.mean(G[idx], axis=0)
                sq[j] = float(gb @ gb)
            m2 = max(m2, float(np.mean(sq)))
            m4 = max(m4, float(np.mean(sq * sq)))
    if trivial_v:
        flags.append("trivial-bound: sign-mixed gradient mean vanished at a snapshot")
        v_m = math.inf

    ratios = [(s.t, s.gamma_tilde) for s in snapshots if s.gamma_tilde is not None]
    if not ratios:
        raise InvalidArgumentError(
            "gamma undefined: every snapshot had zero training gradient norm"
        )
    gamma = max(r for _, r in ratios)
    gamma_prime = max(1.0, inner_subset) * gamma
    gamma_prime_env = max(1.0, envelope) * gamma

    # Tail-drift onset: first snapshot whose ratio exceeds the high quantile
    # of the early phase (first half of the recorded ratios).
    vals = np.array([r for _, r in ratios])
    early = vals[: max(1, len(vals) // 2)]
    threshold = float(np.quantile(early, gamma_quantile))
    t0 = ratios[-1][0]
    for t, r in ratios:
        if r > threshold:
            t0 = t
            break
    before = [r for t, r in ratios if t < t0]
    gamma_early = max(before) if before else ratios[0][1]
    zeta = 0.0
    for snap in snapshots:
        if snap.t >= t0:
            excess = snap.grad_norm_Sprime - gamma_early * snap.grad_norm_S
            zeta = max(zeta, max(0.0, excess))

    if spec.kind == "linear":
        X = S.features
        hess = (X.T @ X) / n  # (d, d)
        beta_hat = float(np.max(np.linalg.eigvalsh(hess)))
    else:
        count = min(beta_snapshots, len(weights))
        pick = np.unique(np.linspace(0, len(weights) - 1, count).astype(int))
        beta_hat = 0.0
        for i in pick:
            w = weights[i]
            lam, _ = power_iteration_top_eig(
                lambda v, _w=w: hessian_vector_product(spec, _w, S, v),
                dim=w.size,
            )
            beta_hat = max(beta_hat, lam)

    eta_m = max((rec.eta_t for rec in records), default=0.0)
    return ConstantEstimates(
        L_hat=l_hat, beta_hat=beta_hat, M2_sq=m2, M4_fourth=m4,
        gamma=gamma, gamma_prime=gamma_prime, V_m=v_m, eta_m=eta_m,
        zeta=zeta, T0=t0, n=n, T=T, b=b,
        gamma_prime_envelope=gamma_prime_env, gamma_early=gamma_early,
        flags=flags,
    )


def _eval_bound(method: str, est: ConstantEstimates, agg: dict[str, float]) -> float:
    """Single evaluation point for every bound formula.

    Both the report builders and reevaluate_bound call this, which is what
    makes stored reports bitwise re-derivable.
    """
    if method == "ours_main":
        return est.gamma_prime * est.V_m * agg["C_final"]
    if method == "ours_smooth":
        c = agg["c"]
        term1 = est.gamma_prime * est.V_m * agg["C_final"]
        term2 = (2.0 * c * c * est.gamma_prime * est.V_m
                 * math.sqrt(est.M4_fourth) * math.sqrt(agg["sum_inv4_ratio"]))
        term3 = 2.0 * c * c * est.M2_sq / est.beta_hat
        return term1 + term2 + term3
    if method == "ours_relaxed":
        main = est.gamma_prime * est.V_m * agg["C_final"]
        return main + 0.5 * agg["tail_delta_sum"] * agg["zeta"]
    L2 = est.L_hat * est.L_hat
    if method == "hardt_convex":
        return 2.0 * L2 / est.n * agg["sum_eta"]
    if method == "hardt_nonconvex":
        bc = est.beta_hat * agg["c"]
        return ((1.0 + 1.0 / bc) / (est.n - 1)
                * (2.0 * agg["c"] * L2) ** (1.0 / (bc + 1.0))
                * est.T ** (bc / (bc + 1.0)))
    if method == "zhang":
        c = agg["c"]
        return 16.0 * L2 * est.T ** c / est.n ** (1.0 + c)
    if method == "bassily":
        return (2.0 * L2 * math.sqrt(agg["sum_eta_sq"])
                + 4.0 * L2 / est.n * agg["sum_eta"])
    raise InvalidArgumentError(f"unknown bound method {method!r}")


def reevaluate_bound(report: BoundReport) -> float:
    """Recompute a report's value from its stored constants and aggregates."""
    return _eval_bound(report.method, report.constants, report.trajectory_aggregates)


def _check_usable(est: ConstantEstimates) -> None:
    if not math.isfinite(est.V_m):
        raise InvalidArgumentError(
            "trivial-bound flag set: sign-mixing ratio is unbounded"
        )


def bound_trajectory_main(est: ConstantEstimates, snapshots) -> BoundReport:
    """Amplification x mixing ratio x cumulative complexity.

    The unconstanted O(eta_m) discretization remainder is surfaced as
    remainder_scale and deliberately never added to the value.
    """
    if not snapshots:
        raise IncompleteTrajectoryError("main bound needs at least one snapshot")
    _check_usable(est)
    agg = {"C_final": snapshots[-1].C_cum}
    return BoundReport(
        method="ours_main",
        value=_eval_bound("ours_main", est, agg),
        constants=est,
        trajectory_aggregates=agg,
        remainder_scale=est.eta_m,
        notes="plus O(eta_m) remainder, unknown constant, not added",
    )


def bound_trajectory_smooth(est: ConstantEstimates, snapshots, c: float,
                            schedule: Schedule | None = None) -> BoundReport:
    """Three-term bound for inverse-time step sizes eta_t = c/(beta (t+1)).

    The second term sums 1/(n beta^2 (t+1)^4) times the covariance ratio
    over realized steps, taking the ratio from the left endpoint of each
    snapshot interval (exact at cadence 1). The step-size form is part of
    the hypothesis, so a mismatched schedule is rejected.
    """
    if not snapshots:
        raise IncompleteTrajectoryError("smooth bound needs at least one snapshot")
    _check_usable(est)
    if c < 0:
        raise InvalidArgumentError(f"c must be >= 0, got {c}")
    if schedule is not None:
        if schedule.kind != "inverse_time":
            raise InvalidArgumentError(
                f"smooth bound assumes inverse-time steps, schedule is {schedule.kind!r}"
            )
        if schedule.c != c:
            raise InvalidArgumentError(
                f"schedule c={schedule.c} does not match requested c={c}"
            )
        if est.beta_hat > 0 and not math.isclose(schedule.beta, est.beta_hat,
                                                 rel_tol=1e-6):
            raise InvalidArgumentError(
                f"schedule beta={schedule.beta} is not the estimated "
                f"smoothness {est.beta_hat}"
            )
    if c > 0 and est.beta_hat <= 0:
        raise InvalidArgumentError("smooth bound needs a positive smoothness estimate")

    inner = 0.0
    if c > 0:
        beta_sq = est.beta_hat * est.beta_hat
        for left, right in zip(snapshots[:-1], snapshots[1:]):
            ratio = _ratio_term(left.trace_sigma, left.grad_norm_S)
            if ratio is None:
                continue  # stationary mean with residual spread: no defined weight
            for t in range(left.t, right.t):
                inner += ratio / (est.n * beta_sq * (t + 1) ** 4)
    agg = {"C_final": snapshots[-1].C_cum, "sum_inv4_ratio": inner, "c": c}
    return BoundReport(
        method="ours_smooth",
        value=_eval_bound("ours_smooth", est, agg),
        constants=est,
        trajectory_aggregates=agg,
    )


def bound_trajectory_relaxed(est: ConstantEstimates, snapshots,
                             T0: int | None = None,
                             zeta: float | None = None) -> BoundReport:
    """Main bound plus the late-phase drift correction.

    Adds half of zeta times the sum of eta_t ||grad F_S|| over recorded
    steps at or after T0 (final step included).
    """
    if not snapshots:
        raise IncompleteTrajectoryError("relaxed bound needs at least one snapshot")
    _check_usable(est)
    t0 = est.T0 if T0 is None else T0
    z = est.zeta if zeta is None else zeta
    if t0 > snapshots[-1].t:
        raise InvalidArgumentError(
            f"T0={t0} is past the final recorded step {snapshots[-1].t}"
        )
    if z < 0:
        raise InvalidArgumentError(f"zeta must be >= 0, got {z}")
    tail = sum(s.delta_t for s in snapshots if s.t >= t0)
    agg = {"C_final": snapshots[-1].C_cum, "tail_delta_sum": tail,
           "T0": float(t0), "zeta": z}
    return BoundReport(
        method="ours_relaxed",
        value=_eval_bound("ours_relaxed", est, agg),
        constants=est,
        trajectory_aggregates=agg,
        remainder_scale=est.eta_m,
        notes="plus O(eta_m) remainder, unknown constant, not added",
    )


STABILITY_KINDS = ("hardt_convex", "hardt_nonconvex", "zhang", "bassily")

_HARDT_NONCONVEX_FORM = (
    "(1 + 1/(beta*c))/(n-1) * (2*c*L^2)^(1/(beta*c+1)) * T^(beta*c/(beta*c+1))"
)


def bound_stability_baseline(kind: str, est: ConstantEstimates, records,
                             schedule: Schedule | None = None) -> BoundReport:
    """Closed-form uniform-stability rates with plug-in constants.

    hardt_convex and bassily consume the realized step sizes; the
    nonconvex rates consume the inverse-time schedule parameters, so those
    kinds require the schedule. bassily's decomposition uses the step
    sizes of all but the final step.
    """
    if kind not in STABILITY_KINDS:
        raise InvalidArgumentError(f"unknown stability baseline {kind!r}")
    records = list(records)
    etas = [rec.eta_t for rec in records]
    agg: dict[str, float] = {}
    notes = ""
    if kind == "hardt_convex":
        agg["sum_eta"] = float(sum(etas))
    elif kind == "bassily":
        head = etas[:-1]
        agg["sum_eta"] = float(sum(head))
        agg["sum_eta_sq"] = float(sum(e * e for e in head))
    else:
        if schedule is None or schedule.kind != "inverse_time":
            raise InvalidArgumentError(
                f"{kind} needs the inverse-time schedule constant c"
            )
        if est.n < 2:
            raise InvalidArgumentError(f"{kind} needs n >= 2, got n={est.n}")
        agg["c"] = schedule.c
        if kind == "hardt_nonconvex":
            if est.beta_hat <= 0:
                raise InvalidArgumentError(
                    "hardt_nonconvex needs a positive smoothness constant beta_hat"
                )
            notes = _HARDT_NONCONVEX_FORM
    return BoundReport(
        method=kind,
        value=_eval_bound(kind, est, agg),
        constants=est,
        trajectory_aggregates=agg,
        notes=notes,
    )


_CONSTANT_COLUMNS = (
    "L_hat", "beta_hat", "gamma", "gamma_prime", "V_m", "M2_sq", "M4_fourth",
    "eta_m", "zeta", "T0", "n", "T", "b",
)
_AGGREGATE_COLUMNS = (
    "C_final", "sum_eta", "sum_eta_sq", "sum_inv4_ratio", "tail_delta_sum", "c",
)

# Which columns each method's formula actually reads; everything else is
# left blank in the CSV so a reader sees what entered each value.
_USED: dict[str, tuple[str, ...]] = {
    "ours_main": ("gamma_prime", "V_m", "eta_m", "n", "T", "b", "C_final"),
    "ours_smooth": ("gamma_prime", "V_m", "M2_sq", "M4_fourth", "beta_hat",
                    "n", "T", "b", "C_final", "sum_inv4_ratio", "c"),
    "ours_relaxed": ("gamma_prime", "V_m", "eta_m", "zeta", "T0", "n", "T", "b",
                     "C_final", "tail_delta_sum"),
    "hardt_convex": ("L_hat", "n", "T", "sum_eta"),
    "hardt_nonconvex": ("L_hat", "beta_hat", "n", "T", "c"),
    "zhang": ("L_hat", "n", "T", "c"),
    "bassily": ("L_hat", "n", "T", "sum_eta", "sum_eta_sq"),
}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def write_bounds_csv(path: str, reports, seeds=None) -> None:
    """One row per report; a leading seed column when seeds are given."""
    reports = list(reports)
    if seeds is not None:
        seeds = list(seeds)
        if len(seeds) != len(reports):
            raise InvalidArgumentError(
                f"{len(seeds)} seeds for {len(reports)} reports"
            )
    header = ["method", "value", "remainder_scale"]
    header += list(_CONSTANT_COLUMNS) + list(_AGGREGATE_COLUMNS)
    if seeds is not None:
        header = ["seed"] + header
    lines = [",".join(header)]
    for i, rep in enumerate(reports):
        used = _USED[rep.method]
        cells = [rep.method, repr(float(rep.value)), _fmt(rep.remainder_scale)]
        for name in _CONSTANT_COLUMNS:
            if name not in used:
                cells.append("")
                continue
            # the relaxed bound may have been evaluated with overridden
            # T0/zeta; the aggregates hold what the formula actually used
            if name in rep.trajectory_aggregates:
                val = rep.trajectory_aggregates[name]
            else:
                val = getattr(rep.constants, name)
            if name in ("T0", "n", "T", "b"):
                cells.append(str(int(val)))
            else:
                cells.append(repr(float(val)))
        for name in _AGGREGATE_COLUMNS:
            if name in used and name in rep.trajectory_aggregates:
                cells.append(repr(float(rep.trajectory_aggregates[name])))
            else:
                cells.append("")
        if seeds is not None:
            cells = [str(int(seeds[i]))] + cells
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
