"""Trajectory statistics against brute-force oracles.

The estimators here all have small-n exact counterparts: exhaustive batch
enumeration for the noise covariance, a dense covariance matrix for the
trace identity, full sign-pattern enumeration for the mixing estimator,
and explicit subset enumeration for the amplification ratio.
"""

import itertools
import math

import numpy as np
import pytest

from trajbound.data import Dataset, ToyConfig, generate_toy
from trajbound.errors import (
    IncompleteTrajectoryError,
    InvalidArgumentError,
    NumericDomainError,
)
from trajbound.models import (
    init_params,
    linear_spec,
    mlp_spec,
    param_count,
    per_sample_grads,
    per_sample_grads_xy,
)
from trajbound.numerics import RngStream
from trajbound.optim import OptimConfig, Schedule, train
from trajbound.trajectory import (
    SubsetEstimatorConfig,
    TrajectoryRecorder,
    _trace_from_grads,
    complexity_update,
    estimate_V,
    estimate_V_stats,
    estimate_gamma_prime,
    gamma_tilde,
    gen_decomposition,
    grad_trace_sigma,
    noise_cov_scale,
    replay_trajectory,
    rp_trp_gd,
    rp_trp_sgd_approx,
    signed_mean_norm_stats,
    subset_ratio_max,
    write_trajectory_csv,
)


def linear_state(n=6, d=3, seed=0):
    gen = np.random.default_rng(seed)
    data = Dataset(gen.standard_normal((n, d)), gen.standard_normal(n))
    spec = linear_spec(d)
    w = gen.standard_normal(d)
    return spec, w, data


# -- covariance scale and trace ----------------------------------------------

def test_noise_cov_scale_closed_form():
    assert noise_cov_scale(6, 1) == pytest.approx(5 / 5)
    assert noise_cov_scale(6, 2) == pytest.approx(4 / 10)
    assert noise_cov_scale(6, 6) == 0.0
    with pytest.raises(InvalidArgumentError):
        noise_cov_scale(1, 1)
    with pytest.raises(InvalidArgumentError):
        noise_cov_scale(6, 0)
    with pytest.raises(InvalidArgumentError):
        noise_cov_scale(6, 7)


@pytest.mark.parametrize("b", [1, 2, 3])
def test_batch_noise_mean_and_trace_by_exhaustive_enumeration(b):
    # enumerate every size-b batch: the batch-gradient noise has zero mean
    # and covariance trace (n-b)/(b(n-1)) * TrSigma
    n = 6
    spec, w, data = linear_state(n=n, d=4, seed=3)
    G = per_sample_grads(spec, w, data)
    g_full = np.mean(G, axis=0)
    trace, _, _ = grad_trace_sigma(spec, w, data)

    eps = []
    for batch in itertools.combinations(range(n), b):
        gb = np.mean(G[list(batch)], axis=0)
        eps.append(gb - g_full)
    eps = np.array(eps)
    assert np.max(np.abs(np.mean(eps, axis=0))) < 1e-12
    cov_trace = float(np.mean(np.einsum("kp,kp->k", eps, eps)))
    assert cov_trace == pytest.approx(noise_cov_scale(n, b) * trace, abs=1e-10)


def test_trace_identity_matches_dense_covariance():
    gen = np.random.default_rng(0)
    for _ in range(25):
        n = int(gen.integers(2, 21))
        d = int(gen.integers(1, 11))
        X = gen.standard_normal((n, d))
        y = gen.standard_normal(n)
        data = Dataset(X, y)
        spec = linear_spec(d)
        w = gen.standard_normal(d)
        trace, gnorm, F = grad_trace_sigma(spec, w, data)
        G = per_sample_grads(spec, w, data)
        dense = np.cov(G.T, bias=True)
        dense_trace = float(np.trace(np.atleast_2d(dense)))
        assert trace == pytest.approx(dense_trace, abs=1e-10)
        assert gnorm == pytest.approx(np.linalg.norm(np.mean(G, axis=0)))
        assert F == pytest.approx(0.5 * np.mean((X @ w - y) ** 2))


def test_trace_is_nonnegative_roundoff_at_duplicated_samples():
    # identical rows: every per-sample gradient equals the mean, so the
    # trace is zero up to roundoff and must come back nonnegative
    X = np.tile([[1.0, 2.0]], (5, 1))
    data = Dataset(X, np.full(5, 3.0))
    trace, _, _ = grad_trace_sigma(linear_spec(2), np.array([0.3, -0.7]), data)
    assert 0.0 <= trace < 1e-12


def test_subsampled_trace_is_deterministic_and_clamped():
    spec, w, data = linear_state(n=12, d=3, seed=5)
    r1 = grad_trace_sigma(spec, w, data, n_sp=4, rng=RngStream(9, 10))
    r2 = grad_trace_sigma(spec, w, data, n_sp=4, rng=RngStream(9, 10))
    assert r1 == r2
    assert r1[0] >= 0.0
    # subsample of everything is the exact value
    full = grad_trace_sigma(spec, w, data, n_sp=12, rng=RngStream(9, 10))
    exact = grad_trace_sigma(spec, w, data)
    assert full == exact
    with pytest.raises(InvalidArgumentError):
        grad_trace_sigma(spec, w, data, n_sp=13, rng=RngStream(9, 10))


def test_trace_guard_paths():
    G = np.array([[1.0, 0.0], [0.0, 1.0]])
    # a mean inconsistent with the rows drives the trace clearly negative
    with pytest.raises(NumericDomainError):
        _trace_from_grads(G, np.array([5.0, 5.0]), None, None)
    # the subsampled path clamps instead of raising
    assert _trace_from_grads(G, np.array([5.0, 5.0]), 1, RngStream(0, 10)) == 0.0
    with pytest.raises(InvalidArgumentError):
        _trace_from_grads(G, np.zeros(2), 1, None)  # subsample without rng
    with pytest.raises(InvalidArgumentError):
        _trace_from_grads(G, np.zeros(2), 3, RngStream(0, 10))


# -- complexity increments ---------------------------------------------------

def test_complexity_update_closed_form():
    # single interval: C = -2 (dF / sqrt(n)) sqrt(1 + trace/g^2)
    c = complexity_update(0.0, F_prev=1.0, F_curr=0.75, trace_sigma=3.0,
                          grad_norm=1.0, n=16)
    assert c == pytest.approx(-2.0 * (-0.25) / 4.0 * 2.0)
    # a loss increase subtracts complexity symmetrically
    assert complexity_update(0.0, 0.75, 1.0, 3.0, 1.0, 16) == pytest.approx(-c)


def test_complexity_update_accumulates():
    c1 = complexity_update(0.0, 1.0, 0.8, 0.5, 1.0, 9)
    c2 = complexity_update(c1, 0.8, 0.7, 0.2, 0.5, 9)
    expect = (-2.0 * (-0.2) / 3.0 * math.sqrt(1.5)
              - 2.0 * (-0.1) / 3.0 * math.sqrt(1.0 + 0.2 / 0.25))
    assert c2 == pytest.approx(expect)


def test_complexity_update_stationary_point_degenerates_to_factor_one():
    c = complexity_update(1.0, 0.5, 0.4, trace_sigma=0.0, grad_norm=0.0, n=4)
    assert c == pytest.approx(1.0 - 2.0 * (-0.1) / 2.0)


def test_complexity_update_skips_undefined_ratio_with_flag():
    flags = []
    c = complexity_update(1.0, 0.5, 0.4, trace_sigma=0.3, grad_norm=0.0, n=4,
                          flags=flags)
    assert c == 1.0
    assert any("degenerate-gradient" in f for f in flags)
    with pytest.raises(InvalidArgumentError):
        complexity_update(0.0, 1.0, 0.5, 0.1, 1.0, 0)


def test_interval_ratio_identity():
    # |dC/dF| over one interval is exactly (2/sqrt(n)) sqrt(1 + r)
    n, trace, gnorm = 25, 2.0, 0.5
    dF = -0.3
    dC = complexity_update(0.0, 1.0, 1.0 + dF, trace, gnorm, n)
    expect = (2.0 / math.sqrt(n)) * math.sqrt(1.0 + trace / gnorm ** 2)
    assert abs(dC / dF) == pytest.approx(expect, rel=1e-12)


def test_gamma_tilde():
    assert gamma_tilde(2.0, 4.0) == 0.5
    flags = []
    assert gamma_tilde(1.0, 0.0, flags) is None
    assert any("undefined-ratio" in f for f in flags)


# -- sign-mixing estimators ----------------------------------------------------

def exhaustive_signed_mean(G):
    n = G.shape[0]
    norms = []
    for signs in itertools.product((-1.0, 1.0), repeat=n):
        norms.append(np.linalg.norm(np.array(signs) @ G) / n)
    return float(np.mean(norms))


def test_signed_mean_norm_exhaustive_matches_brute_force():
    spec, w, data = linear_state(n=5, d=3, seed=7)
    G = per_sample_grads(spec, w, data)
    d_hat, se = signed_mean_norm_stats(G, SubsetEstimatorConfig(k_samples=64))
    assert se == 0.0  # 2^5 = 32 <= 64: enumeration, no sampling error
    assert d_hat == pytest.approx(exhaustive_signed_mean(G), rel=1e-12)


def test_signed_mean_norm_monte_carlo_is_deterministic():
    spec, w, data = linear_state(n=12, d=4, seed=8)
    G = per_sample_grads(spec, w, data)
    cfg = SubsetEstimatorConfig(k_samples=256, seed=5)
    a = signed_mean_norm_stats(G, cfg)
    b = signed_mean_norm_stats(G, cfg)
    assert a == b
    assert a[1] > 0.0
    other = signed_mean_norm_stats(G, SubsetEstimatorConfig(k_samples=256, seed=6))
    assert a != other


def test_jensen_bound_on_signed_mean():
    # E ||(1/n) sum s_i g_i|| <= sqrt(E ||...||^2) = sqrt((TrSigma + ||g||^2)/n)
    spec, w, data = linear_state(n=6, d=4, seed=9)
    G = per_sample_grads(spec, w, data)
    d_hat, se = signed_mean_norm_stats(G, SubsetEstimatorConfig(k_samples=64))
    trace, gnorm, _ = grad_trace_sigma(spec, w, data)
    assert d_hat <= math.sqrt((trace + gnorm ** 2) / data.n) + 1e-12
    assert se == 0.0


def test_estimate_v_stats_and_trivial_flag():
    spec, w, data = linear_state(n=5, d=3, seed=10)
    v, d_hat, se, trivial = estimate_V_stats(spec, w, data,
                                             SubsetEstimatorConfig(k_samples=64))
    G = per_sample_grads(spec, w, data)
    assert not trivial
    assert v == pytest.approx(
        np.linalg.norm(np.mean(G, axis=0)) / exhaustive_signed_mean(G), rel=1e-12
    )

    # exact interpolation: every residual zero, so every gradient is zero
    X = np.random.default_rng(0).standard_normal((4, 4))
    w_star = np.array([1.0, -2.0, 0.5, 3.0])
    flat = Dataset(X, X @ w_star)
    flags = []
    v = estimate_V(linear_spec(4), w_star, flat,
                   SubsetEstimatorConfig(k_samples=32), flags)
    assert v == math.inf
    assert any("trivial-bound" in f for f in flags)


def test_estimate_v_needs_two_samples():
    data = Dataset(np.ones((1, 2)), np.zeros(1))
    with pytest.raises(InvalidArgumentError):
        estimate_V_stats(linear_spec(2), np.ones(2), data,
                         SubsetEstimatorConfig())


def test_subset_ratio_max_matches_exhaustive_enumeration():
    spec, w, data = linear_state(n=6, d=3, seed=11)
    G = per_sample_grads(spec, w, data)
    got = subset_ratio_max(G, SubsetEstimatorConfig(k_samples=64))
    g = np.mean(G, axis=0)
    best = 0.0
    for size in range(1, 6):
        for subset in itertools.combinations(range(6), size):
            best = max(best, float(np.linalg.norm(G[list(subset)].sum(axis=0))))
    assert got == pytest.approx(best / (6 * np.linalg.norm(g)), rel=1e-12)


def test_subset_ratio_max_sampled_never_exceeds_exhaustive():
    spec, w, data = linear_state(n=10, d=3, seed=12)
    G = per_sample_grads(spec, w, data)
    exhaustive = subset_ratio_max(G, SubsetEstimatorConfig(k_samples=2048))
    for mode in ("rademacher", "size_uniform"):
        sampled = subset_ratio_max(
            G, SubsetEstimatorConfig(k_samples=100, subset_mode=mode, seed=3)
        )
        assert sampled <= exhaustive + 1e-12
        assert sampled > 0.0


def test_subset_ratio_max_rejects_zero_mean_gradient():
    G = np.array([[1.0, 0.0], [-1.0, 0.0]])
    with pytest.raises(InvalidArgumentError):
        subset_ratio_max(G, SubsetEstimatorConfig())


def test_subset_estimator_config_validation():
    with pytest.raises(InvalidArgumentError):
        SubsetEstimatorConfig(k_samples=0)
    with pytest.raises(InvalidArgumentError):
        SubsetEstimatorConfig(n_sp=0)
    with pytest.raises(InvalidArgumentError):
        SubsetEstimatorConfig(subset_mode="stratified")


def test_estimate_gamma_prime_brackets():
    spec, w, data = linear_state(n=6, d=3, seed=13)
    cfg = SubsetEstimatorConfig(k_samples=64)
    gamma = 1.7
    value, envelope = estimate_gamma_prime(spec, [w], data, gamma, cfg,
                                           with_envelope=True)
    assert value >= gamma  # the amplification factor is at least 1
    assert envelope >= value  # analytic bracket dominates the sampled max
    inner = subset_ratio_max(per_sample_grads(spec, w, data), cfg)
    assert value == pytest.approx(max(1.0, inner) * gamma, rel=1e-12)


def test_estimate_gamma_prime_skips_zero_gradient_snapshots():
    # zero weights on zero labels give a bitwise-zero gradient; a label
    # vector built as X @ w_star would not (roundoff leaves a tiny residual)
    X = np.random.default_rng(1).standard_normal((4, 3))
    w_star = np.zeros(3)
    data = Dataset(X, np.zeros(4))
    spec = linear_spec(3)
    flags = []
    value = estimate_gamma_prime(spec, [w_star, w_star + 0.5], data, 1.0,
                                 SubsetEstimatorConfig(k_samples=16),
                                 flags=flags)
    assert value >= 1.0
    assert any("zero gradient" in f for f in flags)
    with pytest.raises(InvalidArgumentError):
        estimate_gamma_prime(spec, [w_star], data, 1.0,
                             SubsetEstimatorConfig(k_samples=16))
    with pytest.raises(InvalidArgumentError):
        estimate_gamma_prime(spec, [w_star + 0.5], data, 0.0,
                             SubsetEstimatorConfig(k_samples=16))


# -- relative progress ---------------------------------------------------------

def test_rp_trp_gd_exact_quadratic():
    # one GD step on F(w) = lam/2 w^2: rp = -1 + eta lam / 2 exactly
    lam, eta, w = 3.0, 0.2, 1.5
    g = lam * w
    w_next = w - eta * g
    F = lambda x: 0.5 * lam * x * x
    rp, trp = rp_trp_gd(F(w), F(w_next), F(w), F(w_next), eta,
                        np.array([g]), np.array([g]))
    assert rp == pytest.approx(-1.0 + eta * lam / 2.0, abs=1e-12)
    assert trp == pytest.approx(rp, abs=1e-12)


def test_rp_trp_gd_degenerate_denominators():
    flags = []
    rp, trp = rp_trp_gd(1.0, 0.9, 1.0, 0.9, 0.1, np.zeros(2), np.ones(2), flags)
    assert rp is None and trp is None
    assert any("rp:" in f for f in flags)
    flags = []
    rp, trp = rp_trp_gd(1.0, 0.9, 1.0, 0.9, 0.1, np.array([1.0, 0.0]),
                        np.array([0.0, 1.0]), flags)
    assert rp is not None and trp is None
    assert any("trp:" in f for f in flags)
    with pytest.raises(InvalidArgumentError):
        rp_trp_gd(1.0, 0.9, 1.0, 0.9, 0.0, np.ones(1), np.ones(1))


def test_rp_sgd_approx_reduces_to_gd_on_a_full_batch_step():
    gen = np.random.default_rng(14)
    g = gen.standard_normal(4)
    g_sp = gen.standard_normal(4)
    eta = 0.07
    X_prev = gen.standard_normal(4)
    X_curr = X_prev - eta * g
    F_prev, F_curr = 1.0, 0.83
    Fp_prev, Fp_curr = 1.1, 0.95
    rp_ref, trp_ref = rp_trp_gd(F_prev, F_curr, Fp_prev, Fp_curr, eta, g, g_sp)
    rp, trp, eta_eff = rp_trp_sgd_approx(X_prev, X_curr, F_prev, F_curr,
                                         Fp_prev, Fp_curr, eta, b=8, n=8,
                                         grad_Sp_prev=g_sp)
    assert eta_eff == eta
    assert rp == pytest.approx(rp_ref, rel=1e-12)
    assert trp == pytest.approx(trp_ref, rel=1e-12)


def test_rp_sgd_approx_effective_rate_and_zero_displacement():
    flags = []
    rp, trp, eta_eff = rp_trp_sgd_approx(np.ones(3), np.ones(3), 1.0, 0.9,
                                         1.0, 0.9, 0.05, b=2, n=10,
                                         grad_Sp_prev=np.ones(3), flags=flags)
    assert eta_eff == pytest.approx(0.25)
    assert rp is None and trp is None
    assert any("zero epoch displacement" in f for f in flags)


# -- recorder and decomposition -------------------------------------------------

def per_step_run(seed=0, steps=25, kind="mlp", eta=0.05):
    S, Sp, _ = generate_toy(ToyConfig(16, 16, 3, seed=seed))
    spec = mlp_spec(3, (4,)) if kind == "mlp" else linear_spec(3)
    w0 = init_params(spec, RngStream(seed, 5))
    rec = TrajectoryRecorder(spec, S, Sp, SubsetEstimatorConfig(k_samples=64))
    cfg = OptimConfig(mode="gd", batch_size=None,
                      schedule=Schedule("constant", eta0=eta),
                      max_steps=steps, snapshot_every=1, seed=seed)
    res = train(spec, w0, S, Sp, cfg, rec)
    return spec, S, Sp, rec, res


def test_recorder_snapshot_fields_are_consistent():
    spec, S, Sp, rec, _ = per_step_run()
    for snap, w, g_s, g_sp in zip(rec.snapshots, rec.weights, rec.grads_S,
                                  rec.grads_Sprime):
        assert snap.grad_norm_S == pytest.approx(np.linalg.norm(g_s))
        assert snap.grad_norm_Sprime == pytest.approx(np.linalg.norm(g_sp))
        assert snap.grad_dot == pytest.approx(float(g_s @ g_sp))
        assert snap.delta_t == pytest.approx(snap.eta_t * snap.grad_norm_S)
        assert snap.gamma_tilde == pytest.approx(
            snap.grad_norm_Sprime / snap.grad_norm_S
        )
        G = per_sample_grads_xy(spec, w, S.features, S.labels)
        assert snap.trace_sigma == pytest.approx(
            float(np.mean(np.sum(G * G, axis=1))) - float(g_s @ g_s), abs=1e-12
        )


def test_recorder_complexity_telescopes():
    _, S, _, rec, _ = per_step_run()
    c = 0.0
    for prev, snap in zip(rec.snapshots[:-1], rec.snapshots[1:]):
        c = complexity_update(c, prev.F_S, snap.F_S, snap.trace_sigma,
                              snap.grad_norm_S, S.n)
        assert snap.C_cum == c
    assert rec.snapshots[0].C_cum == 0.0


def test_gen_decomposition_telescopes_exactly():
    _, _, _, rec, _ = per_step_run(steps=30)
    per_step, gen_lin, remainder = gen_decomposition(
        rec.snapshots, rec.weights, rec.grads_S, rec.grads_Sprime
    )
    snaps = rec.snapshots
    total = (snaps[-1].F_Sprime - snaps[-1].F_S) - (snaps[0].F_Sprime - snaps[0].F_S)
    assert float(np.sum(per_step)) == pytest.approx(total, abs=1e-10)
    assert gen_lin + remainder == pytest.approx(total, abs=1e-10)
    # smaller steps shrink the remainder; on this run the linear part
    # carries most of the change
    assert abs(remainder) < abs(total)


def test_gen_decomposition_input_validation():
    spec, S, Sp, rec, _ = per_step_run(steps=6)
    with pytest.raises(IncompleteTrajectoryError):
        gen_decomposition([], [], [], [])
    with pytest.raises(IncompleteTrajectoryError):
        gen_decomposition(rec.snapshots, rec.weights[:-1], rec.grads_S,
                          rec.grads_Sprime)
    sparse = [rec.snapshots[0], rec.snapshots[3]]
    with pytest.raises(IncompleteTrajectoryError, match="per-step"):
        gen_decomposition(sparse, rec.weights[:2], rec.grads_S[:2],
                          rec.grads_Sprime[:2])


def test_gen_decomposition_zero_steps():
    _, _, _, rec, _ = per_step_run(steps=0)
    per_step, gen_lin, remainder = gen_decomposition(
        rec.snapshots, rec.weights, rec.grads_S, rec.grads_Sprime
    )
    assert per_step.size == 0
    assert gen_lin == 0.0 and remainder == 0.0


def test_recorder_rp_modes():
    S, Sp, _ = generate_toy(ToyConfig(10, 10, 3, seed=1))
    spec = linear_spec(3)
    with pytest.raises(InvalidArgumentError):
        TrajectoryRecorder(spec, S, Sp, rp_mode="batch")
    with pytest.raises(InvalidArgumentError):
        TrajectoryRecorder(spec, S, Sp, rp_mode="epoch")  # needs batch size
    rec = TrajectoryRecorder(spec, S, Sp, rp_mode="step")
    rec(0, 0, 0.1, np.zeros(3))
    with pytest.raises(InvalidArgumentError, match="consecutive"):
        rec(2, 0, 0.1, np.zeros(3))


def test_recorder_step_rp_matches_direct_computation():
    _, _, _, rec_plain, _ = per_step_run(steps=5)
    S, Sp, _ = generate_toy(ToyConfig(16, 16, 3, seed=0))
    spec = mlp_spec(3, (4,))
    w0 = init_params(spec, RngStream(0, 5))
    rec = TrajectoryRecorder(spec, S, Sp, SubsetEstimatorConfig(k_samples=64),
                             rp_mode="step")
    cfg = OptimConfig(mode="gd", batch_size=None,
                      schedule=Schedule("constant", eta0=0.05),
                      max_steps=5, snapshot_every=1, seed=0)
    train(spec, w0, S, Sp, cfg, rec)
    assert rec.snapshots[0].rp is None
    for k in range(1, len(rec.snapshots)):
        prev, snap = rec.snapshots[k - 1], rec.snapshots[k]
        rp, trp = rp_trp_gd(prev.F_S, snap.F_S, prev.F_Sprime, snap.F_Sprime,
                            prev.eta_t, rec.grads_S[k - 1],
                            rec.grads_Sprime[k - 1])
        assert snap.rp == rp
        assert snap.trp == trp


def test_replay_reproduces_the_recorded_trajectory():
    spec, S, Sp, rec, _ = per_step_run(steps=10)
    again = replay_trajectory(
        spec, S, Sp, rec.weights,
        [s.t for s in rec.snapshots],
        [s.epoch for s in rec.snapshots],
        [s.eta_t for s in rec.snapshots],
        SubsetEstimatorConfig(k_samples=64),
    )
    for a, b in zip(rec.snapshots, again.snapshots):
        assert a.F_S == b.F_S
        assert a.C_cum == b.C_cum
        assert a.gamma_tilde == b.gamma_tilde


def test_replay_against_train_set_gives_unit_ratio():
    spec, S, _, rec, _ = per_step_run(steps=10)
    control = replay_trajectory(
        spec, S, S, rec.weights,
        [s.t for s in rec.snapshots],
        [s.epoch for s in rec.snapshots],
        [s.eta_t for s in rec.snapshots],
    )
    for snap in control.snapshots:
        assert snap.gamma_tilde == 1.0
        assert snap.F_S == snap.F_Sprime


def test_write_trajectory_csv_format(tmp_path):
    _, _, _, rec, _ = per_step_run(steps=4)
    path = str(tmp_path / "traj.csv")
    write_trajectory_csv(path, rec.snapshots)
    lines = open(path).read().splitlines()
    header = lines[0].split(",")
    assert header[0] == "t" and "C_cum" in header and "gamma_tilde" in header
    assert len(lines) == 1 + len(rec.snapshots)
    first = lines[1].split(",")
    # rp/trp were not recorded: trailing cells are empty
    assert first[header.index("rp")] == ""
    assert first[header.index("trp")] == ""
    # floats round-trip through repr
    assert float(first[header.index("F_S")]) == rec.snapshots[0].F_S
