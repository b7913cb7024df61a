import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from polarbandit.arms import ArmSet, generate_diverse, perturb_local
from polarbandit.environment import Environment
from polarbandit.errors import DimensionMismatch
from polarbandit.graph import erdos_renyi
from polarbandit.opinion import sample_opinions
from polarbandit.stage1 import ThetaEstimate, reduce_armset, reduced_theta
from polarbandit.stage2 import (OFUL, LearnerConfig, oful_select, oful_update, run_estr,
                                run_full_oful, run_oracle_subspace)

S2 = np.array([1.0, -1.0])
P2_LAP = np.array([[1.0, -1.0], [-1.0, 1.0]])


def local_instance(n=6, K=20, seed=0, sigma=0.1):
    rng = np.random.default_rng(seed)
    s = sample_opinions(n, seed=rng)
    arms = perturb_local(erdos_renyi(n, 0.3, rng), n, 0.5, 1.5, K, rng)
    return Environment(s, sigma, seed), arms


class TestOFUL:
    def test_single_arm(self):
        assert oful_select(OFUL(3), np.ones((1, 3))) == 0

    def test_beta_zero_picks_lower_mean(self):
        state = OFUL(1, beta_override=0.0)
        state.theta = np.array([1.0])
        assert oful_select(state, np.array([[2.0], [2 / 3]])) == 1

    @given(st.integers(0, 1000), st.floats(0.1, 10.0))
    def test_scaling_invariance_without_width(self, seed, c):
        rng = np.random.default_rng(seed)
        state = OFUL(4, beta_override=0.0)
        for _ in range(5):
            x = rng.standard_normal(4)
            state.update(x, float(rng.standard_normal()))
        feats = rng.standard_normal((6, 4))
        assert state.select(feats) == state.select(c * feats)

    def test_initial_theta_zero(self):
        np.testing.assert_array_equal(OFUL(3).theta_hat(), 0)

    def test_scalar_ridge(self):
        state = oful_update(OFUL(1, lambda_reg=1.0), np.array([1.0]), 2.0)
        assert state.theta_hat()[0] == pytest.approx(1.0)

    def test_determinant_increases(self):
        rng = np.random.default_rng(0)
        state = OFUL(3)
        prev = np.linalg.slogdet(state.design_matrix())[1]
        for _ in range(10):
            state.update(rng.standard_normal(3), 0.0)
            cur = np.linalg.slogdet(state.design_matrix())[1]
            assert cur > prev
            assert state.logdet_ratio == pytest.approx(cur - 3 * math.log(state.lambda_reg))
            prev = cur

    @given(st.integers(0, 1000))
    def test_state_reconstruction(self, seed):
        rng = np.random.default_rng(seed)
        d, lam = 5, 0.3
        feats = rng.standard_normal((8, d))
        state = OFUL(d, lambda_reg=lam, refresh_every=7).bind(feats)
        log = []
        for _ in range(30):
            x = feats[rng.integers(8)]
            y = float(rng.standard_normal())
            state.update(x, y)
            log.append((x, y))
        xs = np.array([x for x, _ in log])
        ys = np.array([y for _, y in log])
        a = lam * np.eye(d) + xs.T @ xs
        np.testing.assert_allclose(state.design_matrix(), a, atol=1e-8)
        np.testing.assert_allclose(state.chol @ state.chol.T, a, atol=1e-8)
        np.testing.assert_allclose(state.b, xs.T @ ys, atol=1e-10)
        np.testing.assert_allclose(state.theta_hat(), np.linalg.solve(a, xs.T @ ys), atol=1e-8)
        np.testing.assert_allclose(state.widths, state.exact_widths(feats), atol=1e-8)
        assert state.t == 30 and state.residual_warnings == 0

    def test_beta_modes(self):
        det = OFUL(3, lambda_reg=1.0, S_bound=2.0, sigma=0.5, delta=0.01)
        assert det.beta() == pytest.approx(0.5 * math.sqrt(2 * math.log(100)) + 2.0)
        dim = OFUL(3, lambda_reg=1.0, S_bound=2.0, Lx_bound=1.0, sigma=0.5, delta=0.01,
                   beta_mode="dimensional")
        dim.update(np.ones(3), 1.0)
        assert dim.beta() == pytest.approx(0.5 * math.sqrt(3 * math.log(2 / 0.01)) + 2.0)

    def test_dimension_checks(self):
        with pytest.raises(DimensionMismatch):
            OFUL(3).select(np.ones((2, 4)))
        with pytest.raises(DimensionMismatch):
            OFUL(3).update(np.ones(2), 0.0)
        with pytest.raises(DimensionMismatch):
            OFUL(3).bind(np.ones(3))
        with pytest.raises(ValueError):
            OFUL(3, lambda_reg=0.0)

    def test_bound_scores_match_unbound(self):
        rng = np.random.default_rng(1)
        feats = rng.standard_normal((5, 3))
        state = OFUL(3).bind(feats)
        for _ in range(12):
            state.update(feats[rng.integers(5)], float(rng.standard_normal()))
        np.testing.assert_allclose(state.scores(), state.scores(feats.copy()), atol=1e-9)


class TestCoverage:
    def test_confidence_ellipsoid(self):
        # oracle-subspace features in d = 3 (n = 2); the true reduced parameter should sit
        # inside the determinant-form ellipsoid in at least (1 - delta) of runs, minus slack
        delta, runs, inside = 0.05, 200, 0
        for seed in range(runs):
            rng = np.random.default_rng(seed)
            a = rng.uniform(0.2, 1.0)
            s = np.array([a, -a])
            laps = np.array([w * P2_LAP for w in rng.uniform(0, 3, size=6)])
            arms = ArmSet(laps)
            est = ThetaEstimate.from_direction(s)
            feats = reduce_armset(arms, est)
            theta = reduced_theta(est, s)
            env = Environment(s, 0.5, seed)
            state = OFUL(3, S_bound=2.0, sigma=0.5, delta=delta).bind(feats)
            losses = env.true_losses(arms)
            for _ in range(100):
                i = state.select()
                state.update(feats[i], losses[i] + env.noise())
            err = state.theta_hat() - theta
            inside += math.sqrt(err @ state.design_matrix() @ err) <= state.beta()
        sd = math.sqrt(runs * delta * (1 - delta))
        assert inside >= (1 - delta) * runs - 3 * sd


class TestLearners:
    def test_single_arm_zero_regret(self):
        env, arms = local_instance(K=1)
        cfg = LearnerConfig(T=200, T1=10)
        assert run_estr(env, arms, cfg, 0)[0].total == 0
        assert run_full_oful(env.with_noise_seed(1), arms, cfg).total == 0
        assert run_oracle_subspace(env.with_noise_seed(2), arms, cfg).total == 0

    def test_trace_shape_and_timings(self):
        env, arms = local_instance()
        trace, est = run_estr(env, arms, LearnerConfig(T=300, T1=20), 0)
        assert len(trace) == 300
        assert set(trace.timings) >= {"stage1", "stage2", "total", "per_round_stage2"}
        assert est.s_perp.shape == (6, 5)
        assert min(trace.instant) >= -1e-12

    def test_deterministic(self):
        cfg = LearnerConfig(T=300, T1=20)
        runs = []
        for _ in range(2):
            env, arms = local_instance(seed=3)
            runs.append((run_estr(env, arms, cfg, 5)[0].chosen,
                         run_full_oful(env.with_noise_seed(9), arms, cfg).chosen,
                         run_oracle_subspace(env.with_noise_seed(9), arms, cfg).chosen))
        assert runs[0] == runs[1]

    def test_noiseless_two_arm_gap(self):
        env = Environment(S2, 0.0, 0)
        arms = ArmSet(np.stack([np.zeros((2, 2)), P2_LAP]))
        gap = np.ptp(env.true_losses(arms))
        assert gap >= 0.5
        cfg = LearnerConfig(T=400, T1=20, lambda_nuc=1e-4)
        trace, est = run_estr(env, arms, cfg, 0)
        inst = np.asarray(trace.instant[cfg.T1:])
        bad = np.flatnonzero(inst > 0)
        settle = bad[-1] + 1 if bad.size else 0
        assert settle < inst.size // 2
        assert np.all(inst[settle:] == 0)

    def test_oracle_exact_theta_picks_best(self):
        env, arms = local_instance(n=8, K=30, seed=2)
        est = ThetaEstimate.from_direction(env.s)
        feats = reduce_armset(arms, est)
        state = OFUL(15, beta_override=0.0).bind(feats)
        state.theta = reduced_theta(est, env.s)
        assert state.select() == int(np.argmin(env.true_losses(arms)))

    def test_warm_start_reuses_samples(self):
        env, arms = local_instance()
        cold = run_estr(env, arms, LearnerConfig(T=200, T1=20), 0)[0]
        env, arms = local_instance()
        warm = run_estr(env, arms, LearnerConfig(T=200, T1=20, warm_start=True), 0)[0]
        assert cold.chosen[:20] == warm.chosen[:20]
        assert len(warm) == 200

    def test_config_validation(self):
        with pytest.raises(ValueError):
            LearnerConfig(T=10, T1=20)
        assert LearnerConfig().lx(16) == 4.0
        assert LearnerConfig(lx_mode="n").lx(16) == 16.0
        assert LearnerConfig(lambda_nuc=0.3).nuclear_weight(16) == 0.3

    @pytest.mark.slow
    def test_oracle_not_worse_than_estr_on_average(self):
        cfg = LearnerConfig(T=1500, T1=40)
        diffs = []
        for seed in range(20):
            env, arms = local_instance(n=8, K=30, seed=seed)
            estr = run_estr(env, arms, cfg, seed)[0].total
            oracle = run_oracle_subspace(env.with_noise_seed(seed + 1000), arms, cfg).total
            diffs.append(estr - oracle)
        diffs = np.asarray(diffs)
        assert diffs.mean() >= -2 * diffs.std(ddof=1) / math.sqrt(diffs.size)

    @pytest.mark.slow
    def test_full_oful_slower_per_round(self):
        env, arms = local_instance(n=16, K=100, seed=0)
        cfg = LearnerConfig(T=600, T1=100)
        estr = run_estr(env, arms, cfg, 0)[0]
        full = run_full_oful(env.with_noise_seed(1), arms, cfg)
        assert full.timings["per_round"] > estr.timings["per_round_stage2"]
