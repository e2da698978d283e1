import json

import numpy as np
import pytest

import fdrecover.experiments as ex
from fdrecover.errors import InvalidInput, ReplicationError
from fdrecover.estimator import recover, sup_error
from fdrecover.experiments import (
    LSchedule,
    RateStudyConfig,
    Statistic,
    acf_drift,
    config_s1,
    config_s3,
    derive_seed,
    empirical_autocov,
    grid_subset,
    log_log_slope,
    replicate,
    run_acf_check,
    run_compare,
    run_rate_study,
)
from fdrecover.simulation import NoiseSpec, simulate


def small_study(which="sup_error", reps=4, sizes=((30, 30), (60, 60)), **base):
    return RateStudyConfig(sizes=sizes, replications=reps, base=config_s1(seed=99).replace(**base), which=which)


def test_derive_seed():
    a = derive_seed(1, 0)
    assert a == derive_seed(1, 0)
    assert len({a, derive_seed(1, 1), derive_seed(2, 0)}) == 3
    assert 0 <= a < 2**64


def test_empirical_autocov_loop_oracle(rng):
    X = rng.standard_normal((12, 4))
    for h in (0, 1, 3):
        A = empirical_autocov(X, h)
        for i in range(4):
            for j in range(4):
                assert A[i, j] == pytest.approx(sum(X[t + h, i] * X[t, j] for t in range(12 - h)) / 12)


def test_grid_subset():
    np.testing.assert_array_equal(grid_subset(5, 20), np.arange(5))
    idx = grid_subset(400, 20)
    assert idx.size == 20 and idx[0] == 0 and idx[-1] == 399


class TestRateStudy:
    def test_single_replication_equals_direct_run(self):
        cfg = small_study(reps=1, sizes=((40, 50),))
        res = run_rate_study(cfg)
        truth = simulate(cfg.base.replace(T=40, p=50, seed=derive_seed(99, 0)))
        fit, _ = recover(truth.observed, 3)
        assert res.medians[0] == sup_error(fit.recovered, truth.signal)
        assert res.slope is None

    @pytest.mark.parametrize("which", list(Statistic))
    def test_every_statistic_runs(self, which):
        res = run_rate_study(small_study(which, reps=3))
        assert res.values.shape == (2, 3)
        assert np.all(res.values >= 0) and np.isfinite(res.slope)
        for row in res.per_size:
            assert row["q25"] <= row["median"] <= row["q75"]

    def test_threads_do_not_change_results(self):
        cfg = small_study(reps=6)
        a = run_rate_study(cfg, threads=1)
        b = run_rate_study(cfg, threads=4)
        assert a.to_json() == b.to_json()
        assert a.values.tobytes() == b.values.tobytes()

    def test_long_rows(self):
        res = run_rate_study(small_study(reps=2))
        rows = list(res.long_rows())
        assert len(rows) == 4
        assert rows[0][:5] == ("sup_error", 30, 30, 3, 0)
        assert rows[1][5] == derive_seed(99, 1)

    def test_log_schedule(self):
        cfg = RateStudyConfig(
            sizes=((20, 20), (60, 60)), replications=1, base=config_s1(seed=1).replace(eigen_decay={"rho": 4, "nu": 1}),
            l_schedule=LSchedule.LOG,
        )
        assert [row["l"] for row in run_rate_study(cfg).per_size] == [3, 5]

    def test_failure_carries_seed(self, monkeypatch):
        bad = derive_seed(99, 2)
        real = ex.simulate

        def flaky(cfg):
            if cfg.seed == bad:
                raise FloatingPointError("boom")
            return real(cfg)

        monkeypatch.setattr(ex, "simulate", flaky)
        with pytest.raises(ReplicationError) as info:
            run_rate_study(small_study(reps=4), threads=2)
        assert info.value.seed == bad
        assert str(bad) in str(info.value)

    def test_config_round_trip(self):
        cfg = small_study("alignment")
        assert RateStudyConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg

    @pytest.mark.parametrize(
        "patch", [{"sizes": []}, {"replications": 0}, {"which": "bogus"}, {"extra": 1}, {"p_sub": 50}, {"lags": [-1]}]
    )
    def test_config_validation(self, patch):
        d = {**small_study().to_dict(), **patch}
        with pytest.raises(InvalidInput):
            RateStudyConfig.from_dict(d)


def test_log_log_slope():
    T = np.array([100, 200, 400])
    assert log_log_slope(T, 3 * T**-0.5) == pytest.approx(-0.5)
    assert log_log_slope([5, 5], [1, 2]) is None


class TestAcf:
    def test_noise_free_drift_vanishes(self):
        cfg = RateStudyConfig(sizes=((50, 60),), replications=3, base=config_s1(seed=5).replace(noise=NoiseSpec("iid", 0.0)))
        rows = run_acf_check(cfg)
        assert len(rows) == 3
        assert max(r["q75"] for r in rows) <= 1e-8

    def test_iid_scores_keep_lag_one_autocorrelation_small(self):
        T = 400
        truth = simulate(config_s1(T, 100, seed=8).replace(score_ar=0.0, noise=NoiseSpec("iid", 0.5)))
        fit, _ = recover(truth.observed, 3)
        X = fit.recovered.values
        for j in (0, 37, 99):
            x = X[:, j] - X[:, j].mean()
            r1 = np.sum(x[1:] * x[:-1]) / np.sum(x * x)
            assert abs(r1) <= 3 / np.sqrt(T)

    def test_drift_per_lag(self, rng):
        X = rng.standard_normal((30, 10))
        np.testing.assert_array_equal(acf_drift(X, X), 0.0)
        d = acf_drift(X + 0.1, X, lags=(0, 2))
        assert d.shape == (2,) and np.all(d > 0)

    def test_replicate_matches_acf_check(self):
        cfg = RateStudyConfig(sizes=((40, 40),), replications=1, base=config_s1(seed=3), which="acf_drift")
        rows = run_acf_check(cfg)
        value, _ = replicate(cfg.sim_config(40, 40, derive_seed(3, 0)), "acf_drift")
        assert value == max(r["median"] for r in rows)


def test_compare_rows():
    rows = run_compare(config_s3(T=60, p=40, seed=4), replications=2, threads=2)
    assert [r["replication"] for r in rows] == [0, 1]
    for r in rows:
        assert r["factor_mse"] >= 0 and r["smoother_mse"] >= 0 and r["l_hat"] >= 1
    assert rows == run_compare(config_s3(T=60, p=40, seed=4), replications=2, threads=1)


def test_compare_rejects_zero_replications():
    with pytest.raises(InvalidInput):
        run_compare(config_s1(), 0)
