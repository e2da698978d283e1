import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from fdrecover.core import SamplingGrid
from fdrecover.errors import InvalidInput
from fdrecover.io import panel_to_csv
from fdrecover.simulation import (
    Basis,
    NoiseSpec,
    PowerDecay,
    SimConfig,
    brownian_eigenvalues,
    eigenbasis,
    inner_product_moment,
    isserlis_moment,
    second_inner_moment,
    simulate,
    simulate_noise,
    simulate_scores,
    stream_rng,
)


def grid_gram(phi):
    """p^{-1} sum_i phi_k(s_i) phi_l(s_i) by explicit summation."""
    p, L = phi.shape
    G = np.zeros((L, L))
    for k in range(L):
        for ell in range(L):
            G[k, ell] = sum(phi[i, k] * phi[i, ell] for i in range(p)) / p
    return G


class TestEigenbasis:
    def test_fourier_grid_orthonormal(self):
        phi = eigenbasis(Basis.FOURIER, 5, SamplingGrid.equidistant(100))
        assert np.max(np.abs(grid_gram(phi) - np.eye(5))) <= 0.05

    def test_fourier_first_function_constant(self):
        phi = eigenbasis("fourier", 3, SamplingGrid.equidistant(7))
        np.testing.assert_array_equal(phi[:, 0], 1.0)

    def test_fourier_closed_form(self):
        s = SamplingGrid.equidistant(16)
        phi = eigenbasis("fourier", 4, s)
        np.testing.assert_allclose(phi[:, 1], np.sqrt(2) * np.sin(2 * np.pi * s.points))
        np.testing.assert_allclose(phi[:, 2], np.sqrt(2) * np.cos(2 * np.pi * s.points))
        np.testing.assert_allclose(phi[:, 3], np.sqrt(2) * np.sin(4 * np.pi * s.points))

    def test_brownian_eigenvalue_ratio(self):
        lam = brownian_eigenvalues(2)
        assert lam[1] / lam[0] == pytest.approx(1 / 9)

    def test_brownian_functions(self):
        s = SamplingGrid.equidistant(10)
        phi = eigenbasis("brownian_motion", 2, s)
        np.testing.assert_allclose(phi[:, 1], np.sqrt(2) * np.sin(1.5 * np.pi * s.points))

    def test_too_many_functions(self):
        with pytest.raises(InvalidInput):
            eigenbasis("fourier", 6, SamplingGrid.equidistant(5))

    @settings(max_examples=25, deadline=None)
    @given(L=st.integers(1, 12), extra=st.integers(0, 60))
    def test_grid_orthonormality_when_p_is_large(self, L, extra):
        p = 4 * L + extra
        phi = eigenbasis("fourier", L, SamplingGrid.equidistant(max(p, 2)))
        assert np.max(np.abs(phi.T @ phi / phi.shape[0] - np.eye(L))) <= 0.05


class TestMercer:
    def test_brownian_truncation_remainder_vanishes(self):
        # Brownian motion has Var X(s) = s, so the truncation remainder is s - sum_{l<=L} lambda_l phi_l(s)^2
        grid = SamplingGrid.equidistant(200)
        tails = []
        for L in (5, 20, 80):
            phi = eigenbasis("brownian_motion", L, grid)
            partial = (phi**2) @ brownian_eigenvalues(L)
            tails.append(np.max(grid.points - partial))
        assert tails[0] > tails[1] > tails[2] >= -1e-12
        assert tails[2] < 0.01

    def test_increment_condition(self):
        # E|X(s+h) - X(s)|^2 = h for Brownian motion; truncation at 200 terms stays below that
        L = 200
        lam = brownian_eigenvalues(L)
        s = np.linspace(0.0, 0.9, 181)
        ell = np.arange(1, L + 1)
        ratios = []
        for h in (1e-1, 1e-2, 1e-3):
            d = np.sqrt(2) * (np.sin(np.outer(s + h, (ell - 0.5) * np.pi)) - np.sin(np.outer(s, (ell - 0.5) * np.pi)))
            ratios.append(np.max((d**2) @ lam) / h)
        assert max(ratios) <= 1.0 + 1e-9


class TestScores:
    def test_iid_scores_variance(self):
        cfg = SimConfig(T=10000, p=4, L_true=3, eigen_decay=[3.0, 1.0, 0.2], score_ar=0.0)
        x = simulate_scores(cfg, stream_rng(1, 0))
        np.testing.assert_allclose(x.var(axis=0), cfg.eigenvalues, rtol=0.05)

    def test_ar_lag_one_autocorrelation(self):
        cfg = SimConfig(T=10000, p=4, L_true=1, eigen_decay=[1.0], score_ar=[0.5])
        x = simulate_scores(cfg, stream_rng(2, 0))[:, 0]
        r1 = np.corrcoef(x[1:], x[:-1])[0, 1]
        assert abs(r1 - 0.5) <= 0.05
        assert abs(x.var() - 1.0) <= 0.1

    def test_stationary_start(self):
        # the first draw already has the stationary variance: check across many short paths
        cfg = SimConfig(T=2, p=4, L_true=1, eigen_decay=[2.0], score_ar=[0.9])
        first = np.array([simulate_scores(cfg, stream_rng(s, 0))[0, 0] for s in range(4000)])
        assert abs(first.var() - 2.0) < 0.15

    def test_deterministic(self):
        cfg = SimConfig(T=50, p=4, L_true=2, score_ar=0.3)
        a = simulate_scores(cfg, stream_rng(9, 0))
        b = simulate_scores(cfg, stream_rng(9, 0))
        assert a.tobytes() == b.tobytes()


class TestNoise:
    def test_iid_variance(self):
        u = simulate_noise(1000, 1000, NoiseSpec("iid", 1.0), stream_rng(3, 1)).values
        assert abs(u.var() - 1.0) <= 0.05

    def test_ar1_lag_one_ratio(self):
        spec = NoiseSpec("ar1", 1.0, 0.5)
        u = simulate_noise(2000, 200, spec, stream_rng(4, 1)).values
        g0 = np.mean(u * u)
        g1 = np.mean(u[:, 1:] * u[:, :-1])
        assert abs(g1 / g0 - 0.5) <= 0.05
        assert abs(g0 - spec.autocovariance(0)) / spec.autocovariance(0) < 0.05

    def test_ar1_stationary_along_grid(self):
        spec = NoiseSpec("ar1", 1.0, 0.7)
        u = simulate_noise(20000, 6, spec, stream_rng(5, 1)).values
        np.testing.assert_allclose(u.var(axis=0), spec.autocovariance(0), rtol=0.05)

    def test_ar1_with_zero_phi_matches_iid_law(self):
        a = simulate_noise(400, 250, NoiseSpec("ar1", 1.0, 0.0), stream_rng(6, 1)).values.ravel()
        b = simulate_noise(400, 250, NoiseSpec("iid", 1.0), stream_rng(7, 1)).values.ravel()
        assert stats.ks_2samp(a, b).pvalue > 0.01

    def test_autocovariance_summable(self):
        spec = NoiseSpec("ar1", 0.5, 0.3)
        h = np.arange(-2000, 2001)
        total = np.sum(np.abs(spec.autocovariance(h)))
        assert total == pytest.approx(0.25 / (1 - 0.09) * (1 + 0.3) / (1 - 0.3), rel=1e-9)

    @pytest.mark.parametrize("kw", [{"sigma": -1.0}, {"kind": "ar1", "phi": 1.0}, {"kind": "garch"}])
    def test_invalid_spec(self, kw):
        with pytest.raises((InvalidInput, ValueError)):
            NoiseSpec(**kw)


class TestSimulate:
    def test_zero_noise(self):
        truth = simulate(SimConfig(T=20, p=30, L_true=2, noise=NoiseSpec("iid", 0.0), seed=1))
        np.testing.assert_array_equal(truth.observed.values, truth.signal.values)

    def test_signal_rank(self):
        truth = simulate(SimConfig(T=40, p=30, L_true=3, seed=2, noise=NoiseSpec("ar1", 1.0, 0.5)))
        sv = np.linalg.svd(truth.signal.values, compute_uv=False)
        assert sv[3] <= 1e-8 * sv[0]
        assert sv[2] > 1e-3 * sv[0]

    def test_factor_representation(self):
        truth = simulate(SimConfig(T=25, p=40, L_true=4, basis="brownian_motion", eigen_decay="natural", seed=3))
        np.testing.assert_array_equal(truth.observed.values, truth.signal.values + truth.noise.values)
        np.testing.assert_allclose(truth.normalized_scores @ truth.loadings.T, truth.signal.values, atol=1e-12)
        np.testing.assert_allclose(
            truth.loadings, truth.eigenfunctions_on_grid * np.sqrt(truth.eigenvalues), atol=1e-15
        )
        np.testing.assert_allclose(truth.normalized_scores, truth.scores / np.sqrt(truth.eigenvalues))

    def test_bytes_reproducible(self):
        cfg = SimConfig(T=10, p=12, L_true=2, score_ar=[0.4, -0.2], noise=NoiseSpec("ar1", 0.3, 0.2), seed=2**63 + 5)
        a = panel_to_csv(simulate(cfg).observed)
        b = panel_to_csv(simulate(SimConfig.from_json(cfg.to_json())).observed)
        assert a == b

    def test_streams_are_separate(self):
        # changing the noise leaves the scores untouched
        cfg = SimConfig(T=10, p=12, L_true=2, seed=11)
        a = simulate(cfg)
        b = simulate(cfg.replace(noise=NoiseSpec("ar1", 2.0, 0.5)))
        np.testing.assert_array_equal(a.scores, b.scores)


class TestSimConfig:
    def test_json_round_trip(self):
        cfg = SimConfig(T=30, p=20, L_true=3, eigen_decay=PowerDecay(2.0, 1.5), score_ar=[0.1, 0.2, 0.3],
                        noise=NoiseSpec("ar1", 0.5, 0.3), seed=42)
        back = SimConfig.from_json(cfg.to_json())
        assert back == cfg
        d = cfg.to_dict()
        assert set(d) == {"t", "p", "l_true", "basis", "eigen_decay", "score_ar", "noise", "seed"}
        assert d["eigen_decay"] == {"rho": 2.0, "nu": 1.5}

    def test_power_decay(self):
        cfg = SimConfig(T=5, p=5, L_true=3, eigen_decay={"rho": 2.0, "nu": 1.0})
        np.testing.assert_allclose(cfg.eigenvalues, [2.0, 1.0, 2 / 3])

    def test_explicit_two_eigenvalues_not_confused_with_decay(self):
        cfg = SimConfig(T=5, p=5, L_true=2, eigen_decay=[4.0, 1.0])
        np.testing.assert_allclose(cfg.eigenvalues, [4.0, 1.0])

    @pytest.mark.parametrize(
        "kw",
        [
            {"score_ar": [1.0, 0.0]},
            {"L_true": 6},
            {"eigen_decay": [1.0, 2.0]},
            {"eigen_decay": [1.0, -1.0]},
            {"eigen_decay": "natural"},
            {"eigen_decay": {"rho": -1.0, "nu": 1.0}},
            {"T": 1},
            {"seed": -1},
        ],
    )
    def test_rejects_invalid(self, kw):
        base = {"T": 10, "p": 5, "L_true": 2, "eigen_decay": [2.0, 1.0]}
        with pytest.raises(InvalidInput):
            SimConfig(**{**base, **kw})

    def test_from_dict_reports_bad_fields(self):
        with pytest.raises(InvalidInput, match="unknown"):
            SimConfig.from_dict({"t": 5, "p": 5, "l_true": 1, "colour": "red"})
        with pytest.raises(InvalidInput, match="missing"):
            SimConfig.from_dict({"t": 5, "p": 5})
        with pytest.raises(InvalidInput):
            SimConfig.from_dict({"t": "many", "p": 5, "l_true": 1})


class TestIsserlis:
    def test_second_moment(self):
        assert isserlis_moment(np.eye(2), [0, 0]) == 1.0

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0])
    def test_fourth_moment(self, sigma):
        assert isserlis_moment(np.array([[sigma**2]]), [0] * 4) == pytest.approx(3 * sigma**4)

    @pytest.mark.parametrize("k,double_factorial", [(1, 1), (2, 3), (3, 15), (4, 105)])
    def test_number_of_pairings(self, k, double_factorial):
        assert isserlis_moment(np.ones((1, 1)), [0] * (2 * k)) == double_factorial

    def test_odd_count(self):
        with pytest.raises(InvalidInput):
            isserlis_moment(np.eye(3), [0, 1, 2])

    def test_too_many_indices(self):
        with pytest.raises(InvalidInput):
            isserlis_moment(np.eye(1), [0] * 10)

    def test_against_monte_carlo(self, rng):
        A = rng.standard_normal((3, 3))
        C = A @ A.T
        Z = rng.multivariate_normal(np.zeros(3), C, size=400000)
        for idx in [(0, 1), (0, 0, 1, 2), (1, 1, 2, 2), (0, 1, 1, 2)]:
            exact = isserlis_moment(C, idx)
            sample = np.prod(Z[:, list(idx)], axis=1)
            assert abs(sample.mean() - exact) <= 4 * sample.std() / math.sqrt(len(sample))

    def test_inner_moment_enumeration_matches_closed_forms(self):
        C = NoiseSpec("ar1", 1.0, 0.5).covariance(5)
        # k = 1: sum_{i,j} C_ij^2; k = 2: 3 |C|_F^4 + 6 tr(C^4)
        assert inner_product_moment(C, 1) == pytest.approx(np.sum(C**2), rel=1e-12)
        fro2 = np.sum(C**2)
        assert inner_product_moment(C, 2) == pytest.approx(
            3 * fro2**2 + 6 * np.trace(np.linalg.matrix_power(C, 4)), rel=1e-12
        )

    def test_double_sum_matches_enumeration(self):
        spec = NoiseSpec("ar1", 1.0, 0.5)
        assert second_inner_moment(spec, 6) == pytest.approx(inner_product_moment(spec.covariance(6), 1), rel=1e-12)

    def test_scaling_in_p_is_bounded(self):
        spec = NoiseSpec("ar1", 1.0, 0.5)
        ratios = np.array([second_inner_moment(spec, p) / p for p in (10, 100, 1000)])
        assert (ratios.max() - ratios.min()) / ratios.max() < 0.10
        # limit: sum_h gamma(h)^2
        h = np.arange(-200, 201)
        assert ratios[-1] == pytest.approx(np.sum(spec.autocovariance(h) ** 2), rel=0.01)

    def test_small_enumeration_brute_force(self):
        # E (u2^T u1)^2 by summing the full pairing expansion over index tuples
        C = np.array([[1.0, 0.3], [0.3, 2.0]])
        total = sum(isserlis_moment(C, t) ** 2 for t in itertools.product(range(2), repeat=2))
        assert inner_product_moment(C, 1) == pytest.approx(total)
