"""
Seeded Monte Carlo studies of recovery error, eigenvalue error, alignment,
autocovariance drift and score maxima.

Replication ``r`` of a study with base seed ``b`` simulates with seed
``derive_seed(b, r)`` for every panel size, so results do not depend on
scheduling or on the number of worker threads.
"""

from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, ReplicationError
from .estimator import alignment_diagnostics, mean_square_error, recover, sup_error
from .factor_count import count_factors
from .simulation import Basis, NoiseSpec, SimConfig, simulate
from .smoother import SmootherConfig, smooth_panel

REPLICATION_DOMAIN = 2
DEFAULT_LAGS = (0, 1, 2)
DEFAULT_P_SUB = 20


def derive_seed(base_seed: int, replication: int) -> int:
    """64-bit seed for one replication, from ``SeedSequence(base, spawn_key=(2, r))``."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(REPLICATION_DOMAIN, int(replication)))
    return int(ss.generate_state(1, np.uint64)[0])


def config_s1(T: int = 200, p: int = 200, seed: int = 0) -> SimConfig:
    """Three Fourier factors with eigenvalues (4, 2, 1), AR(0.5) scores and AR(0.3) noise."""
    return SimConfig(
        T=T,
        p=p,
        L_true=3,
        basis=Basis.FOURIER,
        eigen_decay=(4.0, 2.0, 1.0),
        score_ar=(0.5, 0.5, 0.5),
        noise=NoiseSpec("ar1", sigma=0.5, phi=0.3),
        seed=seed,
    )


def config_s3(T: int = 400, p: int = 100, seed: int = 0) -> SimConfig:
    """Brownian motion truncated at 30 terms plus white noise of sd 0.5."""
    return SimConfig(
        T=T,
        p=p,
        L_true=30,
        basis=Basis.BROWNIAN_MOTION,
        eigen_decay="natural",
        score_ar=0.0,
        noise=NoiseSpec("iid", sigma=0.5),
        seed=seed,
    )


class Statistic(enum.Enum):
    SUP_ERROR = "sup_error"
    EIGEN_ERROR = "eigen_error"
    ALIGNMENT = "alignment"
    ACF_DRIFT = "acf_drift"
    SCORE_MAX = "score_max"


class LSchedule(enum.Enum):
    FIXED = "fixed"
    LOG = "log"


@dataclass(frozen=True)
class RateStudyConfig:
    sizes: tuple
    replications: int
    base: SimConfig
    which: Statistic = Statistic.SUP_ERROR
    l_schedule: LSchedule = LSchedule.FIXED
    p_sub: int = DEFAULT_P_SUB
    lags: tuple = DEFAULT_LAGS

    def __post_init__(self):
        sizes = tuple((int(T), int(p)) for T, p in self.sizes)
        if not sizes:
            raise InvalidInput("sizes must be nonempty")
        if self.replications < 1:
            raise InvalidInput("replications must be >= 1")
        if not 1 <= self.p_sub <= DEFAULT_P_SUB:
            raise InvalidInput(f"p_sub must lie in [1, {DEFAULT_P_SUB}]")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "which", Statistic(self.which))
        object.__setattr__(self, "l_schedule", LSchedule(self.l_schedule))
        object.__setattr__(self, "lags", tuple(int(h) for h in self.lags))
        if any(h < 0 for h in self.lags) or not self.lags:
            raise InvalidInput("lags must be a nonempty list of non-negative integers")

    def sim_config(self, T: int, p: int, seed: int) -> SimConfig:
        if self.l_schedule is LSchedule.LOG:
            return self.base.replace(T=T, p=p, L_true=max(1, math.ceil(math.log(T))), seed=seed)
        return self.base.replace(T=T, p=p, seed=seed)

    def to_dict(self) -> dict:
        return {
            "sizes": [list(s) for s in self.sizes],
            "replications": self.replications,
            "base": self.base.to_dict(),
            "which": self.which.value,
            "l_schedule": self.l_schedule.value,
            "p_sub": self.p_sub,
            "lags": list(self.lags),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateStudyConfig":
        if not isinstance(d, dict):
            raise InvalidInput("study config must be a JSON object")
        known = {"sizes", "replications", "base", "which", "l_schedule", "p_sub", "lags"}
        unknown = set(d) - known
        if unknown:
            raise InvalidInput(f"unknown study fields: {sorted(unknown)}")
        for key in ("sizes", "replications", "base"):
            if key not in d:
                raise InvalidInput(f"study config is missing '{key}'")
        try:
            return cls(
                sizes=d["sizes"],
                replications=int(d["replications"]),
                base=SimConfig.from_dict(d["base"]),
                which=d.get("which", "sup_error"),
                l_schedule=d.get("l_schedule", "fixed"),
                p_sub=int(d.get("p_sub", DEFAULT_P_SUB)),
                lags=d.get("lags", DEFAULT_LAGS),
            )
        except InvalidInput:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed study config: {exc}") from exc


def grid_subset(p: int, p_sub: int) -> np.ndarray:
    """Up to ``p_sub`` evenly spread column indices."""
    return np.unique(np.linspace(0, p - 1, min(p_sub, p)).round().astype(int))


def empirical_autocov(X, h: int) -> np.ndarray:
    """``A[i, j] = T^{-1} sum_{t <= T - h} X[t + h, i] X[t, j]`` (no centering)."""
    X = np.asarray(X, dtype=float)
    T = X.shape[0]
    return X[h:].T @ X[: T - h] / T


def acf_drift(X_hat, X, lags=DEFAULT_LAGS, p_sub: int = DEFAULT_P_SUB) -> np.ndarray:
    """Per-lag ``max_{i,j} |A_hat(h)[i, j] - A(h)[i, j]|`` over a subset of grid points."""
    cols = grid_subset(np.shape(X)[1], p_sub)
    a, b = np.asarray(X_hat)[:, cols], np.asarray(X)[:, cols]
    return np.array([np.max(np.abs(empirical_autocov(a, h) - empirical_autocov(b, h))) for h in lags])


def replicate(cfg: SimConfig, which, p_sub: int = DEFAULT_P_SUB, lags=DEFAULT_LAGS):
    """
    One replication of a study statistic.

    Returns ``(value, warnings)``; recovery always uses ``L = cfg.L_true``.
    """
    which = Statistic(which)
    truth = simulate(cfg)
    if which is Statistic.SCORE_MAX:
        return float(np.max(np.linalg.norm(truth.normalized_scores, axis=1))), ()
    fit, es = recover(truth.observed, cfg.L_true)
    if which is Statistic.SUP_ERROR:
        value = sup_error(fit.recovered, truth.signal)
    elif which is Statistic.EIGEN_ERROR:
        value = float(np.max(np.abs(es.scaled[: cfg.L_true] - truth.eigenvalues)))
    elif which is Statistic.ALIGNMENT:
        value = alignment_diagnostics(fit, truth.normalized_scores, truth.loadings, truth.eigenvalues).r6
    else:
        value = float(np.max(acf_drift(fit.recovered.values, truth.signal.values, lags, p_sub)))
    return value, fit.warnings


def _run_all(fn, seeds, threads: int):
    def guarded(seed):
        try:
            return fn(seed)
        except Exception as exc:
            raise ReplicationError(seed, exc) from exc

    if threads <= 1 or len(seeds) == 1:
        return [guarded(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(guarded, seeds))


def log_log_slope(x, y) -> float | None:
    """Least-squares slope of ``log y`` on ``log x``; ``None`` without two distinct ``x``."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if np.unique(x).size < 2 or np.any(y <= 0):
        return None
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def _summary(values) -> dict:
    q25, med, q75 = np.quantile(values, [0.25, 0.5, 0.75])
    return {"median": float(med), "q25": float(q25), "q75": float(q75)}


@dataclass(frozen=True)
class RateStudyResult:
    config: RateStudyConfig
    per_size: list
    slope: float | None
    values: np.ndarray
    seeds: list
    warnings: list = field(default_factory=list)

    @property
    def medians(self) -> np.ndarray:
        return np.array([row["median"] for row in self.per_size])

    def to_dict(self) -> dict:
        return {
            "which": self.config.which.value,
            "l_schedule": self.config.l_schedule.value,
            "per_size": self.per_size,
            "slope": self.slope,
            "metadata": {
                "base_seed": int(self.config.base.seed),
                "replications": self.config.replications,
                "replication_seeds": self.seeds,
                "warnings": self.warnings,
                "config": self.config.to_dict(),
            },
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def long_rows(self):
        """Rows ``(which, t, p, l, replication, seed, value)``, one per replication and size."""
        for k, row in enumerate(self.per_size):
            for r, seed in enumerate(self.seeds):
                yield (self.config.which.value, row["t"], row["p"], row["l"], r, seed, float(self.values[k, r]))


def run_rate_study(cfg: RateStudyConfig, threads: int = 1) -> RateStudyResult:
    """
    Run every replication at every size and summarize by medians and quartiles.

    The slope is fitted to ``log(median)`` against ``log(T)``.
    """
    seeds = [derive_seed(cfg.base.seed, r) for r in range(cfg.replications)]
    values = np.empty((len(cfg.sizes), cfg.replications))
    per_size, notes = [], []
    for k, (T, p) in enumerate(cfg.sizes):
        L = cfg.sim_config(T, p, 0).L_true
        out = _run_all(
            lambda s: replicate(cfg.sim_config(T, p, s), cfg.which, cfg.p_sub, cfg.lags), seeds, threads
        )
        values[k] = [v for v, _ in out]
        for r, (_, w) in enumerate(out):
            notes.extend(f"T={T} p={p} replication={r}: {msg}" for msg in w)
        per_size.append({"t": T, "p": p, "l": L, **_summary(values[k])})
    slope = log_log_slope([row["t"] for row in per_size], [row["median"] for row in per_size])
    return RateStudyResult(cfg, per_size, slope, values, seeds, notes)


def run_acf_check(cfg: RateStudyConfig, threads: int = 1) -> list[dict]:
    """
    Autocovariance drift between recovered and true signals, per size and lag.

    Returns one row per (size, lag) with the median and quartiles of
    ``max_{i,j} |A_hat(h) - A(h)|`` over replications.
    """
    seeds = [derive_seed(cfg.base.seed, r) for r in range(cfg.replications)]
    rows = []
    for T, p in cfg.sizes:

        def one(seed, T=T, p=p):
            sim = cfg.sim_config(T, p, seed)
            truth = simulate(sim)
            fit, _ = recover(truth.observed, sim.L_true)
            return acf_drift(fit.recovered.values, truth.signal.values, cfg.lags, cfg.p_sub)

        drift = np.array(_run_all(one, seeds, threads))
        for j, h in enumerate(cfg.lags):
            rows.append({"t": T, "p": p, "lag": h, **_summary(drift[:, j])})
    return rows


def compare_replication(cfg: SimConfig, method: str = "eigenvalue_ratio", smoother=SmootherConfig()) -> dict:
    """Factor recovery with an estimated number of factors against the local-linear smoother."""
    truth = simulate(cfg)
    l_hat = count_factors(truth.observed, method).chosen
    fit, _ = recover(truth.observed, l_hat)
    smoothed = smooth_panel(truth.observed, smoother)
    return {
        "seed": int(cfg.seed),
        "l_hat": l_hat,
        "factor_mse": mean_square_error(fit.recovered, truth.signal),
        "smoother_mse": mean_square_error(smoothed, truth.signal),
        "factor_sup": sup_error(fit.recovered, truth.signal),
        "smoother_sup": sup_error(smoothed, truth.signal),
    }


def run_compare(cfg: SimConfig, replications: int, threads: int = 1, method: str = "eigenvalue_ratio") -> list[dict]:
    """One row per replication; replication ``r`` uses ``derive_seed(cfg.seed, r)``."""
    if replications < 1:
        raise InvalidInput("replications must be >= 1")
    seeds = [derive_seed(cfg.seed, r) for r in range(replications)]
    rows = _run_all(lambda s: compare_replication(cfg.replace(seed=s), method), seeds, threads)
    return [{"replication": r, **row} for r, row in enumerate(rows)]
