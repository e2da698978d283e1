"""Estimators for the number of factors."""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .core import EigenSystem, Panel, gram_eigen
from .errors import InsufficientRank, InvalidInput, LowSignalWarning

LOW_SIGNAL_RATIO = 0.99


class CountMethod(enum.Enum):
    EIGENVALUE_RATIO = "eigenvalue_ratio"
    INFORMATION_CRITERION = "information_criterion"


@dataclass(frozen=True)
class FactorCountResult:
    chosen: int
    method: CountMethod
    scores_by_k: np.ndarray
    k_max: int
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "chosen": self.chosen,
            "method": self.method.value,
            "k_max": self.k_max,
            "scores_by_k": [float(v) if np.isfinite(v) else None for v in self.scores_by_k],
            "warnings": list(self.warnings),
        }


def default_k_max(T: int, p: int) -> int:
    return max(1, min(min(T, p) // 4, 50))


def _check_k_max(k_max, n):
    if k_max is None:
        return None
    if not 1 <= k_max <= n - 1:
        raise InvalidInput(f"k_max must lie in [1, {n - 1}], got {k_max}")
    return int(k_max)


def eigenvalue_ratio(es: EigenSystem, k_max: int | None = None) -> FactorCountResult:
    """
    Pick the ``k`` maximizing ``gamma_k / gamma_{k+1}``; ties go to the smallest ``k``.

    ``k_max`` defaults to ``min(T, p) // 4`` capped at 50 and is shrunk so
    that ``gamma_{k_max + 1}`` stays positive.
    """
    gam = es.eigenvalues
    n = gam.size
    positive = int(np.count_nonzero(gam > 0.0))
    if positive < 2:
        raise InsufficientRank(f"need at least two positive eigenvalues, got {positive}")
    k_max = _check_k_max(k_max, n)
    if k_max is None:
        k_max = default_k_max(es.eigenvectors.shape[0], es.p)
    k_max = min(k_max, positive - 1)
    ratios = gam[:k_max] / gam[1 : k_max + 1]
    chosen = int(np.argmax(ratios)) + 1
    return FactorCountResult(chosen, CountMethod.EIGENVALUE_RATIO, ratios, k_max)


def info_criterion(Y, k_max: int | None = None, center: bool = True) -> FactorCountResult:
    """
    Minimize ``log V(k) + k (T + p) / (T p) log min(T, p)``.

    ``V(k)`` is the mean squared residual of the rank-``k`` reconstruction
    of the centered panel, obtained from the Gram spectrum tail.
    """
    values = Y.values if isinstance(Y, Panel) else np.asarray(Y, dtype=float)
    T, p = values.shape
    if center:
        values = values - values.mean(axis=0)
    gam = gram_eigen(values).eigenvalues
    n = gam.size
    k_max = _check_k_max(k_max, n)
    if k_max is None:
        k_max = default_k_max(T, p)
    positive = int(np.count_nonzero(gam > 0.0))
    if positive < 1:
        raise InsufficientRank("panel is identically zero after centering")

    tails = np.concatenate([np.cumsum(gam[::-1])[::-1], [0.0]]) / p
    V = tails[: k_max + 1]
    logV = np.log(np.maximum(V, np.finfo(float).tiny))
    penalty = np.arange(k_max + 1) * (T + p) / (T * p) * np.log(min(T, p))
    ic = (logV + penalty)[1:]
    chosen = int(np.argmin(ic)) + 1

    notes = ()
    if V[1] / V[0] > LOW_SIGNAL_RATIO:
        msg = f"first factor removes only {100 * (1 - V[1] / V[0]):.2f}% of the variance"
        notes = ("LowSignal: " + msg,)
        warnings.warn(msg, LowSignalWarning, stacklevel=2)
    return FactorCountResult(chosen, CountMethod.INFORMATION_CRITERION, ic, k_max, notes)


def count_factors(Y, method="eigenvalue_ratio", k_max=None, center=True) -> FactorCountResult:
    """Dispatch on ``method`` for a raw panel."""
    method = CountMethod(method)
    if method is CountMethod.INFORMATION_CRITERION:
        return info_criterion(Y, k_max, center=center)
    values = Y.values if isinstance(Y, Panel) else np.asarray(Y, dtype=float)
    if center:
        values = values - values.mean(axis=0)
    return eigenvalue_ratio(gram_eigen(values), k_max)
