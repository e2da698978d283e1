"""
PCA factor-model recovery of grid-sampled signals.

The recovered panel is ``E E^T Y_c + mean`` where ``E`` holds the leading
``L`` eigenvectors of ``T^{-1} Y_c Y_c^T``.  ``alignment_diagnostics``
evaluates the rotation matrix ``H`` and the remainder terms that control
the recovery error; it needs the simulated ground truth.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .core import (
    DEGENERATE_GAP_RTOL,
    EigenSystem,
    FactorFit,
    Panel,
    Role,
    SamplingGrid,
    gram_eigen,
)
from .errors import (
    DegenerateSpectrumWarning,
    InvalidInput,
    RankDeficiencyWarning,
    SingularEigenvalue,
)


def _as_panel(Y) -> Panel:
    if isinstance(Y, Panel):
        return Y
    values = np.asarray(Y, dtype=float)
    if values.ndim != 2:
        raise InvalidInput("panel must be two-dimensional")
    return Panel(values, SamplingGrid.equidistant(values.shape[1]))


def estimate_mean(Y) -> np.ndarray:
    """Column-wise average of the panel (the pointwise sample mean curve)."""
    values = Y.values if isinstance(Y, Panel) else np.asarray(Y, dtype=float)
    if values.ndim != 2 or values.shape[0] == 0:
        raise InvalidInput("cannot average an empty panel")
    return values.mean(axis=0)


def recover(Y, L: int, center: bool = True, eigen: EigenSystem | None = None):
    """
    Recover the latent signal panel from noisy observations.

    Parameters
    ----------
    Y : Panel or array_like, shape (T, p)
    L : int
        Number of factors, ``1 <= L <= min(T, p)``.
    center : bool
        Remove the sample mean before projecting and add it back afterwards.
    eigen : EigenSystem, optional
        Precomputed spectrum of the (centered) panel; computed when omitted.

    Returns
    -------
    fit : FactorFit
    eigen : EigenSystem
    """
    panel = _as_panel(Y)
    T, p = panel.values.shape
    if not (isinstance(L, (int, np.integer)) and 1 <= L <= min(T, p)):
        raise InvalidInput(f"L must be an integer in [1, {min(T, p)}], got {L!r}")
    L = int(L)

    mean = estimate_mean(panel) if center else np.zeros(p)
    Yc = panel.values - mean
    es = gram_eigen(Yc) if eigen is None else eigen
    if es.eigenvectors.shape[0] != T or es.p != p:
        raise InvalidInput("eigen-system does not match the panel")

    notes = list(es.warnings)
    gam = es.eigenvalues
    used = L
    if gam[L - 1] <= 0.0:
        used = es.rank
        msg = f"panel rank {used} is below L={L}; projecting onto rank {used}"
        notes.append("RankDeficiency: " + msg)
        warnings.warn(msg, RankDeficiencyWarning, stacklevel=2)
    elif L < gam.size and (gam[L - 1] - gam[L]) <= DEGENERATE_GAP_RTOL * gam[L - 1]:
        msg = f"eigenvalues {L} and {L + 1} are tied; the projector is not unique"
        notes.append("DegenerateSpectrum: " + msg)
        warnings.warn(msg, DegenerateSpectrumWarning, stacklevel=2)

    E = es.eigenvectors[:, :used]
    scores = np.sqrt(T) * E
    loadings = Yc.T @ scores / T
    recovered = scores @ loadings.T + mean
    fit = FactorFit(
        mean=mean,
        num_factors=used,
        scores=scores,
        loadings=loadings,
        recovered=panel.with_values(recovered, Role.RECOVERED),
        eigenvalues=gam[:used],
        centered=center,
        warnings=tuple(notes),
    )
    return fit, es


def scaled_eigenvalues(es: EigenSystem, p: int) -> np.ndarray:
    """Gram eigenvalues divided by the grid size; estimates the covariance-operator spectrum."""
    if int(p) != es.p:
        raise InvalidInput(f"eigen-system was built from width {es.p}, not {p}")
    return es.eigenvalues / p


def sup_error(estimate, truth) -> float:
    """Largest absolute entrywise deviation between two panels."""
    a = estimate.values if isinstance(estimate, Panel) else np.asarray(estimate)
    b = truth.values if isinstance(truth, Panel) else np.asarray(truth)
    return float(np.max(np.abs(a - b)))


def mean_square_error(estimate, truth) -> float:
    a = estimate.values if isinstance(estimate, Panel) else np.asarray(estimate)
    b = truth.values if isinstance(truth, Panel) else np.asarray(truth)
    return float(np.mean((a - b) ** 2))


@dataclass(frozen=True)
class DiagnosticsReport:
    """
    Rotation matrix ``H`` and the remainder terms bounding the recovery error.

    r1 = max_t |f_hat_t - H f_t|, r2 = max_j |b_hat_j - H b_j|,
    r3 = max_j |b_j|, r4 = max_t |f_t|, r5 = |H|, r6 = |H^T H - I|
    (Euclidean norms for vectors, spectral norms for matrices).
    """

    h_matrix: np.ndarray
    r1: float
    r2: float
    r3: float
    r4: float
    r5: float
    r6: float

    def as_dict(self) -> dict:
        return {
            "h_matrix": self.h_matrix.tolist(),
            **{k: getattr(self, k) for k in ("r1", "r2", "r3", "r4", "r5", "r6")},
        }


def alignment_diagnostics(fit: FactorFit, scores, loadings, eigenvalues=None) -> DiagnosticsReport:
    """
    Compare a fit against the simulated truth.

    Parameters
    ----------
    fit : FactorFit
    scores : array_like, shape (T, L)
        Normalized true scores ``f_t`` as rows.
    loadings : array_like, shape (p, L)
        True loadings ``b_j`` as rows.
    eigenvalues : array_like, shape (L,), optional
        True eigenvalues; only checked for shape and positivity.
    """
    F = np.asarray(scores, dtype=float)
    B = np.asarray(loadings, dtype=float)
    F_hat, B_hat = fit.scores, fit.loadings
    T, L = F_hat.shape
    p = B_hat.shape[0]
    if F.shape != (T, L) or B.shape != (p, L):
        raise InvalidInput(
            f"truth shapes {F.shape}, {B.shape} do not match fit ({T}, {L}), ({p}, {L})"
        )
    if eigenvalues is not None:
        lam = np.asarray(eigenvalues, dtype=float)
        if lam.shape != (L,) or np.any(lam <= 0):
            raise InvalidInput("true eigenvalues must be a positive vector of length L")
    gam = fit.eigenvalues
    if gam.size != L or np.any(gam <= 0.0):
        raise SingularEigenvalue("a leading Gram eigenvalue is zero; H is undefined")

    H = (F_hat.T @ F) @ (B.T @ B) / T / gam[:, None]
    r1 = np.max(np.linalg.norm(F_hat - F @ H.T, axis=1))
    r2 = np.max(np.linalg.norm(B_hat - B @ H.T, axis=1))
    r3 = np.max(np.linalg.norm(B, axis=1))
    r4 = np.max(np.linalg.norm(F, axis=1))
    r5 = np.linalg.norm(H, 2)
    r6 = np.linalg.norm(H.T @ H - np.eye(L), 2)
    return DiagnosticsReport(H, *(float(v) for v in (r1, r2, r3, r4, r5, r6)))
