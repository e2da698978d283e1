"""
Curve-by-curve local-linear kernel smoothing.

This is the comparison method: each curve is smoothed on its own, so it
cannot borrow strength across the sample.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .core import Panel, Role, SamplingGrid
from .errors import BandwidthTooSmall, InvalidInput

AUTO = "auto"
N_CANDIDATES = 20
MAX_BANDWIDTH = 0.5


class Kernel(enum.Enum):
    GAUSSIAN = "gaussian"
    EPANECHNIKOV = "epanechnikov"

    def __call__(self, u):
        if self is Kernel.GAUSSIAN:
            return np.exp(-0.5 * u * u)
        return np.where(np.abs(u) < 1.0, 0.75 * (1.0 - u * u), 0.0)


@dataclass(frozen=True)
class SmootherConfig:
    bandwidth: float | str = AUTO
    kernel: Kernel = Kernel.GAUSSIAN

    def __post_init__(self):
        object.__setattr__(self, "kernel", Kernel(self.kernel))
        if self.bandwidth != AUTO and not (np.isfinite(self.bandwidth) and self.bandwidth > 0):
            raise InvalidInput(f"bandwidth must be positive or 'auto', got {self.bandwidth!r}")


def smoother_matrix(grid: SamplingGrid, bandwidth: float, kernel=Kernel.GAUSSIAN) -> np.ndarray:
    """
    p x p matrix ``S`` with ``S @ y`` the local-linear fit at every grid point.

    Row ``j`` holds the equivalent-kernel weights of the weighted
    least-squares line fitted around ``s_j``, evaluated at ``s_j``.
    """
    kernel = Kernel(kernel)
    s = grid.points
    d = s[None, :] - s[:, None]
    W = kernel(d / bandwidth)
    s0 = W.sum(axis=1)
    s1 = (W * d).sum(axis=1)
    s2 = (W * d * d).sum(axis=1)
    det = s0 * s2 - s1 * s1
    scale = s0 * s2
    if np.any(np.count_nonzero(W, axis=1) < 2) or np.any(det <= 1e-12 * scale):
        raise BandwidthTooSmall(f"bandwidth {bandwidth:g} leaves fewer than two effective points")
    return W * (s2[:, None] - s1[:, None] * d) / det[:, None]


def smooth_curve(y, grid: SamplingGrid, cfg: SmootherConfig = SmootherConfig()) -> np.ndarray:
    """Local-linear estimate of one curve at its own grid points."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != len(grid):
        raise InvalidInput("curve length must equal the grid length")
    if y.size < 3:
        raise InvalidInput("need at least three grid points")
    if cfg.bandwidth == AUTO:
        return smooth_panel(Panel(y[None, :], grid), cfg).values[0]
    if cfg.bandwidth < grid.mesh:
        raise BandwidthTooSmall(f"bandwidth {cfg.bandwidth:g} is below the grid mesh {grid.mesh:g}")
    return smoother_matrix(grid, cfg.bandwidth, cfg.kernel) @ y


def bandwidth_candidates(grid: SamplingGrid) -> np.ndarray:
    """Logarithmic grid of 20 bandwidths from the grid mesh to 0.5."""
    return np.geomspace(grid.mesh, MAX_BANDWIDTH, N_CANDIDATES)


def loocv_scores(Y, grid: SamplingGrid, kernel=Kernel.GAUSSIAN, candidates=None) -> np.ndarray:
    """
    Leave-one-out cross-validation error per (curve, bandwidth).

    The held-out residual of a local-linear fit equals
    ``(y_i - yhat_i) / (1 - S_ii)``, so no refitting is needed.  Infeasible
    bandwidths score ``inf``.
    """
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    h_grid = bandwidth_candidates(grid) if candidates is None else np.asarray(candidates)
    out = np.full((Y.shape[0], h_grid.size), np.inf)
    for k, h in enumerate(h_grid):
        try:
            S = smoother_matrix(grid, h, kernel)
        except BandwidthTooSmall:
            continue
        lev = np.diag(S)
        if np.any(lev >= 1.0 - 1e-10):
            continue
        resid = (Y - Y @ S.T) / (1.0 - lev)
        out[:, k] = np.mean(resid**2, axis=1)
    return out


def smooth_panel(Y: Panel, cfg: SmootherConfig = SmootherConfig()) -> Panel:
    """
    Smooth every row independently.

    With ``bandwidth="auto"`` each row gets the candidate bandwidth that
    minimizes its own leave-one-out error (first minimum on ties).
    """
    grid = Y.grid
    if Y.p < 3:
        raise InvalidInput("need at least three grid points")
    if cfg.bandwidth != AUTO:
        if cfg.bandwidth < grid.mesh:
            raise BandwidthTooSmall(f"bandwidth {cfg.bandwidth:g} is below the grid mesh {grid.mesh:g}")
        S = smoother_matrix(grid, cfg.bandwidth, cfg.kernel)
        return Y.with_values(Y.values @ S.T, Role.RECOVERED)

    h_grid = bandwidth_candidates(grid)
    cv = loocv_scores(Y.values, grid, cfg.kernel, h_grid)
    if np.any(np.all(~np.isfinite(cv), axis=1)):
        raise BandwidthTooSmall("no candidate bandwidth is feasible")
    best = np.argmin(cv, axis=1)
    out = np.empty_like(Y.values)
    for k in np.unique(best):
        rows = best == k
        out[rows] = Y.values[rows] @ smoother_matrix(grid, h_grid[k], cfg.kernel).T
    return Y.with_values(out, Role.RECOVERED)


def selected_bandwidths(Y: Panel, kernel=Kernel.GAUSSIAN) -> np.ndarray:
    """Bandwidth chosen for each row by leave-one-out cross-validation."""
    h_grid = bandwidth_candidates(Y.grid)
    return h_grid[np.argmin(loocv_scores(Y.values, Y.grid, kernel, h_grid), axis=1)]
