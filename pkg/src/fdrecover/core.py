"""
Shared data model and the dense symmetric eigen-solver facade.

Panels are stored curve-per-row: ``values[t, i]`` is curve ``t`` evaluated
at grid point ``s_i``.  Every spectral quantity in the package is computed
from the sample-space Gram matrix ``values @ values.T / T`` (size T x T),
whose nonzero spectrum coincides with that of the p x p covariance
``values.T @ values / T``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidInput

#: relative level below which Gram eigenvalues are treated as exact zeros
CLAMP_RTOL = 1e-12
#: relative eigen-gap below which the truncated projector is flagged
DEGENERATE_GAP_RTOL = 1e-10
SYMMETRY_RTOL = 1e-8


def _readonly(a, dtype=float):
    a = np.array(a, dtype=dtype, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class SamplingGrid:
    """Ordered sampling points ``0 <= s_1 < ... < s_p <= 1``."""

    points: np.ndarray

    def __post_init__(self):
        pts = _readonly(self.points)
        if pts.ndim != 1 or pts.size < 2:
            raise InvalidInput("a grid needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise InvalidInput("grid points must be finite")
        if pts[0] < 0.0 or pts[-1] > 1.0:
            raise InvalidInput("grid points must lie in [0, 1]")
        if np.any(np.diff(pts) <= 0.0):
            raise InvalidInput("grid points must be strictly increasing")
        object.__setattr__(self, "points", pts)

    @classmethod
    def equidistant(cls, p: int) -> "SamplingGrid":
        """Grid ``s_j = j / p`` for ``j = 0, ..., p - 1``."""
        if p < 2:
            raise InvalidInput("a grid needs at least two points")
        return cls(np.arange(p) / p)

    def __len__(self):
        return self.points.size

    @property
    def mesh(self) -> float:
        """Largest gap between consecutive points."""
        return float(np.max(np.diff(self.points)))

    def is_equidistant(self, tol: float = 1e-12) -> bool:
        p = self.points.size
        return bool(np.max(np.abs(np.diff(self.points) - 1.0 / p)) <= tol)

    def __eq__(self, other):
        if not isinstance(other, SamplingGrid):
            return NotImplemented
        return np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash(self.points.tobytes())


class Role(enum.Enum):
    OBSERVED = "observed"
    SIGNAL = "signal"
    NOISE = "noise"
    RECOVERED = "recovered"


@dataclass(frozen=True)
class Panel:
    """A T x p matrix of curves sampled on a common grid."""

    values: np.ndarray
    grid: SamplingGrid
    role: Role = Role.OBSERVED

    def __post_init__(self):
        vals = _readonly(self.values)
        if vals.ndim != 2:
            raise InvalidInput(f"panel values must be 2-d, got shape {vals.shape}")
        if vals.shape[1] != len(self.grid):
            raise InvalidInput(
                f"panel has {vals.shape[1]} columns but the grid has {len(self.grid)} points"
            )
        if not np.all(np.isfinite(vals)):
            raise InvalidInput("panel entries must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "role", Role(self.role))

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def with_values(self, values, role=None) -> "Panel":
        return Panel(values, self.grid, self.role if role is None else role)


@dataclass(frozen=True)
class EigenSystem:
    """
    Spectrum of ``T^{-1} Y Y^T`` for a T x p panel ``Y``.

    Attributes
    ----------
    eigenvalues : ndarray, shape (min(T, p),)
        Descending, clamped to be non-negative.
    eigenvectors : ndarray, shape (T, min(T, p))
        Orthonormal columns in sample space.
    p : int
        Width of the panel the system was built from.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    p: int
    warnings: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", _readonly(self.eigenvalues))
        object.__setattr__(self, "eigenvectors", _readonly(self.eigenvectors))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def scaled(self) -> np.ndarray:
        """Eigenvalues divided by the panel width."""
        return self.eigenvalues / self.p

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.eigenvalues > 0.0))

    def projector(self, L: int) -> np.ndarray:
        E = self.eigenvectors[:, :L]
        return E @ E.T


@dataclass(frozen=True)
class FactorFit:
    """
    Result of the PCA factor recovery.

    ``scores`` are ``sqrt(T) * E`` (so ``scores.T @ scores / T = I``),
    ``loadings`` are ``Y_c.T @ scores / T`` and ``recovered`` holds
    ``scores @ loadings.T + mean``.
    """

    mean: np.ndarray
    num_factors: int
    scores: np.ndarray
    loadings: np.ndarray
    recovered: Panel
    eigenvalues: np.ndarray
    centered: bool = True
    warnings: tuple = field(default=())

    def __post_init__(self):
        for name in ("mean", "scores", "loadings", "eigenvalues"):
            object.__setattr__(self, name, _readonly(getattr(self, name)))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def basis(self) -> np.ndarray:
        """Orthonormal sample-space basis ``E`` spanning the retained factors."""
        return self.scores / np.sqrt(self.scores.shape[0])


def _fix_signs(V):
    """Flip columns so that the first entry of non-negligible size is positive."""
    V = np.array(V, copy=True)
    if V.size == 0:
        return V
    scale = np.max(np.abs(V), axis=0)
    significant = np.abs(V) > 1e-8 * scale
    first = np.argmax(significant, axis=0)
    signs = np.sign(V[first, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def sym_eigen(M) -> tuple[np.ndarray, np.ndarray]:
    """
    Eigen-decomposition of a real symmetric matrix, largest eigenvalue first.

    Eigenvectors follow the convention that their first non-negligible
    component is positive.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidInput(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidInput("matrix has non-finite entries")
    scale = np.max(np.abs(M)) if M.size else 0.0
    if M.size and np.max(np.abs(M - M.T)) > SYMMETRY_RTOL * max(scale, np.finfo(float).tiny):
        raise InvalidInput("matrix is not symmetric")
    w, V = scipy.linalg.eigh((M + M.T) / 2.0)
    return w[::-1].copy(), _fix_signs(V[:, ::-1])


def _clamp(values):
    top = values[0] if values.size else 0.0
    tol = CLAMP_RTOL * max(top, 0.0)
    out = np.where(values <= tol, 0.0, values)
    return out


def _complete_basis(E, n):
    """Extend the orthonormal columns of ``E`` to ``n`` orthonormal columns."""
    r = E.shape[1]
    if r >= n:
        return E[:, :n]
    if r == 0:
        extra = np.eye(E.shape[0])[:, : n]
    else:
        extra = scipy.linalg.null_space(E.T)[:, : n - r]
    return np.hstack([E, _fix_signs(extra)])


def gram_eigen(Y, route: str = "auto") -> EigenSystem:
    """
    Eigen-system of ``T^{-1} Y Y^T`` for a T x p panel.

    Parameters
    ----------
    Y : Panel or array_like, shape (T, p)
    route : {"auto", "sample", "variable"}
        ``"sample"`` decomposes the T x T Gram matrix directly.
        ``"variable"`` decomposes the p x p matrix ``Y^T Y / T`` and maps
        its eigenvectors back through ``Y``.  ``"auto"`` picks whichever
        matrix is smaller.
    """
    values = Y.values if isinstance(Y, Panel) else np.asarray(Y, dtype=float)
    if values.ndim != 2:
        raise InvalidInput("panel must be two-dimensional")
    T, p = values.shape
    if T < 1 or p < 2:
        raise InvalidInput(f"need T >= 1 and p >= 2, got T={T}, p={p}")
    if not np.all(np.isfinite(values)):
        raise InvalidInput("panel entries must be finite")
    n = min(T, p)
    if route == "auto":
        route = "sample" if T <= p else "variable"

    if route == "sample":
        w, V = sym_eigen(values @ values.T / T)
        w, V = _clamp(w[:n]), V[:, :n]
    elif route == "variable":
        w, W = sym_eigen(values.T @ values / T)
        w = _clamp(w[:n])
        r = int(np.count_nonzero(w > 0.0))
        mapped = values @ W[:, :r]
        # e_i = Y w_i / sqrt(T gamma_i); a QR pass restores orthogonality lost to rounding
        mapped /= np.sqrt(T * w[:r])
        if r:
            Q, R = np.linalg.qr(mapped)
            mapped = Q * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))
        V = _complete_basis(_fix_signs(mapped), n)
    else:
        raise InvalidInput(f"unknown route {route!r}")
    return EigenSystem(w, V, p)
