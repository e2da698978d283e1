"""
Ground-truth generators for the signal-plus-noise panel model.

Signals follow a truncated Karhunen-Loeve expansion with independent
stationary Gaussian AR(1) scores; noise rows are i.i.d. over time and
either white or AR(1) along the grid.

Random numbers
--------------
All draws come from numpy's PCG64 bit generator.  A configuration seed
``s`` is expanded with ``numpy.random.SeedSequence(s, spawn_key=(k,))``
into child streams: ``k = 0`` feeds the scores, ``k = 1`` the noise.
Within a stream, standard normals are drawn in one block in C order.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.signal import lfilter

from .core import Panel, Role, SamplingGrid
from .errors import InvalidInput

SCORE_STREAM = 0
NOISE_STREAM = 1


def stream_rng(seed: int, stream: int) -> np.random.Generator:
    """Generator for child ``stream`` of a base ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(stream,))))


class Basis(enum.Enum):
    FOURIER = "fourier"
    BROWNIAN_MOTION = "brownian_motion"


class NoiseKind(enum.Enum):
    IID = "iid"
    AR1 = "ar1"


@dataclass(frozen=True)
class NoiseSpec:
    """
    Gaussian measurement noise along the grid.

    ``sigma`` is the innovation standard deviation; for ``AR1`` the implied
    autocovariance is ``sigma**2 * phi**|h| / (1 - phi**2)``.
    """

    kind: NoiseKind = NoiseKind.IID
    sigma: float = 1.0
    phi: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        if not (np.isfinite(self.sigma) and self.sigma >= 0):
            raise InvalidInput(f"noise sigma must be >= 0, got {self.sigma}")
        if self.kind is NoiseKind.AR1 and not (-1 < self.phi < 1):
            raise InvalidInput(f"AR coefficient must lie in (-1, 1), got {self.phi}")

    def autocovariance(self, h) -> np.ndarray:
        h = np.abs(np.asarray(h))
        if self.kind is NoiseKind.IID:
            return np.where(h == 0, self.sigma**2, 0.0)
        return self.sigma**2 * self.phi**h / (1.0 - self.phi**2)

    def covariance(self, p: int) -> np.ndarray:
        """p x p Toeplitz covariance of one noise row."""
        idx = np.arange(p)
        return self.autocovariance(idx[:, None] - idx[None, :])

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "sigma": self.sigma, "phi": self.phi}


class PowerDecay(NamedTuple):
    """Eigenvalues ``rho * l**(-nu)``."""

    rho: float
    nu: float


def _parse_decay(decay):
    if isinstance(decay, PowerDecay):
        return PowerDecay(float(decay.rho), float(decay.nu))
    if isinstance(decay, str):
        if decay != "natural":
            raise InvalidInput(f"unknown eigen_decay {decay!r}")
        return decay
    if isinstance(decay, dict):
        try:
            return PowerDecay(float(decay["rho"]), float(decay["nu"]))
        except KeyError as exc:
            raise InvalidInput(f"eigen_decay object needs 'rho' and 'nu', missing {exc}") from None
    return tuple(float(v) for v in decay)


@dataclass(frozen=True)
class SimConfig:
    """
    Full generative specification of one simulated panel.

    ``eigen_decay`` is a :class:`PowerDecay` (or ``{"rho": .., "nu": ..}``),
    an explicit sequence of ``L_true`` eigenvalues, or ``"natural"`` for the
    Brownian-motion eigenvalues.  ``score_ar`` holds one AR(1) coefficient
    per score; a scalar is broadcast and an empty sequence means
    independent scores.
    """

    T: int
    p: int
    L_true: int
    basis: Basis = Basis.FOURIER
    eigen_decay: object = PowerDecay(1.0, 1.0)
    score_ar: tuple = ()
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "basis", Basis(self.basis))
        if isinstance(self.noise, dict):
            object.__setattr__(self, "noise", NoiseSpec(**self.noise))
        if self.T < 2 or self.p < 2:
            raise InvalidInput(f"need T >= 2 and p >= 2, got T={self.T}, p={self.p}")
        if not 1 <= self.L_true <= self.p:
            raise InvalidInput(f"L_true must lie in [1, p], got {self.L_true}")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidInput("seed must be a 64-bit unsigned integer")
        decay = _parse_decay(self.eigen_decay)
        if decay == "natural" and self.basis is not Basis.BROWNIAN_MOTION:
            raise InvalidInput("eigen_decay 'natural' needs the brownian_motion basis")
        if isinstance(decay, PowerDecay) and (decay.rho <= 0 or decay.nu <= 0):
            raise InvalidInput("rho and nu must be positive")
        object.__setattr__(self, "eigen_decay", decay)
        if np.isscalar(self.score_ar):
            ar = (float(self.score_ar),) * self.L_true
        else:
            ar = tuple(float(a) for a in self.score_ar) or (0.0,) * self.L_true
        if len(ar) != self.L_true:
            raise InvalidInput(f"score_ar needs {self.L_true} coefficients, got {len(ar)}")
        if any(not -1 < a < 1 for a in ar):
            raise InvalidInput("score AR coefficients must lie in (-1, 1)")
        object.__setattr__(self, "score_ar", ar)
        lam = self.eigenvalues
        if np.any(lam <= 0) or np.any(np.diff(lam) > 0):
            raise InvalidInput("eigenvalues must be positive and non-increasing")

    @property
    def eigenvalues(self) -> np.ndarray:
        decay, L = self.eigen_decay, self.L_true
        if decay == "natural":
            return brownian_eigenvalues(L)
        if isinstance(decay, PowerDecay):
            return decay.rho * np.arange(1, L + 1, dtype=float) ** (-decay.nu)
        if len(decay) != L:
            raise InvalidInput(f"expected {L} eigenvalues, got {len(decay)}")
        return np.array(decay, dtype=float)

    def replace(self, **changes) -> "SimConfig":
        """Copy with some fields changed; a constant ``score_ar`` follows a new ``L_true``."""
        d = {k: getattr(self, k) for k in _FIELDS}
        d.update(changes)
        if "L_true" in changes and "score_ar" not in changes and len(set(self.score_ar)) == 1:
            d["score_ar"] = self.score_ar[0]
        return SimConfig(**d)

    def to_dict(self) -> dict:
        decay = self.eigen_decay
        if isinstance(decay, PowerDecay):
            decay = {"rho": decay.rho, "nu": decay.nu}
        elif not isinstance(decay, str):
            decay = list(decay)
        return {
            "t": self.T,
            "p": self.p,
            "l_true": self.L_true,
            "basis": self.basis.value,
            "eigen_decay": decay,
            "score_ar": list(self.score_ar),
            "noise": self.noise.to_dict(),
            "seed": int(self.seed),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SimConfig":
        if not isinstance(d, dict):
            raise InvalidInput("SimConfig must be a JSON object")
        known = {"t", "p", "l_true", "basis", "eigen_decay", "score_ar", "noise", "seed"}
        unknown = set(d) - known
        if unknown:
            raise InvalidInput(f"unknown SimConfig fields: {sorted(unknown)}")
        missing = {"t", "p", "l_true"} - set(d)
        if missing:
            raise InvalidInput(f"missing SimConfig fields: {sorted(missing)}")
        try:
            return cls(
                T=int(d["t"]),
                p=int(d["p"]),
                L_true=int(d["l_true"]),
                basis=d.get("basis", "fourier"),
                eigen_decay=d.get("eigen_decay", {"rho": 1.0, "nu": 1.0}),
                score_ar=d.get("score_ar", ()),
                noise=NoiseSpec(**d.get("noise", {})),
                seed=int(d.get("seed", 0)),
            )
        except InvalidInput:
            raise
        except (TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed SimConfig: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "SimConfig":
        return cls.from_dict(json.loads(text))


_FIELDS = ("T", "p", "L_true", "basis", "eigen_decay", "score_ar", "noise", "seed")


def brownian_eigenvalues(L: int) -> np.ndarray:
    """Covariance-operator eigenvalues of standard Brownian motion on [0, 1]."""
    ell = np.arange(1, L + 1, dtype=float)
    return ((ell - 0.5) * np.pi) ** -2.0


def eigenbasis(basis, L: int, grid: SamplingGrid) -> np.ndarray:
    """
    Orthonormal functions evaluated on the grid, one column per function.

    Fourier: ``1, sqrt2 sin(2 pi s), sqrt2 cos(2 pi s), sqrt2 sin(4 pi s), ...``.
    Brownian motion: ``sqrt2 sin((l - 1/2) pi s)``.
    """
    basis = Basis(basis)
    s = grid.points
    if L < 1 or L > s.size:
        raise InvalidInput(f"need 1 <= L <= p={s.size}, got L={L}")
    out = np.empty((s.size, L))
    if basis is Basis.FOURIER:
        out[:, 0] = 1.0
        for ell in range(2, L + 1):
            k = ell // 2
            trig = np.sin if ell % 2 == 0 else np.cos
            out[:, ell - 1] = np.sqrt(2.0) * trig(2.0 * np.pi * k * s)
    else:
        ell = np.arange(1, L + 1)
        out[:] = np.sqrt(2.0) * np.sin(np.outer(s, (ell - 0.5) * np.pi))
    return out


def simulate_scores(cfg: SimConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Stationary AR(1) score paths, shape (T, L_true).

    Column ``l`` has marginal variance ``lambda_l``; the first row is drawn
    from that marginal and the innovation variance is
    ``lambda_l * (1 - a_l**2)``.
    """
    lam = cfg.eigenvalues
    ar = np.asarray(cfg.score_ar)
    z = rng.standard_normal((cfg.T, cfg.L_true))
    shocks = z * np.sqrt(lam * (1.0 - ar**2))
    shocks[0] = z[0] * np.sqrt(lam)
    x = np.empty_like(shocks)
    for ell, a in enumerate(ar):
        x[:, ell] = lfilter([1.0], [1.0, -a], shocks[:, ell]) if a else shocks[:, ell]
    return x


def simulate_noise(T: int, grid, spec: NoiseSpec, rng: np.random.Generator) -> Panel:
    """Noise panel with independent rows; AR(1) noise runs along the grid index."""
    if not isinstance(grid, SamplingGrid):
        grid = SamplingGrid.equidistant(int(grid))
    p = len(grid)
    z = rng.standard_normal((T, p))
    if spec.kind is NoiseKind.IID or spec.phi == 0.0:
        u = spec.sigma * z
    else:
        shocks = spec.sigma * z
        shocks[:, 0] = z[:, 0] * spec.sigma / np.sqrt(1.0 - spec.phi**2)
        u = lfilter([1.0], [1.0, -spec.phi], shocks, axis=1)
    return Panel(u, grid, Role.NOISE)


@dataclass(frozen=True)
class GroundTruth:
    signal: Panel
    noise: Panel
    observed: Panel
    scores: np.ndarray
    normalized_scores: np.ndarray
    loadings: np.ndarray
    eigenvalues: np.ndarray
    eigenfunctions_on_grid: np.ndarray
    config: SimConfig


def simulate(cfg: SimConfig) -> GroundTruth:
    """Draw one panel ``Y = F B^T + U`` together with all latent pieces."""
    grid = SamplingGrid.equidistant(cfg.p)
    lam = cfg.eigenvalues
    phi = eigenbasis(cfg.basis, cfg.L_true, grid)
    scores = simulate_scores(cfg, stream_rng(cfg.seed, SCORE_STREAM))
    f = scores / np.sqrt(lam)
    B = phi * np.sqrt(lam)
    signal = Panel(f @ B.T, grid, Role.SIGNAL)
    noise = simulate_noise(cfg.T, grid, cfg.noise, stream_rng(cfg.seed, NOISE_STREAM))
    observed = Panel(signal.values + noise.values, grid, Role.OBSERVED)
    return GroundTruth(signal, noise, observed, scores, f, B, lam, phi, cfg)


def _pairings(items):
    if not items:
        yield ()
        return
    first, rest = items[0], items[1:]
    for i in range(len(rest)):
        remaining = rest[:i] + rest[i + 1 :]
        for tail in _pairings(remaining):
            yield ((first, rest[i]),) + tail


def isserlis_moment(cov, indices) -> float:
    """
    ``E[Z_{i_1} ... Z_{i_2k}]`` for a zero-mean Gaussian vector with covariance ``cov``.

    Sums ``prod cov[i, j]`` over all pair partitions of the index list
    (``(2k - 1)!!`` terms); indices may repeat.
    """
    cov = np.asarray(cov, dtype=float)
    idx = tuple(int(i) for i in indices)
    if len(idx) % 2:
        raise InvalidInput("an odd-order Gaussian moment is identically zero; pass an even count")
    if len(idx) > 8:
        raise InvalidInput("at most 8 indices are supported")
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1] or not np.allclose(cov, cov.T):
        raise InvalidInput("covariance must be a symmetric square matrix")
    if any(i < 0 or i >= cov.shape[0] for i in idx):
        raise InvalidInput("index out of range")
    total = 0.0
    for pairing in _pairings(idx):
        term = 1.0
        for i, j in pairing:
            term *= cov[i, j]
        total += term
    return float(total)


def inner_product_moment(cov, k: int) -> float:
    """
    ``E (u_2^T u_1)^{2k}`` for independent ``u_1, u_2 ~ N(0, cov)``.

    Equals ``sum_{i_1..i_2k} (E eps_{i_1} ... eps_{i_2k})**2``; evaluated by
    enumerating index tuples, so only small dimensions are practical.
    """
    cov = np.asarray(cov, dtype=float)
    p = cov.shape[0]
    if k < 1 or 2 * k > 8:
        raise InvalidInput("k must be in 1..4")
    cache = {}
    total = 0.0
    for tup in itertools.product(range(p), repeat=2 * k):
        key = tuple(sorted(tup))
        m = cache.get(key)
        if m is None:
            m = cache[key] = isserlis_moment(cov, key)
        total += m * m
    return total


def second_inner_moment(spec: NoiseSpec, p: int) -> float:
    """``E (u_2^T u_1)^2 = sum_{i,j} gamma(i - j)**2`` via the autocovariance double sum."""
    h = np.arange(-(p - 1), p)
    return float(np.sum((p - np.abs(h)) * spec.autocovariance(h) ** 2))
