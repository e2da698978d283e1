"""Recover latent curves from noisy grid-sampled functional data by PCA factor projection."""

from .core import EigenSystem, FactorFit, Panel, Role, SamplingGrid, gram_eigen, sym_eigen
from .errors import (
    BandwidthTooSmall,
    DegenerateSpectrumWarning,
    InsufficientRank,
    InvalidInput,
    LowSignalWarning,
    RankDeficiencyWarning,
    ReplicationError,
    SingularEigenvalue,
)
from .estimator import (
    DiagnosticsReport,
    alignment_diagnostics,
    estimate_mean,
    mean_square_error,
    recover,
    scaled_eigenvalues,
    sup_error,
)
from .factor_count import FactorCountResult, count_factors, eigenvalue_ratio, info_criterion
from .simulation import (
    Basis,
    GroundTruth,
    NoiseKind,
    NoiseSpec,
    PowerDecay,
    SimConfig,
    eigenbasis,
    isserlis_moment,
    simulate,
    simulate_noise,
    simulate_scores,
)
from .smoother import Kernel, SmootherConfig, smooth_curve, smooth_panel

__all__ = [
    "alignment_diagnostics",
    "BandwidthTooSmall",
    "Basis",
    "count_factors",
    "DegenerateSpectrumWarning",
    "DiagnosticsReport",
    "eigenbasis",
    "EigenSystem",
    "eigenvalue_ratio",
    "estimate_mean",
    "FactorCountResult",
    "FactorFit",
    "gram_eigen",
    "GroundTruth",
    "info_criterion",
    "InsufficientRank",
    "InvalidInput",
    "isserlis_moment",
    "Kernel",
    "LowSignalWarning",
    "mean_square_error",
    "NoiseKind",
    "NoiseSpec",
    "Panel",
    "PowerDecay",
    "RankDeficiencyWarning",
    "recover",
    "ReplicationError",
    "Role",
    "SamplingGrid",
    "scaled_eigenvalues",
    "SimConfig",
    "simulate",
    "simulate_noise",
    "simulate_scores",
    "SingularEigenvalue",
    "smooth_curve",
    "smooth_panel",
    "SmootherConfig",
    "sup_error",
    "sym_eigen",
]

__version__ = "0.1.0"
