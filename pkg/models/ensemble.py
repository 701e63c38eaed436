# File: models/ensemble.py

import logging
from dataclasses import dataclass, field

import numpy as np

from utils.errors import DomainError

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Parameters of one circular beta-ensemble.

    Args:
        beta: Inverse temperature, strictly positive.
        n: Number of eigenangles.
        seed: 64-bit unsigned seed of the replicate stream.
    """
    beta: float
    n: int
    seed: int = 0

    def __post_init__(self):
        if not np.isfinite(self.beta) or self.beta <= 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if self.seed < 0 or self.seed >= 2 ** 64:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def with_seed(self, seed: int) -> "EnsembleSpec":
        return EnsembleSpec(beta=self.beta, n=self.n, seed=seed)

    def to_dict(self) -> dict:
        return {'beta': float(self.beta), 'n': int(self.n), 'seed': int(self.seed)}


@dataclass(frozen=True)
class VerblunskySeq:
    """Verblunsky coefficients alpha_0..alpha_{n-1}; the last one lies on the unit circle."""
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=complex)
        if alpha.ndim != 1 or alpha.size < 1:
            raise DomainError("Verblunsky sequence must be a non-empty 1-d array")
        if alpha.size > 1 and np.any(np.abs(alpha[:-1]) >= 1.0):
            raise DomainError("interior Verblunsky coefficients must lie in the open unit disk")
        if abs(abs(alpha[-1]) - 1.0) > 1e-14:
            raise DomainError(f"last Verblunsky coefficient must have modulus 1, got {abs(alpha[-1])}")
        object.__setattr__(self, 'alpha', alpha)

    @property
    def n(self) -> int:
        return int(self.alpha.size)


@dataclass(frozen=True)
class SpectrumSample:
    """
    One sorted eigenangle configuration of the circular beta-ensemble.

    Angles are strictly increasing in [0, 2*pi). ``log_weight`` is zero for
    unbiased draws and carries sum_j w(theta_j) once an importance weight
    has been attached.
    """
    angles: np.ndarray
    spec: EnsembleSpec
    log_weight: float = 0.0
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        if angles.shape != (self.spec.n,):
            raise DomainError(f"expected {self.spec.n} angles, got shape {angles.shape}")
        if angles.size and (angles[0] < 0.0 or angles[-1] >= TWO_PI):
            raise DomainError("angles must lie in [0, 2*pi)")
        if np.any(np.diff(angles) <= 0.0):
            raise DomainError("angles must be strictly increasing")
        angles.setflags(write=False)
        object.__setattr__(self, 'angles', angles)

    @property
    def n(self) -> int:
        return self.spec.n

    @property
    def beta(self) -> float:
        return self.spec.beta

    def centered_angles(self) -> np.ndarray:
        """Angles mapped to (-pi, pi]."""
        return np.where(self.angles > np.pi, self.angles - TWO_PI, self.angles)

    def with_log_weight(self, log_weight: float) -> "SpectrumSample":
        return SpectrumSample(angles=self.angles, spec=self.spec, log_weight=float(log_weight),
                              diagnostics=self.diagnostics)
