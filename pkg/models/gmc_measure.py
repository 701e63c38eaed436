# File: models/gmc_measure.py

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np
import pandas as pd
from scipy import special

from utils.errors import DomainError


class NormalizerMode(Enum):
    MONTE_CARLO = 'monte_carlo'
    ASYMPTOTIC = 'asymptotic'


@dataclass(frozen=True)
class GmcMeasureGrid:
    """
    Regularized multiplicative-chaos measure on theta_m = 2 pi m / M.

    Weights are densities against dtheta/2pi and are kept in the log domain;
    ``weights`` exponentiates on demand.
    """
    gamma: float
    r: float
    log_weights: np.ndarray
    normalizer_mode: NormalizerMode
    normalizer_value: float

    def __post_init__(self):
        if isinstance(self.normalizer_mode, str):
            object.__setattr__(self, 'normalizer_mode', NormalizerMode(self.normalizer_mode))
        if not 0.0 < self.r < 1.0:
            raise DomainError(f"GMC radius must lie in (0, 1), got {self.r}")
        if not self.normalizer_value > 0:
            raise DomainError(f"normalizer must be positive, got {self.normalizer_value}")
        object.__setattr__(self, 'log_weights', np.asarray(self.log_weights, dtype=float))

    @property
    def M(self) -> int:
        return self.log_weights.size

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)

    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    def log_total_mass(self) -> float:
        return float(special.logsumexp(self.log_weights) - np.log(self.M))

    def total_mass(self) -> float:
        return float(np.exp(self.log_total_mass()))

    def log_mass(self, arc: Tuple[float, float]) -> float:
        """Log mass of the arc [a, b) (angles mod 2 pi, a < b taken counterclockwise); -inf when empty."""
        a, b = float(arc[0]), float(arc[1])
        if not b > a:
            raise DomainError(f"arc end {b} must exceed its start {a}")
        if b - a >= 2.0 * np.pi:
            return self.log_total_mass()
        inside = np.mod(self.theta() - a, 2.0 * np.pi) < (b - a)
        if not np.any(inside):
            return -np.inf
        return float(special.logsumexp(self.log_weights[inside]) - np.log(self.M))

    def mass(self, arc: Tuple[float, float]) -> float:
        return float(np.exp(self.log_mass(arc)))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'theta': self.theta(), 'weight': self.weights})

    def metadata(self) -> dict:
        return {'gamma': float(self.gamma), 'r': float(self.r), 'M': int(self.M),
                'normalizer_mode': self.normalizer_mode.value, 'normalizer_value': float(self.normalizer_value),
                'total_mass': self.total_mass()}
