# File: models/oracle.py

from dataclasses import dataclass
from enum import Enum

import numpy as np

from utils.errors import DomainError


class MomentKind(Enum):
    ABS_CHARPOLY = 'abs_charpoly'
    EXP_PSI = 'exp_psi'


@dataclass(frozen=True)
class MomentQuery:
    """A finite-N moment E|P_N|^gamma or E e^{gamma Psi_N} of CbetaE(n)."""
    beta: float
    n: int
    gamma: float
    kind: MomentKind = MomentKind.ABS_CHARPOLY

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, 'kind', MomentKind(self.kind))
        if not self.beta > 0:
            raise DomainError(f"beta must be positive, got {self.beta}")
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if not np.isfinite(self.gamma):
            raise DomainError("gamma must be finite")
        if self.kind == MomentKind.ABS_CHARPOLY and self.gamma <= -1.0:
            raise DomainError(f"E|P_N|^gamma is infinite for gamma <= -1 (got {self.gamma})")


@dataclass(frozen=True)
class GaussianPrediction:
    """Limiting law N(0, variance) of a centered statistic and its log-Laplace transform at 1."""
    variance: float
    log_laplace: float
