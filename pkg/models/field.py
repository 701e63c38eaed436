# File: models/field.py

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np
import pandas as pd

from models.ensemble import SpectrumSample
from utils.errors import DomainError


class FieldKind(Enum):
    LOG_ABS_P = 'log_abs_P'
    PSI = 'Psi'
    COUNTING = 'counting'


@dataclass(frozen=True)
class FieldGrid:
    """Field values at theta_m = 2 pi m / M (plus an optional half-cell offset)."""
    kind: FieldKind
    r: float
    values: np.ndarray
    source: Optional[SpectrumSample] = None
    offset: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise DomainError(f"radius must lie in [0, 1], got {self.r}")
        object.__setattr__(self, 'values', np.asarray(self.values, dtype=float))

    @property
    def M(self) -> int:
        return self.values.size

    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * (np.arange(self.M) + self.offset) / self.M

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'theta': self.theta(), 'value': self.values})

    def metadata(self) -> dict:
        meta = {'kind': self.kind.value, 'r': float(self.r), 'M': int(self.M)}
        if self.source is not None:
            meta.update(self.source.spec.to_dict())
        return meta
