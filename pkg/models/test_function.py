# File: models/test_function.py

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

from utils.errors import DomainError, SupportOverflowError

logger = logging.getLogger(__name__)

SYNTHESIS_CHUNK = 1 << 20


def wrap_to_pi(theta):
    """Map angles to (-pi, pi]."""
    wrapped = np.mod(np.asarray(theta, dtype=float) + np.pi, 2.0 * np.pi) - np.pi
    return np.where(wrapped == -np.pi, np.pi, wrapped)


@dataclass(frozen=True)
class PeriodicFn:
    """
    Real 2pi-periodic test function carried as Fourier coefficients and grid values.

    ``fourier[k + K]`` holds f_hat_k = int f e^{-ik theta} dtheta/2pi for
    k = -K..K, and ``grid[m]`` the value at theta_m = 2 pi m / M. When
    ``func`` is set it is used for exact pointwise evaluation; otherwise
    values off the grid come from Fourier synthesis.
    """
    fourier: np.ndarray
    grid: np.ndarray
    func: Optional[Callable] = field(default=None, compare=False)
    name: str = 'periodic'

    def __post_init__(self):
        fourier = np.asarray(self.fourier, dtype=complex)
        grid = np.asarray(self.grid, dtype=float)
        if fourier.ndim != 1 or fourier.size % 2 == 0:
            raise DomainError("fourier table must have odd length 2K+1")
        if grid.ndim != 1 or grid.size < 2 * (fourier.size // 2) + 2:
            raise DomainError(f"grid of size {grid.size} cannot carry K={fourier.size // 2}")
        object.__setattr__(self, 'fourier', fourier)
        object.__setattr__(self, 'grid', grid)

    @property
    def K(self) -> int:
        return self.fourier.size // 2

    @property
    def M(self) -> int:
        return self.grid.size

    @property
    def mean(self) -> float:
        return float(self.fourier[self.K].real)

    def coefficient(self, k: int) -> complex:
        if abs(k) > self.K:
            return 0j
        return complex(self.fourier[k + self.K])

    def positive_modes(self) -> np.ndarray:
        """f_hat_1..f_hat_K."""
        return self.fourier[self.K + 1:]

    def grid_points(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.M) / self.M

    def synthesize(self, theta) -> np.ndarray:
        """Evaluate the truncated Fourier series f_hat_0 + 2 Re sum_{k>=1} f_hat_k e^{ik theta}."""
        theta = np.asarray(theta, dtype=float)
        flat = theta.ravel()
        out = np.empty(flat.size)
        modes = self.positive_modes()
        k = np.arange(1, self.K + 1)
        chunk = max(1, SYNTHESIS_CHUNK // max(1, self.K))
        for start in range(0, flat.size, chunk):
            part = flat[start:start + chunk]
            phases = np.exp(1j * np.outer(part, k))
            out[start:start + chunk] = self.mean + 2.0 * (phases @ modes).real
        return out.reshape(theta.shape)

    def evaluate(self, theta) -> np.ndarray:
        if self.func is not None:
            return np.asarray(self.func(np.asarray(theta, dtype=float)), dtype=float)
        return self.synthesize(theta)


@dataclass(frozen=True)
class CompactFn:
    """
    Compactly supported real-line test function w with supp w in [-S, S].

    Args:
        support_half_width: S.
        func: Vectorized callable; values outside [-S, S] are forced to zero.
        smoothness_class: Declared C^k class (metadata only).
        derivatives: Optional analytic derivatives of orders 1, 2, 3, ...
        breakpoints: Points where w or a low derivative is not smooth.
        name: Library name.
    """
    support_half_width: float
    func: Callable
    smoothness_class: int = 3
    derivatives: Tuple[Callable, ...] = ()
    breakpoints: Tuple[float, ...] = ()
    name: str = 'compact'

    def __post_init__(self):
        if not self.support_half_width > 0:
            raise DomainError("support half-width must be positive")

    def evaluate(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = np.abs(x) <= self.support_half_width
        values = np.zeros(x.shape)
        if np.any(inside):
            values[inside] = self.func(x[inside])
        return values

    def derivative(self, x, order: int = 1) -> np.ndarray:
        """
        Derivative of the given order, analytic when supplied, else by central differences.
        """
        x = np.asarray(x, dtype=float)
        if order == 0:
            return self.evaluate(x)
        if order <= len(self.derivatives):
            inside = np.abs(x) <= self.support_half_width
            values = np.zeros(x.shape)
            if np.any(inside):
                values[inside] = self.derivatives[order - 1](x[inside])
            return values
        h = 1e-3 * self.support_half_width
        return (self.derivative(x + h, order - 1) - self.derivative(x - h, order - 1)) / (2.0 * h)

    def __call__(self, x):
        return self.evaluate(x)


@dataclass(frozen=True)
class MesoScaledFn:
    """theta -> w(L theta) on the circle, with theta taken in (-pi, pi]."""
    base: CompactFn
    scale: float

    def __post_init__(self):
        if not self.scale >= 1.0:
            raise DomainError(f"mesoscopic scale must be >= 1, got {self.scale}")
        if self.base.support_half_width / self.scale > np.pi:
            raise SupportOverflowError(
                f"scaled support {self.base.support_half_width / self.scale:.4f} exceeds pi "
                f"for {self.base.name} at L={self.scale}"
            )

    def evaluate(self, theta) -> np.ndarray:
        return self.base.evaluate(self.scale * wrap_to_pi(theta))

    def __call__(self, theta):
        return self.evaluate(theta)
