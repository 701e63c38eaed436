# File: utils/kernels.py

import logging
import math

import numpy as np

from utils.errors import DomainError

logger = logging.getLogger(__name__)

KERNELS = ('phi', 'psi', 'phi1', 'psi1', 'phi2', 'psi2', 'phi3', 'psi3')
SERIES_CUTOFF = 1e-16


class KernelFamily:
    """
    Poisson-type kernels of radius r < 1 and their derivatives.

    phi_r = sum_{k>=1} r^k cos(k theta)/k = -log|1 - z| and
    psi_r = sum_{k>=1} r^k sin(k theta)/k = -arg(1 - z), with z = r e^{i theta}.
    The suffix gives the derivative order.
    """

    def __init__(self, r: float):
        if not 0.0 <= r < 1.0:
            raise DomainError(f"kernel radius must lie in [0, 1), got {r}")
        self.r = float(r)

    def kernel_eval(self, which: str, theta) -> np.ndarray:
        """
        Closed-form evaluation of one kernel.

        Args:
            which: One of 'phi', 'psi', 'phi1', 'psi1', 'phi2', 'psi2', 'phi3', 'psi3'.
            theta: Angles.

        Returns:
            np.ndarray: Kernel values.
        """
        if which not in KERNELS:
            raise DomainError(f"unknown kernel '{which}', expected one of {KERNELS}")
        theta = np.asarray(theta, dtype=float)
        z = self.r * np.exp(1j * theta)
        one_minus = 1.0 - z
        if which == 'phi':
            return -np.log(np.abs(one_minus))
        if which == 'psi':
            return -np.angle(one_minus)
        denominator = (1.0 - self.r) ** 2 + 2.0 * self.r * (1.0 - np.cos(theta))
        if which == 'phi1':
            return -self.r * np.sin(theta) / denominator
        if which == 'psi1':
            return (self.r * np.cos(theta) - self.r ** 2) / denominator
        if which == 'phi2':
            return -(z / one_minus ** 2).real
        if which == 'psi2':
            return -(z / one_minus ** 2).imag
        cubic = z * (1.0 + z) / one_minus ** 3
        if which == 'phi3':
            return cubic.imag
        return -cubic.real

    def series_terms(self) -> int:
        if self.r == 0.0:
            return 1
        return int(math.ceil(math.log(SERIES_CUTOFF) / math.log(self.r)))

    def series(self, which: str, theta) -> np.ndarray:
        """Truncated Fourier series, stopped once r^k < 1e-16."""
        if which not in KERNELS:
            raise DomainError(f"unknown kernel '{which}', expected one of {KERNELS}")
        theta = np.asarray(theta, dtype=float)
        k = np.arange(1, self.series_terms() + 1)
        order = 0 if len(which) == 3 else int(which[3])
        weights = self.r ** k * k ** (order - 1.0)
        phase = np.outer(theta.ravel(), k)
        # d^order/dtheta^order of cos and sin, expressed through a phase shift
        shift = order * np.pi / 2.0
        basis = np.cos(phase + shift) if which.startswith('phi') else np.sin(phase + shift)
        return (basis @ weights).reshape(theta.shape)

    def bound_checks(self, grid_size: int = 1 << 16) -> dict:
        """
        Sup and L^1 norms of the kernels against their analytic bounds.

        Returns:
            dict: name -> (value, bound, holds); L^1 norms use dtheta on [0, 2 pi).
        """
        r = self.r
        theta = 2.0 * np.pi * (np.arange(grid_size) + 0.5) / grid_size
        step = 2.0 * np.pi / grid_size

        def l1(which):
            return float(np.sum(np.abs(self.kernel_eval(which, theta))) * step)

        def sup(which):
            return float(np.max(np.abs(self.kernel_eval(which, theta))))

        phi_sup = float(self.kernel_eval('phi', 0.0))
        checks = {
            'phi_sup': (phi_sup, math.log(1.0 / (1.0 - r))),
            'psi_sup': (sup('psi'), math.pi),
            'phi1_l1': (l1('phi1'), 2.0 * math.log((1.0 + r) / (1.0 - r))),
            'psi1_l1': (l1('psi1'), 4.0 * math.sqrt(math.pi) + math.pi),
            'phi1_sup': (sup('phi1'), 1.0 / (1.0 - r)),
            'psi1_sup': (sup('psi1'), 1.0 / (1.0 - r)),
            'phi2_l1': (l1('phi2'), 4.0 * math.sqrt(math.pi) / (1.0 - r)),
            'psi2_l1': (l1('psi2'), 4.0 * math.sqrt(math.pi) / (1.0 - r)),
        }
        result = {}
        for name, (value, bound) in checks.items():
            # phi_sup and phi1_l1 are identities; allow quadrature slack
            holds = value <= bound * (1.0 + 1e-5) + 1e-12
            result[name] = (value, bound, holds)
            if not holds:
                logger.warning(f"Kernel bound {name} fails at r={r}: {value:.6g} > {bound:.6g}")
        return result

    def poisson(self, theta) -> np.ndarray:
        """P_r(theta) = (1 - r^2)/(1 + r^2 - 2 r cos theta)."""
        theta = np.asarray(theta, dtype=float)
        return (1.0 - self.r ** 2) / (1.0 + self.r ** 2 - 2.0 * self.r * np.cos(theta))
