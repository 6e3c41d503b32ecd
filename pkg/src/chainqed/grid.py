"""Uniform frequency grids and their conjugate delay axes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_HALF_WIDTH = 20.0
DEFAULT_POINTS = 2**14
MIN_POINTS = 2**10


@dataclass(frozen=True)
class FrequencyGrid:
    """Symmetric uniform grid on [-W, W] in units of Gamma.

    ``n_points`` counts intervals, so the grid carries ``n_points + 1``
    samples, contains omega = 0 and is exactly mirror symmetric.  The
    conjugate delay axis has spacing pi / W and ``n_points`` samples.
    """

    half_width: float = DEFAULT_HALF_WIDTH
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        n = self.n_points
        if n < MIN_POINTS or n & (n - 1):
            raise ValueError(f"n_points must be a power of two >= {MIN_POINTS}, got {n}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError(f"half_width must be positive, got {self.half_width}")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @property
    def omega(self) -> np.ndarray:
        k = np.arange(self.n_points + 1) - self.n_points // 2
        return k * self.spacing

    @property
    def tau_spacing(self) -> float:
        return math.pi / self.half_width

    @property
    def tau(self) -> np.ndarray:
        k = np.arange(self.n_points) - self.n_points // 2
        return k * self.tau_spacing

    def refined(self) -> "FrequencyGrid":
        """Same window at twice the frequency resolution."""
        return FrequencyGrid(self.half_width, 2 * self.n_points)

    def widened(self) -> "FrequencyGrid":
        """Twice the half width at the same frequency resolution."""
        return FrequencyGrid(2.0 * self.half_width, 2 * self.n_points)
