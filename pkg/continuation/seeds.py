# continuation/seeds.py
"""Initial guesses for the first point of a continuation path."""

from dataclasses import dataclass

import numpy as np

from spectral.grids import Field, Grid, power


class SeedError(ValueError):
    """Invalid seed parameters."""


def gaussian_seed(grid: Grid, sigma: float = 1.0, target_power: float = 4.0) -> Field:
    """
    c exp(-|x - x_c|^2 / (2 sigma^2)) centered in the box.

    c is taken from the discrete power so power(seed) == target_power to
    round-off.
    """
    if not sigma > 0 or not target_power > 0:
        raise SeedError(f"Gaussian seed needs sigma > 0 and target_power > 0, got {sigma}, {target_power}.")
    squared = sum((x - grid.center) ** 2 for x in grid.coordinates())
    profile = Field(grid, np.exp(-squared / (2.0 * sigma**2)))
    return profile.like(np.sqrt(target_power / power(profile)) * profile.values)


@dataclass(frozen=True)
class GaussianSeed:
    sigma: float = 1.0
    target_power: float = 4.0

    def __post_init__(self):
        if not self.sigma > 0 or not self.target_power > 0:
            raise SeedError(
                f"Gaussian seed needs sigma > 0 and target_power > 0, got {self.sigma}, {self.target_power}."
            )

    def build(self, grid: Grid) -> Field:
        return gaussian_seed(grid, self.sigma, self.target_power)
