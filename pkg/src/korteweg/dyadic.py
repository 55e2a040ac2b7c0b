"""Littlewood-Paley decomposition on the periodic grid.

The low-pass profile ``chi`` equals one on ``|xi| <= 3/4`` and vanishes for
``|xi| >= 4/3``.  The block profile ``phi(r) = chi(r/2) - chi(r)`` is then
supported in the annulus ``3/4 <= r <= 8/3`` and its dyadic dilates sum to
one away from the origin by telescoping.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import RangeError
from .spectral import GridSpec, SpectralField

INNER_RADIUS = 3.0 / 4.0
OUTER_RADIUS = 4.0 / 3.0


def _smoothstep(x: np.ndarray) -> np.ndarray:
    """C-infinity step from 0 (x <= 0) to 1 (x >= 1) built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    out = np.where(x >= 1.0, 1.0, 0.0)
    mid = (x > 0) & (x < 1)
    xm = x[mid]
    a = np.exp(-1.0 / xm)
    b = np.exp(-1.0 / (1.0 - xm))
    out[mid] = a / (a + b)
    return out


def chi_profile(r) -> np.ndarray:
    """Radial low-pass profile."""
    r = np.asarray(r, dtype=float)
    return 1.0 - _smoothstep((r - INNER_RADIUS) / (OUTER_RADIUS - INNER_RADIUS))


def phi_profile(r) -> np.ndarray:
    """Radial annulus profile supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return chi_profile(r / 2.0) - chi_profile(r)


@dataclass(frozen=True)
class DyadicDecomposition:
    """Block multipliers for one grid.

    Blocks run from ``l_min = floor(log2(2 pi / L)) - 1`` to
    ``l_max = ceil(log2(k_max)) + 1`` which covers every resolved wavevector.
    """

    grid: GridSpec
    l_min: int
    l_max: int

    @classmethod
    def from_grid(cls, grid: GridSpec) -> "DyadicDecomposition":
        l_min = int(np.floor(np.log2(grid.k_min))) - 1
        l_max = int(np.ceil(np.log2(grid.k_max))) + 1
        return cls(grid, l_min, l_max)

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.l_min, self.l_max + 1)

    phi_profile = staticmethod(phi_profile)

    @cached_property
    def multipliers(self) -> np.ndarray:
        """Array ``(n_blocks, *grid.shape)``; the blocks sum to one off the mean."""
        k = self.grid.kmag
        raw = np.stack([phi_profile(k / 2.0**l) for l in self.levels])
        total = raw.sum(axis=0)
        nz = k > 0
        raw[:, nz] /= total[nz]
        return raw

    def check_level(self, l: int) -> None:
        if not (self.l_min <= l <= self.l_max):
            raise RangeError(f"block {l} outside [{self.l_min}, {self.l_max}]")

    def block_multiplier(self, l: int) -> np.ndarray:
        self.check_level(l)
        return self.multipliers[l - self.l_min]

    def low_multiplier(self, l: int) -> np.ndarray:
        """Multiplier of S_l: the mean plus every block strictly below ``l``."""
        self.check_level(l)
        m = self.multipliers[: l - self.l_min].sum(axis=0)
        m[(0,) * self.grid.dim] = 1.0
        return m


def dyadic_block(u: SpectralField, l: int, dec: DyadicDecomposition) -> SpectralField:
    return SpectralField(u.grid, u.coeffs * dec.block_multiplier(l))


def low_cutoff(u: SpectralField, l: int, dec: DyadicDecomposition) -> SpectralField:
    return SpectralField(u.grid, u.coeffs * dec.low_multiplier(l))


def block_norms(u: SpectralField, dec: DyadicDecomposition) -> np.ndarray:
    """L2 norm of every block, ordered from ``l_min`` to ``l_max``."""
    return block_norms_array(u.coeffs, dec)


def block_norms_array(coeffs: np.ndarray, dec: DyadicDecomposition) -> np.ndarray:
    """Block L2 norms of a coefficient array; leading axes are summed as components."""
    d = dec.grid.dim
    power = np.abs(coeffs) ** 2
    if power.ndim > d:
        power = power.reshape((-1,) + dec.grid.shape).sum(axis=0)
    m2 = dec.multipliers**2
    sums = np.tensordot(m2, power, axes=(tuple(range(1, d + 1)), tuple(range(d))))
    return np.sqrt(dec.grid.volume * sums)
