"""Homogeneous, hybrid and time-space (Chemin-Lerner) Besov norms.

Also hosts the sampling harnesses that estimate the constants of the
product law and of the derivative equivalence on random band-limited data.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from .dyadic import DyadicDecomposition, block_norms, block_norms_array
from .errors import ArgumentError
from .spectral import GridSpec, SpectralField, Transform


@dataclass(frozen=True)
class HybridIndex:
    """Regularity ``s`` on low blocks (``l <= split``) and ``t`` on high blocks."""

    s: float
    t: float
    split: int = 0

    def weights(self, levels: np.ndarray) -> np.ndarray:
        levels = np.asarray(levels, dtype=float)
        return np.where(levels <= self.split, 2.0 ** (levels * self.s), 2.0 ** (levels * self.t))


@dataclass
class TimeSeries:
    """Sampled history of one scalar field; times must be nondecreasing."""

    times: np.ndarray
    states: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if len(self.times) != len(self.states):
            raise ArgumentError("times and states differ in length")
        if len(self.times) == 0:
            raise ArgumentError("empty time series")
        if np.any(np.diff(self.times) < 0):
            raise ArgumentError("times must be nondecreasing")


def besov_norm(u: SpectralField, s: float, dec: DyadicDecomposition) -> float:
    return float(np.sum(2.0 ** (dec.levels.astype(float) * s) * block_norms(u, dec)))


def hybrid_norm(u: SpectralField, idx: HybridIndex, dec: DyadicDecomposition) -> float:
    return float(np.sum(idx.weights(dec.levels) * block_norms(u, dec)))


def vector_block_norms(fields: Sequence[SpectralField], dec: DyadicDecomposition) -> np.ndarray:
    """Block norms of a vector field: sqrt of the summed component energies."""
    return block_norms_array(np.stack([f.coeffs for f in fields]), dec)


def time_block_norms(block_history: np.ndarray, times: np.ndarray, rho: float) -> np.ndarray:
    """Time L^rho norm of each block; ``block_history`` has shape (n_times, n_blocks)."""
    if rho == np.inf:
        return block_history.max(axis=0)
    if rho < 1:
        raise ArgumentError("time exponent must be >= 1")
    if len(times) == 1:
        return np.zeros(block_history.shape[1])
    return trapezoid(block_history**rho, times, axis=0) ** (1.0 / rho)


def chemin_lerner_norm(traj: TimeSeries, rho: float, idx: HybridIndex, dec: DyadicDecomposition) -> float:
    """Time norm taken block by block before the weighted block sum."""
    hist = np.stack([block_norms(u, dec) for u in traj.states])
    return float(np.sum(idx.weights(dec.levels) * time_block_norms(hist, traj.times, rho)))


def lebesgue_besov_norm(traj: TimeSeries, rho: float, idx: HybridIndex, dec: DyadicDecomposition) -> float:
    """Classical ordering: hybrid norm at each time, then the time L^rho norm."""
    vals = np.array([hybrid_norm(u, idx, dec) for u in traj.states])[:, None]
    return float(time_block_norms(vals, traj.times, rho)[0])


@dataclass
class StatsRecord:
    count: int
    min: float
    max: float
    mean: float
    quantiles: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples) -> "StatsRecord":
        x = np.asarray(samples, dtype=float)
        qs = {f"{q:g}": float(np.quantile(x, q)) for q in (0.05, 0.25, 0.5, 0.75, 0.95)}
        return cls(int(x.size), float(x.min()), float(x.max()), float(x.mean()), qs)

    def to_dict(self) -> dict:
        return {"count": self.count, "min": self.min, "max": self.max, "mean": self.mean, "quantiles": dict(self.quantiles)}


def hermitian_embed(grid: GridSpec, small: np.ndarray, band: int) -> np.ndarray:
    """Place coefficients indexed by ``-band..band`` per axis into a grid array
    and symmetrize them so the field is real."""
    n = grid.points_per_dim
    if 3 * band >= n:
        raise ArgumentError(f"band {band} is not resolved without aliasing on {n} points")
    idx = np.arange(-band, band + 1) % n
    out = np.zeros(grid.shape, dtype=complex)
    out[np.ix_(*([idx] * grid.dim))] = small
    flipped = np.conj(np.roll(np.flip(out, axis=grid.axes()), 1, axis=grid.axes()))
    out = 0.5 * (out + flipped)
    out[(0,) * grid.dim] = 0.0
    return out


def random_bandlimited(grid: GridSpec, rng: np.random.Generator, band: int = 8) -> SpectralField:
    """Mean-zero random field whose modes satisfy ``|n_j| <= band``.

    The random draws only depend on ``band`` and ``grid.dim``, so the same
    generator state yields the same function on every resolution.
    """
    size = (2 * band + 1,) * grid.dim
    cut = rng.uniform(1.0, band)
    slope = rng.uniform(0.0, 3.0)
    raw = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    n1 = np.arange(-band, band + 1)
    nn = np.sqrt(np.sum(np.stack(np.meshgrid(*([n1] * grid.dim), indexing="ij")) ** 2, axis=0))
    env = np.where(nn > 0, np.maximum(nn, 1.0) ** (-slope), 0.0) * np.exp(-((nn / cut) ** 2))
    return SpectralField(grid, hermitian_embed(grid, raw * env, band))


def product(u: SpectralField, v: SpectralField) -> SpectralField:
    tr = Transform(u.grid, padded=True)
    return SpectralField(u.grid, tr.to_spec(tr.to_real(u.coeffs) * tr.to_real(v.coeffs)))


def _sample_rng(seed: int, i: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(i)])


def product_law_ratio(
    sample_count: int,
    s1: float,
    s2: float,
    t1: float,
    t2: float,
    grid: GridSpec,
    seed: int,
    band: int | None = None,
) -> StatsRecord:
    """Ratios ``||uv||_{B(s1+s2-N/2, t1+t2-N/2)} / (||u||_{B(s1,t1)} ||v||_{B(s2,t2)})``.

    Indices are admissible when every regularity is at most ``N/2`` and
    ``min(s1 + s2, t1 + t2) > 0``.
    """
    half = grid.dim / 2.0
    if max(s1, s2, t1, t2) > half:
        raise ArgumentError(f"regularity indices must not exceed N/2 = {half:g}")
    if min(s1 + s2, t1 + t2) <= 0:
        raise ArgumentError("need min(s1 + s2, t1 + t2) > 0")
    band = band if band is not None else min(8, (grid.points_per_dim - 1) // 3)
    dec = DyadicDecomposition.from_grid(grid)
    iu, iv = HybridIndex(s1, t1), HybridIndex(s2, t2)
    iuv = HybridIndex(s1 + s2 - half, t1 + t2 - half)
    ratios = []
    for i in range(sample_count):
        rng = _sample_rng(seed, i)
        # half the band keeps the product inside the resolved range
        u = random_bandlimited(grid, rng, max(1, band // 2))
        v = random_bandlimited(grid, rng, max(1, band // 2))
        num = hybrid_norm(product(u, v), iuv, dec)
        ratios.append(num / (hybrid_norm(u, iu, dec) * hybrid_norm(v, iv, dec)))
    return StatsRecord.from_samples(ratios)


def gradient_besov_norm(u: SpectralField, s: float, dec: DyadicDecomposition) -> float:
    """``sum_l 2^{l s} ||Delta_l grad u||_{L2}``."""
    grads = np.stack([1j * kj * u.coeffs for kj in u.grid.kderiv])
    return float(np.sum(2.0 ** (dec.levels.astype(float) * s) * block_norms_array(grads, dec)))


def derivative_equivalence_ratio(sample_count: int, s: float, grid: GridSpec, seed: int, band: int | None = None) -> StatsRecord:
    """Ratios ``||grad u||_{B^{s-1}} / ||u||_{B^s}`` over random fields."""
    band = band if band is not None else min(8, (grid.points_per_dim - 1) // 3)
    dec = DyadicDecomposition.from_grid(grid)
    ratios = []
    for i in range(sample_count):
        u = random_bandlimited(grid, _sample_rng(seed, i), band)
        ratios.append(gradient_besov_norm(u, s - 1.0, dec) / besov_norm(u, s, dec))
    return StatsRecord.from_samples(ratios)
