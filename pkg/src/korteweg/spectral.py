"""Periodic spectral grids, Fourier fields and the basic multipliers.

Coefficients are normalized so that ``u(x) = sum_k c_k exp(i k.x)``; the
zero wavevector therefore holds the spatial mean and
``||u||_{L2}^2 = volume * sum_k |c_k|^2``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .errors import ArgumentError, DomainError

_WORKERS = 1


def set_threads(n: int) -> None:
    """Set the worker count used by every FFT in the package."""
    global _WORKERS
    if n < 1:
        raise ArgumentError("thread count must be >= 1")
    _WORKERS = int(n)


def get_threads() -> int:
    return _WORKERS


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on the cube [0, L)^dim."""

    dim: int
    points_per_dim: int
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise DomainError(f"dim must be 1, 2 or 3, got {self.dim}")
        n = self.points_per_dim
        if not _is_pow2(n) or n < 16:
            raise DomainError(f"points_per_dim must be a power of two >= 16, got {n}")
        if not self.domain_length > 0:
            raise DomainError("domain_length must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_dim,) * self.dim

    @property
    def npts(self) -> int:
        return self.points_per_dim**self.dim

    @property
    def volume(self) -> float:
        return float(self.domain_length**self.dim)

    @property
    def spacing(self) -> float:
        return self.domain_length / self.points_per_dim

    @property
    def k_max(self) -> float:
        """Largest resolved wavenumber per axis."""
        return np.pi * self.points_per_dim / self.domain_length

    @property
    def k_min(self) -> float:
        """Smallest nonzero wavenumber magnitude."""
        return 2 * np.pi / self.domain_length

    @cached_property
    def mode_index(self) -> np.ndarray:
        """Signed integer mode numbers along one axis."""
        n = self.points_per_dim
        return np.fft.fftfreq(n, 1.0 / n).astype(int)

    @cached_property
    def kvec(self) -> np.ndarray:
        k1 = self.k_min * self.mode_index
        return np.stack(np.meshgrid(*([k1] * self.dim), indexing="ij"))

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(np.sum(self.kvec**2, axis=0))

    @cached_property
    def kderiv(self) -> np.ndarray:
        """Wavevectors for odd-order derivatives, zero on the Nyquist planes."""
        k = self.kvec.copy()
        nyq = self.points_per_dim // 2
        for ax in range(self.dim):
            sl = [slice(None)] * self.dim
            sl[ax] = nyq
            k[(ax, *sl)] = 0.0
        return k

    @cached_property
    def nyquist_free(self) -> np.ndarray:
        """Boolean mask that is False on any Nyquist plane."""
        nyq = self.points_per_dim // 2
        idx = np.abs(self.mode_index) != nyq
        return np.all(np.stack(np.meshgrid(*([idx] * self.dim), indexing="ij")), axis=0)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Two-thirds rule: keep modes with |n_j| <= (N-1)//3 on every axis."""
        cut = (self.points_per_dim - 1) // 3
        keep = np.abs(self.mode_index) <= cut
        return np.all(np.stack(np.meshgrid(*([keep] * self.dim), indexing="ij")), axis=0)

    def coordinates(self) -> np.ndarray:
        x1 = np.arange(self.points_per_dim) * self.spacing
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def axes(self, lead: int = 0) -> tuple[int, ...]:
        return tuple(range(lead, lead + self.dim))


def forward(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Real samples to normalized coefficients; FFT over the trailing axes."""
    axes = tuple(range(values.ndim - grid.dim, values.ndim))
    return sfft.fftn(values, axes=axes, workers=_WORKERS) / grid.npts


def inverse(grid: GridSpec, coeffs: np.ndarray) -> np.ndarray:
    axes = tuple(range(coeffs.ndim - grid.dim, coeffs.ndim))
    return sfft.ifftn(coeffs, axes=axes, workers=_WORKERS).real * grid.npts


class Transform:
    """Moves coefficients to a physical grid for pointwise products and back.

    With ``padded=True`` the physical grid has 3N/2 points per axis, so any
    quadratic product of resolved modes is computed without aliasing.
    """

    def __init__(self, grid: GridSpec, padded: bool = True):
        self.grid = grid
        self.padded = padded
        n = grid.points_per_dim
        self.m = 3 * n // 2 if padded else n
        half = n // 2
        self._src = np.concatenate([np.arange(0, half), np.arange(half + 1, n)])
        self._dst = np.concatenate([np.arange(0, half), np.arange(self.m - half + 1, self.m)])

    @property
    def fine_shape(self) -> tuple[int, ...]:
        return (self.m,) * self.grid.dim

    def _ix(self, idx: np.ndarray):
        return (Ellipsis,) + np.ix_(*([idx] * self.grid.dim))

    def to_real(self, coeffs: np.ndarray) -> np.ndarray:
        d = self.grid.dim
        axes = tuple(range(coeffs.ndim - d, coeffs.ndim))
        if not self.padded:
            return sfft.ifftn(coeffs, axes=axes, workers=_WORKERS).real * self.grid.npts
        lead = coeffs.shape[: coeffs.ndim - d]
        big = np.zeros(lead + self.fine_shape, dtype=complex)
        big[self._ix(self._dst)] = coeffs[self._ix(self._src)]
        return sfft.ifftn(big, axes=axes, workers=_WORKERS).real * self.m**d

    def to_spec(self, values: np.ndarray) -> np.ndarray:
        d = self.grid.dim
        axes = tuple(range(values.ndim - d, values.ndim))
        if not self.padded:
            return sfft.fftn(values, axes=axes, workers=_WORKERS) / self.grid.npts
        big = sfft.fftn(values, axes=axes, workers=_WORKERS) / self.m**d
        lead = values.shape[: values.ndim - d]
        out = np.zeros(lead + self.grid.shape, dtype=complex)
        out[self._ix(self._src)] = big[self._ix(self._dst)]
        return out

    def cell_volume(self) -> float:
        return self.grid.volume / self.m**self.grid.dim


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Scalar real field stored by its Fourier coefficients."""

    grid: GridSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ArgumentError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_real(cls, grid: GridSpec, values) -> "SpectralField":
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise ArgumentError(f"sample shape {values.shape} does not match grid {grid.shape}")
        return cls(grid, forward(grid, values))

    @classmethod
    def zeros(cls, grid: GridSpec) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))

    @classmethod
    def constant(cls, grid: GridSpec, value: float) -> "SpectralField":
        c = np.zeros(grid.shape, dtype=complex)
        c[(0,) * grid.dim] = value
        return cls(grid, c)

    def real(self) -> np.ndarray:
        return inverse(self.grid, self.coeffs)

    @property
    def mean(self) -> float:
        return float(self.coeffs[(0,) * self.grid.dim].real)

    def l2_norm(self) -> float:
        return float(np.sqrt(self.grid.volume * np.sum(np.abs(self.coeffs) ** 2)))

    def inner(self, other: "SpectralField") -> float:
        _check_same(self, other)
        return float(self.grid.volume * np.sum(self.coeffs * np.conj(other.coeffs)).real)

    def _wrap(self, c) -> "SpectralField":
        return SpectralField(self.grid, c)

    def __add__(self, other):
        if isinstance(other, SpectralField):
            _check_same(self, other)
            return self._wrap(self.coeffs + other.coeffs)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SpectralField):
            _check_same(self, other)
            return self._wrap(self.coeffs - other.coeffs)
        return NotImplemented

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return self._wrap(self.coeffs * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return self._wrap(-self.coeffs)


def _check_same(a: SpectralField, b: SpectralField) -> None:
    if a.grid != b.grid:
        raise ArgumentError("fields live on different grids")


def lambda_power(u: SpectralField, s: float) -> SpectralField:
    """Fourier multiplier |xi|^s; the mean is sent to zero unless s == 0."""
    if s == 0:
        return SpectralField(u.grid, u.coeffs.copy())
    k = u.grid.kmag
    mult = np.zeros_like(k)
    nz = k > 0
    mult[nz] = k[nz] ** s
    return SpectralField(u.grid, u.coeffs * mult)


def gradient(u: SpectralField) -> tuple[SpectralField, ...]:
    return tuple(SpectralField(u.grid, 1j * kj * u.coeffs) for kj in u.grid.kderiv)


def divergence(v: Sequence[SpectralField]) -> SpectralField:
    grid = v[0].grid
    if len(v) != grid.dim:
        raise ArgumentError("vector length must equal the grid dimension")
    c = sum(1j * kj * vj.coeffs for kj, vj in zip(grid.kderiv, v))
    return SpectralField(grid, c)


def laplacian(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, -(u.grid.kmag**2) * u.coeffs)


def dealias(u: SpectralField) -> SpectralField:
    return SpectralField(u.grid, u.coeffs * u.grid.dealias_mask)


def _inv_kmag(grid: GridSpec) -> np.ndarray:
    k = grid.kmag
    out = np.zeros_like(k)
    out[k > 0] = 1.0 / k[k > 0]
    return out


def split_arrays(grid: GridSpec, u_hat: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Array form of the compressible/incompressible split.

    Returns ``d_hat`` with the grid shape and ``omega_hat`` with shape
    ``(dim, dim, *grid.shape)``.
    """
    ik = 1j * grid.kderiv * _inv_kmag(grid)
    d_hat = np.sum(ik * u_hat, axis=0)
    omega_hat = ik[:, None] * u_hat[None, :] - ik[None, :] * u_hat[:, None]
    return d_hat, omega_hat


def merge_arrays(grid: GridSpec, d_hat: np.ndarray, omega_hat: np.ndarray) -> np.ndarray:
    ik = 1j * grid.kderiv * _inv_kmag(grid)
    return -ik * d_hat - np.sum(ik[:, None] * omega_hat, axis=0)


def helmholtz_split(u: Sequence[SpectralField]):
    """Split a velocity into its compressible scalar and rotational tensor.

    ``d = Lambda^{-1} div u`` and ``Omega_ij = Lambda^{-1}(d_i u_j - d_j u_i)``.
    The tensor is returned as a nested tuple of fields; it is identically
    zero in one dimension.  Means and Nyquist modes are dropped.
    """
    grid = u[0].grid
    if len(u) != grid.dim:
        raise ArgumentError("vector length must equal the grid dimension")
    d_hat, om = split_arrays(grid, np.stack([c.coeffs for c in u]))
    omega = tuple(tuple(SpectralField(grid, om[i, j]) for j in range(grid.dim)) for i in range(grid.dim))
    return SpectralField(grid, d_hat), omega


def helmholtz_merge(d: SpectralField, omega, mean: Sequence[float] | None = None):
    """Inverse of :func:`helmholtz_split`: ``u = -Lambda^{-1} grad d - Lambda^{-1} div Omega``."""
    grid = d.grid
    om = np.stack([np.stack([omega[i][j].coeffs for j in range(grid.dim)]) for i in range(grid.dim)])
    u_hat = merge_arrays(grid, d.coeffs, om)
    if mean is not None:
        u_hat[(slice(None),) + (0,) * grid.dim] = np.asarray(mean, dtype=float)
    return tuple(SpectralField(grid, u_hat[j]) for j in range(grid.dim))


_MAGIC = b"KWF1"
_HEADER = struct.Struct("<4sBIdI")


def write_kwf(path, grid: GridSpec, components) -> None:
    """Write real-space samples in the KWF1 binary layout.

    ``components`` is an array of shape ``(C, *grid.shape)`` or a sequence of
    :class:`SpectralField`.  Samples are little-endian float64, row-major,
    one component after another.
    """
    if len(components) and isinstance(components[0], SpectralField):
        data = np.stack([c.real() for c in components])
    else:
        data = np.asarray(components, dtype=float)
    if data.ndim == grid.dim:
        data = data[None]
    if data.shape[1:] != grid.shape:
        raise ArgumentError("component shape does not match grid")
    header = _HEADER.pack(_MAGIC, grid.dim, grid.points_per_dim, float(grid.domain_length), data.shape[0])
    with open(Path(path), "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes())


def read_kwf(path) -> tuple[GridSpec, np.ndarray]:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ArgumentError("file too short for a KWF1 header")
    magic, dim, n, length, ncomp = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ArgumentError(f"bad magic {magic!r}")
    grid = GridSpec(dim, n, length)
    expected = ncomp * grid.npts * 8
    payload = raw[_HEADER.size:]
    if len(payload) != expected:
        raise ArgumentError(f"payload has {len(payload)} bytes, expected {expected}")
    data = np.frombuffer(payload, dtype="<f8").reshape((ncomp,) + grid.shape)
    return grid, data.astype(float)
