"""
Fourier pseudo-spectral machinery on the periodic box [0, 2)^3.

Fields are stored as normalized Fourier coefficients ``c = fftn(f) / N``
indexed by integer modes ``(kx, ky, kz)`` in FFT order; the physical
wavenumber of mode ``k`` is ``pi * k`` (period 2 in every direction).

Every field carries a z-parity tag. Parity is enforced by projecting the
coefficient array onto the symmetric (even) or antisymmetric (odd) part
under ``kz -> -kz``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.fft

__all__ = [
    "Grid", "Parity", "SpectralField", "HorizontalField",
    "set_workers", "get_workers",
    "to_spectral", "to_physical", "derivative", "hs_norm", "l2_quadrature",
    "project_parity", "dealias", "vertical_average", "vertical_fluctuation",
    "vertical_integral", "flip_z",
]

_WORKERS = 1


def set_workers(n: int) -> None:
    """Set the number of FFT worker threads (0 means one per CPU)."""
    global _WORKERS
    if n < 0:
        raise ValueError("worker count must be >= 0")
    import os
    _WORKERS = n if n > 0 else (os.cpu_count() or 1)


def get_workers() -> int:
    return _WORKERS


class Parity(str, enum.Enum):
    EVEN = "even"
    ODD = "odd"
    NONE = "none"

    def flipped(self) -> "Parity":
        if self is Parity.EVEN:
            return Parity.ODD
        if self is Parity.ODD:
            return Parity.EVEN
        return Parity.NONE


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the period-2 box.

    ``nx, ny, nz`` are the number of points per direction (even, >= 4).
    Grid points are ``x_i = 2 i / nx`` and likewise for y, z.
    """

    nx: int
    ny: int
    nz: int

    period = 2.0
    volume = 8.0

    def __post_init__(self):
        for name in ("nx", "ny", "nz"):
            n = getattr(self, name)
            if not isinstance(n, (int, np.integer)) or n < 4 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 4, got {n!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def size(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def cell_volume(self) -> float:
        return self.volume / self.size

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable 1-D coordinate arrays (x, y, z)."""
        x = 2.0 * np.arange(self.nx) / self.nx
        y = 2.0 * np.arange(self.ny) / self.ny
        z = 2.0 * np.arange(self.nz) / self.nz
        return x[:, None, None], y[None, :, None], z[None, None, :]

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        x, y, z = self.coords
        return tuple(np.broadcast_to(a, self.shape) for a in (x, y, z))

    @cached_property
    def modes(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Broadcastable integer mode numbers in FFT order."""
        kx = np.fft.fftfreq(self.nx, 1.0 / self.nx).round().astype(int)
        ky = np.fft.fftfreq(self.ny, 1.0 / self.ny).round().astype(int)
        kz = np.fft.fftfreq(self.nz, 1.0 / self.nz).round().astype(int)
        return kx[:, None, None], ky[None, :, None], kz[None, None, :]

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Physical wavenumbers ``pi * k`` (broadcastable)."""
        return tuple(np.pi * k.astype(float) for k in self.modes)

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Wavenumbers with the Nyquist entry zeroed, for odd-order derivatives."""
        out = []
        for k, n in zip(self.modes, self.shape):
            kk = np.pi * k.astype(float)
            kk[k == -n // 2] = 0.0
            out.append(kk)
        return tuple(out)

    @cached_property
    def k2(self) -> np.ndarray:
        """|pi k|^2 on the full 3-D mode lattice."""
        kx, ky, kz = self.wavenumbers
        return kx ** 2 + ky ** 2 + kz ** 2

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        kx, ky, kz = self.modes
        return ((np.abs(kx) <= self.nx // 3)
                & (np.abs(ky) <= self.ny // 3)
                & (np.abs(kz) <= self.nz // 3))

    @cached_property
    def dealias_mask_h(self) -> np.ndarray:
        return self.dealias_mask[:, :, 0]

    @cached_property
    def zflip_index(self) -> np.ndarray:
        """Index permutation mapping kz -> -kz along the last axis."""
        return (-np.arange(self.nz)) % self.nz


def _check_grid(a: "SpectralField", b: "SpectralField") -> None:
    if a.grid != b.grid:
        raise ValueError(f"grid mismatch: {a.grid} vs {b.grid}")


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar field held as Fourier coefficients.

    ``ramp`` optionally holds the horizontal Fourier coefficients of a
    non-periodic term ``ramp(x, y) * z``; only :func:`vertical_integral`
    produces one.
    """

    grid: Grid
    coeffs: np.ndarray
    parity: Parity = Parity.NONE
    ramp: np.ndarray | None = None
    # physical values this field was transformed from; lets to_physical
    # return the exact source array (bit-exact checkpoint round trips)
    _source: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.coeffs.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != grid {self.grid.shape}")

    @classmethod
    def zeros(cls, grid: Grid, parity: Parity = Parity.NONE) -> "SpectralField":
        return cls(grid, np.zeros(grid.shape, dtype=complex), Parity(parity))

    def coeff(self, kx: int, ky: int, kz: int) -> complex:
        g = self.grid
        return complex(self.coeffs[kx % g.nx, ky % g.ny, kz % g.nz])

    def with_parity(self, parity: Parity) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs, Parity(parity), self.ramp)

    def _combine(self, other, op):
        if isinstance(other, SpectralField):
            _check_grid(self, other)
            parity = self.parity if self.parity == other.parity else Parity.NONE
            if self.ramp is None and other.ramp is None:
                ramp = None
            else:
                r1 = self.ramp if self.ramp is not None else 0.0
                r2 = other.ramp if other.ramp is not None else 0.0
                ramp = op(r1, r2)
            return SpectralField(self.grid, op(self.coeffs, other.coeffs), parity, ramp)
        return NotImplemented

    def __add__(self, other):
        return self._combine(other, np.add)

    def __sub__(self, other):
        return self._combine(other, np.subtract)

    def __neg__(self):
        ramp = None if self.ramp is None else -self.ramp
        return SpectralField(self.grid, -self.coeffs, self.parity, ramp)

    def __mul__(self, scalar):
        if isinstance(scalar, (int, float, np.floating, np.integer)):
            ramp = None if self.ramp is None else scalar * self.ramp
            return SpectralField(self.grid, scalar * self.coeffs, self.parity, ramp)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def physical(self) -> np.ndarray:
        return to_physical(self)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.coeffs).all())


@dataclass(frozen=True, eq=False)
class HorizontalField:
    """Field independent of z, stored as 2-D horizontal Fourier coefficients."""

    grid: Grid
    coeffs: np.ndarray
    _source: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.nx, self.grid.ny):
            raise ValueError("horizontal coefficient shape mismatch")

    @classmethod
    def zeros(cls, grid: Grid) -> "HorizontalField":
        return cls(grid, np.zeros((grid.nx, grid.ny), dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, values: np.ndarray, dealias: bool = False) -> "HorizontalField":
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.nx, grid.ny):
            raise ValueError(f"shape {values.shape} does not match horizontal grid")
        # a trailing unit axis makes this the kz = 0 slice of the 3-D
        # transform of the z-constant extension, bit for bit (for nz a power
        # of two); a plain fft2 differs in the last digit
        c = scipy.fft.fftn(values[:, :, None], workers=_WORKERS)[:, :, 0] / (grid.nx * grid.ny)
        if dealias:
            c = c * grid.dealias_mask_h
        return cls(grid, c, values)

    def physical(self) -> np.ndarray:
        if self._source is not None:
            return self._source
        n = self.grid.nx * self.grid.ny
        return scipy.fft.ifft2(self.coeffs * n, workers=_WORKERS).real

    def lift(self) -> SpectralField:
        """Embed as a 3-D even field carrying only kz = 0 modes."""
        c = np.zeros(self.grid.shape, dtype=complex)
        c[:, :, 0] = self.coeffs
        return SpectralField(self.grid, c, Parity.EVEN)

    def gradient(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical-space horizontal gradient (2-D arrays)."""
        kx, ky, _ = self.grid.odd_wavenumbers
        n = self.grid.nx * self.grid.ny
        gx = scipy.fft.ifft2(1j * kx[:, :, 0] * self.coeffs * n, workers=_WORKERS).real
        gy = scipy.fft.ifft2(1j * ky[:, :, 0] * self.coeffs * n, workers=_WORKERS).real
        return gx, gy

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.coeffs).all())


def _project(c: np.ndarray, parity: Parity, grid: Grid) -> np.ndarray:
    if parity is Parity.NONE:
        return c
    flipped = c[:, :, grid.zflip_index]
    if parity is Parity.EVEN:
        return 0.5 * (c + flipped)
    return 0.5 * (c - flipped)


def to_spectral(values: np.ndarray, grid: Grid, parity: Parity = Parity.NONE,
                dealias: bool = False) -> SpectralField:
    """Transform physical grid values to a :class:`SpectralField`.

    A requested parity is enforced by projection; ``dealias`` applies the
    2/3 rule. The input array is kept so that ``to_physical`` returns it
    unchanged.
    """
    values = np.asarray(values)
    if values.shape != grid.shape:
        raise ValueError(f"array shape {values.shape} does not match grid {grid.shape}")
    if np.iscomplexobj(values):
        raise ValueError("physical values must be real")
    values = values.astype(float, copy=False)
    c = scipy.fft.fftn(values, workers=_WORKERS) / grid.size
    parity = Parity(parity)
    c = _project(c, parity, grid)
    if dealias:
        c = c * grid.dealias_mask
    return SpectralField(grid, c, parity, None, values)


def to_physical(f: SpectralField) -> np.ndarray:
    """Real physical values of ``f`` on the grid."""
    if f._source is not None:
        return f._source
    out = scipy.fft.ifftn(f.coeffs * f.grid.size, workers=_WORKERS).real
    if f.ramp is not None:
        n = f.grid.nx * f.grid.ny
        slope = scipy.fft.ifft2(f.ramp * n, workers=_WORKERS).real
        out = out + slope[:, :, None] * f.grid.coords[2]
    return out


def derivative(f: SpectralField, axis: str | int, order: int = 1) -> SpectralField:
    """Spectral derivative ``d^order f / d axis^order``.

    Odd-order derivatives drop the Nyquist mode, which has no real-valued
    derivative on the grid.
    """
    if order < 1:
        raise ValueError("order must be a positive integer")
    ax = {"x": 0, "y": 1, "z": 2}.get(axis, axis)
    if ax not in (0, 1, 2):
        raise ValueError(f"unknown axis {axis!r}")
    g = f.grid
    k = (g.odd_wavenumbers if order % 2 else g.wavenumbers)[ax]
    c = (1j * k) ** order * f.coeffs
    if f.ramp is not None:
        if ax == 2:
            if order == 1:
                c = c.copy()
                c[:, :, 0] += f.ramp
        else:
            # d/dx of ramp(x,y) z keeps a ramp; only first-order x/y supported
            raise ValueError("horizontal derivatives of a non-periodic field are not supported")
    parity = f.parity.flipped() if (ax == 2 and order % 2) else f.parity
    return SpectralField(g, c, parity)


def hs_norm(f: SpectralField, s: int = 0) -> float:
    """Sobolev H^s norm ``(8 * sum (1 + |pi k|^2)^s |c_k|^2)^(1/2)``."""
    if f.ramp is not None:
        raise ValueError("Sobolev norm of a non-periodic field is undefined")
    if s < 0:
        raise ValueError("s must be nonnegative")
    w = np.abs(f.coeffs) ** 2
    if s:
        w = w * (1.0 + f.grid.k2) ** s
    return float(np.sqrt(f.grid.volume * w.sum()))


def l2_quadrature(values: np.ndarray, grid: Grid) -> float:
    """Equal-weight physical-space L^2 norm over the box."""
    return float(np.sqrt(np.sum(values ** 2) * grid.cell_volume))


def project_parity(f: SpectralField, parity: Parity) -> SpectralField:
    parity = Parity(parity)
    if parity is Parity.NONE:
        raise ValueError("projection target must be even or odd")
    if f.ramp is not None:
        raise ValueError("cannot project a non-periodic field")
    return SpectralField(f.grid, _project(f.coeffs, parity, f.grid), parity)


def flip_z(f: SpectralField) -> SpectralField:
    """The reflected field ``f(x, y, -z)``."""
    return SpectralField(f.grid, f.coeffs[:, :, f.grid.zflip_index], f.parity)


def dealias(f: SpectralField) -> SpectralField:
    """2/3-rule truncation: zero every mode with ``|k_i| > n_i // 3``."""
    if f.ramp is not None:
        raise ValueError("cannot dealias a non-periodic field")
    return SpectralField(f.grid, f.coeffs * f.grid.dealias_mask, f.parity)


def _require_even(f: SpectralField, what: str) -> None:
    if f.parity is not Parity.EVEN:
        raise ValueError(f"{what} requires an even-in-z field, got parity {f.parity.value!r}")


def vertical_average(f: SpectralField) -> SpectralField:
    """Average over z in [0, 1], i.e. the kz = 0 slice for even fields."""
    _require_even(f, "vertical_average")
    c = np.zeros_like(f.coeffs)
    c[:, :, 0] = f.coeffs[:, :, 0]
    return SpectralField(f.grid, c, Parity.EVEN)


def vertical_average_h(f: SpectralField) -> HorizontalField:
    _require_even(f, "vertical_average")
    return HorizontalField(f.grid, f.coeffs[:, :, 0].copy())


def vertical_fluctuation(f: SpectralField) -> SpectralField:
    _require_even(f, "vertical_fluctuation")
    c = f.coeffs.copy()
    c[:, :, 0] = 0.0
    return SpectralField(f.grid, c, Parity.EVEN)


def vertical_integral(f: SpectralField) -> SpectralField:
    """Primitive ``g(x, y, z) = int_0^z f(x, y, z') dz'``.

    Modes with kz != 0 integrate spectrally; the kz = 0 mode contributes
    the non-periodic ``ramp * z`` term. The kz Nyquist mode integrates to
    a function vanishing at every grid point and is dropped.
    """
    if f.ramp is not None:
        raise ValueError("cannot integrate a non-periodic field")
    g = f.grid
    kz = g.odd_wavenumbers[2]
    nz_mask = kz != 0.0
    kz_safe = np.where(nz_mask, kz, 1.0)
    c = np.where(nz_mask, f.coeffs / (1j * kz_safe), 0.0)
    # integration constant so that g(., 0) = 0
    c[:, :, 0] = -c.sum(axis=2)
    ramp = f.coeffs[:, :, 0].copy()
    has_ramp = bool(np.any(ramp != 0.0))
    if has_ramp:
        return SpectralField(g, c, Parity.NONE, ramp)
    if f.parity is Parity.EVEN:
        c = _project(c, Parity.ODD, g)
        return SpectralField(g, c, Parity.ODD)
    if f.parity is Parity.ODD:
        return SpectralField(g, c, Parity.EVEN)
    return SpectralField(g, c, Parity.NONE)
