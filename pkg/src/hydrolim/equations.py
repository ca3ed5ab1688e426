"""
Pseudo-spectral evaluation of the eps-scaled compressible system

    d_t sigma + v.grad_h sigma + w d_z sigma + div_h v + d_z w = 0
    d_t v + v.grad_h v + w d_z v + grad_h sigma = Lap v
    d_t w + v.grad_h w + w d_z w + eps^-2 d_z sigma = Lap w

and of its formal time derivatives. Products are formed in physical space;
with ``dealias=True`` each transformed product is truncated by the 2/3
rule, otherwise it is kept whole (exact when the grid is fine enough).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import Grid, Parity, SpectralField, derivative, to_physical, to_spectral

EVEN, ODD = Parity.EVEN, Parity.ODD


def lap(f: SpectralField) -> SpectralField:
    return SpectralField(f.grid, -f.grid.k2 * f.coeffs, f.parity)


def lap_h(f: SpectralField) -> SpectralField:
    kx, ky, _ = f.grid.wavenumbers
    return SpectralField(f.grid, -(kx ** 2 + ky ** 2) * f.coeffs, f.parity)


def resample(f: SpectralField, grid: Grid) -> SpectralField:
    """Zero-pad (or truncate) ``f`` onto another grid, dropping Nyquist modes."""
    src = f.grid
    out = np.zeros(grid.shape, dtype=complex)
    kx, ky, kz = src.modes
    keep = ((np.abs(kx) < min(src.nx, grid.nx) // 2)
            & (np.abs(ky) < min(src.ny, grid.ny) // 2)
            & (np.abs(kz) < min(src.nz, grid.nz) // 2))
    idx = np.nonzero(keep)
    ix = kx[idx[0], 0, 0] % grid.nx
    iy = ky[0, idx[1], 0] % grid.ny
    iz = kz[0, 0, idx[2]] % grid.nz
    out[ix, iy, iz] = f.coeffs[idx]
    return SpectralField(grid, out, f.parity)


class FieldCache:
    """Physical values and gradients of a spectral field, computed once."""

    def __init__(self, f: SpectralField):
        self.f = f
        self._val = None
        self._grad = None

    @property
    def val(self) -> np.ndarray:
        if self._val is None:
            self._val = to_physical(self.f)
        return self._val

    @property
    def grad(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self._grad is None:
            self._grad = tuple(to_physical(derivative(self.f, ax)) for ax in range(3))
        return self._grad


def _advect(v1, v2, w, fc: FieldCache) -> np.ndarray:
    gx, gy, gz = fc.grad
    return v1 * gx + v2 * gy + w * gz


@dataclass
class Derivatives:
    """First and (optionally) second time derivatives of a CF state."""

    sigma_t: SpectralField
    v1_t: SpectralField
    v2_t: SpectralField
    w_t: SpectralField
    sigma_tt: SpectralField | None = None
    v1_tt: SpectralField | None = None
    v2_tt: SpectralField | None = None
    w_tt: SpectralField | None = None


class CfEvaluator:
    """Evaluates right-hand sides of the eps-scaled system for one state."""

    def __init__(self, sigma, v1, v2, w, eps: float, dealias: bool = True):
        self.grid = sigma.grid
        self.eps = eps
        self.dealias = dealias
        self.fields = (sigma, v1, v2, w)
        self.c = [FieldCache(f) for f in self.fields]

    def spec(self, values: np.ndarray, parity: Parity) -> SpectralField:
        return to_spectral(values, self.grid, parity, dealias=self.dealias)

    def velocity(self):
        return self.c[1].val, self.c[2].val, self.c[3].val

    def advection_phys(self) -> list[np.ndarray]:
        """Physical ``v.grad_h f + w d_z f`` for f = sigma, v1, v2, w."""
        v1, v2, w = self.velocity()
        return [_advect(v1, v2, w, fc) for fc in self.c]

    def nonlinear(self) -> tuple[SpectralField, ...]:
        """Explicit (quadratic) terms, parity-projected."""
        adv = self.advection_phys()
        parities = (EVEN, EVEN, EVEN, ODD)
        return tuple(self.spec(-a, p) for a, p in zip(adv, parities))

    def linear(self, sigma, v1, v2, w) -> tuple[SpectralField, ...]:
        """Stiff linear terms applied to the given fields."""
        ds = -(derivative(v1, "x") + derivative(v2, "y") + derivative(w, "z"))
        dv1 = -derivative(sigma, "x") + lap(v1)
        dv2 = -derivative(sigma, "y") + lap(v2)
        dw = derivative(sigma, "z") * (-1.0 / self.eps ** 2) + lap(w)
        return (ds.with_parity(EVEN), dv1.with_parity(EVEN), dv2.with_parity(EVEN), dw.with_parity(ODD))

    def first(self) -> tuple[SpectralField, ...]:
        lin = self.linear(*self.fields)
        nl = self.nonlinear()
        return tuple(a + b for a, b in zip(lin, nl))

    def second(self, first) -> tuple[SpectralField, ...]:
        """Second time derivatives given the first ones."""
        st, v1t, v2t, wt = first
        tc = [FieldCache(f) for f in first]
        v1, v2, w = self.velocity()
        a1, a2, aw = tc[1].val, tc[2].val, tc[3].val
        out = []
        parities = (EVEN, EVEN, EVEN, ODD)
        for base, dot, p in zip(self.c, tc, parities):
            prod = _advect(a1, a2, aw, base) + _advect(v1, v2, w, dot)
            out.append(self.spec(-prod, p))
        lin = self.linear(st, v1t, v2t, wt)
        return tuple(a + b for a, b in zip(out, lin))

    def derivatives(self, second: bool = True) -> Derivatives:
        d1 = self.first()
        if not second:
            return Derivatives(*d1)
        return Derivatives(*d1, *self.second(d1))
