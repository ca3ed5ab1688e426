"""
Time integration of the compressible primitive equations

    d_t sigma_p + vbar_p.grad_h sigma_p + div_h vbar_p = 0
    d_t v_p + v_p.grad_h v_p + w_p d_z v_p + grad_h sigma_p = Lap v_p
    d_z sigma_p = 0

where the vertical velocity is diagnostic,

    w_p = -e^-sigma_p int_0^z e^sigma_p (vt_p.grad_h sigma_p + div_h vt_p) dz',

with ``vbar`` / ``vt`` the vertical average / fluctuation. Since sigma_p
does not depend on z the exponential weights cancel.
"""
from __future__ import annotations

from typing import Callable

import numpy as np

from .cf import DivergenceError, StepperConfig
from .equations import FieldCache, lap
from .spectral import (HorizontalField, Parity, SpectralField, derivative,
                       to_physical, to_spectral, vertical_fluctuation, vertical_integral)
from .state import CpeState

__all__ = ["reconstruct_wp", "cpe_rhs", "step_cpe", "CpeIntegrator", "Forcing"]

EVEN, ODD = Parity.EVEN, Parity.ODD

# forcing(t) -> (f_sigma (nx, ny), f_v1, f_v2 (nx, ny, nz)) in physical space
Forcing = Callable[[float], tuple]


def reconstruct_wp(state: CpeState) -> SpectralField:
    """Diagnostic vertical velocity, odd in z and zero at z = 0 and z = 1."""
    grid = state.grid
    gx, gy = state.sigma_p.gradient()
    vt1 = vertical_fluctuation(state.vp1)
    vt2 = vertical_fluctuation(state.vp2)
    integrand = (to_physical(vt1) * gx[:, :, None] + to_physical(vt2) * gy[:, :, None]
                 + to_physical(derivative(vt1, "x")) + to_physical(derivative(vt2, "y")))
    f = to_spectral(integrand, grid, EVEN, dealias=True)
    c = f.coeffs.copy()
    # the fluctuation has zero vertical mean; remove round-off in kz = 0
    c[:, :, 0] = 0.0
    prim = vertical_integral(SpectralField(grid, c, EVEN))
    return to_spectral(-to_physical(prim), grid, ODD, dealias=True)


def cpe_rhs(state: CpeState, forcing: Forcing | None = None, dealias: bool = True):
    """Explicit tendencies ``(d sigma_p, d v1, d v2)``.

    Viscosity is excluded; ``step_cpe`` treats it implicitly. ``state.wp``
    must be current.
    """
    grid = state.grid
    sp = state.sigma_p
    gx, gy = sp.gradient()
    vb1 = state.vp1.coeffs[:, :, 0]
    vb2 = state.vp2.coeffs[:, :, 0]
    vbar1 = HorizontalField(grid, vb1.copy()).physical()
    vbar2 = HorizontalField(grid, vb2.copy()).physical()
    kx, ky, _ = grid.odd_wavenumbers
    div_bar = 1j * kx[:, :, 0] * vb1 + 1j * ky[:, :, 0] * vb2
    adv_s = HorizontalField.from_physical(grid, vbar1 * gx + vbar2 * gy, dealias=dealias)
    ds = -(adv_s.coeffs + div_bar)

    u1, u2, w = FieldCache(state.vp1), FieldCache(state.vp2), state.wp.physical()
    v1, v2 = u1.val, u2.val
    out = []
    for fc, g in ((u1, gx), (u2, gy)):
        fx, fy, fz = fc.grad
        adv = v1 * fx + v2 * fy + w * fz
        out.append(-adv - g[:, :, None])
    if forcing is not None:
        fs, f1, f2 = forcing(state.time)
        ds = ds + HorizontalField.from_physical(grid, fs, dealias=dealias).coeffs
        out[0] = out[0] + f1
        out[1] = out[1] + f2
    dv1 = to_spectral(out[0], grid, EVEN, dealias=dealias)
    dv2 = to_spectral(out[1], grid, EVEN, dealias=dealias)
    return HorizontalField(grid, ds), dv1, dv2


def step_cpe(state: CpeState, cfg: StepperConfig, prev=None, forcing: Forcing | None = None):
    """Advance one step; sigma_p explicitly, v_p with implicit viscosity.

    Returns ``(new_state, rhs)``; feed ``rhs`` back as ``prev`` for cnab2.
    """
    grid, dt = state.grid, cfg.dt
    rhs = cpe_rhs(state, forcing, cfg.dealias)
    ds, dv1, dv2 = rhs
    k2 = grid.k2
    if cfg.scheme == "cnab2" and prev is not None:
        ps, pv1, pv2 = prev
        s_new = state.sigma_p.coeffs + dt * (1.5 * ds.coeffs - 0.5 * ps.coeffs)
        num = 1.0 - 0.5 * dt * k2
        den = 1.0 + 0.5 * dt * k2
        v_new = [(num * u.coeffs + dt * (1.5 * n.coeffs - 0.5 * o.coeffs)) / den
                 for u, n, o in ((state.vp1, dv1, pv1), (state.vp2, dv2, pv2))]
    else:
        s_new = state.sigma_p.coeffs + dt * ds.coeffs
        den = 1.0 + dt * k2
        v_new = [(u.coeffs + dt * n.coeffs) / den for u, n in ((state.vp1, dv1), (state.vp2, dv2))]
    t_new = state.time + dt
    for name, c in (("sigma_p", s_new), ("vp1", v_new[0]), ("vp2", v_new[1])):
        if not np.isfinite(c).all():
            raise DivergenceError(t_new, name, state)
    sp = HorizontalField(grid, s_new)
    sp = HorizontalField.from_physical(grid, sp.physical(), dealias=cfg.dealias)
    vp = [to_spectral(to_physical(SpectralField(grid, c, EVEN)), grid, EVEN, dealias=cfg.dealias)
          for c in v_new]
    new = CpeState(sp, vp[0], vp[1], SpectralField.zeros(grid, ODD), t_new)
    return new.replace(wp=reconstruct_wp(new)), rhs


class CpeIntegrator:
    def __init__(self, cfg: StepperConfig, forcing: Forcing | None = None):
        self.cfg = cfg
        self.forcing = forcing
        self.prev = None

    def step(self, state: CpeState) -> CpeState:
        new, rhs = step_cpe(state, self.cfg, self.prev, self.forcing)
        self.prev = rhs if self.cfg.scheme == "cnab2" else None
        return new

    def advance(self, state: CpeState, nsteps: int, callback=None) -> CpeState:
        for n in range(nsteps):
            state = self.step(state)
            if callback is not None:
                callback(n + 1, state)
        return state


def viscous_term(state: CpeState):
    """``Lap v_p`` (the implicit part), for residual checks."""
    return lap(state.vp1), lap(state.vp2)
