"""
State containers for the eps-scaled system and its hydrostatic limit, and
generators of initial data.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .equations import CfEvaluator
from .spectral import (Grid, HorizontalField, Parity, SpectralField, to_spectral)

__all__ = [
    "CfState", "CpeState", "InitialDerivatives", "compatibility_derivatives",
    "perturbation_shapes", "make_well_prepared_ic", "make_illprepared_ic",
    "reference_cpe_init", "random_state",
]

EVEN, ODD = Parity.EVEN, Parity.ODD


def _expect(f: SpectralField, parity: Parity, name: str) -> None:
    if f.parity is not parity:
        raise ValueError(f"{name} must be {parity.value}-in-z, got {f.parity.value}")


@dataclass(frozen=True)
class CfState:
    """Prognostic fields of the eps-scaled compressible system.

    sigma is the log-density, (v1, v2) the horizontal velocity and w the
    rescaled vertical velocity.
    """

    sigma: SpectralField
    v1: SpectralField
    v2: SpectralField
    w: SpectralField
    epsilon: float
    time: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        for name, p in (("sigma", EVEN), ("v1", EVEN), ("v2", EVEN), ("w", ODD)):
            _expect(getattr(self, name), p, name)

    @property
    def grid(self) -> Grid:
        return self.sigma.grid

    @property
    def fields(self) -> tuple[SpectralField, SpectralField, SpectralField, SpectralField]:
        return (self.sigma, self.v1, self.v2, self.w)

    @classmethod
    def from_physical(cls, grid: Grid, sigma, v1, v2, w, epsilon: float,
                      time: float = 0.0, dealias: bool = True) -> "CfState":
        return cls(to_spectral(sigma, grid, EVEN, dealias),
                   to_spectral(v1, grid, EVEN, dealias),
                   to_spectral(v2, grid, EVEN, dealias),
                   to_spectral(w, grid, ODD, dealias),
                   float(epsilon), float(time))

    @classmethod
    def zeros(cls, grid: Grid, epsilon: float) -> "CfState":
        z = np.zeros(grid.shape)
        return cls.from_physical(grid, z, z, z, z, epsilon)

    def replace(self, **kw) -> "CfState":
        return replace(self, **kw)

    def is_finite(self) -> bool:
        return all(f.is_finite() for f in self.fields)


@dataclass(frozen=True)
class CpeState:
    """Compressible primitive equations state.

    ``sigma_p`` is a genuinely two-dimensional field, so ``d_z sigma_p = 0``
    holds by representation. ``wp`` is diagnostic.
    """

    sigma_p: HorizontalField
    vp1: SpectralField
    vp2: SpectralField
    wp: SpectralField
    time: float = 0.0

    def __post_init__(self):
        if not isinstance(self.sigma_p, HorizontalField):
            raise TypeError("sigma_p must be a HorizontalField")
        _expect(self.vp1, EVEN, "vp1")
        _expect(self.vp2, EVEN, "vp2")
        _expect(self.wp, ODD, "wp")

    @property
    def grid(self) -> Grid:
        return self.vp1.grid

    def sigma_lifted(self) -> SpectralField:
        return self.sigma_p.lift()

    def replace(self, **kw) -> "CpeState":
        return replace(self, **kw)

    def is_finite(self) -> bool:
        return (self.sigma_p.is_finite() and self.vp1.is_finite()
                and self.vp2.is_finite() and self.wp.is_finite())


@dataclass(frozen=True)
class InitialDerivatives:
    sigma1: SpectralField
    v1_t: SpectralField
    v2_t: SpectralField
    w1: SpectralField
    sigma2: SpectralField


def compatibility_derivatives(state: CfState) -> InitialDerivatives:
    """Time derivatives of the data implied by the equations.

    ``sigma1, v_t, w1`` are the right-hand sides evaluated at the state and
    ``sigma2`` follows from differentiating the continuity equation once in
    time and substituting them.
    """
    ev = CfEvaluator(*state.fields, state.epsilon, dealias=True)
    d1 = ev.first()
    s2 = ev.second(d1)[0]
    return InitialDerivatives(d1[0], d1[1], d1[2], d1[3], s2)


def perturbation_shapes(grid: Grid) -> dict[str, np.ndarray]:
    """Deterministic band-limited perturbation shapes in physical space.

    The density shape is z-independent; see ``make_well_prepared_ic``.
    """
    x, y, z = grid.mesh()
    pi = np.pi
    return {
        "sigma": np.cos(pi * x),
        "v1": np.cos(pi * y) * np.cos(pi * z),
        "v2": np.cos(pi * x) * np.cos(pi * z),
        "w": np.sin(pi * z) * np.cos(pi * x),
    }


def make_well_prepared_ic(cpe_init: CpeState, epsilon: float, amplitude: float = 1.0) -> CfState:
    """Initial data within ``O(eps)`` of the hydrostatic state ``cpe_init``.

    ``sigma0 = sigma_p + eps a z_s``, ``v0 = v_p + eps a z_v`` and
    ``w0 = w_p + eps a z_w``. The density shape carries no z-dependence, so
    ``d_z sigma0 = 0`` and the vertical momentum equation starts in
    hydrostatic balance; this keeps ``d_t w`` and hence ``E_1(0)`` bounded
    uniformly in eps.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    from .cpe import reconstruct_wp

    grid = cpe_init.grid
    shapes = perturbation_shapes(grid)
    s = epsilon * amplitude
    wp = reconstruct_wp(cpe_init)
    return _assemble(cpe_init, wp, epsilon,
                     s * shapes["sigma"], s * shapes["v1"], s * shapes["v2"], s * shapes["w"])


def make_illprepared_ic(cpe_init: CpeState, epsilon: float, amplitude: float = 1.0) -> CfState:
    """Initial data with an eps-independent O(1) velocity perturbation.

    The density perturbation is z-independent, so ``d_z sigma0 = 0`` and
    ``E(0)`` is finite for every eps, while ``|v0 - v_p|`` does not shrink.
    """
    if amplitude < 0:
        raise ValueError("amplitude must be nonnegative")
    from .cpe import reconstruct_wp

    grid = cpe_init.grid
    shapes = perturbation_shapes(grid)
    zero = np.zeros(grid.shape)
    wp = reconstruct_wp(cpe_init)
    return _assemble(cpe_init, wp, epsilon,
                     amplitude * shapes["sigma"], amplitude * shapes["v1"],
                     amplitude * shapes["v2"], zero)


def _assemble(cpe: CpeState, wp: SpectralField, eps, ds, dv1, dv2, dw) -> CfState:
    grid = cpe.grid
    sp = np.broadcast_to(cpe.sigma_p.physical()[:, :, None], grid.shape)
    return CfState.from_physical(
        grid,
        sp + ds,
        cpe.vp1.physical() + dv1,
        cpe.vp2.physical() + dv2,
        wp.physical() + dw,
        eps, cpe.time)


def reference_cpe_init(grid: Grid, amplitude: float = 1.0) -> CpeState:
    """Smooth hydrostatic initial state used by the default experiments.

    The horizontal velocity has both barotropic and baroclinic parts so that
    the diagnostic vertical velocity is nontrivial.
    """
    from .cpe import reconstruct_wp

    x, y, z = grid.mesh()
    pi = np.pi
    a = amplitude
    sigma_h = a * (0.2 * np.cos(pi * x[:, :, 0]) + 0.1 * np.sin(pi * y[:, :, 0]))
    vp1 = a * (0.3 * np.sin(pi * y) + 0.2 * np.cos(pi * x) * np.cos(pi * z))
    vp2 = a * (0.2 * np.sin(pi * x) + 0.2 * np.sin(pi * y) * np.cos(pi * z))
    sp = HorizontalField.from_physical(grid, sigma_h, dealias=True)
    v1 = to_spectral(vp1, grid, EVEN, dealias=True)
    v2 = to_spectral(vp2, grid, EVEN, dealias=True)
    state = CpeState(sp, v1, v2, SpectralField.zeros(grid, ODD))
    return state.replace(wp=reconstruct_wp(state))


def random_state(grid: Grid, epsilon: float, kmax: int | None = None,
                 amplitude: float = 0.01, rng=None) -> CfState:
    """Random band-limited state with the required parities.

    Every Fourier mode with ``|k_i| <= kmax`` (default ``min(n) // 4``)
    receives a Gaussian coefficient; the physical fields are rescaled to a
    maximum of ``amplitude``.
    """
    rng = np.random.default_rng(rng)
    kmax = min(grid.shape) // 4 if kmax is None else int(kmax)
    kx, ky, kz = grid.modes
    band = (np.abs(kx) <= kmax) & (np.abs(ky) <= kmax) & (np.abs(kz) <= kmax)
    out = []
    for p in (EVEN, EVEN, EVEN, ODD):
        c = (rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)) * band
        u = np.fft.ifftn(c).real
        flipped = u[:, :, grid.zflip_index]
        u = u - flipped if p is ODD else u + flipped
        peak = np.abs(u).max()
        u = amplitude * u / peak if peak > 0 else u
        out.append(to_spectral(u, grid, p, dealias=True))
    return CfState(*out, epsilon=float(epsilon))
