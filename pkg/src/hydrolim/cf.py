"""
Time integration of the eps-scaled compressible system.

All linear terms (pressure gradients, the ``eps^-2 d_z sigma`` acoustic
coupling and the viscosity) are implicit, per Fourier mode; the quadratic
transport terms are explicit. Two schemes are provided:

imex-euler
    backward Euler on the linear part, forward Euler on the rest.
cnab2
    Crank-Nicolson / Adams-Bashforth 2. The first step has no stored
    history; by default it is a Crank-Nicolson step whose explicit part is
    Heun-corrected (second order, ``startup="cn-heun"``), or optionally a
    plain imex-euler step (``startup="imex-euler"``).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .equations import CfEvaluator, FieldCache, Derivatives
from .spectral import (Grid, Parity, SpectralField, derivative, hs_norm,
                       to_physical, to_spectral, vertical_integral)
from .state import CfState

__all__ = [
    "StepperConfig", "DivergenceError", "InconsistencyWarning", "ModeMatrix",
    "nonlinear_rhs", "linear_rhs", "step", "CfIntegrator", "reconstruct_w",
    "time_derivatives", "mixed_wave_residual", "MixedWaveTerms", "mass",
]

EVEN, ODD = Parity.EVEN, Parity.ODD
SCHEMES = ("imex-euler", "cnab2")
STARTUPS = ("cn-heun", "imex-euler")


class DivergenceError(RuntimeError):
    """Raised when a step produces non-finite values."""

    def __init__(self, time: float, field: str, last_state=None):
        super().__init__(f"non-finite values in {field} at t={time:.6g}")
        self.time = time
        self.field = field
        self.last_state = last_state


class InconsistencyWarning(UserWarning):
    """The vertical mean of the reconstruction integrand does not vanish."""

    def __init__(self, defect: float):
        super().__init__(f"vertical-mean defect {defect:.3e} exceeds tolerance; "
                         "reconstructed w does not vanish at z=1")
        self.defect = defect


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    scheme: str = "cnab2"
    dealias: bool = True
    nonlinear: bool = True
    startup: str = "cn-heun"

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.startup not in STARTUPS:
            raise ValueError(f"startup must be one of {STARTUPS}, got {self.startup!r}")


@dataclass(frozen=True)
class ModeMatrix:
    """Linear generator at one mode, ordering (sigma, v1, v2, w)."""

    k: tuple[int, int, int]
    eps: float
    dt: float
    a: np.ndarray

    @classmethod
    def build(cls, k, eps: float, dt: float = 0.0) -> "ModeMatrix":
        from .oracle import mode_matrix
        k = tuple(int(v) for v in k)
        return cls(k, eps, dt, mode_matrix(k, eps))

    def implicit(self, theta: float = 1.0) -> np.ndarray:
        return np.eye(4) - theta * self.dt * self.a


@lru_cache(maxsize=32)
def _solver_coeffs(grid: Grid, eps: float, a: float):
    """Per-mode factors of the closed-form inverse of ``I - a L``."""
    kx, ky, kz = grid.odd_wavenumbers
    d = 1.0 + a * grid.k2
    kh2 = kx ** 2 + ky ** 2
    denom = 1.0 + a * a * (kh2 + kz ** 2 / eps ** 2) / d
    return kx, ky, kz, d, denom


def _implicit_solve(grid: Grid, eps: float, a: float, b):
    """Solve ``(I - a L) u = b`` for all modes at once.

    The velocity components eliminate in favour of sigma, leaving one
    scalar equation per mode.
    """
    kx, ky, kz, d, denom = _solver_coeffs(grid, eps, a)
    bs, b1, b2, bw = b
    ia = 1j * a
    s = (bs - ia / d * (kx * b1 + ky * b2 + kz * bw)) / denom
    v1 = (b1 - ia * kx * s) / d
    v2 = (b2 - ia * ky * s) / d
    w = (bw - ia * kz * s / eps ** 2) / d
    return s, v1, v2, w


def nonlinear_rhs(state: CfState, dealias: bool = True) -> tuple[SpectralField, ...]:
    """Explicit terms ``-(v.grad_h f + w d_z f)`` for f = sigma, v1, v2, w."""
    return CfEvaluator(*state.fields, state.epsilon, dealias=dealias).nonlinear()


def linear_rhs(state: CfState) -> tuple[SpectralField, ...]:
    ev = CfEvaluator(*state.fields, state.epsilon)
    return ev.linear(*state.fields)


_NAMES = ("sigma", "v1", "v2", "w")
_PARITIES = (EVEN, EVEN, EVEN, ODD)


def _zeros_like_rhs(grid):
    return tuple(SpectralField.zeros(grid, p) for p in _PARITIES)


def _canonical(grid, coeffs, t_new, state, dealias):
    fields = []
    for name, c, p in zip(_NAMES, coeffs, _PARITIES):
        if not np.isfinite(c).all():
            raise DivergenceError(t_new, name, state)
        # spectral coefficients of the physical values, so that a state is
        # reproduced bit for bit from its physical arrays
        phys = to_physical(SpectralField(grid, c, p))
        fields.append(to_spectral(phys, grid, p, dealias=dealias))
    return fields


def step(state: CfState, cfg: StepperConfig, prev_nonlinear=None):
    """Advance one step of size ``cfg.dt``.

    Returns ``(new_state, nonlinear)`` where ``nonlinear`` holds the
    explicit terms at the input state; pass it back as ``prev_nonlinear``
    on the next cnab2 step.
    """
    grid, eps, dt = state.grid, state.epsilon, cfg.dt
    nl = nonlinear_rhs(state, cfg.dealias) if cfg.nonlinear else _zeros_like_rhs(grid)
    u = [f.coeffs for f in state.fields]
    n_now = [f.coeffs for f in nl]
    t_new = state.time + dt
    if cfg.scheme == "cnab2" and (prev_nonlinear is not None or cfg.startup == "cn-heun"):
        lin = [f.coeffs for f in linear_rhs(state)]
        base = [ui + 0.5 * dt * li for ui, li in zip(u, lin)]
        if prev_nonlinear is not None:
            n_old = [f.coeffs for f in prev_nonlinear]
            b = [bi + dt * (1.5 * ni - 0.5 * oi) for bi, ni, oi in zip(base, n_now, n_old)]
        else:
            pred = _implicit_solve(grid, eps, 0.5 * dt, [bi + dt * ni for bi, ni in zip(base, n_now)])
            n_pred = n_now
            if cfg.nonlinear:
                star = CfState(*_canonical(grid, pred, t_new, state, cfg.dealias), epsilon=eps, time=t_new)
                n_pred = [f.coeffs for f in nonlinear_rhs(star, cfg.dealias)]
            b = [bi + 0.5 * dt * (ni + pi) for bi, ni, pi in zip(base, n_now, n_pred)]
        theta = 0.5
    else:
        b = [ui + dt * ni for ui, ni in zip(u, n_now)]
        theta = 1.0
    new = _implicit_solve(grid, eps, theta * dt, b)
    fields = _canonical(grid, new, t_new, state, cfg.dealias)
    return CfState(*fields, epsilon=eps, time=t_new), nl


class CfIntegrator:
    """Stateful driver that carries the multistep history between steps."""

    def __init__(self, cfg: StepperConfig, prev_nonlinear=None):
        self.cfg = cfg
        self.prev = prev_nonlinear

    def step(self, state: CfState) -> CfState:
        new, nl = step(state, self.cfg, self.prev)
        self.prev = nl if self.cfg.scheme == "cnab2" else None
        return new

    def advance(self, state: CfState, nsteps: int, callback=None) -> CfState:
        for n in range(nsteps):
            state = self.step(state)
            if callback is not None:
                callback(n + 1, state)
        return state


def mass(state: CfState) -> float:
    """``int e^sigma`` by equal-weight quadrature."""
    return float(np.exp(to_physical(state.sigma)).sum() * state.grid.cell_volume)


def time_derivatives(state: CfState, dealias: bool = True) -> Derivatives:
    """First and second time derivatives by substitution into the equations."""
    return CfEvaluator(*state.fields, state.epsilon, dealias=dealias).derivatives(second=True)


def reconstruct_w(sigma: SpectralField, sigma_t: SpectralField, v1: SpectralField,
                  v2: SpectralField, tol: float = 1e-6) -> SpectralField:
    """Vertical velocity from the continuity equation.

    ``w = -e^-sigma int_0^z e^sigma Xi dz'`` with
    ``Xi = d_t sigma + v.grad_h sigma + div_h v``, evaluated on z in [0, 1]
    and extended oddly. A nonzero vertical mean of ``e^sigma Xi`` (which
    would make ``w(., 1) != 0``) is removed and reported through an
    :class:`InconsistencyWarning`.
    """
    grid = sigma.grid
    sc = FieldCache(sigma)
    gx, gy, _ = sc.grad
    xi = (to_physical(sigma_t) + to_physical(v1) * gx + to_physical(v2) * gy
          + to_physical(derivative(v1, "x")) + to_physical(derivative(v2, "y")))
    es = np.exp(sc.val)
    integrand = to_spectral(es * xi, grid, EVEN)
    mean = integrand.coeffs[:, :, 0]
    defect = float(np.sqrt(grid.volume * np.sum(np.abs(mean) ** 2)))
    scale = max(1.0, hs_norm(integrand, 0))
    if defect > tol * scale:
        warnings.warn(InconsistencyWarning(defect), stacklevel=2)
    c = integrand.coeffs.copy()
    c[:, :, 0] = 0.0
    prim = vertical_integral(SpectralField(grid, c, EVEN))
    w = -to_physical(prim) / es
    return to_spectral(w, grid, ODD, dealias=True)


@dataclass
class MixedWaveTerms:
    """Individual terms of the damped-wave form of the continuity equation."""

    lhs: dict[str, np.ndarray]
    rhs: dict[str, np.ndarray]
    cell_volume: float

    def _norm(self, a) -> float:
        return float(np.sqrt(np.sum(a ** 2) * self.cell_volume))

    @property
    def residual(self) -> float:
        total = sum(self.lhs.values()) - sum(self.rhs.values())
        return self._norm(total)

    @property
    def scale(self) -> float:
        return sum(self._norm(a) for a in (*self.lhs.values(), *self.rhs.values()))

    @property
    def relative(self) -> float:
        s = self.scale
        return self.residual / s if s > 0 else 0.0


def _alias_free_grid(state: CfState) -> Grid:
    """Grid on which cubic products of the state's modes are exact."""
    g = state.grid
    dims = []
    for ax, n in enumerate(g.shape):
        active = np.zeros(n, dtype=bool)
        for f in state.fields:
            a = np.any(np.abs(f.coeffs) > 0.0, axis=tuple(i for i in range(3) if i != ax))
            active |= a
        k = np.fft.fftfreq(n, 1.0 / n).round().astype(int)
        kmax = int(np.abs(k[active]).max()) if active.any() else 0
        m = max(n, 6 * kmax + 2)
        dims.append(m + (m % 2))
    return Grid(*dims)


def mixed_wave_terms(state: CfState) -> MixedWaveTerms:
    """Assemble every term of the damped-wave identity.

    The state is resampled to a grid fine enough that all (at most cubic)
    products are exact, so the identity holds to round-off.
    """
    from .equations import lap, lap_h, resample

    grid = _alias_free_grid(state)
    eps = state.epsilon
    sig, v1, v2, w = (resample(f, grid) for f in state.fields)
    ev = CfEvaluator(sig, v1, v2, w, eps, dealias=False)
    d = ev.derivatives(second=True)
    P = to_physical

    st = d.sigma_t
    q = st - lap(sig)
    qc = FieldCache(q.with_parity(EVEN))
    vv1, vv2, ww = P(v1), P(v2), P(w)
    qx, qy, qz = qc.grad
    sc = FieldCache(sig)
    sx, sy, sz = sc.grad

    def D(f, ax, n=1):
        return P(derivative(f, ax, n))

    lhs = {
        "dt(dt sigma - lap sigma)": P(d.sigma_tt - lap(st)),
        "transport": vv1 * qx + vv2 * qy + ww * qz,
        "-lap_h sigma": -P(lap_h(sig)),
        "-eps^-2 dzz sigma": -D(sig, "z", 2) / eps ** 2,
    }
    # grad v : grad_h grad sigma = sum_i sum_j d_j v_i d_j d_i sigma
    hess = {(i, j): D(derivative(sig, i), j) for i in "xy" for j in "xyz"}
    gv = sum(D(vi, j) * hess[(i, j)] for i, vi in zip("xy", (v1, v2)) for j in "xyz")
    gw = sum(D(w, j) * D(derivative(sig, "z"), j) for j in "xyz")
    J1 = P(d.v1_t) * sx + P(d.v2_t) * sy - (P(lap(v1)) * sx + P(lap(v2)) * sy) - 2.0 * gv
    J2 = P(d.w_t) * sz - P(lap(w)) * sz - 2.0 * gw
    a1 = vv1 * D(v1, "x") + vv2 * D(v1, "y") + ww * D(v1, "z")
    a2 = vv1 * D(v2, "x") + vv2 * D(v2, "y") + ww * D(v2, "z")
    J3 = P(derivative(to_spectral(a1, grid), "x") + derivative(to_spectral(a2, grid), "y"))
    aw = vv1 * D(w, "x") + vv2 * D(w, "y") + ww * D(w, "z")
    J4 = P(derivative(to_spectral(aw, grid), "z"))
    # the transport terms d_t v.grad sigma and d_t w d_z sigma move to the
    # right-hand side with a minus sign, so J1 and J2 enter negated
    rhs = {"-J1": -J1, "-J2": -J2, "J3": J3, "J4": J4}
    return MixedWaveTerms(lhs, rhs, grid.cell_volume)


def mixed_wave_residual(state: CfState, relative: bool = False) -> float:
    """L^2 norm of (left side - right side) of the damped-wave identity."""
    t = mixed_wave_terms(state)
    return t.relative if relative else t.residual
