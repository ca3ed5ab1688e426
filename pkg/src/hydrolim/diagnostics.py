"""
Energy/dissipation functionals, CF-vs-CPE difference norms and log-log
rate fits.

A comma list of norms ``|a, b|_X`` is read as ``|a|_X + |b|_X``; every
term is kept separately so another convention is a post-processing step.
A vector field's norm is the Euclidean combination of its components.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, fields

import numpy as np

from .cf import time_derivatives
from .equations import Derivatives
from .spectral import (Parity, SpectralField, derivative, hs_norm,
                       vertical_average, vertical_fluctuation)
from .state import CfState, CpeState

__all__ = [
    "DiagnosticsRecord", "Functional", "functional_E", "functional_D",
    "functional_E1", "functional_D1", "delta_norms", "InvalidComparison",
    "RateFit", "fit_rate", "cf_from_cpe", "record",
]


class InvalidComparison(ValueError):
    pass


@dataclass
class Functional:
    value: float
    terms: dict[str, float]


def _vnorm(fs, s: int) -> float:
    return math.sqrt(sum(hs_norm(f, s) ** 2 for f in fs))


def _make(terms: dict[str, float]) -> Functional:
    return Functional(float(sum(terms.values())), terms)


def _derivs(state: CfState, derivs: Derivatives | None) -> Derivatives:
    return derivs if derivs is not None else time_derivatives(state)


def functional_E(state: CfState, derivs: Derivatives | None = None) -> Functional:
    d = _derivs(state, derivs)
    e = state.epsilon
    s, v, w = state.sigma, (state.v1, state.v2), state.w
    return _make({
        "v H3": _vnorm(v, 3),
        "eps w H3": e * hs_norm(w, 3),
        "dt sigma H2": hs_norm(d.sigma_t, 2),
        "grad_h sigma H2": _vnorm((derivative(s, "x"), derivative(s, "y")), 2),
        "dz sigma/eps H2": hs_norm(derivative(s, "z"), 2) / e,
        "sigma H4": hs_norm(s, 4),
        "w H2": hs_norm(w, 2),
        "dz w H2": hs_norm(derivative(w, "z"), 2),
    })


def functional_D(state: CfState, derivs: Derivatives | None = None) -> Functional:
    d = _derivs(state, derivs)
    e = state.epsilon
    s, v, w = state.sigma, (state.v1, state.v2), state.w
    return _make({
        "dt v H2": _vnorm((d.v1_t, d.v2_t), 2),
        "dt(eps w) H2": e * hs_norm(d.w_t, 2),
        "v H4": _vnorm(v, 4),
        "eps w H4": e * hs_norm(w, 4),
        "dt sigma H3": hs_norm(d.sigma_t, 3),
        "grad_h sigma H3": _vnorm((derivative(s, "x"), derivative(s, "y")), 3),
        "dz sigma/eps H3": hs_norm(derivative(s, "z"), 3) / e,
        "w H3": hs_norm(w, 3),
        "dz w H3": hs_norm(derivative(w, "z"), 3),
    })


def functional_E1(state: CfState, derivs: Derivatives | None = None) -> Functional:
    d = _derivs(state, derivs)
    e = state.epsilon
    st = d.sigma_t
    return _make({
        "dt v H1": _vnorm((d.v1_t, d.v2_t), 1),
        "dt(eps w) H1": e * hs_norm(d.w_t, 1),
        "dtt sigma L2": hs_norm(d.sigma_tt, 0),
        "dt grad_h sigma L2": _vnorm((derivative(st, "x"), derivative(st, "y")), 0),
        "dz dt sigma/eps L2": hs_norm(derivative(st, "z"), 0) / e,
        "dt sigma H2": hs_norm(st, 2),
        "dt w L2": hs_norm(d.w_t, 0),
        "dz dt w L2": hs_norm(derivative(d.w_t, "z"), 0),
    })


def functional_D1(state: CfState, derivs: Derivatives | None = None) -> Functional:
    d = _derivs(state, derivs)
    e = state.epsilon
    st = d.sigma_t
    return _make({
        "dtt v L2": _vnorm((d.v1_tt, d.v2_tt), 0),
        "dtt(eps w) L2": e * hs_norm(d.w_tt, 0),
        "dt v H2": _vnorm((d.v1_t, d.v2_t), 2),
        "dt(eps w) H2": e * hs_norm(d.w_t, 2),
        "dtt sigma H1": hs_norm(d.sigma_tt, 1),
        "dt grad_h sigma H1": _vnorm((derivative(st, "x"), derivative(st, "y")), 1),
        "dz dt sigma/eps H1": hs_norm(derivative(st, "z"), 1) / e,
        "dt w H1": hs_norm(d.w_t, 1),
        "dz dt w H1": hs_norm(derivative(d.w_t, "z"), 1),
    })


@dataclass
class DiagnosticsRecord:
    time: float
    E: float = 0.0
    D: float = 0.0
    E1: float = 0.0
    D1: float = 0.0
    delta_sigma_l2: float = 0.0
    delta_v_l2: float = 0.0
    delta_v_h1: float = 0.0
    delta_w_l2: float = 0.0
    dz_sigma_h2: float = 0.0
    dz_dt_sigma_l2: float = 0.0
    avg_delta_sigma_l2: float = 0.0
    fluct_delta_sigma_l2: float = 0.0

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def as_dict(self) -> dict[str, float]:
        return asdict(self)


def cf_from_cpe(cpe: CpeState, epsilon: float) -> CfState:
    """The hydrostatic state viewed as a state of the eps-scaled system."""
    return CfState(cpe.sigma_lifted(), cpe.vp1, cpe.vp2, cpe.wp, epsilon, cpe.time)


def delta_norms(cf: CfState, cpe: CpeState, derivs: Derivatives | None = None,
                time_tol: float = 0.0) -> dict[str, float]:
    """Norms of ``(sigma - sigma_p, v - v_p, w - w_p)`` and related quantities.

    ``time_tol`` bounds the admissible time mismatch (typically ``dt / 2``).
    Since ``d_z sigma_p = 0``, ``d_z delta sigma = d_z sigma``.
    """
    if cf.grid != cpe.grid:
        raise InvalidComparison("grid mismatch")
    if abs(cf.time - cpe.time) > time_tol:
        raise InvalidComparison(f"time mismatch: cf t={cf.time!r}, cpe t={cpe.time!r}")
    ds = cf.sigma - cpe.sigma_lifted()
    dv = (cf.v1 - cpe.vp1, cf.v2 - cpe.vp2)
    dw = cf.w - cpe.wp
    dzs = derivative(cf.sigma, "z")
    if derivs is None:
        dz_dt = 0.0
    else:
        dz_dt = hs_norm(derivative(derivs.sigma_t, "z"), 0)
    return {
        "delta_sigma_l2": hs_norm(ds, 0),
        "delta_v_l2": _vnorm(dv, 0),
        "delta_v_h1": _vnorm(dv, 1),
        "delta_w_l2": hs_norm(dw, 0),
        "dz_sigma_h2": hs_norm(dzs, 2),
        "dz_dt_sigma_l2": dz_dt,
        "avg_delta_sigma_l2": hs_norm(vertical_average(ds), 0),
        "fluct_delta_sigma_l2": hs_norm(vertical_fluctuation(ds), 0),
    }


def record(cf: CfState, cpe: CpeState | None, time_tol: float = 0.0) -> DiagnosticsRecord:
    """Full diagnostics row for one CF snapshot (and its CPE partner)."""
    d = time_derivatives(cf)
    rec = DiagnosticsRecord(
        time=cf.time,
        E=functional_E(cf, d).value,
        D=functional_D(cf, d).value,
        E1=functional_E1(cf, d).value,
        D1=functional_D1(cf, d).value,
    )
    if cpe is not None:
        for k, v in delta_norms(cf, cpe, d, time_tol).items():
            setattr(rec, k, v)
    return rec


@dataclass
class RateFit:
    slope: float
    intercept: float
    max_residual: float
    n_points: int
    excluded: list[float]


def fit_rate(points) -> RateFit:
    """Least-squares fit of ``log err = slope * log eps + intercept``.

    Points with ``err == 0`` are excluded with a warning. At least three
    distinct eps values must remain.
    """
    pts = [(float(e), float(r)) for e, r in points]
    excluded = [e for e, r in pts if r == 0.0]
    if excluded:
        warnings.warn(f"excluding exact-zero errors at eps={excluded}", stacklevel=2)
    pts = [(e, r) for e, r in pts if r != 0.0]
    if any(e <= 0 or r < 0 for e, r in pts):
        raise ValueError("eps and err must be positive")
    eps = np.array([p[0] for p in pts])
    if len(pts) < 3 or len(np.unique(eps)) < 3:
        raise ValueError("need at least three distinct eps values with nonzero error")
    x = np.log(eps)
    y = np.log(np.array([p[1] for p in pts]))
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - (slope * x + intercept)
    return RateFit(float(slope), float(intercept), float(np.abs(resid).max()), len(pts), excluded)
