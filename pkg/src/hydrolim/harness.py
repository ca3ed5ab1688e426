"""
eps-sweep experiments: one hydrostatic reference trajectory, one trajectory
of the eps-scaled system per eps, paired diagnostics, CSV/JSON output and
rate fits.

Config (JSON)::

    {
      "version": 1,
      "grid": [32, 32, 32],
      "dt": 2.5e-4,
      "T": 0.25,
      "eps_list": [0.2, 0.1, 0.05, 0.025],
      "ic": {"kind": "well-prepared", "amplitude": 1.0},
      "scheme": "cnab2",
      "out": "runs/reference",
      "record_every": 20
    }

Optional keys: ``base_amplitude`` (scale of the hydrostatic reference
state, default 1) and ``checkpoint`` (write a final checkpoint per eps,
default true). All parameter defaults are artifact choices.
"""
from __future__ import annotations

import csv
import json
import logging
import math
import os
import time as _time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .cf import SCHEMES, CfIntegrator, DivergenceError, StepperConfig
from .checkpoint import checkpoint_write
from .cpe import CpeIntegrator
from .diagnostics import DiagnosticsRecord, fit_rate, record
from .spectral import Grid, HorizontalField, Parity, to_spectral
from .state import (CpeState, make_illprepared_ic, make_well_prepared_ic,
                    reference_cpe_init)

__all__ = [
    "ConfigError", "ExperimentConfig", "RunSummary", "EpsResult", "RATE_TARGETS",
    "run_experiment", "aggregate", "fit_rates", "read_csv", "write_csv",
    "csv_name", "summary_from_dir",
]

log = logging.getLogger(__name__)

CONFIG_VERSION = 1
IC_KINDS = ("well-prepared", "ill-prepared")
SUMMARY_FILE = "summary.json"

# rate name -> (aggregate key, target exponent)
RATE_TARGETS = {
    "delta_sigma_v_linf_l2": ("sup_delta_sigma_v", 1.0),
    "delta_v_l2_h1": ("l2_delta_v_h1", 1.0),
    "delta_w_linf_l2": ("sup_delta_w_l2", 2.0 / 3.0),
    "delta_w_l2_l2": ("l2_delta_w_l2", 0.75),
    "dz_sigma_linf_h2": ("sup_dz_sigma_h2", 1.0),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    grid: tuple[int, int, int]
    dt: float
    T: float
    eps_list: tuple[float, ...]
    ic_kind: str = "well-prepared"
    amplitude: float = 1.0
    scheme: str = "cnab2"
    out: str = "runs/out"
    record_every: int = 1
    base_amplitude: float = 1.0
    checkpoint: bool = True
    version: int = CONFIG_VERSION

    def __post_init__(self):
        try:
            Grid(*self.grid)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid: {exc}") from None
        if not (isinstance(self.dt, (int, float)) and self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError("dt must be a positive number")
        if not (isinstance(self.T, (int, float)) and self.T >= 0 and math.isfinite(self.T)):
            raise ConfigError("T must be a nonnegative number")
        steps = self.T / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise ConfigError("T must be an integer multiple of dt")
        eps = self.eps_list
        if not eps:
            raise ConfigError("eps_list must be nonempty")
        if any(not (0 < e < 1) for e in eps):
            raise ConfigError("every eps must lie in (0, 1)")
        if any(a <= b for a, b in zip(eps, eps[1:])):
            raise ConfigError("eps_list must be strictly decreasing")
        if self.ic_kind not in IC_KINDS:
            raise ConfigError(f"ic.kind must be one of {IC_KINDS}")
        if not self.amplitude >= 0 or not self.base_amplitude >= 0:
            raise ConfigError("amplitudes must be nonnegative")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise ConfigError("record_every must be a positive integer")
        if self.version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {self.version}")

    @property
    def nsteps(self) -> int:
        return int(round(self.T / self.dt))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        if "version" not in d:
            raise ConfigError("missing 'version'")
        required = ("grid", "dt", "T", "eps_list")
        missing = [k for k in required if k not in d]
        if missing:
            raise ConfigError(f"missing keys: {missing}")
        known = {"version", "grid", "dt", "T", "eps_list", "ic", "scheme", "out",
                 "record_every", "base_amplitude", "checkpoint"}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown keys: {unknown}")
        ic = d.pop("ic", {"kind": "well-prepared", "amplitude": 1.0})
        if not isinstance(ic, dict):
            raise ConfigError("ic must be an object")
        bad = sorted(set(ic) - {"kind", "amplitude"})
        if bad:
            raise ConfigError(f"unknown ic keys: {bad}")
        grid = d.pop("grid")
        if not isinstance(grid, (list, tuple)) or len(grid) != 3:
            raise ConfigError("grid must be a list of three integers")
        try:
            return cls(grid=tuple(grid), eps_list=tuple(float(e) for e in d.pop("eps_list")),
                       ic_kind=ic.get("kind", "well-prepared"),
                       amplitude=float(ic.get("amplitude", 1.0)), **d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return {
            "version": self.version, "grid": list(self.grid), "dt": self.dt, "T": self.T,
            "eps_list": list(self.eps_list),
            "ic": {"kind": self.ic_kind, "amplitude": self.amplitude},
            "scheme": self.scheme, "out": self.out, "record_every": self.record_every,
            "base_amplitude": self.base_amplitude, "checkpoint": self.checkpoint,
        }

    def replace(self, **kw) -> "ExperimentConfig":
        d = {**asdict(self), **kw}
        return ExperimentConfig(**d)


@dataclass
class EpsResult:
    eps: float
    status: str
    csv: str
    aggregates: dict[str, float]
    wall_time: float
    error: str | None = None
    checkpoint: str | None = None


@dataclass
class RunSummary:
    config: dict
    results: list[EpsResult]
    rates: dict[str, dict]
    rates_withheld: str | None
    cpe_wall_time: float
    peak_E_ratio: float | None = None

    def completed(self) -> list[EpsResult]:
        return [r for r in self.results if r.status == "ok"]

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "results": [asdict(r) for r in self.results],
            "rates": self.rates,
            "rates_withheld": self.rates_withheld,
            "peak_E_ratio": self.peak_E_ratio,
            "cpe_wall_time": self.cpe_wall_time,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunSummary":
        return cls(d["config"], [EpsResult(**r) for r in d["results"]], d["rates"],
                   d.get("rates_withheld"), d.get("cpe_wall_time", 0.0), d.get("peak_E_ratio"))

    def rate_lines(self) -> list[str]:
        if not self.rates:
            return [f"rates withheld: {self.rates_withheld}"]
        out = [f"{'quantity':<24}{'slope':>10}{'target':>10}{'max resid':>12}"]
        for name, r in self.rates.items():
            out.append(f"{name:<24}{r['slope']:>10.4f}{r['target']:>10.4f}{r['max_residual']:>12.3e}")
        return out


# --------------------------------------------------------------------------- io

def csv_name(eps: float) -> str:
    return f"eps_{eps!r}.csv"


def write_csv(path, records: list[DiagnosticsRecord]) -> None:
    cols = DiagnosticsRecord.columns()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            w.writerow([repr(float(getattr(r, c))) for c in cols])


def read_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty file")
    cols = rows[0]
    if cols != DiagnosticsRecord.columns():
        raise ValueError(f"{path}: unexpected columns {cols}")
    data = np.array([[float(x) for x in row] for row in rows[1:]], dtype=float).reshape(-1, len(cols))
    return {c: data[:, i] for i, c in enumerate(cols)}


# ------------------------------------------------------------------ aggregates

def _l2_time(values: np.ndarray, t: np.ndarray) -> float:
    if len(t) < 2:
        return 0.0
    return float(math.sqrt(np.trapezoid(values ** 2, t)))


def aggregate(series: dict[str, np.ndarray]) -> dict[str, float]:
    """Sup-in-time and L2-in-time aggregates of one eps time series."""
    t = series["time"]
    sv = series["delta_sigma_l2"] + series["delta_v_l2"]
    out = {
        "peak_E": float(series["E"].max()),
        "int_D2": float(np.trapezoid(series["D"] ** 2, t)) if len(t) > 1 else 0.0,
        "sup_delta_sigma_v": float(sv.max()),
        "l2_delta_sigma_v": _l2_time(sv, t),
    }
    for c in DiagnosticsRecord.columns()[5:]:
        out[f"sup_{c}"] = float(series[c].max())
        out[f"l2_{c}"] = _l2_time(series[c], t)
    return out


def fit_rates(eps_aggs: list[tuple[float, dict[str, float]]]):
    """Fit every rate in ``RATE_TARGETS``; returns ``(rates, withheld_reason)``."""
    if len(eps_aggs) < 3:
        return {}, f"only {len(eps_aggs)} eps values completed (need 3)"
    rates, skipped = {}, []
    for name, (key, target) in RATE_TARGETS.items():
        pts = [(e, a[key]) for e, a in eps_aggs]
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                fit = fit_rate(pts)
        except ValueError as exc:
            skipped.append(f"{name}: {exc}")
            continue
        rates[name] = {"slope": fit.slope, "intercept": fit.intercept,
                       "max_residual": fit.max_residual, "target": target,
                       "n_points": fit.n_points, "excluded": fit.excluded}
    return rates, ("; ".join(skipped) or None)


def _peak_ratio(eps_aggs) -> float | None:
    peaks = [a["peak_E"] for _, a in eps_aggs]
    if not peaks or min(peaks) <= 0:
        return None
    return max(peaks) / min(peaks)


# -------------------------------------------------------------------- running

@dataclass
class _Snapshot:
    """Physical arrays of a hydrostatic state; rebuilt exactly on demand."""

    time: float
    sigma_p: np.ndarray
    vp1: np.ndarray
    vp2: np.ndarray
    wp: np.ndarray

    @classmethod
    def of(cls, s: CpeState) -> "_Snapshot":
        return cls(s.time, s.sigma_p.physical(), s.vp1.physical(), s.vp2.physical(), s.wp.physical())

    def state(self, grid: Grid) -> CpeState:
        return CpeState(HorizontalField.from_physical(grid, self.sigma_p, dealias=True),
                        to_spectral(self.vp1, grid, Parity.EVEN, dealias=True),
                        to_spectral(self.vp2, grid, Parity.EVEN, dealias=True),
                        to_spectral(self.wp, grid, Parity.ODD, dealias=True),
                        self.time)


def _record_steps(nsteps: int, every: int) -> list[int]:
    steps = list(range(0, nsteps + 1, every))
    if steps[-1] != nsteps:
        steps.append(nsteps)
    return steps


def _run_eps(cfg: ExperimentConfig, grid: Grid, eps: float, cpe0: CpeState,
             snaps: dict[int, _Snapshot], out: Path) -> EpsResult:
    step_cfg = StepperConfig(cfg.dt, cfg.scheme)
    make = make_well_prepared_ic if cfg.ic_kind == "well-prepared" else make_illprepared_ic
    path = out / csv_name(eps)
    t0 = _time.perf_counter()
    records: list[DiagnosticsRecord] = []
    state = make(cpe0, eps, cfg.amplitude)
    integ = CfIntegrator(step_cfg)
    status, error, ckpt = "ok", None, None
    tol = 0.5 * cfg.dt
    try:
        records.append(record(state, snaps[0].state(grid), tol))
        for n in range(1, cfg.nsteps + 1):
            prev_state, prev_hist = state, integ.prev
            try:
                state = integ.step(state)
            except DivergenceError as exc:
                status, error = "diverged", str(exc)
                state, integ.prev = prev_state, prev_hist
                break
            if n in snaps:
                records.append(record(state, snaps[n].state(grid), tol))
    except Exception as exc:  # flagged, the sweep continues
        status, error = "error", f"{type(exc).__name__}: {exc}"
    write_csv(path, records)
    if cfg.checkpoint or status != "ok":
        ckpt = out / f"eps_{eps!r}.hlim"
        checkpoint_write(state, ckpt, integ.prev)
        ckpt = ckpt.name
    aggs = aggregate(read_csv(path)) if records else {}
    return EpsResult(eps, status, path.name, aggs, _time.perf_counter() - t0, error, ckpt)


def run_experiment(config: ExperimentConfig, out: str | os.PathLike | None = None) -> RunSummary:
    """Run the sweep described by ``config`` and write its outputs.

    Outputs in the output directory: one CSV per eps, a final checkpoint
    per eps and ``summary.json``. A diverging eps is flagged in the summary
    and the sweep continues.
    """
    if not isinstance(config, ExperimentConfig):
        raise ConfigError("config must be an ExperimentConfig")
    out = Path(out if out is not None else config.out)
    out.mkdir(parents=True, exist_ok=True)
    grid = Grid(*config.grid)
    step_cfg = StepperConfig(config.dt, config.scheme)

    t0 = _time.perf_counter()
    cpe0 = reference_cpe_init(grid, config.base_amplitude)
    wanted = set(_record_steps(config.nsteps, config.record_every))
    snaps = {0: _Snapshot.of(cpe0)}
    integ = CpeIntegrator(step_cfg)
    s = cpe0
    for n in range(1, config.nsteps + 1):
        s = integ.step(s)
        if n in wanted:
            snaps[n] = _Snapshot.of(s)
    cpe_time = _time.perf_counter() - t0
    log.info("hydrostatic reference: %d steps in %.1f s", config.nsteps, cpe_time)

    results = []
    for eps in config.eps_list:
        res = _run_eps(config, grid, eps, cpe0, snaps, out)
        log.info("eps=%g: %s in %.1f s", eps, res.status, res.wall_time)
        results.append(res)

    done = [(r.eps, r.aggregates) for r in results if r.status == "ok"]
    rates, withheld = fit_rates(done)
    summary = RunSummary(config.to_dict(), results, rates, withheld, cpe_time, _peak_ratio(done))
    with open(out / SUMMARY_FILE, "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2)
    return summary


def summary_from_dir(path) -> tuple[RunSummary, RunSummary]:
    """Load ``summary.json`` and recompute aggregates and rates from the CSVs.

    Returns ``(stored, recomputed)``.
    """
    path = Path(path)
    with open(path / SUMMARY_FILE) as fh:
        stored = RunSummary.from_dict(json.load(fh))
    results = []
    for r in stored.results:
        aggs = aggregate(read_csv(path / r.csv)) if r.aggregates else {}
        results.append(EpsResult(r.eps, r.status, r.csv, aggs, r.wall_time, r.error, r.checkpoint))
    done = [(r.eps, r.aggregates) for r in results if r.status == "ok"]
    rates, withheld = fit_rates(done)
    recomputed = RunSummary(stored.config, results, rates, withheld, stored.cpe_wall_time,
                            _peak_ratio(done))
    return stored, recomputed


def max_discrepancy(a: RunSummary, b: RunSummary) -> float:
    """Largest relative difference between aggregates and fitted slopes."""
    worst = 0.0

    def rel(x, y):
        return abs(x - y) / max(1.0, abs(x), abs(y))

    for ra, rb in zip(a.results, b.results):
        if set(ra.aggregates) != set(rb.aggregates):
            return math.inf
        for k, v in ra.aggregates.items():
            worst = max(worst, rel(v, rb.aggregates[k]))
    if set(a.rates) != set(b.rates):
        return math.inf
    for k, r in a.rates.items():
        for f in ("slope", "intercept", "max_residual"):
            worst = max(worst, rel(r[f], b.rates[k][f]))
    return worst
