"""
Command line interface.

    hydrolim run <config.json> [--out DIR]
    hydrolim rates <summary-dir>
    hydrolim oracle
    hydrolim check

Global flags: ``--threads N`` (FFT workers, 0 = one per CPU) and
``--quiet``. The environment variable ``HYDROLIM_OUT`` overrides ``--out``.
"""
from __future__ import annotations

import argparse
import logging
import math
import os
import sys
import tempfile
import warnings

import numpy as np

__all__ = ["cli_main", "build_parser", "run_checks"]

log = logging.getLogger("hydrolim")

ORACLE_EPS = (0.2, 0.1, 0.05)
RATES_TOL = 1e-12


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a flag given before the subcommand from being reset
    common.add_argument("--threads", type=int, default=argparse.SUPPRESS, metavar="N",
                        help="FFT worker threads (0 = one per CPU)")
    common.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS,
                        help="only print errors")

    p = argparse.ArgumentParser(prog="hydrolim", parents=[common],
                                description="eps-sweep lab for the hydrostatic limit")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    r = sub.add_parser("run", parents=[common], help="run an eps sweep from a JSON config")
    r.add_argument("config_path", nargs="?", metavar="config")
    r.add_argument("--config", dest="config_opt", metavar="PATH")
    r.add_argument("--out", metavar="DIR")

    q = sub.add_parser("rates", parents=[common], help="recompute rates from a run directory")
    q.add_argument("summary_dir", metavar="summary-dir")

    sub.add_parser("oracle", parents=[common], help="linear-model eigenvalue table")
    sub.add_parser("check", parents=[common], help="invariant suite on a small grid")
    return p


def _cmd_run(args) -> int:
    from .harness import ConfigError, ExperimentConfig, run_experiment

    path = args.config_opt or args.config_path
    if path is None:
        print("error: run needs a config file", file=sys.stderr)
        return 2
    if not os.path.isfile(path):
        print(f"error: config file not found: {path}", file=sys.stderr)
        return 1
    try:
        cfg = ExperimentConfig.load(path)
    except ConfigError as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1
    out = os.environ.get("HYDROLIM_OUT") or args.out or cfg.out
    summary = run_experiment(cfg, out)
    if not args.quiet:
        for r in summary.results:
            line = f"eps={r.eps:<8g} {r.status:<9} {r.wall_time:7.1f} s"
            if r.aggregates:
                line += f"  peak E {r.aggregates['peak_E']:.4g}  sup d(sigma,v) {r.aggregates['sup_delta_sigma_v']:.4g}"
            print(line)
        for line in summary.rate_lines():
            print(line)
        print(f"outputs in {out}")
    return 0 if all(r.status == "ok" for r in summary.results) else 1


def _cmd_rates(args) -> int:
    from .harness import max_discrepancy, summary_from_dir

    d = args.summary_dir
    if not os.path.isfile(os.path.join(d, "summary.json")):
        print(f"error: no summary.json in {d}", file=sys.stderr)
        return 1
    stored, recomputed = summary_from_dir(d)
    for line in recomputed.rate_lines():
        print(line)
    gap = max_discrepancy(stored, recomputed)
    ok = gap <= RATES_TOL
    print(f"csv vs summary.json max relative difference {gap:.3e} ({'ok' if ok else 'MISMATCH'})")
    return 0 if ok else 1


def _cmd_oracle(args) -> int:
    from .oracle import mode_eigen, uniform_bound_check

    print("linear model, mode (0,0,1): eigenvalues of the vertical block")
    print(f"{'eps':>8}  {'computed':>34}  {'closed form':>34}  {'|error|':>9}")
    worst = 0.0
    for eps in ORACLE_EPS:
        lam = mode_eigen((0, 0, 1), eps).values
        re = -math.pi ** 2 / 2
        im = 0.5 * math.pi * math.sqrt(4 / eps ** 2 - math.pi ** 2)
        exact = np.array([re - 1j * im, re + 1j * im])
        lam = lam[np.argsort(lam.imag)]
        err = float(np.abs(lam - exact).max())
        worst = max(worst, err)
        for c, e in zip(lam, exact):
            print(f"{eps:>8g}  {c.real:>16.10f}{c.imag:+16.10f}i  {e.real:>16.10f}{e.imag:+16.10f}i  {err:9.2e}")
    rep = uniform_bound_check(ORACLE_EPS, np.linspace(0.0, 1.0, 201), scale_vertical=True)
    print()
    for line in rep.lines():
        print(line)
    return 0 if worst <= 1e-10 else 1


def run_checks(n: int = 16, nsteps: int = 20) -> list[tuple[str, bool, str]]:
    """Fast invariant suite; returns ``(name, passed, detail)`` triples."""
    from .cf import (CfIntegrator, InconsistencyWarning, StepperConfig, mass,
                     mixed_wave_residual, reconstruct_w, time_derivatives)
    from .checkpoint import checkpoint_read, checkpoint_write
    from .cpe import CpeIntegrator
    from .oracle import mode_eigen
    from .spectral import Grid, Parity, hs_norm, project_parity, to_physical
    from .state import make_well_prepared_ic, random_state, reference_cpe_init

    out = []
    g = Grid(n, n, n)
    dt, eps = 2.5e-4, 0.1
    cfg = StepperConfig(dt)

    lam = mode_eigen((0, 0, 1), eps).values
    exact = -math.pi ** 2 / 2 + 0.5j * math.pi * math.sqrt(400 - math.pi ** 2)
    err = float(np.abs(np.sort(lam[lam.imag > 0]) - exact).max())
    out.append(("oracle eigenvalues", err <= 1e-10, f"error {err:.2e}"))

    cpe0 = reference_cpe_init(g)
    s0 = make_well_prepared_ic(cpe0, eps)
    it = CfIntegrator(cfg)
    s = it.advance(s0, nsteps)
    leak = max(hs_norm(project_parity(f, "odd" if f.parity is Parity.EVEN else "even"), 0)
               / max(hs_norm(f, 0), 1e-300) for f in s.fields)
    out.append(("parity leakage", leak <= 1e-12, f"{leak:.2e}"))
    m0, m1 = mass(s0), mass(s)
    drift = abs(m1 - m0) / abs(m0)
    out.append(("mass drift", drift <= 1e-8, f"{drift:.2e}"))
    d = time_derivatives(s)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InconsistencyWarning)
        w = reconstruct_w(s.sigma, d.sigma_t, s.v1, s.v2)
    werr = hs_norm(w - s.w, 0) / hs_norm(s.w, 0)
    out.append(("w reconstruction", werr <= 10 * dt, f"{werr:.2e}"))

    rs = random_state(Grid(32, 32, 32), eps, kmax=8, rng=0)
    res = mixed_wave_residual(rs, relative=True)
    out.append(("mixed-wave identity", res <= 1e-8, f"{res:.2e}"))

    ci = CpeIntegrator(cfg)
    c = cpe0
    wtop = 0.0
    for _ in range(nsteps):
        c = ci.step(c)
        wtop = max(wtop, float(np.abs(to_physical(c.wp)[:, :, n // 2]).max()))
    out.append(("w_p at z=1", wtop <= 1e-12, f"{wtop:.2e}"))

    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "s.hlim")
        checkpoint_write(s, path, it.prev)
        back, hist = checkpoint_read(path, with_history=True)
        same = all(np.array_equal(a.coeffs, b.coeffs) for a, b in zip(s.fields, back.fields))
        same = same and back.epsilon == s.epsilon and back.time == s.time
        a = CfIntegrator(cfg, it.prev).advance(s, 5)
        b = CfIntegrator(cfg, hist).advance(back, 5)
        gap = max(float(np.abs(x.coeffs - y.coeffs).max()) for x, y in zip(a.fields, b.fields))
    out.append(("checkpoint round trip", same, "bit-exact" if same else "differs"))
    out.append(("checkpoint resume", gap <= 1e-14, f"{gap:.2e}"))
    return out


def _cmd_check(args) -> int:
    results = run_checks()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name:<24} {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else 0
    args.quiet = getattr(args, "quiet", False)
    args.threads = getattr(args, "threads", None)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(message)s")
    if args.threads is not None:
        from .spectral import set_workers
        if args.threads < 0:
            print("error: --threads must be >= 0", file=sys.stderr)
            return 2
        set_workers(args.threads)
    handlers = {"run": _cmd_run, "rates": _cmd_rates, "oracle": _cmd_oracle, "check": _cmd_check}
    try:
        return handlers[args.command](args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())
