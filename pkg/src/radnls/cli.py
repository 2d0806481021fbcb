"""Command-line front door: ``radnls <command> [--config FILE] [--out DIR] ...``.

Exit codes: 0 when every check passes, 1 on any FAIL row, 2 on usage,
configuration or I/O errors.
"""
from __future__ import annotations

import argparse
import itertools
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from . import inequality_lab as lab
from . import morawetz as mw
from .config import Config, ConfigError, keys, load_config, parse_value
from .grid import GridError, build_grid
from .profiles import GaussianMixture, RingBump, random_radial_family
from .report import FAIL, INFO, DiagnosticsReport, emit_report, write_table
from .solver import (
    DomainBreachError,
    SolverConfig,
    Trajectory,
    evolve,
    free_trajectory,
    load_checkpoint,
    save_checkpoint,
)
from .spectral import SpectralPreconditionError, apply_multiplier, dyadic_ge, dyadic_lt

log = logging.getLogger("radnls")

COMMANDS = ("simulate", "diagnose", "verify-weights", "verify-morawetz",
            "verify-appendix", "verify-strichartz", "sweep")
CHECKPOINT = "trajectory.npz"


class Outcome:
    """A suite's main report plus side tables written next to it."""

    def __init__(self, report: DiagnosticsReport, tables: dict | None = None, traj=None):
        self.report = report
        self.tables = tables or {}
        self.traj = traj


# --- shared pieces -------------------------------------------------------------------

def make_grid(cfg: Config):
    return build_grid(cfg.dimension, cfg.grid.max_radius, cfg.grid.nodes, cfg.grid.scheme)


def initial_data(cfg: Config, grid):
    i = cfg.initial
    n = cfg.dimension
    if i.profile == "gaussian":
        prof = GaussianMixture.single(n, i.amplitude, i.width)
        desc = {"profile": "gaussian", "amplitude": i.amplitude, "width": i.width}
        return prof.sample(grid), desc
    if i.profile == "ring_bump":
        prof = RingBump(n, i.center, i.width, i.amplitude)
        desc = {"profile": "ring_bump", "center": i.center, "width": i.width, "amplitude": i.amplitude}
        return prof.sample(grid), desc
    fam = random_radial_family(i.seed, 1, "band_limited", n, grid=grid, band=(i.band_lo, i.band_hi))
    f = fam.fields[0] * i.amplitude
    return f, {"profile": "band_limited", "seed": i.seed, "band": [i.band_lo, i.band_hi],
               "amplitude": i.amplitude}


def solver_config(cfg: Config) -> SolverConfig:
    s = cfg.solver
    return SolverConfig(dt=s.dt, t_end=s.t_end, record_stride=s.record_stride, scheme=s.scheme,
                        dealias=s.dealias, nonlinear=s.nonlinear)


def fresh_run(cfg: Config) -> Trajectory:
    grid = make_grid(cfg)
    u0, desc = initial_data(cfg, grid)
    return evolve(u0, solver_config(cfg), desc)


def _report(suite: str, cfg: Config) -> DiagnosticsReport:
    return DiagnosticsReport(suite, cfg.as_dict())


# --- suites --------------------------------------------------------------------------

def suite_simulate(cfg: Config, traj: Trajectory | None = None) -> Outcome:
    t0 = time.perf_counter()
    traj = fresh_run(cfg) if traj is None else traj
    rep = _report("simulate", cfg)
    nl = bool(traj.provenance.get("nonlinear", True))
    m = np.array([dg.mass(f) for f in traj.fields])
    for t, f, mv in zip(traj.times, traj.fields, m):
        e = dg.energy(f, nonlinear=nl)
        rep.add(INFO, t=float(t), mass=float(mv), kinetic=e.kinetic, potential=e.potential,
                energy=e.total)
    v = cfg.verify
    md, ed = traj.provenance["mass_drift"], traj.provenance["energy_drift"]
    rep.check(md <= v.mass_tolerance, f"relative mass drift <= {v.mass_tolerance:g}", md,
              v.mass_tolerance, check="mass_drift")
    rep.check(ed <= v.energy_tolerance, f"relative energy drift <= {v.energy_tolerance:g}", ed,
              v.energy_tolerance, check="energy_drift")
    rep.summary.update(mass_drift=md, energy_drift=ed, steps=traj.provenance["steps"],
                       states=len(traj))
    rep.timings["evolve_seconds"] = traj.provenance.get("wall_seconds", 0.0)
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep, traj=traj)


def suite_diagnose(cfg: Config, traj: Trajectory) -> Outcome:
    t0 = time.perf_counter()
    eps = cfg.eps
    n = traj.grid.dimension
    rep = _report("diagnose", cfg)
    for t, f in zip(traj.times, traj.fields):
        rep.add(INFO, quantity="mass", t=float(t), value=dg.mass(f))
    terms = dg.s_norm_terms(traj, eps)
    q = 2 * (n + 2) / n
    rep.add(INFO, quantity="s_norm", value=terms.total)
    rep.add(INFO, quantity="s_norm_weighted", value=terms.weighted)
    rep.add(INFO, quantity="linf_l2", value=terms.mass_term)
    rep.add(INFO, quantity="critical_norm", value=dg.spacetime_norm(traj, q, q))
    for N in cfg.verify.n_list:
        rep.add(INFO, quantity="q_functional", N=float(N), value=dg.q_functional(traj, N, eps))
    decay = dg.high_freq_s_decay(traj, cfg.verify.n_list, eps)
    prof = dg.concentration_profile(traj, cfg.verify.eta_grid)
    rep.summary.update(s_norm=terms.total, frequency_scale_t0=float(prof.N_of_t[0]),
                       C_of_eta=dict(zip(map(str, prof.eta_grid), map(float, prof.C_of_eta))))
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep, {"s_decay": decay.rows(), "concentration": prof.rows()})


def weight_pairs(cfg: Config) -> list[tuple[int, float]]:
    v = cfg.verify
    dims = v.weight_dimensions or (cfg.dimension,)
    epss = v.weight_epsilons or (cfg.eps,)
    return list(itertools.product(dims, epss))


def suite_weights(cfg: Config) -> Outcome:
    rep = _report("verify-weights", cfg)
    t0 = time.perf_counter()
    for n, eps in weight_pairs(cfg):
        sub = mw.verify_pointwise_bounds(eps, n, floor=cfg.verify.weight_floor)
        rep.rows.extend(sub.rows)
        for k, val in sub.summary.items():
            rep.summary[f"n={n},eps={eps:g}:{k}"] = val
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep)


def suite_morawetz(cfg: Config, traj: Trajectory | None = None) -> Outcome:
    t0 = time.perf_counter()
    traj = fresh_run(cfg) if traj is None else traj
    eps = cfg.eps
    rep = mw.verify_monotonicity(traj, eps, fd_tolerance=cfg.verify.fd_tolerance)
    rep.config = cfg.as_dict()
    for i, f in enumerate(traj.fields):
        lhs, rhs = mw.bracket_identity(f, eps)
        rel = abs(lhs - rhs) / max(abs(rhs), 1e-300)
        if rel > 1e-4:
            rep.check(False, "bracket identity relative error <= 1e-4", lhs, rhs,
                      t=float(traj.times[i]), check="bracket_identity")
    N = cfg.verify.localize_n
    if N > 0:
        lo, G = mw.frequency_localized(traj, N)
        sub = mw.verify_monotonicity(lo, eps, G, fd_tolerance=cfg.verify.fd_tolerance)
        for r in sub.rows:
            rep.rows.append(dict(r, localized_N=N))
        rep.summary.update({f"localized.{k}": v for k, v in sub.summary.items()})
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep, traj=traj)


def _ratio_rows(rep: DiagnosticsReport, ratio: lab.RatioReport) -> None:
    rep.summary[f"{ratio.check}.sup_ratio"] = ratio.sup_ratio
    if ratio.scaling_residual is not None:
        rep.summary[f"{ratio.check}.scaling_residual"] = ratio.scaling_residual


def suite_appendix(cfg: Config, workers: int = 1) -> Outcome:
    t0 = time.perf_counter()
    v = cfg.verify
    n = cfg.dimension
    rep = _report("verify-appendix", cfg)
    fam_f = random_radial_family(v.seed, v.samples, "dilation_orbit", n)
    fam_g = random_radial_family(v.seed + 1, v.samples, "dilation_orbit", n)
    orbit = [m["orbit"] for m in fam_f.metadata]
    f, g = list(fam_f.members), list(fam_g.members)
    tables = {}

    bil = lab.check_bilinear(f, g, 2.0, 2.0, -(n - 1) / 2, -(n + 1) / 2, orbit=orbit, workers=workers)
    rep.check(bil.scaling_residual <= v.bilinear_tolerance, "bilinear dilation residual",
              bil.scaling_residual, v.bilinear_tolerance, check="bilinear")
    tables["bilinear"] = bil.rows()
    rep.timings["bilinear_seconds"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    p = 2 * n / (n + 1)
    hls = lab.check_hls(f, g, p, p, 1.0, orbit=orbit, workers=workers)
    rep.check(hls.scaling_residual <= v.hls_tolerance, "HLS dilation residual",
              hls.scaling_residual, v.hls_tolerance, check="hls")
    rep.check(not hls.flags["refinement_failed"], "HLS refinement change <= 1%",
              hls.flags["refinement_change"], lab.SELF_CONVERGENCE_TOL, check="hls_self_convergence")
    tables["hls"] = hls.rows()
    rep.timings["hls_seconds"] = time.perf_counter() - t1

    t1 = time.perf_counter()
    sob = lab.check_radial_sobolev(f, preset="first", eps=cfg.eps, orbit=orbit, workers=workers)
    rep.check(sob.scaling_residual <= v.sobolev_tolerance, "radial Sobolev dilation residual",
              sob.scaling_residual, v.sobolev_tolerance, check="radial_sobolev")
    tables["radial_sobolev"] = sob.rows()
    rep.timings["sobolev_seconds"] = time.perf_counter() - t1

    t1 = time.perf_counter()
    ugrid = lab.uncertainty_grid(n)
    lo, hi = v.uncertainty_exponents
    unc = lab.check_uncertainty(GaussianMixture.single(n).sample(ugrid), 0.5, 2.0,
                                [2.0**k for k in range(int(lo), int(hi) + 1)])
    spread = float(unc.ratios.max() / unc.ratios.min())
    slope = lab.top_decade_slope(unc)
    rep.check(spread <= v.uncertainty_spread, "uncertainty max/min ratio over N",
              spread, v.uncertainty_spread, check="uncertainty_spread")
    rep.check(abs(slope) <= v.uncertainty_slope, "uncertainty |top-decade slope|",
              abs(slope), v.uncertainty_slope, check="uncertainty_slope")
    tables["uncertainty"] = unc.rows()
    rep.timings["uncertainty_seconds"] = time.perf_counter() - t1

    for r in (bil, hls, sob, unc):
        _ratio_rows(rep, r)
    rep.summary["uncertainty.spread"] = spread
    rep.summary["uncertainty.top_decade_slope"] = slope
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep, tables)


def suite_strichartz(cfg: Config, workers: int = 1) -> Outcome:
    t0 = time.perf_counter()
    v = cfg.verify
    n, eps = cfg.dimension, cfg.eps
    rep = _report("verify-strichartz", cfg)
    tables = {}

    free = lab.check_weighted_strichartz(GaussianMixture.single(n).sample(lab.strichartz_grid(n)),
                                         interval=v.strichartz_times, eps=eps)
    growth = lab.saturation_growth(free, 10.0, 100.0) if {10.0, 100.0} <= set(v.strichartz_times) else 0.0
    rep.check(growth < v.saturation_growth, "free S-norm ratio growth from T=10 to T=100",
              growth, v.saturation_growth, check="strichartz_saturation")
    tables["strichartz_free"] = free.rows()
    rep.timings["free_seconds"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    fgrid = build_grid(n, 64.0, 256)
    fam = random_radial_family(v.seed, v.samples, "band_limited", n, grid=fgrid)
    forced = lab.check_weighted_strichartz(G=list(fam.fields), interval=(2.0,), eps=eps)
    rep.add(INFO, check="strichartz_forced", sup_ratio=forced.sup_ratio)
    tables["strichartz_forced"] = forced.rows()
    rep.timings["forced_seconds"] = time.perf_counter() - t1

    t1 = time.perf_counter()
    grid = build_grid(n, 20.0, 512)
    tr = free_trajectory(GaussianMixture.single(n).sample(grid), np.linspace(0.0, 0.5, 11))
    basic = lab.check_nonlinear_estimates(tr, tr, "basic", eps)
    rows = basic.rows()
    lo = tr.map(lambda x: apply_multiplier(x, dyadic_lt(1.0)))
    for variant in ("refined_1", "refined_2"):
        for M in (4.0, 8.0):
            hi = tr.map(lambda x, M=M: apply_multiplier(x, dyadic_ge(M)))
            r = lab.check_nonlinear_estimates(lo, hi, variant, eps, band_gap=M)
            rows += r.rows()
            rep.add(INFO, check=r.check, band_gap=M, ratio=r.sup_ratio)
    rep.add(INFO, check="nonlinear_basic", ratio=basic.sup_ratio)
    tables["nonlinear"] = rows
    rep.timings["nonlinear_seconds"] = time.perf_counter() - t1
    _ratio_rows(rep, free)
    rep.summary["strichartz_forced.sup_ratio"] = forced.sup_ratio
    rep.summary["saturation_growth"] = growth
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep, tables)


def suite_sweep(cfg: Config, workers: int = 1) -> Outcome:
    t0 = time.perf_counter()
    sw = cfg.sweep
    combos = list(itertools.product(sw.dimensions, sw.epsilons))

    def one(combo):
        n, eps = combo
        sub = cfg.replace(dimension=int(n), epsilon=float(eps),
                          **{"verify.weight_dimensions": (), "verify.weight_epsilons": ()})
        if sw.suite == "verify-weights":
            return suite_weights(sub).report
        if sw.suite == "verify-morawetz":
            return suite_morawetz(sub).report
        return suite_simulate(sub).report

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            subs = list(ex.map(one, combos))
    else:
        subs = [one(c) for c in combos]
    rep = _report("sweep", cfg)
    for (n, eps), sub in zip(combos, subs):
        for r in sub.rows:
            rep.rows.append(dict({"n": int(n), "eps": float(eps), "suite": sw.suite}, **r))
        rep.summary[f"n={n},eps={eps:g}:passed"] = sub.passed
    rep.summary["groups"] = len(combos)
    rep.timings["total_seconds"] = time.perf_counter() - t0
    return Outcome(rep)


# --- argument handling --------------------------------------------------------------------

def _override_dest(key: str) -> str:
    return "set__" + key.replace(".", "__")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radnls", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        p.add_argument("--out", help="output directory (overrides output.directory)")
        p.add_argument("--seed", type=int, help="seed for families and band-limited data")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
        if name in ("diagnose", "verify-morawetz"):
            p.add_argument("--checkpoint", help=f"trajectory checkpoint (default <out>/{CHECKPOINT})")
        g = p.add_argument_group("config overrides")
        for key in keys():
            g.add_argument(f"--{key}", dest=_override_dest(key), metavar="VALUE")
    return ap


def resolve_config(args) -> Config:
    cfg = load_config(args.config)
    flat = {}
    for key in keys():
        raw = getattr(args, _override_dest(key), None)
        if raw is not None:
            try:
                flat[key] = parse_value(key, raw)
            except ValueError as e:
                raise ConfigError(f"--{key}: {e}") from None
    if args.out is not None:
        flat["output.directory"] = args.out
    if args.seed is not None:
        flat["verify.seed"] = args.seed
        flat["initial.seed"] = args.seed
    return cfg.replace(**flat) if flat else cfg


def _write(outcome: Outcome, cfg: Config, stem: str) -> None:
    out = Path(cfg.output.directory)
    emit_report(outcome.report, out, cfg.output.formats, stem)
    if "csv" in cfg.output.formats:
        for name, rows in outcome.tables.items():
            write_table(rows, out / f"{stem}_{name}.csv")


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0) if e.code in (0, None) else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        out = Path(cfg.output.directory)
        cmd = args.command
        workers = max(1, args.workers)
        checkpoint = getattr(args, "checkpoint", None)
        if cmd == "simulate":
            res = suite_simulate(cfg)
            out.mkdir(parents=True, exist_ok=True)
            save_checkpoint(res.traj, out / CHECKPOINT)
        elif cmd == "diagnose":
            res = suite_diagnose(cfg, load_checkpoint(checkpoint or out / CHECKPOINT))
        elif cmd == "verify-weights":
            res = suite_weights(cfg)
        elif cmd == "verify-morawetz":
            res = suite_morawetz(cfg, load_checkpoint(checkpoint) if checkpoint else None)
        elif cmd == "verify-appendix":
            res = suite_appendix(cfg, workers)
        elif cmd == "verify-strichartz":
            res = suite_strichartz(cfg, workers)
        else:
            res = suite_sweep(cfg, workers)
        _write(res, cfg, cmd.replace("-", "_"))
    except ConfigError as e:
        print(f"radnls: configuration error: {e}", file=sys.stderr)
        return 2
    except (OSError, ValueError, GridError, DomainBreachError, SpectralPreconditionError) as e:
        print(f"radnls: {cmd}: {e}", file=sys.stderr)
        return 2
    rep = res.report
    for r in rep.failures:
        print(f"FAIL {r.get('check', r.get('quantity', ''))}: {r['bound']} "
              f"(lhs={r['lhs']}, rhs={r['rhs']})", file=sys.stderr)
    print(f"{cmd}: {len(rep.rows)} rows, {len(rep.failures)} failures -> {out}")
    return 0 if rep.passed else 1


def main() -> None:
    sys.exit(run_command())
