"""Command-line runner: ``entrolab <subcommand> --config FILE [options]``.

Exit codes: 0 success, 1 invariant violation, 2 configuration error.
"""
from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import GueCurveParams, gue_s2bar
from .artifacts import plot_csv, provenance_line, write_csv
from .bounds import (
    FORMULAS,
    BoundContext,
    BoundError,
    bound_k_local,
    bound_mfim,
    compare_report,
    sweep_bounds,
)
from .config import ConfigError, ExperimentConfig, default_config, load
from .dynamics import (
    CURVE_HEADER,
    DynamicsError,
    EvolutionEngine,
    GrowthExperiment,
    build_km_state,
    entropy_rate_analytic,
    fit_linear_window,
    haar_product_state,
    reduced_spectra,
    renyi_from_spectrum,
    run_growth_experiment,
)
from .hamiltonians import (
    DIM_CAP,
    ModelError,
    boundary_term_count,
    build_mfim,
    build_syk_dot,
    majorana_boundary_count,
    sample_gue,
)
from .inequalities import (
    CAMPAIGN_HEADER,
    InequalityError,
    run_fuzz_campaign,
    search_alpha_lt1_counterexample,
)
from .linalg import Bipartition, LinalgError

MAX_L = 12
MAX_N = 14
CHECK_TOL = 1e-10

FUZZ_SUMMARY_HEADER = ("checker", "checks", "violations", "min_margin")
SEARCH_HEADER = ("alpha", "samples", "violations", "found", "seed", "dim", "lhs", "rhs",
                 "relative_violation", "margin_floor_1e-10", "margin_floor_1e-12", "margin_floor_1e-14")
GUE_HEADER = ("t", "mc_mean", "mc_stderr", "analytic", "abs_diff")
MFIM_CURVE_HEADER = ("J",) + CURVE_HEADER
MFIM_SLOPE_HEADER = ("J", "slope", "intercept", "t_start", "t_end", "residual", "v_e",
                     "bound", "ratio", "flag", "alpha_monotone", "cap_ok")
SYK_CENSUS_HEADER = ("sample", "N", "v_boundary", "v_boundary_majorana", "hbar", "alpha",
                     "max_rate", "bound", "ratio", "flag")


@dataclasses.dataclass
class Outcome:
    """What a subcommand produced: written files, printable summary, violation flag."""

    paths: list
    summary: list
    violation: bool = False


class Context:
    def __init__(self, cfg: ExperimentConfig, unsafe_dims: bool = False):
        self.cfg = cfg
        self.p = cfg.params
        self.seed = int(cfg.run["seed"])
        self.jobs = int(cfg.run["jobs"])
        self.out = Path(cfg.run["out"])
        self.svg = bool(cfg.run["svg"])
        self.cap = None if unsafe_dims else DIM_CAP
        self.unsafe = unsafe_dims
        self.provenance = provenance_line(cfg.digest(), self.seed, cfg.kind)

    def csv(self, name, header, rows):
        return write_csv(self.out / name, header, rows, self.provenance)


def _positive_int(p, key):
    if p[key] < 1:
        raise ConfigError(f"{key} must be >= 1, got {p[key]}")


def _time_grid(p) -> np.ndarray:
    if not p["t_max"] > 0:
        raise ConfigError("t_max must be > 0")
    if p["n_times"] < 2:
        raise ConfigError("n_times must be >= 2")
    return np.linspace(0.0, p["t_max"], p["n_times"])


def _alphas(p) -> list[float]:
    a = [float(x) for x in p["alphas"]]
    if not a or any(not x > 0 for x in a):
        raise ConfigError("alphas must be a non-empty list of positive numbers")
    return sorted(set(a))


# -- subcommands -------------------------------------------------------------

def cmd_fuzz_inequalities(ctx: Context) -> Outcome:
    p = ctx.p
    _positive_int(p, "pairs")
    _positive_int(p, "search_samples")
    if not 2 <= p["dim_min"] <= p["dim_max"]:
        raise ConfigError("need 2 <= dim_min <= dim_max")
    if not 2 <= p["search_dim_min"] <= p["search_dim_max"]:
        raise ConfigError("need 2 <= search_dim_min <= search_dim_max")
    if not 0 < p["search_alpha"] < 1:
        raise ConfigError("search_alpha must lie in (0, 1)")
    alphas = _alphas(p)
    if any(a <= 1 for a in alphas):
        raise ConfigError("campaign alphas must all exceed 1")
    camp = run_fuzz_campaign(p["pairs"], alphas, (p["dim_min"], p["dim_max"]), ctx.seed,
                             p["physical_fraction"])
    search = search_alpha_lt1_counterexample((p["search_dim_min"], p["search_dim_max"]), p["search_alpha"],
                                             p["search_samples"], ctx.seed)
    paths = [ctx.csv("fuzz_campaign.csv", CAMPAIGN_HEADER, (r.as_tuple() for r in camp.rows))]
    summary_rows = [(k, camp.checks[k], camp.violations[k], camp.min_margin[k]) for k in sorted(camp.checks)]
    summary_rows += [(f"probe:{k}", v, "", "") for k, v in sorted(camp.probes.items())]
    paths.append(ctx.csv("fuzz_summary.csv", FUZZ_SUMMARY_HEADER, summary_rows))
    w = search.witness
    if w is not None:
        fm = [w.floor_margins.get(f, "") for f in (1e-10, 1e-12, 1e-14)]
        srow = (search.alpha, search.samples, search.violations, True, w.pair.seed[1], w.pair.dim,
                w.lhs, w.rhs, w.relative_violation, *fm)
    else:
        srow = (search.alpha, search.samples, 0, False, "", "", "", "", "", "", "", "")
    paths.append(ctx.csv("fuzz_search.csv", SEARCH_HEADER, [srow]))
    lines = [f"{k}: {camp.checks[k]} checks, {camp.violations[k]} violations, min margin {camp.min_margin[k]:.3e}"
             for k in sorted(camp.checks)]
    lines.append(f"alpha={search.alpha} search: "
                 + (f"witness at sample {w.pair.seed[1]}, relative violation {w.relative_violation:.3e}"
                    if w else f"no violation in {search.samples} samples "
                              f"(min relative margin {search.min_relative_margin:.3e})"))
    return Outcome(paths, lines, camp.total_violations > 0)


def cmd_gue_s2(ctx: Context) -> Outcome:
    p = ctx.p
    _positive_int(p, "samples")
    try:
        params = GueCurveParams(p["d"], p["V"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    D = params.dim
    if ctx.cap is not None and D > ctx.cap:
        raise ConfigError(f"d^V = {D} exceeds the dimension cap {ctx.cap} (use --unsafe-dims)")
    times = _time_grid(p)
    part = Bipartition.half_chain(p["V"], p["d"])
    psi0 = np.zeros(D, dtype=np.complex128)
    psi0[0] = 1.0
    master = ctx.seed
    exp = GrowthExperiment(lambda s: sample_gue(D, [master, s]), psi0, range(p["samples"]), times, [2.0],
                           part, jobs=ctx.jobs, cap=ctx.cap)
    curve = run_growth_experiment(exp)[2.0]
    analytic = gue_s2bar(times, params)
    diff = np.abs(curve.values - analytic)
    rows = [(float(t), float(m), float(e), float(a), float(d))
            for t, m, e, a, d in zip(times, curve.values, curve.stderr, analytic, diff)]
    path = ctx.csv("gue_s2.csv", GUE_HEADER, rows)
    paths = [path]
    if ctx.svg:
        paths.append(plot_csv(path, ctx.out / "gue_s2.svg", "t", ["mc_mean", "analytic"], dashed=["analytic"],
                              title=f"GUE second Renyi entropy, d={p['d']}, V={p['V']}",
                              xlabel="t", ylabel="S2"))
    return Outcome(paths, [f"max |MC - analytic| = {diff.max():.4f} over {p['samples']} samples"])


def cmd_mfim_growth(ctx: Context) -> Outcome:
    p = ctx.p
    _positive_int(p, "samples")
    L = p["L"]
    if not ctx.unsafe and L > MAX_L:
        raise ConfigError(f"L = {L} exceeds the cap {MAX_L} (use --unsafe-dims)")
    if L < 2:
        raise ConfigError("L must be >= 2")
    times = _time_grid(p)
    alphas = sorted(set(_alphas(p)) | {1.0, 2.0})
    Js = [float(j) for j in p["J"]]
    if not Js:
        raise ConfigError("J grid is empty")
    window = p["fit_window"] or None
    if window is not None and len(window) != 2:
        raise ConfigError("fit_window must be [] or [t_start, t_end]")
    part = Bipartition.half_chain(L)
    master = ctx.seed
    curve_rows, slope_rows, lines = [], [], []
    violation = False
    for J in Js:
        model = build_mfim(L, p["g"], p["h"], J)
        engine = EvolutionEngine(model, ctx.cap)
        exp = GrowthExperiment(engine, lambda s: haar_product_state(L, 2, [master, s], ctx.cap),
                               range(p["samples"]), times, alphas, part, jobs=ctx.jobs, cap=ctx.cap)
        curves = run_growth_experiment(exp)
        for a in alphas:
            c = curves[a]
            curve_rows.extend((J, a, float(t), float(m), float(e), c.ensemble_size)
                              for t, m, e in zip(times, c.values, c.stderr))
        s1 = curves[1.0].values
        try:
            fit = fit_linear_window(times, s1, window, hbar=abs(J) if J else 1.0)
        except DynamicsError as exc:
            raise ConfigError(str(exc)) from None
        bound = bound_mfim(1.0, J)
        (cmp,) = compare_report({"s1": fit.slope}, {"s1": bound})
        below = fit.slope < bound.value or (bound.value == 0 and abs(fit.slope) < 1e-9)
        mono = all(np.all(curves[b].values <= curves[a].values + CHECK_TOL)
                   for a, b in zip(alphas, alphas[1:]))
        s2 = curves[2.0].values
        cap_ok = bool(np.all(s2 - s2[0] <= bound.value * times + CHECK_TOL))
        violation |= not (below and mono and cap_ok)
        slope_rows.append((J, fit.slope, fit.intercept, fit.window[0], fit.window[1], fit.residual,
                           fit.v_e if J else 0.0, bound.value, cmp.ratio, cmp.flag, mono, cap_ok))
        lines.append(f"J={J:g}: slope {fit.slope:.4f} vs bound {bound.value:.4f} (ratio {cmp.ratio:.3f}), "
                     f"alpha-monotone {mono}, cap {cap_ok}")
    cpath = ctx.csv("mfim_curves.csv", MFIM_CURVE_HEADER, curve_rows)
    spath = ctx.csv("mfim_slopes.csv", MFIM_SLOPE_HEADER, slope_rows)
    paths = [cpath, spath]
    if ctx.svg:
        paths.append(plot_csv(cpath, ctx.out / "mfim_curves.svg", "t", ["mean"], group_by="J",
                              where={"alpha": 1.0}, title=f"MFIM S1 growth, L={L}", xlabel="t", ylabel="S1"))
        paths.append(plot_csv(spath, ctx.out / "mfim_slopes.svg", "J", ["slope", "bound"], dashed=["bound"],
                              title="Fitted S1 slope against 2J log 2", xlabel="J", ylabel="dS1/dt"))
    return Outcome(paths, lines, violation)


def cmd_syk_growth(ctx: Context) -> Outcome:
    p = ctx.p
    _positive_int(p, "samples")
    N = p["N"]
    if not ctx.unsafe and N > MAX_N:
        raise ConfigError(f"N = {N} exceeds the cap {MAX_N} (use --unsafe-dims)")
    if N < 4 or N % 2:
        raise ConfigError("N must be even and >= 4")
    if p["beta"] < 0:
        raise ConfigError("beta must be >= 0")
    nq = N // 2
    spins = list(p["spins"]) or [1] * nq
    if len(spins) != nq or any(s not in (1, -1) for s in spins):
        raise ConfigError(f"spins must hold {nq} entries of +1/-1")
    times = _time_grid(p)
    alphas = _alphas(p)
    part = Bipartition.half_chain(nq)
    data = []
    census, lines = [], []
    violation = False
    for i in range(p["samples"]):
        model = build_syk_dot(N, p["J"], [ctx.seed, i])
        engine = EvolutionEngine(model, ctx.cap)
        psi = build_km_state(engine, spins, p["beta"])
        traj = engine.trajectory(psi, times)
        spectra = reduced_spectra(traj, part)
        data.append([renyi_from_spectrum(spectra, a) for a in alphas])
        vb = boundary_term_count(model, part)
        vm = majorana_boundary_count(model, range(N // 2))
        for a in alphas:
            rate = max(abs(entropy_rate_analytic(engine.H, traj[:, k], part, a)) for k in range(len(times)))
            bound = bound_k_local(BoundContext(alpha=a, hbar=model.hbar, k=4, d0=2), vb)
            (cmp,) = compare_report({"rate": rate}, {"rate": bound})
            violation |= cmp.ratio >= 1
            census.append((i, N, vb, vm, model.hbar, a, rate, bound.value, cmp.ratio, cmp.flag))
            lines.append(f"sample {i} alpha={a:g}: V(H_boundary)={vb}, max |dS/dt| {rate:.4f} "
                         f"vs k-local bound {bound.value:.3f} (ratio {cmp.ratio:.2e})")
    arr = np.asarray(data)  # (samples, alphas, T)
    n = arr.shape[0]
    mean = arr.mean(axis=0)
    err = arr.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    rows = [(a, float(t), float(mean[j, k]), float(err[j, k]), n)
            for j, a in enumerate(alphas) for k, t in enumerate(times)]
    cpath = ctx.csv("syk_curves.csv", CURVE_HEADER, rows)
    npath = ctx.csv("syk_census.csv", SYK_CENSUS_HEADER, census)
    paths = [cpath, npath]
    if ctx.svg:
        paths.append(plot_csv(cpath, ctx.out / "syk_curves.svg", "t", ["mean"], group_by="alpha",
                              title=f"SYK quench from a KM state, N={N}, beta={p['beta']:g}",
                              xlabel="t", ylabel="S_alpha"))
    return Outcome(paths, lines, violation)


def cmd_bounds_report(ctx: Context) -> Outcome:
    p = ctx.p
    fields = {f.name for f in dataclasses.fields(BoundContext)}
    formulas = list(p["formulas"]) or list(FORMULAS)
    bad = [f for f in formulas if f not in FORMULAS]
    if bad:
        raise ConfigError(f"unknown formula(s): {', '.join(bad)}")
    for table in ("base", "grid"):
        unknown = [k for k in p[table] if k not in fields]
        if unknown:
            raise ConfigError(f"unknown bounds.{table} key(s): {', '.join(unknown)}")
    if any(not isinstance(v, list) for v in p["grid"].values()):
        raise ConfigError("every bounds.grid entry must be a list")
    try:
        base = BoundContext(**p["base"])
        header, rows = sweep_bounds(p["grid"], formulas, base)
    except (BoundError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    path = ctx.csv("bounds.csv", header, rows)
    n_ok = sum(1 for r in rows if r[-2])
    return Outcome([path], [f"{len(rows)} rows, {n_ok} applicable"])


COMMANDS = {
    "fuzz-inequalities": cmd_fuzz_inequalities,
    "gue-s2": cmd_gue_s2,
    "mfim-growth": cmd_mfim_growth,
    "syk-growth": cmd_syk_growth,
    "bounds-report": cmd_bounds_report,
}

SAMPLE_KEYS = {"fuzz-inequalities": "pairs", "gue-s2": "samples", "mfim-growth": "samples",
               "syk-growth": "samples", "bounds-report": None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entrolab", description="Entanglement growth experiments and bounds.")
    parser.add_argument("--version", action="version", version=f"entrolab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML config file (defaults apply when omitted)")
        sp.add_argument("--seed", type=int, help="master seed (overrides run.seed)")
        sp.add_argument("--jobs", type=int, help="concurrent ensemble members")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--svg", action="store_true", help="also write SVG plots")
        sp.add_argument("--samples", type=int, help="ensemble size / pair count override")
        sp.add_argument("--unsafe-dims", action="store_true", help="lift dimension and size caps")
    return parser


def configure(args) -> ExperimentConfig:
    cfg = load(args.config, args.command) if args.config else default_config(args.command)
    if args.seed is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        cfg.run["seed"] = args.seed
    if args.jobs is not None:
        cfg.run["jobs"] = args.jobs
    if args.out is not None:
        cfg.run["out"] = args.out
    if args.svg:
        cfg.run["svg"] = True
    if args.samples is not None:
        key = SAMPLE_KEYS[args.command]
        if key is None:
            raise ConfigError("--samples does not apply to bounds-report")
        if args.samples < 1:
            raise ConfigError(f"--samples must be >= 1, got {args.samples}")
        cfg.params[key] = args.samples
    if cfg.run["jobs"] < 1:
        raise ConfigError("jobs must be >= 1")
    if cfg.run["seed"] < 0:
        raise ConfigError("seed must be non-negative")
    return cfg


def run(cfg: ExperimentConfig, unsafe_dims: bool = False) -> Outcome:
    return COMMANDS[cfg.kind](Context(cfg, unsafe_dims))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = configure(args)
        outcome = run(cfg, args.unsafe_dims)
    except ConfigError as exc:
        print(f"entrolab: configuration error: {exc}", file=sys.stderr)
        return 2
    except (ModelError, DynamicsError, LinalgError, InequalityError, BoundError) as exc:
        print(f"entrolab: {exc}", file=sys.stderr)
        return 2
    for line in outcome.summary:
        print(line)
    for path in outcome.paths:
        print(f"wrote {path}")
    if outcome.violation:
        print("entrolab: invariant violation detected", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
