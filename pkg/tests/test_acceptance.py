"""Acceptance criteria 1-10, each at its pinned tolerance and runtime budget.

Every criterion records one PASS/FAIL line, collected in the pytest terminal
summary. Criteria 1, 4 and 7 run through the CLI so that criterion 9 can
rerun them and compare CSV bytes.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python3 tests/test_acceptance.py``.
"""
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from entrolab.analytics import GueCurveParams, bessel_j, find_t_star, gue_max_slope, slope_scaling_exponent
from entrolab.bounds import BoundContext, bound_k_local, bound_mfim
from entrolab.cli import run
from entrolab.config import default_config
from entrolab.dynamics import EvolutionEngine, entropy_rate_analytic, entropy_rate_fd, haar_product_state
from entrolab.hamiltonians import boundary_term_count, build_mfim, build_syk_dot, majorana_boundary_count, sample_gue
from entrolab.inequalities import search_alpha_lt1_counterexample
from entrolab.linalg import Bipartition, operator_norm

MASTER_SEED = 20240601

# criterion 1
FUZZ_PAIRS = 10_000
FUZZ_ALPHAS = [1.5, 2.0, 3.0, 5.0]
FUZZ_DIMS = (2, 16)
FUZZ_TOL = 1e-9
FUZZ_BUDGET_S = 180.0
# criterion 2
CE_ALPHA = 0.5
CE_DIMS = (3, 8)
CE_SAMPLES = 10_000
CE_MIN_RELATIVE = 1e-6
CE_FLOORS = (1e-10, 1e-14)
CE_BUDGET_S = 120.0
# criterion 3
RATE_L = 6
RATE_STATES = 20
RATE_TIMES = (0.3, 0.7, 1.5)
RATE_ALPHAS = (1.0, 2.0, 3.0)
RATE_DELTA = 1e-4
RATE_RTOL = 1e-5
RATE_BOUNDARY_TOL = 1e-10
RATE_BUDGET_S = 60.0
# criterion 4
GUE_D, GUE_V = 2, 8
GUE_SAMPLES = 200
GUE_T_MAX, GUE_N_TIMES = 3.0, 61
GUE_ABS_TOL, GUE_REL_TOL = 0.15, 0.10
GUE_PLATEAU_TOL = 0.1
GUE_BUDGET_S = 600.0
# criterion 5
NORM_SAMPLES, NORM_DIM = 50, 256
NORM_RANGE = (1.8, 2.2)
# criterion 6
T_STAR_RANGE = (1.9, 1.93)
T_STAR_ROOT_TOL = 1e-10
SCALING_VS = [4, 6, 8, 10, 12]
SCALING_TARGET = math.log(2) / 8
SCALING_RTOL = 0.20
SCALING_BUDGET_S = 60.0
# criterion 7
MFIM_L = 10
MFIM_J = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2, 1.4]
MFIM_STATES = 100
MFIM_ALPHAS = [1.0, 2.0, 3.0]
MFIM_T_MAX, MFIM_N_TIMES = 40.0, 161
MFIM_CHECK_TOL = 1e-10
MFIM_BUDGET_S = 1800.0
# criterion 8
SYK_N = 8
SYK_CENSUS = 68
SYK_BUDGET_S = 300.0
# criterion 10
BESSEL_ABS_TOL = 1e-12
BESSEL_RECURRENCE_TOL = 1e-10

ORACLE_PATH = Path(__file__).parent / "data" / "bessel_oracle.json"


def read_rows(path):
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def run_cli(kind, out, **params):
    cfg = default_config(kind)
    cfg.run.update(seed=MASTER_SEED, out=str(out))
    cfg.params.update(params)
    t0 = time.perf_counter()
    outcome = run(cfg)
    return outcome, time.perf_counter() - t0


FUZZ_PARAMS = dict(pairs=FUZZ_PAIRS, alphas=FUZZ_ALPHAS, dim_min=FUZZ_DIMS[0], dim_max=FUZZ_DIMS[1],
                   search_alpha=CE_ALPHA, search_samples=CE_SAMPLES,
                   search_dim_min=CE_DIMS[0], search_dim_max=CE_DIMS[1])
GUE_PARAMS = dict(d=GUE_D, V=GUE_V, samples=GUE_SAMPLES, t_max=GUE_T_MAX, n_times=GUE_N_TIMES)
MFIM_PARAMS = dict(L=MFIM_L, g=-1.05, h=0.5, J=MFIM_J, samples=MFIM_STATES, alphas=MFIM_ALPHAS,
                   t_max=MFIM_T_MAX, n_times=MFIM_N_TIMES)
CLI_RUNS = {"fuzz-inequalities": FUZZ_PARAMS, "gue-s2": GUE_PARAMS, "mfim-growth": MFIM_PARAMS}


@pytest.fixture(scope="module")
def cli_runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    return {kind: (base / kind, *run_cli(kind, base / kind, **params)) for kind, params in CLI_RUNS.items()}


def test_criterion_01_inequality_soundness(cli_runs, acceptance_log):
    out, outcome, _ = cli_runs["fuzz-inequalities"]
    # time the campaign on its own, without the alpha < 1 search that shares the run
    from entrolab.inequalities import run_fuzz_campaign

    t0 = time.perf_counter()
    camp = run_fuzz_campaign(FUZZ_PAIRS, FUZZ_ALPHAS, FUZZ_DIMS, MASTER_SEED)
    elapsed = time.perf_counter() - t0
    rows = read_rows(out / "fuzz_campaign.csv")
    pairs = {int(r["seed"]) for r in rows}
    bad = [r for r in rows if float(r["margin"]) < -FUZZ_TOL * max(1.0, abs(float(r["rhs"])))]
    checkers = sorted({r["checker"] for r in rows})
    min_margin = {c: min(float(r["margin"]) for r in rows if r["checker"] == c) for c in checkers}
    ok = (not bad and len(pairs) == FUZZ_PAIRS and len(checkers) == 4 and not outcome.violation
          and camp.total_violations == 0 and elapsed <= FUZZ_BUDGET_S)
    acceptance_log.record(1, "inequality soundness", ok,
                          f"{len(pairs)} pairs, {len(rows)} checks, {len(bad)} violations; min margins "
                          + ", ".join(f"{c}={m:.2e}" for c, m in min_margin.items())
                          + f"; {elapsed:.1f}s (budget {FUZZ_BUDGET_S:.0f}s)")
    p = camp.probes
    acceptance_log.info(1, f"probes: Vershynina on algebraic pairs {p['vershynina_algebraic_violations']}/"
                           f"{p['vershynina_algebraic_checked']} violations; log form with prefactor 2 on physical "
                           f"pairs {p['vershynina_log_prefactor2_violations']}/{p['vershynina_log_prefactor2_checked']}")
    assert ok


def test_criterion_02_alpha_below_one_counterexample(acceptance_log):
    t0 = time.perf_counter()
    rep = search_alpha_lt1_counterexample(CE_DIMS, CE_ALPHA, CE_SAMPLES, MASTER_SEED,
                                          floors=(1e-10, 1e-12, 1e-14))
    elapsed = time.perf_counter() - t0
    w = rep.witness
    ok = False
    if w is not None:
        commuting = np.allclose(w.pair.X @ w.pair.Y, w.pair.Y @ w.pair.X, atol=1e-12)
        stable = all(w.floor_margins[f] < 0 for f in CE_FLOORS)
        ok = (not commuting) and stable and w.relative_violation > CE_MIN_RELATIVE
        detail = f"witness at sample {w.pair.seed[1]}, relative violation {w.relative_violation:.3e}"
    else:
        detail = (f"no violation in {rep.samples} algebraic samples at alpha={CE_ALPHA}; "
                  f"smallest relative margin {rep.min_relative_margin:.3e}")
    ok = ok and elapsed <= CE_BUDGET_S
    acceptance_log.record(2, "alpha < 1 counterexample", ok, detail + f"; {elapsed:.1f}s")
    freqs = []
    for a in (0.45, 0.3, 0.1):
        r = search_alpha_lt1_counterexample(CE_DIMS, a, 3000, MASTER_SEED, stop_at_first=False)
        freqs.append(f"alpha={a}: {r.violations}/{r.samples}")
    acceptance_log.info(2, "violation frequency below alpha = 1/2 " + ", ".join(freqs))
    assert ok


def test_criterion_03_rate_formula(acceptance_log):
    t0 = time.perf_counter()
    model = build_mfim(RATE_L)
    engine = EvolutionEngine(model)
    part = Bipartition.half_chain(RATE_L)
    worst_rel, worst_sub = 0.0, 0.0
    for i in range(RATE_STATES):
        psi0 = haar_product_state(RATE_L, seed=[MASTER_SEED, i])
        for t in RATE_TIMES:
            psi = engine.evolve(psi0, t)
            for a in RATE_ALPHAS:
                analytic = entropy_rate_analytic(model, psi, part, a)
                fd = entropy_rate_fd(engine, psi0, part, a, t, RATE_DELTA)
                boundary = entropy_rate_analytic(model, psi, part, a, boundary_only=True)
                worst_rel = max(worst_rel, abs(analytic - fd) / abs(fd))
                worst_sub = max(worst_sub, abs(analytic - boundary))
    elapsed = time.perf_counter() - t0
    ok = worst_rel < RATE_RTOL and worst_sub <= RATE_BOUNDARY_TOL and elapsed <= RATE_BUDGET_S
    acceptance_log.record(3, "rate formula", ok,
                          f"max relative error vs central difference {worst_rel:.2e} (< {RATE_RTOL:g}), "
                          f"max |H - H_boundary| rate difference {worst_sub:.2e}; {elapsed:.1f}s")
    assert ok


def test_criterion_04_gue_closed_form(cli_runs, acceptance_log):
    out, _, elapsed = cli_runs["gue-s2"]
    rows = read_rows(out / "gue_s2.csv")
    t_star = find_t_star()
    plateau = GueCurveParams(GUE_D, GUE_V).plateau
    worst_curve, worst_plateau = 0.0, 0.0
    curve_ok = plateau_ok = True
    for r in rows:
        t, mc, an = float(r["t"]), float(r["mc_mean"]), float(r["analytic"])
        if t < t_star:
            tol = max(GUE_ABS_TOL, GUE_REL_TOL * abs(an))
            worst_curve = max(worst_curve, abs(mc - an) / tol)
            curve_ok &= abs(mc - an) <= tol
        else:
            worst_plateau = max(worst_plateau, abs(mc - plateau))
            plateau_ok &= abs(mc - plateau) <= GUE_PLATEAU_TOL
    ok = curve_ok and plateau_ok and elapsed <= GUE_BUDGET_S
    acceptance_log.record(4, "GUE closed form", ok,
                          f"t < t*: worst |MC - closed form| at {worst_curve:.3f} of tolerance; "
                          f"t >= t*: max |MC - plateau {plateau:.4f}| = {worst_plateau:.4f}; {elapsed:.1f}s")
    assert ok


def test_criterion_05_gue_norm(acceptance_log):
    norms = [operator_norm(sample_gue(NORM_DIM, [MASTER_SEED, 5000 + i])) for i in range(NORM_SAMPLES)]
    mean = float(np.mean(norms))
    ok = NORM_RANGE[0] <= mean <= NORM_RANGE[1]
    acceptance_log.record(5, "GUE norm", ok, f"mean operator norm {mean:.4f} over {NORM_SAMPLES} samples at D={NORM_DIM}")
    assert ok


def test_criterion_06_t_star_and_scaling(acceptance_log):
    t0 = time.perf_counter()
    ts = find_t_star()
    root = abs(bessel_j(1, 2 * ts))
    slope, resid = slope_scaling_exponent(SCALING_VS, 2)
    elapsed = time.perf_counter() - t0
    rel = abs(slope - SCALING_TARGET) / SCALING_TARGET
    ok = (T_STAR_RANGE[0] < ts < T_STAR_RANGE[1] and root < T_STAR_ROOT_TOL and rel <= SCALING_RTOL
          and elapsed <= SCALING_BUDGET_S)
    peaks = ", ".join(f"V={v}: t={gue_max_slope(GueCurveParams(2, v)).t_peak:.3f}" for v in (4, 8, 12))
    acceptance_log.record(6, "t* and slope scaling", ok,
                          f"t*={ts:.10f}, |J1(2t*)|={root:.1e}; fitted exponent {slope:.4f} vs "
                          f"log2/8={SCALING_TARGET:.4f} ({rel:.0%} off, allowed {SCALING_RTOL:.0%}); "
                          f"peaks {peaks}")
    large, _ = slope_scaling_exponent(list(range(40, 61, 4)), 2)
    acceptance_log.info(6, f"same regression on V=40..60 gives {large:.4f} "
                           f"({large / SCALING_TARGET:.0%} of log2/8)")
    assert ok


def test_criterion_07_mfim_bounds(cli_runs, acceptance_log):
    out, outcome, elapsed = cli_runs["mfim-growth"]
    slopes = read_rows(out / "mfim_slopes.csv")
    curves = read_rows(out / "mfim_curves.csv")
    below = all(float(r["slope"]) < bound_mfim(1.0, float(r["J"])).value for r in slopes)
    mono = cap = True
    for J in MFIM_J:
        by_alpha = {a: np.array([float(r["mean"]) for r in curves if float(r["J"]) == J and float(r["alpha"]) == a])
                    for a in MFIM_ALPHAS}
        times = np.array([float(r["t"]) for r in curves if float(r["J"]) == J and float(r["alpha"]) == 2.0])
        for a, b in zip(MFIM_ALPHAS, MFIM_ALPHAS[1:]):
            mono &= bool(np.all(by_alpha[b] <= by_alpha[a] + MFIM_CHECK_TOL))
        s2 = by_alpha[2.0]
        cap &= bool(np.all(s2 - s2[0] <= bound_mfim(1.0, J).value * times + MFIM_CHECK_TOL))
    ratios = [float(r["ratio"]) for r in slopes]
    ok = below and mono and cap and len(slopes) == len(MFIM_J) and elapsed <= MFIM_BUDGET_S
    acceptance_log.record(7, "MFIM bound compliance", ok,
                          f"slope/(2J log2) in [{min(ratios):.3f}, {max(ratios):.3f}], alpha-monotone {mono}, "
                          f"cumulative cap {cap}; L={MFIM_L}, {MFIM_STATES} states, {elapsed:.1f}s")
    assert ok and not outcome.violation


def test_criterion_08_syk(tmp_path, acceptance_log):
    t0 = time.perf_counter()
    model = build_syk_dot(SYK_N, seed=[MASTER_SEED, 0])
    part = Bipartition.half_chain(SYK_N // 2)
    v_qubit = boundary_term_count(model, part)
    v_modes = majorana_boundary_count(model, range(SYK_N // 2))
    outcome, _ = run_cli("syk-growth", tmp_path, N=SYK_N, alphas=[1.0, 2.0])
    census = [r for r in read_rows(tmp_path / "syk_census.csv") if float(r["alpha"]) == 2.0]
    elapsed = time.perf_counter() - t0
    r = census[0]
    bound = bound_k_local(BoundContext(alpha=2.0, hbar=model.hbar, k=4, d0=2), v_qubit).value
    rate = float(r["max_rate"])
    ok = (v_qubit == v_modes == SYK_CENSUS and int(r["v_boundary"]) == SYK_CENSUS
          and float(r["bound"]) == bound and rate < bound and elapsed <= SYK_BUDGET_S)
    acceptance_log.record(8, "SYK census and bound", ok,
                          f"V(H_boundary)={v_qubit} (qubit supports) / {v_modes} (Majorana sets); "
                          f"max |dS2/dt| {rate:.4f} < k-local bound {bound:.2f}; {elapsed:.1f}s")
    assert ok and not outcome.violation


def test_criterion_09_determinism(cli_runs, tmp_path, acceptance_log):
    same, checked = [], []
    for kind, params in CLI_RUNS.items():
        first = cli_runs[kind][0]
        run_cli(kind, tmp_path / kind, **params)
        for f in sorted(first.glob("*.csv")):
            checked.append(f.name)
            same.append(f.read_bytes() == (tmp_path / kind / f.name).read_bytes())
    ok = bool(same) and all(same)
    acceptance_log.record(9, "determinism", ok,
                          f"{sum(same)}/{len(same)} CSVs byte-identical on rerun ({', '.join(checked)})")
    assert ok


def test_criterion_10_bessel(acceptance_log):
    oracle = json.loads(ORACLE_PATH.read_text())
    x = np.array(oracle["x"])
    err = max(float(np.max(np.abs(bessel_j(n, x) - np.array(oracle[f"J{n}"])))) for n in range(3))
    xr = np.linspace(0.05, 100.0, 4000)
    resid = float(np.max(np.abs(bessel_j(0, xr) + bessel_j(2, xr) - 2.0 / xr * bessel_j(1, xr))))
    ok = err <= BESSEL_ABS_TOL and resid <= BESSEL_RECURRENCE_TOL
    acceptance_log.record(10, "Bessel fidelity", ok,
                          f"max |J_n - oracle| on [0, 20] = {err:.1e}; "
                          f"recurrence residual on (0, 100] = {resid:.1e}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
