"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from blowup_lab.ball import BallGrid, ball_quadrature, weight_moment
from blowup_lab.energy import CONVENTIONS, flat_energy_oracle
from blowup_lab.model import make_params, ode_exact, ode_steady_theta
from blowup_lab.pipeline import analyze_center, convergence_ladder, run_experiment
from blowup_lab.similarity import direct_history_integrals, init_history, update_history
from blowup_lab.solver import Flat, GridSpec, SolverSettings, run_to_blowup


@pytest.fixture
def report(capsys):
    def emit(k, name, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {k:2d}] {'PASS' if ok else 'FAIL'}  {name}: {detail}")
        assert ok, f"criterion {k} ({name}) failed: {detail}"
    return emit


def _all_runs(desk_run, flat_p3_run, bump_runs, desk_ladder_runs):
    return [desk_run, flat_p3_run, *bump_runs, *desk_ladder_runs]


def test_01_ode_fidelity(report):
    grid = GridSpec(1, 4.0, 64)
    t0 = time.perf_counter()
    traj, _ = run_to_blowup(grid, Flat(0.0, 1.0), make_params(1, 2.0), SolverSettings())
    elapsed = time.perf_counter() - t0
    sel = 1.0 - traj.t >= 1e-3
    exact = np.array([ode_exact(2.0, 1.0, t) for t in traj.t[sel]])
    err = float(np.max(np.abs(traj.sup_ut[sel] - exact) / exact))
    report(1, "ODE oracle fidelity", err <= 1e-5 and elapsed <= 5.0,
           f"max rel err {err:.2e} over {sel.sum()} steps, runtime {elapsed:.2f}s")


def test_02_blowup_time(report, desk_run, flat_p3_run):
    e2 = abs(desk_run.estimate.T_est - 1.0)
    e3 = abs(flat_p3_run.estimate.T_est - 0.5)
    report(2, "blow-up time", e2 <= 1e-4 and e3 <= 1e-4, f"|T-1|={e2:.2e} (p=2), |T-0.5|={e3:.2e} (p=3)")


def test_03_similarity_fixed_point(report, desk_run, flat_p3_run):
    worst = {}
    for run in (desk_run, flat_p3_run):
        kappa = ode_steady_theta(run.config.params.p)
        mask = BallGrid(run.config.grid.N, run.centers[0].frames[0].theta.shape[0]).mask
        worst[run.config.params.p] = max(
            float(np.max(np.abs(f.theta[mask] - kappa))) for ca in run.centers for f in ca.frames
        )
    ok = all(v <= 1e-4 for v in worst.values())
    report(3, "similarity fixed point", ok,
           ", ".join(f"p={p:g}: max|θ-β^β|={v:.2e}" for p, v in worst.items()))


def test_04_transformed_equation_residual(report, desk_run, bump_cfg, bump_runs):
    flat = max(float(np.nanmax(ca.residual17)) for ca in desk_run.centers)
    ladder = convergence_ladder(bump_cfg, runs=bump_runs)["levels"]
    orders = [row["order_residual_1_7"] for row in ladder[1:]]
    ok = flat <= 1e-4 and all(o >= 1.0 for o in orders)
    levels = ", ".join(format(r["residual_1_7"], ".2e") for r in ladder)
    report(4, "transformed-equation residual", ok,
           f"flat max {flat:.2e}; bump [{levels}] "
           f"orders {[round(o, 2) for o in orders]}")


def test_05_energy_closed_form(report, desk_run):
    run = desk_run
    prm, grid = run.config.params, run.config.grid
    kappa = ode_steady_theta(prm.p)
    s0 = -math.log(run.T_prime)
    R_a, R_am1 = weight_moment(prm.N, prm.alpha), weight_moment(prm.N, prm.alpha - 1.0)
    worst = 0.0
    for ca in run.centers:
        for e in ca.energies[run.config.energy.convention]:
            if e.s <= 5.0:
                ref = flat_energy_oracle(prm, kappa, e.s, s0, R_a, R_am1)
                worst = max(worst, abs(e.E - ref) / abs(ref))
    # dz-refinement: the ds part of the error is shared by every nz, so successive
    # differences isolate the quadrature error
    energies = []
    for nz in (17, 33, 65, 129):
        ca = analyze_center(run.main.snapshots, (0.0,), run.T_prime, run.estimate.T_est, prm, grid,
                            BallGrid(prm.N, nz), run.config.similarity.ds)
        energies.append(np.array([e.E for e in ca.energies["as_stated"] if e.s <= 5.0]))
    diffs = [float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1.0))) for a, b in zip(energies, energies[1:])]
    e_orders = [math.log2(a / b) for a, b in zip(diffs, diffs[1:])]
    vanish = [abs(ball_quadrature(prm.N * b.rho - 2 * (prm.alpha - 1) * b.r2, prm.alpha - 2, b))
              for b in (BallGrid(prm.N, nz) for nz in (17, 33, 65))]
    v_orders = [math.log2(a / b) for a, b in zip(vanish, vanish[1:])]
    ok = worst <= 1e-3 and all(o >= 1.8 for o in e_orders) and all(o >= 1.8 for o in v_orders)
    report(5, "energy closed form", ok,
           f"max rel err {worst:.2e} (s<=5); dz orders {[round(o, 2) for o in e_orders]}; "
           f"T4 weight integral {vanish[-1]:.1e}, orders {[round(o, 2) for o in v_orders]}")


def test_06_dissipation_identity(report, desk_run, desk_cfg, desk_ladder_runs, bump_cfg, bump_runs):
    reps = desk_run.centers[0].dissipation.reports
    mid = reps[len(reps) // 2]
    flat_ladder = convergence_ladder(desk_cfg, runs=desk_ladder_runs)["levels"]
    flat_orders = [r["order_dissipation_residual"] for r in flat_ladder[1:]]
    bump_ladder = convergence_ladder(bump_cfg, runs=bump_runs)["levels"]
    winner = bump_ladder[-1]["t3_winner"]
    names = list(CONVENTIONS) if winner == "both" else [winner]
    conv_orders = {
        n: [math.log2(a["t3_residuals"][n] / b["t3_residuals"][n]) for a, b in zip(bump_ladder, bump_ladder[1:])]
        for n in names
    }
    ok = (mid.residual <= 1e-3 and all(o >= 1.8 for o in flat_orders)
          and winner in (*CONVENTIONS, "both")
          and all(o >= 1.0 for v in conv_orders.values() for o in v))
    report(6, "dissipation identity", ok,
           f"flat residual {mid.residual:.2e} at s={mid.s:.3f}, orders {[round(o, 2) for o in flat_orders]}; "
           f"bump T3 winner '{winner}', orders "
           + "; ".join(f"{n}: {[round(o, 2) for o in v]}" for n, v in conv_orders.items()))


def test_07_monotonicity(report, desk_run, flat_p3_run, bump_runs, desk_ladder_runs):
    runs = _all_runs(desk_run, flat_p3_run, bump_runs, desk_ladder_runs)
    pairs = sum(len(ca.dissipation.monotone) for r in runs for ca in r.centers)
    bad = sum(ca.dissipation.violations for r in runs for ca in r.centers)
    report(7, "monotonicity", bad == 0 and pairs > 0,
           f"{bad} violations over {pairs} pairs in {len(runs)} runs")


def test_08_accumulator_equivalence(report, bump_cfg, bump_runs):
    # same grid as the level-0 run, so its pilot fixes T'; pick s_max for exactly 200 frames
    T = bump_runs[0].estimate.T_est
    ds = 0.025
    s_max = -math.log(T) + 199.5 * ds
    sim = replace(bump_cfg.similarity, ds=ds, s_max=s_max, centers=[(0.0,)])
    run = run_experiment(replace(bump_cfg, similarity=sim))
    frames = run.centers[0].frames
    prm = run.config.params
    acc = init_history(frames[0])
    for f in frames[1:]:
        acc = update_history(acc, f, ds, prm)
    direct = direct_history_integrals(frames, prm, ds)
    rel = max(float(np.max(np.abs(a - b)) / np.max(np.abs(b)))
              for a, b in zip((acc.P1, acc.P2, acc.P3, acc.P4, acc.P5), direct))
    report(8, "accumulator equivalence", len(frames) == 200 and rel <= 1e-10,
           f"{len(frames)} frames, max rel diff {rel:.2e}")


def test_09_theorem_monitors(report, desk_run):
    ut = [b.thm12_ut for ca in desk_run.centers for b in ca.bounds if not math.isnan(b.thm12_ut)]
    dev = max(abs(v - 2.0) for v in ut)
    s0 = -math.log(desk_run.T_prime)
    s = desk_run.centers[0].s
    # θ ≡ 1, β = 1: 2 + 2 e^{-2s}(s - s0)^2, maximized on the recorded grid
    closed = max(2.0 + 2.0 * math.exp(-2.0 * si) * (si - s0) ** 2 for si in s)
    summ = desk_run.summary["centers"]
    verdicts = {c["thm11"]["verdict"] for c in summ}
    sup_err = max(abs(c["thm11"]["sup"] - closed) for c in summ)
    ok = len(ut) > 0 and dev <= 1e-3 and verdicts == {"bounded"} and sup_err <= 1e-3
    report(9, "theorem monitors", ok,
           f"thm12 u_t part 2±{dev:.1e} on {len(ut)} window samples; thm11 {verdicts}, "
           f"sup {summ[0]['thm11']['sup']:.6f} vs closed form {closed:.6f}")


def test_10_window_ordering(report, desk_run, flat_p3_run, bump_runs, desk_ladder_runs):
    runs = _all_runs(desk_run, flat_p3_run, bump_runs, desk_ladder_runs)
    windows = [w for r in runs for ca in r.centers for w in ca.windows]
    bad = 0
    for r in runs:
        bound = (4.0 / 3.0) ** r.config.params.alpha
        for ca in r.centers:
            for w in ca.windows:
                vals = (w.w2, w.w3, w.w4)
                if not (all(math.isfinite(v) and v >= 0 for v in vals) and w.w4 <= bound * w.w3):
                    bad += 1
    report(10, "window ordering", bad == 0 and len(windows) > 0,
           f"{bad} failures over {len(windows)} windows")


def test_11_determinism_and_performance(report, desk_cfg, tmp_path):
    t0 = time.perf_counter()
    run_experiment(desk_cfg, tmp_path / "a")
    elapsed = time.perf_counter() - t0
    run_experiment(desk_cfg, tmp_path / "b")
    files = sorted((tmp_path / "a").rglob("*.csv"))
    differing = [f.name for f in files
                 if f.read_bytes() != (tmp_path / "b" / f.relative_to(tmp_path / "a")).read_bytes()]
    ok = elapsed <= 60.0 and not differing and len(files) > 0
    report(11, "determinism & performance", ok,
           f"desk pipeline {elapsed:.2f}s, {len(files)} CSVs, {len(differing)} differ")
