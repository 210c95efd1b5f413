"""Two-pass experiment orchestration: pilot run for T, s-scheduled main run, analysis."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import bounds as bd
from . import energy as en
from .ball import BallGrid
from .config import RunConfig
from .model import ModelParams
from .similarity import (
    SimilarityParams, ThetaFrame, conv_h2, init_history, residual_1_7, theta00,
    transform_snapshot, update_history,
)
from .solver import (
    BlowupEstimate, CustomTable, Flat, GaussianBump, GridSpec, Trajectory, init_state,
    record_snapshots, run_to_blowup, schedule_snapshots,
)

OUTPUT_ENV = "BLOWUP_LAB_OUT"


def default_nz(grid: GridSpec) -> int:
    """Ball resolution matching the solver spacing (aligned when 1/dx is an integer)."""
    return max(9, 2 * int(round(1.0 / grid.dx)) + 1)


def default_r(N: int) -> float:
    return 2.0 * N / (N - 2.0) if N >= 3 else 4.0


def default_centers(grid: GridSpec, ic) -> list:
    """The extremum of |u1| closest to the origin plus four nearby translates."""
    u1 = init_state(grid, ic).ut
    amp = np.abs(u1)
    cand = np.argwhere(amp >= amp.max() - 1e-12 * max(1.0, amp.max()))
    coords = grid.x1d[cand]
    best = coords[np.argmin(np.sum(coords**2, axis=1))]
    d = 0.5 if grid.N >= 2 else 0.25
    offsets = []
    if grid.N == 1:
        offsets = [(d,), (-d,), (2 * d,), (-2 * d,)]
    else:
        for ax in (0, 1):
            for sign in (1.0, -1.0):
                e = [0.0] * grid.N
                e[ax] = sign * d
                offsets.append(tuple(e))
    out = [tuple(float(x) for x in best)]
    for off in offsets:
        c = tuple(float(b + o) for b, o in zip(best, off))
        if all(abs(x) + 1.0 <= grid.L for x in c):
            out.append(c)
    return out


@dataclass
class CenterAnalysis:
    a: tuple
    frames: list
    conv: list
    energies: dict
    rhs: list
    residual17: list
    bounds: list
    window_integrands: np.ndarray
    windows: list
    dissipation: en.DissipationCheck
    conventions: dict
    report_from: int = 0

    @property
    def s(self) -> np.ndarray:
        return np.array([f.s for f in self.frames])


def analyze_center(snapshots: Sequence, a, sim_T: float, T_est: float, params: ModelParams,
                   grid: GridSpec, ball: BallGrid, ds: float, *, convention: str = en.AS_STATED,
                   r: Optional[float] = None, s0_offset: float = 0.0,
                   mono_tol: float = 1e-6) -> CenterAnalysis:
    """Similarity transform, history accumulation, energy and bounds at one center."""
    sim = SimilarityParams(a=tuple(a), T_prime=sim_T)
    r = default_r(params.N) if r is None else r
    frames = [transform_snapshot(sn, sim, params, ball, grid) for sn in snapshots]
    th00 = theta00(snapshots[0].u, sim, params, ball, grid)
    n = len(frames)
    conventions = [convention] + [c for c in en.CONVENTIONS if c != convention]
    energies = {c: [] for c in conventions}
    rhs, res17, bounds_list, conv_list = [None] * n, [math.nan] * n, [], []
    integrands = np.full((n, 3), np.nan)
    acc = init_history(frames[0])
    for k, fr in enumerate(frames):
        if k > 0:
            acc = update_history(acc, fr, ds, params)
        for c in conventions:
            energies[c].append(en.energy_terms(fr, acc, th00, params, ball, convention=c))
        conv_list.append(conv_h2(acc, fr.s, params)[0])
        if 0 < k < n - 1:
            theta_s = en.centered_theta_s(frames[k - 1], frames[k + 1])
            rhs[k] = en.dissipation_rhs(fr, theta_s, params, ball)
            res17[k] = residual_1_7(frames[k - 1:k + 2], acc, th00[0], params, ball)
            integrands[k] = bd.window_integrands(fr, theta_s, params, ball)
        p31, p32, p33 = bd.prop3_quantities(fr, acc, params, ball)
        u_part, ut_part = bd.thm12_parts(snapshots[k], T_est, a, params, grid, ball)
        lt, lc = bd.lr_norms(fr, acc, r, params, ball)
        bounds_list.append(bd.BoundsReport(
            s=fr.s, t=fr.t, thm11=p31 + p32 + p33, thm12=u_part + ut_part,
            thm12_u=u_part, thm12_ut=ut_part, p31=p31, p32=p32, p33=p33,
            lr_theta=lt, lr_conv=lc,
        ))
    s = np.array([f.s for f in frames])
    report_from = int(np.searchsorted(s, s[0] + s0_offset - 1e-9 * max(1.0, abs(s[0]))))
    primary = energies[convention]
    check = en.check_dissipation(primary[report_from:], rhs[report_from:], ds, params,
                                 mono_tol=mono_tol)
    comp = en.compare_conventions(
        {c: e[report_from:] for c, e in energies.items()}, rhs[report_from:], ds, params,
    )
    windows = bd.window_reports(integrands[report_from:], s[report_from:], ds)
    return CenterAnalysis(
        a=tuple(a), frames=frames, conv=conv_list, energies=energies, rhs=rhs,
        residual17=res17, bounds=bounds_list, window_integrands=integrands, windows=windows,
        dissipation=check, conventions=comp, report_from=report_from,
    )


@dataclass
class RunOutput:
    config: RunConfig
    trajectory: Trajectory
    estimate: BlowupEstimate
    T_prime: float = math.nan
    main: Optional[Trajectory] = None
    centers: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    directory: Optional[Path] = None

    @property
    def detected(self) -> bool:
        return self.estimate.detected


def _finite_or_none(x):
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def summarize(out: RunOutput) -> dict:
    cfg = out.config
    summ = {
        "code_version": __version__,
        "N": cfg.params.N,
        "p": cfg.params.p,
        "alpha": cfg.params.alpha,
        "beta": cfg.params.beta,
        "admissibility_branch": cfg.params.branch,
        "reduced_smoothness": bool(cfg.params.reduced_smoothness and out.trajectory.sign_change),
        "blowup_detected": out.detected,
        "status": "ok" if out.detected else "no blow-up detected",
        "T_est": _finite_or_none(out.estimate.T_est),
        "fit_window": [_finite_or_none(x) for x in out.estimate.fit_window],
        "fit_residual": _finite_or_none(out.estimate.fit_residual),
        "T_prime": _finite_or_none(out.T_prime),
        "heuristic_note": "boundedness verdicts are heuristics over the recorded s-range",
        "centers": [],
    }
    alpha = cfg.params.alpha
    for ca in out.centers:
        k0 = ca.report_from
        s = ca.s[k0:]
        b = ca.bounds[k0:]
        E = np.array([e.E for e in ca.energies[cfg.energy.convention][k0:]])
        entry = {"a": list(ca.a)}
        for name in ("thm11", "thm12", "thm12_u", "thm12_ut", "p31", "p32", "p33", "lr_theta", "lr_conv"):
            sup = bd.sup_tracker(s, [getattr(x, name) for x in b])
            entry[name] = {"sup": _finite_or_none(sup.sup), "verdict": sup.verdict,
                           "growth_rate": _finite_or_none(sup.growth_rate)}
        res = np.array(ca.residual17[k0:])
        entry["residual_1_7_max"] = _finite_or_none(np.nanmax(res)) if np.any(np.isfinite(res)) else None
        reps = ca.dissipation.reports
        entry["dissipation_residual_max"] = _finite_or_none(ca.dissipation.max_residual) if reps else None
        if reps:
            mid = reps[len(reps) // 2]
            entry["dissipation_residual_mid"] = {"s": mid.s, "residual": mid.residual}
        entry["monotone_violations"] = ca.dissipation.violations
        entry["window_reading"] = ca.dissipation.reading_verdict()
        entry["t3_conventions"] = ca.conventions
        entry["min_E"] = _finite_or_none(E.min()) if len(E) else None
        C = cfg.energy.C_hypothesis
        entry["lower_bound_hypothesis"] = (
            None if C is None or not len(E) else {"C": C, "respected": bool(E.min() >= C)}
        )
        bound = (4.0 / 3.0) ** alpha
        entry["window_ordering_ok"] = all(
            np.isfinite([w.w2, w.w3, w.w4]).all() and min(w.w2, w.w3, w.w4) >= 0.0
            and w.w4 <= bound * w.w3 * (1.0 + 1e-12)
            for w in ca.windows
        )
        entry["n_windows"] = len(ca.windows)
        summ["centers"].append(entry)
    if out.centers:
        c0 = summ["centers"]
        summ["min_E"] = min((c["min_E"] for c in c0 if c["min_E"] is not None), default=None)
        summ["sup_thm11"] = max((c["thm11"]["sup"] or -math.inf) for c in c0)
        summ["sup_thm12"] = max((c["thm12"]["sup"] or -math.inf) for c in c0)
        summ["max_dissipation_residual"] = max((c["dissipation_residual_max"] or 0.0) for c in c0)
        summ["monotone_violations"] = sum(c["monotone_violations"] for c in c0)
        for key in ("sup_thm11", "sup_thm12"):
            summ[key] = _finite_or_none(summ[key])
    return summ


def run_experiment(cfg: RunConfig, out_dir=None) -> RunOutput:
    """Pilot run, s-scheduled main run, per-center analysis, optional file output."""
    from . import io as lab_io

    params, grid = cfg.params, cfg.grid
    traj, est = run_to_blowup(grid, cfg.ic, params, cfg.solver)
    out = RunOutput(config=cfg, trajectory=traj, estimate=est)
    directory = None
    if out_dir is not None:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        out.directory = directory
        lab_io.write_manifest(directory / "manifest.json", cfg)
        lab_io.write_trajectory(directory / "trajectory.csv", traj)
    if not est.detected:
        out.summary = summarize(out)
        if directory is not None:
            lab_io.write_json(directory / "summary.json", out.summary)
        return out

    sim_cfg = cfg.similarity
    T_prime = est.T_est if sim_cfg.T_prime_mode == "estimate" else sim_cfg.T_prime
    out.T_prime = T_prime
    s0 = -math.log(T_prime)
    s_end = sim_cfg.s_max
    if T_prime > est.T_est:
        s_end = min(s_end, -math.log(T_prime - est.T_est) - sim_cfg.ds)
    s_grid_times = schedule_snapshots(T_prime, s0, sim_cfg.ds, s_end)
    if len(s_grid_times) < 3:
        raise ValueError(f"similarity schedule from s0={s0:.6g} to s_max={s_end:.6g} has < 3 frames")
    main = record_snapshots(grid, cfg.ic, params, s_grid_times, cfg.solver)
    out.main = main
    nz = sim_cfg.nz or default_nz(grid)
    ball = BallGrid(N=grid.N, nz=nz)
    centers = sim_cfg.centers or default_centers(grid, cfg.ic)
    try:
        for a in centers:
            out.centers.append(analyze_center(
                main.snapshots, a, T_prime, est.T_est, params, grid, ball, sim_cfg.ds,
                convention=cfg.energy.convention, r=sim_cfg.r, s0_offset=sim_cfg.s0_offset,
                mono_tol=cfg.energy.mono_tol,
            ))
    finally:
        out.summary = summarize(out)
        if directory is not None:
            if "npz" in cfg.outputs.formats:
                lab_io.write_snapshots_npz(directory / "snapshots.npz", grid, main.snapshots, s0, sim_cfg.ds)
            lab_io.write_snapshots_csv(directory / "snapshots.csv", grid, main.snapshots, s0, sim_cfg.ds)
            for i, ca in enumerate(out.centers):
                sub = directory / f"center_{i}"
                sub.mkdir(exist_ok=True)
                lab_io.write_center(sub, ca, ball, cfg)
            lab_io.write_json(directory / "summary.json", out.summary)
    return out


# --- sweeps -----------------------------------------------------------------

SWEEP_COLUMNS = ("name", "status", "p", "N", "T_est", "min_E", "sup_thm11", "sup_thm12",
                 "max_dissipation_residual", "monotone_violations", "error")


def _sweep_one(job):
    from .config import load_config

    name, path, out_dir = job
    row = {c: None for c in SWEEP_COLUMNS}
    row["name"] = name
    try:
        cfg = load_config(path)
        row["p"], row["N"] = cfg.params.p, cfg.params.N
        res = run_experiment(cfg, out_dir)
        summ = res.summary
        row["status"] = summ["status"]
        for key in ("T_est", "min_E", "sup_thm11", "sup_thm12", "max_dissipation_residual",
                    "monotone_violations"):
            row[key] = summ.get(key)
    except Exception as exc:  # isolate per-run failures
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def sweep(config_paths: Sequence, out_root, *, workers: int = 1) -> list:
    """Run every config into ``out_root/<stem>``; failures are isolated per row."""
    out_root = Path(out_root)
    jobs = [(Path(p).stem, str(p), str(out_root / Path(p).stem)) for p in config_paths]
    if not jobs:
        return []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            return list(ex.map(_sweep_one, jobs))
    return [_sweep_one(j) for j in jobs]


# --- refinement ladder ------------------------------------------------------


def refine(cfg: RunConfig, level: int) -> RunConfig:
    """Halve dx and ds ``level`` times (ball resolution follows dx)."""
    f = 2**level
    sim = replace(cfg.similarity, ds=cfg.similarity.ds / f,
                  nz=None if cfg.similarity.nz is None else (cfg.similarity.nz - 1) * f + 1)
    grid = GridSpec(N=cfg.grid.N, L=cfg.grid.L, nx=cfg.grid.nx * f)
    ic = cfg.ic
    if isinstance(ic, CustomTable) and level:
        raise ValueError("custom tables cannot be refined automatically")
    return replace(cfg, grid=grid, similarity=sim)


def convergence_ladder(cfg: RunConfig, levels: int = 3, *, s_window=None,
                       runs: Optional[Sequence[RunOutput]] = None) -> dict:
    """Residual metrics at successive (dx, ds) halvings and observed orders.

    Metrics are maxima over ``s_window`` (default: the interior of the first
    center's s-range, trimmed by 0.5 at each end) so all levels compare the same span.
    ``runs`` may supply already computed results for ``refine(cfg, level)``.
    """
    rows = []
    if runs is not None:
        levels = len(runs)
    for lev in range(levels):
        res = runs[lev] if runs is not None else run_experiment(refine(cfg, lev))
        if not res.detected:
            raise ValueError(f"level {lev}: no blow-up detected")
        ca = res.centers[0]
        s = ca.s
        lo, hi = s_window or (s[0] + 0.5, s[-1] - 0.5)
        if s_window is None and rows:
            lo, hi = rows[0]["s_window"]
        sel = (s >= lo) & (s <= hi)
        r17 = np.array(ca.residual17)[sel]
        diss = [r.residual for r in ca.dissipation.reports if lo <= r.s <= hi]
        E = np.array([e.E for e in ca.energies[cfg.energy.convention]])
        t3 = {}
        for name, series in ca.energies.items():
            chk = en.check_dissipation(series, ca.rhs, res.config.similarity.ds, res.config.params)
            t3[name] = max(r.residual for r in chk.reports if lo <= r.s <= hi)
        rows.append({
            "level": lev, "nx": res.config.grid.nx, "ds": res.config.similarity.ds,
            "T_est": res.estimate.T_est, "s_window": (float(lo), float(hi)),
            "residual_1_7": float(np.nanmax(r17)),
            "dissipation_residual": float(max(diss)),
            "E_at_hi": float(np.interp(hi, s, E)),
            "monotone_violations": ca.dissipation.violations,
            "t3_residuals": t3,
            "t3_winner": ca.conventions["winner"],
        })
    for key in ("residual_1_7", "dissipation_residual"):
        for a, b in zip(rows, rows[1:]):
            b[f"order_{key}"] = math.log2(a[key] / b[key]) if b[key] > 0 else math.inf
    return {"levels": rows}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))
