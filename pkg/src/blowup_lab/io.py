"""CSV/JSON writers.  Numbers are written with 17 significant digits (round-trip exact)."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .ball import BallGrid


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path, columns, rows, header_lines=()):
    with open(path, "w", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, data):
    Path(path).write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def write_manifest(path, cfg):
    write_json(path, {
        "code_version": __version__,
        "config": cfg.echo(),
        "config_source": cfg.source,
        "seeds": [],
    })


def write_trajectory(path, traj):
    rows = zip(traj.t, traj.sup_ut, traj.dt, [traj.detected] * len(traj.t))
    write_csv(path, ["t", "sup_ut", "dt", "detected_flag"], rows)


def _grid_header(grid):
    return [f"N={grid.N} L={fmt(grid.L)} nx={grid.nx} dx={fmt(grid.dx)} layout=row-major"]


def write_snapshots_csv(path, grid, snapshots, s0, ds):
    n = int(np.prod(grid.shape))
    cols = ["s", "t"] + [f"u_{i}" for i in range(n)] + [f"ut_{i}" for i in range(n)]
    rows = (
        [s0 + k * ds, sn.t, *sn.u.ravel(), *sn.ut.ravel()] for k, sn in enumerate(snapshots)
    )
    write_csv(path, cols, rows, _grid_header(grid))


def write_snapshots_npz(path, grid, snapshots, s0, ds):
    np.savez(
        path, N=grid.N, L=grid.L, nx=grid.nx,
        s=np.array([s0 + k * ds for k in range(len(snapshots))]),
        t=np.array([sn.t for sn in snapshots]),
        u=np.stack([sn.u for sn in snapshots]), ut=np.stack([sn.ut for sn in snapshots]),
    )


def read_snapshots_csv(path):
    """Inverse of :func:`write_snapshots_csv`: (header dict, s, t, u, ut)."""
    with open(path) as fh:
        header = fh.readline()[2:].split()
    meta = dict(item.split("=") for item in header)
    N, nx = int(meta["N"]), int(meta["nx"])
    data = np.loadtxt(path, delimiter=",", comments="#", skiprows=2, ndmin=2)
    n = nx**N
    shape = (len(data),) + (nx,) * N
    return meta, data[:, 0], data[:, 1], data[:, 2:2 + n].reshape(shape), data[:, 2 + n:].reshape(shape)


ENERGY_COLUMNS = (
    ["s"] + [f"T{i}" for i in range(1, 8)] + ["E", "dE_fd", "rhs"]
    + [f"rhs_term{i}" for i in range(1, 6)] + ["residual", "monotone_flag"]
)
BOUNDS_COLUMNS = ["s", "t", "thm11", "thm12", "p31", "p32", "p33", "lr_theta", "lr_conv"]
WINDOW_COLUMNS = ["s", "w2", "w3", "w4"]


def write_center(directory: Path, ca, ball: BallGrid, cfg):
    k0 = ca.report_from
    energies = ca.energies[cfg.energy.convention][k0:]
    reps = {r.s: r for r in ca.dissipation.reports}
    rows = []
    for j, e in enumerate(energies):
        rep = reps.get(e.s)
        rhs = ca.rhs[k0 + j]
        terms = rhs[1] if rhs is not None else (math.nan,) * 5
        mono = ca.dissipation.monotone[j] if j < len(ca.dissipation.monotone) else True
        rows.append([
            e.s, *e.terms(), e.E,
            rep.dE_fd if rep else math.nan, rhs[0] if rhs is not None else math.nan,
            *terms, rep.residual if rep else math.nan, mono,
        ])
    write_csv(directory / "energy.csv", ENERGY_COLUMNS, rows)

    write_csv(
        directory / "bounds.csv", BOUNDS_COLUMNS,
        ([b.s, b.t, b.thm11, b.thm12, b.p31, b.p32, b.p33, b.lr_theta, b.lr_conv]
         for b in ca.bounds[k0:]),
    )
    write_csv(directory / "windows.csv", WINDOW_COLUMNS,
              ([w.s, w.w2, w.w3, w.w4] for w in ca.windows))

    npts = ball.mask.size
    cols = (["s", "t"] + [f"theta_{i}" for i in range(npts)]
            + [f"grad{c}_{i}" for c in range(ball.N) for i in range(npts)]
            + [f"conv_{i}" for i in range(npts)] + [f"conv_scaled_{i}" for i in range(npts)])
    header = [f"N={ball.N} nz={ball.nz} dz={fmt(ball.dz)} a={','.join(fmt(x) for x in ca.a)} layout=row-major"]
    write_csv(
        directory / "frames.csv", cols,
        ([f.s, f.t, *f.theta.ravel(), *f.grad_theta.ravel(), *cv.ravel(),
          *(math.exp(-f.s) * cv).ravel()]
         for f, cv in zip(ca.frames[k0:], ca.conv[k0:])),
        header,
    )
