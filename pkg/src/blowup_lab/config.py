"""Run configuration: an INI document with flat sections, validated at parse time.

Schema (every key optional unless marked)::

    [model]       N (required), p (required), alpha
    [grid]        L, nx
    [ic]          kind = flat | gaussian_bump | custom
                  flat:          u0, u1
                  gaussian_bump: center, width, u0_amp, u1_amp, u0_base, u1_base
                  custom:        table (path to .npz holding arrays u0, u1)
    [solver]      cfl, safety, blowup_threshold, t_max, stencil
    [similarity]  centers (auto | "x,y; x,y; ..."), T_prime_mode (estimate | fixed),
                  T_prime, s0_offset, ds, s_max, nz (auto | int), r (auto | float)
    [energy]      convention (as_stated | proof_i1), C_hypothesis, mono_tol
    [outputs]     directory, formats (csv | csv,npz), require_blowup

Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .energy import CONVENTIONS
from .model import AdmissibilityError, ModelParams, make_params
from .solver import CustomTable, Flat, GaussianBump, GridSpec, SolverSettings


class ConfigError(ValueError):
    """Schema violation, carrying the offending line where known."""


SCHEMA = {
    "model": {"N", "p", "alpha"},
    "grid": {"L", "nx"},
    "ic": {"kind", "u0", "u1", "center", "width", "u0_amp", "u1_amp", "u0_base", "u1_base", "table"},
    "solver": {"cfl", "safety", "blowup_threshold", "t_max", "stencil"},
    "similarity": {"centers", "T_prime_mode", "T_prime", "s0_offset", "ds", "s_max", "nz", "r"},
    "energy": {"convention", "C_hypothesis", "mono_tol"},
    "outputs": {"directory", "formats", "require_blowup"},
}

IC_KEYS = {
    "flat": {"kind", "u0", "u1"},
    "gaussian_bump": {"kind", "center", "width", "u0_amp", "u1_amp", "u0_base", "u1_base"},
    "custom": {"kind", "table"},
}


@dataclass
class SimilarityConfig:
    centers: Optional[list] = None
    T_prime_mode: str = "estimate"
    T_prime: Optional[float] = None
    s0_offset: float = 0.0
    ds: float = 0.025
    s_max: float = 6.0
    nz: Optional[int] = None
    r: Optional[float] = None


@dataclass
class EnergyConfig:
    convention: str = "as_stated"
    C_hypothesis: Optional[float] = None
    mono_tol: float = 1e-6


@dataclass
class OutputConfig:
    directory: str = "out"
    formats: tuple = ("csv",)
    require_blowup: bool = True


@dataclass
class RunConfig:
    params: ModelParams
    grid: GridSpec
    ic: object
    solver: SolverSettings = field(default_factory=SolverSettings)
    similarity: SimilarityConfig = field(default_factory=SimilarityConfig)
    energy: EnergyConfig = field(default_factory=EnergyConfig)
    outputs: OutputConfig = field(default_factory=OutputConfig)
    source: str = ""

    def echo(self) -> dict:
        """Plain-data echo of every resolved setting, for the run manifest."""
        ic = self.ic
        if isinstance(ic, CustomTable):
            ic_echo = {"kind": "custom", "u0": np.asarray(ic.u0).tolist(), "u1": np.asarray(ic.u1).tolist()}
        else:
            ic_echo = {"kind": "flat" if isinstance(ic, Flat) else "gaussian_bump", **asdict(ic)}
        return {
            "model": {"N": self.params.N, "p": self.params.p, "alpha": self.params.alpha,
                      "beta": self.params.beta, "branch": self.params.branch},
            "grid": {"N": self.grid.N, "L": self.grid.L, "nx": self.grid.nx, "dx": self.grid.dx},
            "ic": ic_echo,
            "solver": asdict(self.solver),
            "similarity": asdict(self.similarity),
            "energy": asdict(self.energy),
            "outputs": {**asdict(self.outputs), "formats": list(self.outputs.formats)},
        }


def _line_index(text: str) -> dict:
    index, section = {}, None
    for n, line in enumerate(text.splitlines(), start=1):
        m = re.match(r"\s*\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index[(section, None)] = n
            continue
        m = re.match(r"\s*([^=:#;\s][^=:]*?)\s*[=:]", line)
        if m and section is not None:
            index[(section, m.group(1))] = n
    return index


class _Reader:
    def __init__(self, cp, lines):
        self.cp = cp
        self.lines = lines

    def where(self, section, key=None) -> str:
        n = self.lines.get((section, key)) or self.lines.get((section, None))
        return f"line {n}: " if n else ""

    def fail(self, section, key, msg):
        raise ConfigError(f"{self.where(section, key)}[{section}] {key}: {msg}")

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def raw(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.cp.get(section, key).strip()

    def float(self, section, key, default=None, *, positive=False):
        v = self.raw(section, key)
        if v is None:
            return default
        try:
            x = float(v)
        except ValueError:
            self.fail(section, key, f"expected a number, got {v!r}")
        if not math.isfinite(x):
            self.fail(section, key, "must be finite")
        if positive and not x > 0:
            self.fail(section, key, "must be positive")
        return x

    def int(self, section, key, default=None):
        v = self.raw(section, key)
        if v is None:
            return default
        try:
            return int(v)
        except ValueError:
            self.fail(section, key, f"expected an integer, got {v!r}")

    def bool(self, section, key, default):
        v = self.raw(section, key)
        if v is None:
            return default
        if v.lower() in {"1", "true", "yes", "on"}:
            return True
        if v.lower() in {"0", "false", "no", "off"}:
            return False
        self.fail(section, key, f"expected a boolean, got {v!r}")

    def vector(self, section, key, N, text=None):
        text = self.raw(section, key) if text is None else text
        try:
            vals = tuple(float(c) for c in text.split(","))
        except ValueError:
            self.fail(section, key, f"expected comma-separated coordinates, got {text!r}")
        if len(vals) == 1:
            vals = vals * N
        if len(vals) != N:
            self.fail(section, key, f"expected {N} coordinates, got {len(vals)}")
        return vals


def parse_config(text: str, *, base_dir: Optional[Path] = None) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed document: {exc}") from exc
    lines = _line_index(text)
    rd = _Reader(cp, lines)

    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{rd.where(section)}unknown section [{section}]")
        for key in cp.options(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{rd.where(section, key)}unknown key {key!r} in [{section}]")

    if not cp.has_section("model") or not rd.has("model", "N") or not rd.has("model", "p"):
        raise ConfigError("[model] N and p are required")
    N = rd.int("model", "N")
    p = rd.float("model", "p")
    if p <= 1.0:
        rd.fail("model", "p", "p > 1 required")
    try:
        params = make_params(N, p, rd.float("model", "alpha"))
    except AdmissibilityError as exc:
        rd.fail("model", "alpha" if rd.has("model", "alpha") else "p", str(exc))

    solver = SolverSettings(
        cfl=rd.float("solver", "cfl", 0.5, positive=True),
        safety=rd.float("solver", "safety", SolverSettings.safety, positive=True),
        blowup_threshold=rd.float("solver", "blowup_threshold", 1e8, positive=True),
        t_max=rd.float("solver", "t_max", 2.0, positive=True),
        stencil=rd.int("solver", "stencil", 2),
    )
    if solver.stencil not in (2, 4):
        rd.fail("solver", "stencil", "must be 2 or 4")

    L = rd.float("grid", "L", 2.0 + solver.t_max, positive=True)
    nx = rd.int("grid", "nx", 128)
    try:
        grid = GridSpec(N=N, L=L, nx=nx)
    except ValueError as exc:
        rd.fail("grid", "nx" if nx < 16 else "L", str(exc))
    if L < 2.0 + solver.t_max - 1e-12:
        rd.fail("grid", "L", f"L={L} must be >= 2 + t_max = {2.0 + solver.t_max} (finite propagation margin)")

    ic = _parse_ic(rd, cp, grid, base_dir)

    sim = SimilarityConfig(
        T_prime_mode=rd.raw("similarity", "T_prime_mode", "estimate"),
        s0_offset=rd.float("similarity", "s0_offset", 0.0),
        ds=rd.float("similarity", "ds", 0.025, positive=True),
        s_max=rd.float("similarity", "s_max", 6.0),
    )
    if sim.T_prime_mode not in ("estimate", "fixed"):
        rd.fail("similarity", "T_prime_mode", "must be 'estimate' or 'fixed'")
    if sim.T_prime_mode == "fixed":
        if not rd.has("similarity", "T_prime"):
            rd.fail("similarity", "T_prime", "required when T_prime_mode = fixed")
        sim.T_prime = rd.float("similarity", "T_prime", positive=True)
    if sim.s0_offset < 0:
        rd.fail("similarity", "s0_offset", "must be >= 0")
    nz = rd.raw("similarity", "nz", "auto")
    if nz != "auto":
        sim.nz = rd.int("similarity", "nz")
        if sim.nz < 8:
            rd.fail("similarity", "nz", "must be >= 8 so interior stencils exist")
    r = rd.raw("similarity", "r", "auto")
    if r != "auto":
        sim.r = rd.float("similarity", "r")
        if sim.r < 1.0:
            rd.fail("similarity", "r", "r >= 1 required")
        if N >= 3 and sim.r > 2.0 * N / (N - 2.0):
            rd.fail("similarity", "r", f"r <= 2N/(N-2) = {2.0 * N / (N - 2.0)} required")
    centers = rd.raw("similarity", "centers", "auto")
    if centers != "auto":
        sim.centers = [rd.vector("similarity", "centers", N, part) for part in centers.split(";") if part.strip()]
        for c in sim.centers:
            if any(abs(x) + 1.0 > L for x in c):
                rd.fail("similarity", "centers", f"unit ball around {c} leaves the box [-{L}, {L}]")

    energy = EnergyConfig(
        convention=rd.raw("energy", "convention", "as_stated"),
        C_hypothesis=rd.float("energy", "C_hypothesis"),
        mono_tol=rd.float("energy", "mono_tol", 1e-6, positive=True),
    )
    if energy.convention not in CONVENTIONS:
        rd.fail("energy", "convention", f"must be one of {CONVENTIONS}")

    formats = tuple(f.strip() for f in rd.raw("outputs", "formats", "csv").split(",") if f.strip())
    if not set(formats) <= {"csv", "npz"} or "csv" not in formats:
        rd.fail("outputs", "formats", "must be 'csv' or 'csv,npz'")
    outputs = OutputConfig(
        directory=rd.raw("outputs", "directory", "out"),
        formats=formats,
        require_blowup=rd.bool("outputs", "require_blowup", True),
    )
    return RunConfig(params, grid, ic, solver, sim, energy, outputs, source=text)


def _parse_ic(rd: _Reader, cp, grid: GridSpec, base_dir):
    kind = rd.raw("ic", "kind", "flat")
    if kind not in IC_KEYS:
        rd.fail("ic", "kind", f"must be one of {sorted(IC_KEYS)}")
    if cp.has_section("ic"):
        for key in cp.options("ic"):
            if key not in IC_KEYS[kind]:
                rd.fail("ic", key, f"not a parameter of kind={kind}")
    if kind == "flat":
        return Flat(u0=rd.float("ic", "u0", 0.0), u1=rd.float("ic", "u1", 1.0))
    if kind == "gaussian_bump":
        center = rd.vector("ic", "center", grid.N) if rd.has("ic", "center") else (0.0,) * grid.N
        width = rd.float("ic", "width", 1.0, positive=True)
        if width < 2.0 * grid.dx:
            rd.fail("ic", "width", f"width {width} < 2*dx = {2 * grid.dx} is unresolved")
        return GaussianBump(
            center=center, width=width,
            u0_amp=rd.float("ic", "u0_amp", 0.0), u1_amp=rd.float("ic", "u1_amp", 1.0),
            u0_base=rd.float("ic", "u0_base", 0.0), u1_base=rd.float("ic", "u1_base", 0.0),
        )
    path = rd.raw("ic", "table")
    if path is None:
        rd.fail("ic", "table", "required for kind = custom")
    path = Path(path)
    if not path.is_absolute() and base_dir is not None:
        path = Path(base_dir) / path
    try:
        with np.load(path) as data:
            u0, u1 = np.array(data["u0"], dtype=float), np.array(data["u1"], dtype=float)
    except (OSError, KeyError) as exc:
        rd.fail("ic", "table", f"cannot read arrays u0, u1 from {path}: {exc}")
    if u0.shape != grid.shape or u1.shape != grid.shape:
        rd.fail("ic", "table", f"arrays must have shape {grid.shape}")
    if not (np.all(np.isfinite(u0)) and np.all(np.isfinite(u1))):
        rd.fail("ic", "table", "arrays must be finite")
    return CustomTable(u0=u0, u1=u1)


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
