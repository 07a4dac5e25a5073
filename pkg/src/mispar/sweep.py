"""Parameter sweeps and phase-boundary tables, emitted as CSV.

CSV is the single interchange format: RFC-4180 commas, '.' decimal,
literal `inf` / `nan`, shortest-roundtrip float formatting.  Identical
inputs (flags plus seed) produce byte-identical files.
"""

from __future__ import annotations

import io
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import MisparError, NoWindow
from .lasso import alpha_c, lasso_risk, mu_c, mu_c_approx
from .model import ModelConfig
from .ridge import ridge_risk
from .simulator import run_trials

__all__ = [
    "Table",
    "SweepSpec",
    "sweep",
    "phase",
    "heatmap",
    "format_value",
    "read_csv",
]

THEORY_OUTPUTS = ("te_l2", "ge_l2", "te_l1", "ge_l1")
SIM_OUTPUTS = ("sim_l2", "sim_l1")
ALL_OUTPUTS = THEORY_OUTPUTS + SIM_OUTPUTS
AXES = ("mu", "alpha", "lambda", "rho")


def format_value(x: float) -> str:
    """Shortest decimal that round-trips; inf/nan as bare literals."""
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


@dataclass
class Table:
    columns: list[str]
    rows: list[list[float]] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        try:
            i = self.columns.index(name)
        except ValueError:
            raise KeyError(name) from None
        return np.array([row[i] for row in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.columns) + "\r\n")
        for row in self.rows:
            buf.write(",".join(format_value(v) for v in row) + "\r\n")
        return buf.getvalue()

    def write(self, path: str) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv())


def read_csv(path: str) -> Table:
    with open(path, newline="") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    if not lines:
        return Table(columns=[])
    columns = lines[0].split(",")
    rows = [[float(tok) for tok in ln.split(",")] for ln in lines[1:]]
    return Table(columns=columns, rows=rows)


@dataclass(frozen=True)
class SweepSpec:
    """One-axis sweep: which knob varies, the grid, everything else fixed."""

    axis: str
    grid: tuple[float, ...]
    fixed: ModelConfig
    outputs: tuple[str, ...]
    sim_n: int = 200
    sim_trials: int = 100
    seed: int = 42
    include_singularity: bool = False

    def __post_init__(self):
        if self.axis not in AXES:
            raise ValueError(f"axis must be one of {AXES}, got {self.axis!r}")
        g = list(self.grid)
        if any(b <= a for a, b in zip(g, g[1:])):
            raise ValueError("grid must be strictly increasing")
        unknown = set(self.outputs) - set(ALL_OUTPUTS)
        if unknown:
            raise ValueError(f"unknown outputs: {sorted(unknown)}")
        if (
            self.axis == "mu"
            and not self.include_singularity
            and any(v == 1.0 for v in g)
            and self.fixed.lam == 0.0
        ):
            raise ValueError(
                "grid contains the mu = 1 singularity; pass include_singularity "
                "to emit the inf sentinel on purpose"
            )

    def config_at(self, value: float) -> ModelConfig:
        key = "lam" if self.axis == "lambda" else self.axis
        return self.fixed.with_(**{key: value})


def _sweep_columns(outputs: tuple[str, ...], axis: str) -> list[str]:
    cols = [axis]
    for name in THEORY_OUTPUTS:
        if name in outputs:
            cols.append(name)
    for name in SIM_OUTPUTS:
        if name in outputs:
            tag = name[4:]  # l2 / l1
            cols += [f"sim_te_{tag}", f"sim_te_{tag}_err", f"sim_ge_{tag}", f"sim_ge_{tag}_err"]
    return cols


def sweep(spec: SweepSpec, warn=lambda msg: print(msg, file=sys.stderr)) -> tuple[Table, int]:
    """Evaluate the sweep; returns (table, number of failed points).

    Per-point solver failures are recorded as nan in every affected cell
    and reported through `warn`; the caller decides what failure rate is
    fatal (the CLI exits 2 beyond 10%).
    """
    table = Table(columns=_sweep_columns(spec.outputs, spec.axis))
    want_l2 = {"te_l2", "ge_l2"} & set(spec.outputs)
    want_l1 = {"te_l1", "ge_l1"} & set(spec.outputs)
    failures = 0

    for i, value in enumerate(spec.grid):
        cfg = spec.config_at(value)
        row = [float(value)]
        failed = False

        theory = {}
        if want_l2:
            try:
                pt = ridge_risk(cfg)
                theory["te_l2"], theory["ge_l2"] = pt.te, pt.ge
            except MisparError as exc:
                warn(f"point {spec.axis}={value}: l2 theory failed: {exc}")
                theory["te_l2"] = theory["ge_l2"] = math.nan
                failed = True
        if want_l1:
            try:
                pt, _state = lasso_risk(cfg)
                theory["te_l1"], theory["ge_l1"] = pt.te, pt.ge
            except MisparError as exc:
                warn(f"point {spec.axis}={value}: l1 theory failed: {exc}")
                theory["te_l1"] = theory["ge_l1"] = math.nan
                failed = True
        for name in THEORY_OUTPUTS:
            if name in spec.outputs:
                row.append(theory[name])

        for name, tag in (("sim_l2", "l2"), ("sim_l1", "l1")):
            if name not in spec.outputs:
                continue
            try:
                summary = run_trials(cfg, spec.sim_n, spec.sim_trials, tag, [spec.seed, i])
                row += [summary.te_mean, summary.te_stderr, summary.ge_mean, summary.ge_stderr]
            except MisparError as exc:
                warn(f"point {spec.axis}={value}: {name} failed: {exc}")
                row += [math.nan] * 4
                failed = True

        failures += failed
        table.rows.append(row)
    return table, failures


def phase(rho_grid, alpha: float) -> Table:
    """Recovery-boundary table: for each rho, the critical undersampling
    alpha_c(rho) and the exact and approximate recovery edges mu_c.

    Rows without a perfect-recovery window (alpha <= alpha_c) carry nan in
    the mu_c columns and no_window = 1.
    """
    table = Table(
        columns=["rho", "rho_over_alpha", "alpha_c", "mu_c_exact", "mu_c_approx", "no_window"]
    )
    for rho in rho_grid:
        rho = float(rho)
        boundary = alpha_c(rho)
        try:
            exact = mu_c(rho, alpha).mu_c
            flag = 0.0
        except NoWindow:
            exact = math.nan
            flag = 1.0
        table.rows.append(
            [rho, rho / alpha, boundary.alpha_c, exact, mu_c_approx(rho, alpha), flag]
        )
    return table


def heatmap(
    mu_grid,
    alpha_grid,
    rho: float,
    sigma: float,
    lam: float = 0.0,
    output: str = "ge_l2",
) -> Table:
    """Long-format (mu, alpha, value) table over a parameter plane; the
    mu = 1 interpolation singularity serializes as inf."""
    if output not in THEORY_OUTPUTS:
        raise ValueError(f"heatmap output must be one of {THEORY_OUTPUTS}")
    table = Table(columns=["mu", "alpha", output])
    for a in alpha_grid:
        for m in mu_grid:
            cfg = ModelConfig(alpha=float(a), mu=float(m), rho=rho, sigma=sigma, lam=lam)
            if output.endswith("l2"):
                pt = ridge_risk(cfg)
            else:
                pt, _ = lasso_risk(cfg)
            value = pt.te if output.startswith("te") else pt.ge
            table.rows.append([float(m), float(a), value])
    return table
