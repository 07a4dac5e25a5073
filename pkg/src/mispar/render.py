"""Static SVG rendering of sweep tables.

Deliberately dependency-free and byte-deterministic: same table and
options always produce the identical document.  Non-finite values (the
mu = 1 divergence serializes as inf) break the polyline rather than
drawing a point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import MissingColumn
from .sweep import Table

__all__ = ["PlotSpec", "render_svg", "expand_errbars"]

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 64.0, 16.0, 20.0, 46.0


@dataclass(frozen=True)
class PlotSpec:
    x: str
    ys: tuple[str, ...]
    errbars: tuple[str, ...] = ()
    logx: bool = False
    logy: bool = False
    width: float = 840.0
    height: float = 560.0
    title: str = ""


def expand_errbars(tokens, ys, columns) -> list[tuple[str, str]]:
    """Resolve error-bar tokens to (mean, stderr) column pairs.

    Accepts explicit mean-column names (requiring a `<name>_err` sibling)
    or the shorthand `sim_l1` / `sim_l2`, which picks the simulation
    columns matching the penalty tag and, when possible, the plotted ys.
    """
    pairs: list[tuple[str, str]] = []
    for tok in tokens:
        if tok in columns:
            err = f"{tok}_err"
            if err not in columns:
                raise MissingColumn(f"no column {err!r} for error bars on {tok!r}")
            pairs.append((tok, err))
            continue
        if tok in ("sim_l1", "sim_l2"):
            tag = tok[4:]
            candidates = [
                c
                for c in columns
                if c.startswith("sim_") and c.endswith(f"_{tag}") and f"{c}_err" in columns
            ]
            matched = [c for c in candidates if c[4:] in ys]
            chosen = matched or candidates
            if not chosen:
                raise MissingColumn(f"no simulation columns found for {tok!r}")
            pairs.extend((c, f"{c}_err") for c in chosen)
            continue
        raise MissingColumn(f"unknown error-bar column {tok!r}")
    return pairs


def _nice_ticks(lo: float, hi: float) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / 5.0
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < 1e-12 * span else t)
        t += step
    return ticks


def _log_ticks(lo: float, hi: float) -> list[float]:
    ticks = []
    e = math.floor(math.log10(lo))
    while 10.0 ** e <= hi * 1.0000001:
        if 10.0 ** e >= lo * 0.9999999:
            ticks.append(10.0 ** e)
        e += 1
    if len(ticks) <= 2:
        extra = []
        for t in ticks:
            for k in (2.0, 5.0):
                v = k * t
                if lo <= v <= hi:
                    extra.append(v)
        ticks = sorted(ticks + extra)
    return ticks


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _coord(x: float) -> str:
    return f"{x:.2f}"


def render_svg(table: Table, spec: PlotSpec) -> str:
    """Render line series (spec.ys) plus error-bar series over spec.x."""
    for name in (spec.x, *spec.ys):
        if name not in table.columns:
            raise MissingColumn(f"table has no column {name!r}")
    bar_pairs = expand_errbars(spec.errbars, spec.ys, table.columns)

    xs = table.column(spec.x)
    series = {name: table.column(name) for name in spec.ys}
    bars = {mean: (table.column(mean), table.column(err)) for mean, err in bar_pairs}

    def drawable_x(v):
        return math.isfinite(v) and (not spec.logx or v > 0)

    def drawable_y(v):
        return math.isfinite(v) and (not spec.logy or v > 0)

    xvals = [v for v in xs if drawable_x(v)]
    yvals = []
    for vals in series.values():
        yvals += [v for v in vals if drawable_y(v)]
    for mean, err in bars.values():
        for v, e in zip(mean, err):
            if drawable_y(v):
                yvals.append(v)
                if math.isfinite(e):
                    if drawable_y(v + e):
                        yvals.append(v + e)
                    if drawable_y(v - e):
                        yvals.append(v - e)
    if not xvals or not yvals:
        raise MissingColumn("nothing drawable: all values non-finite or non-positive on log axes")

    x0, x1 = min(xvals), max(xvals)
    y0, y1 = min(yvals), max(yvals)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5

    tx = (lambda v: math.log10(v)) if spec.logx else (lambda v: v)
    ty = (lambda v: math.log10(v)) if spec.logy else (lambda v: v)
    plot_w = spec.width - MARGIN_L - MARGIN_R
    plot_h = spec.height - MARGIN_T - MARGIN_B

    def sx(v):
        return MARGIN_L + (tx(v) - tx(x0)) / (tx(x1) - tx(x0)) * plot_w

    def sy(v):
        return MARGIN_T + plot_h - (ty(v) - ty(y0)) / (ty(y1) - ty(y0)) * plot_h

    out = []
    out.append(
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(spec.width)}" '
        f'height="{_fmt(spec.height)}" viewBox="0 0 {_fmt(spec.width)} {_fmt(spec.height)}">'
    )
    out.append('<rect width="100%" height="100%" fill="white"/>')
    out.append(
        f'<rect x="{_coord(MARGIN_L)}" y="{_coord(MARGIN_T)}" width="{_coord(plot_w)}" '
        f'height="{_coord(plot_h)}" fill="none" stroke="#333" stroke-width="1"/>'
    )
    if spec.title:
        out.append(
            f'<text x="{_coord(spec.width / 2)}" y="14" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{spec.title}</text>'
        )

    xticks = _log_ticks(x0, x1) if spec.logx else _nice_ticks(x0, x1)
    yticks = _log_ticks(y0, y1) if spec.logy else _nice_ticks(y0, y1)
    for t in xticks:
        px = sx(t)
        out.append(
            f'<line x1="{_coord(px)}" y1="{_coord(MARGIN_T + plot_h)}" x2="{_coord(px)}" '
            f'y2="{_coord(MARGIN_T + plot_h + 5)}" stroke="#333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_coord(px)}" y="{_coord(MARGIN_T + plot_h + 18)}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in yticks:
        py = sy(t)
        out.append(
            f'<line x1="{_coord(MARGIN_L - 5)}" y1="{_coord(py)}" x2="{_coord(MARGIN_L)}" '
            f'y2="{_coord(py)}" stroke="#333" stroke-width="1"/>'
        )
        out.append(
            f'<text x="{_coord(MARGIN_L - 8)}" y="{_coord(py + 4)}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    out.append(
        f'<text x="{_coord(MARGIN_L + plot_w / 2)}" y="{_coord(spec.height - 8)}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">{spec.x}</text>'
    )

    legend: list[tuple[str, str, str]] = []  # label, color, kind
    color_i = 0

    for name in spec.ys:
        color = PALETTE[color_i % len(PALETTE)]
        color_i += 1
        legend.append((name, color, "line"))
        path = []
        pen_down = False
        for xv, yv in zip(xs, series[name]):
            if drawable_x(xv) and drawable_y(yv):
                cmd = "L" if pen_down else "M"
                path.append(f"{cmd}{_coord(sx(xv))} {_coord(sy(yv))}")
                pen_down = True
            else:
                pen_down = False  # gap: divergence or masked point
        if path:
            out.append(
                f'<path d="{" ".join(path)}" fill="none" stroke="{color}" stroke-width="1.6"/>'
            )

    for mean_col, err_col in bar_pairs:
        color = PALETTE[color_i % len(PALETTE)]
        color_i += 1
        legend.append((mean_col, color, "marker"))
        mean, err = bars[mean_col]
        for xv, yv, ev in zip(xs, mean, err):
            if not (drawable_x(xv) and drawable_y(yv)):
                continue
            px = sx(xv)
            out.append(
                f'<circle cx="{_coord(px)}" cy="{_coord(sy(yv))}" r="2.4" fill="{color}"/>'
            )
            if not math.isfinite(ev) or ev <= 0:
                continue
            top, bot = yv + ev, yv - ev
            if spec.logy:
                bot = max(bot, y0 * 1e-3) if bot <= 0 else bot
            if not (drawable_y(top) and drawable_y(bot)):
                continue
            pt, pb = sy(top), sy(bot)
            out.append(
                f'<line x1="{_coord(px)}" y1="{_coord(pt)}" x2="{_coord(px)}" '
                f'y2="{_coord(pb)}" stroke="{color}" stroke-width="1"/>'
            )
            for py in (pt, pb):
                out.append(
                    f'<line x1="{_coord(px - 3)}" y1="{_coord(py)}" x2="{_coord(px + 3)}" '
                    f'y2="{_coord(py)}" stroke="{color}" stroke-width="1"/>'
                )

    ly = MARGIN_T + 14
    for label, color, kind in legend:
        lx = MARGIN_L + plot_w - 150
        if kind == "line":
            out.append(
                f'<line x1="{_coord(lx)}" y1="{_coord(ly - 4)}" x2="{_coord(lx + 22)}" '
                f'y2="{_coord(ly - 4)}" stroke="{color}" stroke-width="1.6"/>'
            )
        else:
            out.append(
                f'<circle cx="{_coord(lx + 11)}" cy="{_coord(ly - 4)}" r="2.4" fill="{color}"/>'
            )
        out.append(
            f'<text x="{_coord(lx + 28)}" y="{_coord(ly)}" font-family="sans-serif" '
            f'font-size="11">{label}</text>'
        )
        ly += 16

    out.append("</svg>")
    return "\n".join(out) + "\n"
