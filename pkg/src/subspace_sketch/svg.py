"""Self-contained SVG chart of failure rate against sketch size."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

from .conclab.stats import ConcentrationReport

WIDTH, HEIGHT = 800, 500
_LEFT, _RIGHT, _TOP, _BOTTOM = 80, 30, 50, 60


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(t)
        t += step
    return ticks


def report_svg(report: ConcentrationReport, title: str = "") -> str:
    """Chart of p_hat on a log axis against n, with the fitted decay line dashed.

    Cells without failures cannot be placed on a log axis; they are drawn as
    hollow markers on the bottom edge.
    """
    cells = [c for c in report.cells if c.trials > 0]
    ns = [c.n for c in cells] or list(report.config.n_grid)
    x_lo, x_hi = min(ns), max(ns)
    if x_lo == x_hi:
        x_lo, x_hi = x_lo - 1, x_hi + 1

    logs = [math.log(c.p_hat) for c in cells if c.failures > 0]
    for c in cells:
        if c.failures > 0 and c.wilson_lo > 0:
            logs.append(math.log(c.wilson_lo))
        if c.wilson_hi > 0:
            logs.append(math.log(c.wilson_hi))
    fit = report.fit
    if fit is not None:
        logs += [fit.intercept + fit.slope * x_lo, fit.intercept + fit.slope * x_hi]
    if not logs:
        logs = [math.log(1e-3), 0.0]
    y_lo = math.floor(min(logs) / math.log(10)) * math.log(10)
    y_hi = min(0.0, math.ceil(max(logs) / math.log(10)) * math.log(10))
    if y_hi <= y_lo:
        y_hi = y_lo + math.log(10)

    pw = WIDTH - _LEFT - _RIGHT
    ph = HEIGHT - _TOP - _BOTTOM

    def px(n: float) -> float:
        return _LEFT + (n - x_lo) / (x_hi - x_lo) * pw

    def py(lnp: float) -> float:
        lnp = min(max(lnp, y_lo), y_hi)
        return _TOP + (y_hi - lnp) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" '
        f'width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{_LEFT}" y="{_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    head = title or f"{report.config.lemma_id}: failure rate vs sketch size (eps={report.config.epsilon:g})"
    out.append(f'<text x="{WIDTH / 2}" y="28" text-anchor="middle" font-size="15">{escape(head)}</text>')

    for d in range(int(round(y_lo / math.log(10))), int(round(y_hi / math.log(10))) + 1):
        y = py(d * math.log(10))
        out.append(f'<line x1="{_LEFT}" y1="{_fmt(y)}" x2="{_LEFT + pw}" y2="{_fmt(y)}" stroke="#ddd"/>')
        out.append(f'<text x="{_LEFT - 8}" y="{_fmt(y + 4)}" text-anchor="end">1e{d}</text>')
    for t in _nice_ticks(x_lo, x_hi):
        x = px(t)
        out.append(f'<line x1="{_fmt(x)}" y1="{_TOP + ph}" x2="{_fmt(x)}" y2="{_TOP + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{_fmt(x)}" y="{_TOP + ph + 20}" text-anchor="middle">{t:g}</text>')
    out.append(f'<text x="{_LEFT + pw / 2}" y="{HEIGHT - 15}" text-anchor="middle">sketch size n</text>')
    out.append(
        f'<text x="20" y="{_TOP + ph / 2}" text-anchor="middle" '
        f'transform="rotate(-90 20 {_TOP + ph / 2})">failure rate (log scale)</text>'
    )

    pts = []
    for c in cells:
        x = px(c.n)
        if c.wilson_hi > 0:
            lo_y = py(math.log(c.wilson_lo)) if c.wilson_lo > 0 else py(y_lo)
            out.append(
                f'<line x1="{_fmt(x)}" y1="{_fmt(lo_y)}" x2="{_fmt(x)}" '
                f'y2="{_fmt(py(math.log(c.wilson_hi)))}" stroke="#1f77b4" stroke-width="1.5"/>'
            )
        if c.failures > 0:
            y = py(math.log(c.p_hat))
            pts.append(f"{_fmt(x)},{_fmt(y)}")
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="4" fill="#1f77b4"/>')
        else:
            out.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(py(y_lo))}" r="4" fill="white" stroke="#1f77b4"/>'
            )
    if len(pts) > 1:
        out.append(f'<polyline points="{" ".join(pts)}" fill="none" stroke="#1f77b4"/>')
    if fit is not None:
        out.append(
            f'<line x1="{_fmt(px(x_lo))}" y1="{_fmt(py(fit.intercept + fit.slope * x_lo))}" '
            f'x2="{_fmt(px(x_hi))}" y2="{_fmt(py(fit.intercept + fit.slope * x_hi))}" '
            f'stroke="#d62728" stroke-width="1.5" stroke-dasharray="6 4"/>'
        )
        out.append(
            f'<text x="{_LEFT + pw - 8}" y="{_TOP + 18}" text-anchor="end" fill="#d62728">'
            f"fit: slope={fit.slope:.4g}, r2={fit.r2:.3f}</text>"
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
