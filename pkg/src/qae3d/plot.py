"""Static SVG line charts of a training log, no renderer needed."""
from __future__ import annotations

from .training import TrainLog

WIDTH = 800
PANEL_HEIGHT = 260
MARGIN_LEFT = 80
MARGIN_RIGHT = 140
MARGIN_TOP = 40
GAP = 60
COLORS = {"loss": "#1f77b4", "train": "#2ca02c", "test": "#d62728"}


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _bounds(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(hi) * 0.05 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def _panel(top, title, series, x_range):
    """SVG fragments for one panel; ``series`` is a list of (name, [(x, y), ...])."""
    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = PANEL_HEIGHT - 40
    x0, x1 = x_range
    y0, y1 = _bounds([y for _, pts in series for _, y in pts])

    def px(x):
        return MARGIN_LEFT + (0.5 if x1 == x0 else (x - x0) / (x1 - x0)) * plot_w

    def py(y):
        return top + plot_h - (y - y0) / (y1 - y0) * plot_h

    out = [
        f'<text x="{MARGIN_LEFT}" y="{top - 10}" font-size="14" font-family="sans-serif">{_escape(title)}</text>',
        f'<rect x="{MARGIN_LEFT}" y="{top}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#999"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        out.append(
            f'<text x="{MARGIN_LEFT - 6}" y="{py(yv) + 4:.2f}" font-size="11" text-anchor="end" '
            f'font-family="sans-serif">{yv:.4g}</text>'
        )
        xv = x0 + frac * (x1 - x0)
        out.append(
            f'<text x="{px(xv):.2f}" y="{top + plot_h + 16}" font-size="11" text-anchor="middle" '
            f'font-family="sans-serif">{xv:.0f}</text>'
        )
    for k, (name, pts) in enumerate(series):
        color = COLORS.get(name, "#555")
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(f'<polyline class="series-{_escape(name)}" fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        ly = top + 14 + 18 * k
        lx = MARGIN_LEFT + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}" font-size="12" font-family="sans-serif">{_escape(name)}</text>')
    return out


def render_svg(log: TrainLog) -> str:
    """Loss vs step, plus mean Euclidean distance per split when the log has eval rows."""
    if not log.steps and not log.evals:
        raise ValueError("training log is empty")
    steps = [s for s, _, _ in log.steps] + [s for s, _, _ in log.evals]
    x_range = (min(steps), max(steps))
    panels = []
    if log.steps:
        panels.append(("training loss", [("loss", [(s, l) for s, l, _ in log.steps])]))
    if log.evals:
        splits = sorted({split for _, split, _ in log.evals})
        panels.append(("mean Euclidean distance (cm)",
                       [(sp, [(s, m) for s, split, m in log.evals if split == sp]) for sp in splits]))
    height = MARGIN_TOP + len(panels) * (PANEL_HEIGHT + GAP)
    body = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{height}" fill="#ffffff"/>',
    ]
    for i, (title, series) in enumerate(panels):
        body += _panel(MARGIN_TOP + i * (PANEL_HEIGHT + GAP), title, series, x_range)
    body.append("</svg>")
    return "\n".join(body) + "\n"
