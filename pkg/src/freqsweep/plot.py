"""Standalone SVG line charts (no plotting dependency)."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .exceptions import EmptyInputError, FreqSweepError

WIDTH, HEIGHT = 640, 420
# plot box inside the canvas: left, top, right, bottom
BOX = (70.0, 40.0, 610.0, 360.0)
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _fmt(v):
    return f"{v:.3f}".rstrip("0").rstrip(".")


class _Axis:
    def __init__(self, lo, hi, p0, p1):
        if hi <= lo:
            pad = abs(lo) * 0.05 or 1.0
            lo, hi = lo - pad, hi + pad
        self.lo, self.hi, self.p0, self.p1 = lo, hi, p0, p1

    def __call__(self, v):
        return self.p0 + (v - self.lo) / (self.hi - self.lo) * (self.p1 - self.p0)


def line_chart_svg(series, x_label="frequency (Hz)", y_label="ADE (m)", title=None):
    """Render ``series``: a list of dicts ``{label, x, y, err?, best_x?}``.

    Each series is one polyline with vertical error bars; ``best_x`` gets a
    ring marker. The data range maps exactly onto :data:`BOX`.
    """
    series = [s for s in series if len(s["x"])]
    if not series:
        raise EmptyInputError("nothing to plot")
    xs = [x for s in series for x in s["x"]]
    ys = []
    for s in series:
        err = s.get("err") or [0.0] * len(s["y"])
        ys += [y - e for y, e in zip(s["y"], err)] + [y + e for y, e in zip(s["y"], err)]
    left, top, right, bottom = BOX
    ax = _Axis(min(xs), max(xs), left, right)
    ay = _Axis(min(ys), max(ys), bottom, top)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect class="plot-box" x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" '
        'fill="none" stroke="#444"/>',
    ]
    if title:
        out.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle">{escape(title)}</text>')
    for xv in sorted(set(xs)):
        px = ax(xv)
        out.append(f'<text x="{px:.3f}" y="{bottom + 18}" text-anchor="middle">{_fmt(xv)}</text>')
    for k in range(5):
        yv = ay.lo + k * (ay.hi - ay.lo) / 4
        out.append(f'<text x="{left - 6}" y="{ay(yv) + 4:.3f}" text-anchor="end">{_fmt(yv)}</text>')
    out.append(f'<text x="{(left + right) / 2}" y="{HEIGHT - 20}" text-anchor="middle">{escape(x_label)}</text>')
    out.append(
        f'<text x="18" y="{(top + bottom) / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {(top + bottom) / 2})">{escape(y_label)}</text>'
    )
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(f"{ax(x):.3f},{ay(y):.3f}" for x, y in zip(s["x"], s["y"]))
        label = escape(str(s.get("label", f"series {i}")))
        out.append(f'<g class="series" data-label="{label}">')
        if len(s["x"]) > 1:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        err = s.get("err") or [0.0] * len(s["y"])
        for x, y, e in zip(s["x"], s["y"], err):
            px = ax(x)
            if e > 0:
                out.append(
                    f'<line class="errorbar" x1="{px:.3f}" y1="{ay(y - e):.3f}" x2="{px:.3f}" '
                    f'y2="{ay(y + e):.3f}" stroke="{color}"/>'
                )
            out.append(f'<circle class="point" cx="{px:.3f}" cy="{ay(y):.3f}" r="3" fill="{color}"/>')
        best = s.get("best_x")
        if best is not None and best in s["x"]:
            by = s["y"][s["x"].index(best)]
            out.append(
                f'<circle class="best" cx="{ax(best):.3f}" cy="{ay(by):.3f}" r="7" fill="none" '
                f'stroke="{color}" stroke-width="2"/>'
            )
        out.append(f'<text x="{right - 4}" y="{top + 16 + 16 * i}" text-anchor="end" fill="{color}">{label}</text>')
        out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_plot(series, path, **kwargs):
    svg = line_chart_svg(series, **kwargs)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(svg)
    except OSError as e:
        raise FreqSweepError(f"cannot write plot to {path}: {e}") from None
    return path


def response_series(aggregate_rows):
    """Group aggregate rows (dicts) into one plot series per width."""
    by_width = {}
    for r in aggregate_rows:
        by_width.setdefault(int(r["width"]), []).append(r)
    series = []
    for w in sorted(by_width):
        rows = sorted(by_width[w], key=lambda r: float(r["frequency_hz"]))
        xs = [float(r["frequency_hz"]) for r in rows]
        best = [float(r["frequency_hz"]) for r in rows if int(r["f_star_flag"])]
        series.append(
            {
                "label": f"W={w}",
                "x": xs,
                "y": [float(r["ade_mean"]) for r in rows],
                "err": [float(r["ade_std"]) for r in rows],
                "best_x": best[0] if best else None,
            }
        )
    return series
