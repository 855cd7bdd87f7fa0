"""Hand-emitted SVG line charts (no plotting dependency).

Fixed 800x500 viewbox, linear axes, min/max autoscale, one polyline per
series.  Enough to eyeball train-loss vs target-test-loss curves.
"""

from __future__ import annotations

WIDTH, HEIGHT = 800, 500
MARGIN_LEFT, MARGIN_RIGHT = 70, 170
MARGIN_TOP, MARGIN_BOTTOM = 30, 50

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
           "#9467bd", "#8c564b", "#17becf", "#e377c2"]


def _escape(text):
    return (text.replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def write_line_chart(path, series, x_label="iter", y_label="loss"):
    """series: list of (name, xs, ys) tuples."""
    if not series or all(len(s[1]) == 0 for s in series):
        raise ValueError("no data to plot")
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    x_min, x_max = min(xs_all), max(xs_all)
    y_min, y_max = min(ys_all), max(ys_all)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0

    plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT
    plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM

    def px(x):
        return MARGIN_LEFT + plot_w * (x - x_min) / (x_max - x_min)

    def py(y):
        return MARGIN_TOP + plot_h * (1.0 - (y - y_min) / (y_max - y_min))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" '
        f'y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
        f'<line x1="{MARGIN_LEFT}" y1="{HEIGHT - MARGIN_BOTTOM}" '
        f'x2="{WIDTH - MARGIN_RIGHT}" y2="{HEIGHT - MARGIN_BOTTOM}" stroke="black"/>',
        f'<text x="{MARGIN_LEFT + plot_w / 2:.1f}" y="{HEIGHT - 12}" '
        f'text-anchor="middle" font-size="14">{_escape(x_label)}</text>',
        f'<text x="18" y="{MARGIN_TOP + plot_h / 2:.1f}" text-anchor="middle" '
        f'font-size="14" transform="rotate(-90 18 {MARGIN_TOP + plot_h / 2:.1f})">'
        f'{_escape(y_label)}</text>',
        # axis extent labels
        f'<text x="{MARGIN_LEFT - 6}" y="{py(y_min) + 4:.1f}" text-anchor="end" '
        f'font-size="11">{y_min:.3g}</text>',
        f'<text x="{MARGIN_LEFT - 6}" y="{py(y_max) + 4:.1f}" text-anchor="end" '
        f'font-size="11">{y_max:.3g}</text>',
        f'<text x="{px(x_min):.1f}" y="{HEIGHT - MARGIN_BOTTOM + 16}" '
        f'text-anchor="middle" font-size="11">{x_min:.3g}</text>',
        f'<text x="{px(x_max):.1f}" y="{HEIGHT - MARGIN_BOTTOM + 16}" '
        f'text-anchor="middle" font-size="11">{x_max:.3g}</text>',
    ]
    for i, (name, xs, ys) in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        points = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
                     f'points="{points}"/>')
        ly = MARGIN_TOP + 16 + 18 * i
        lx = WIDTH - MARGIN_RIGHT + 10
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 24}" y2="{ly - 4}" '
                     f'stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 30}" y="{ly}" font-size="12">'
                     f'{_escape(name)}</text>')
    parts.append("</svg>")
    with open(path, "w") as f:
        f.write("\n".join(parts) + "\n")
