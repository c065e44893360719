"""Minimal SVG line plots for metric curves; no rendering dependencies."""

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]


def line_plot(series, title="", width=640, height=360, y_range=None):
    """series: list of (label, xs, ys). Returns an SVG document string."""
    pad_l, pad_r, pad_t, pad_b = 56, 16, 34, 40
    plot_w = width - pad_l - pad_r
    plot_h = height - pad_t - pad_b

    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all:
        xs_all, ys_all = [0.0, 1.0], [0.0, 1.0]
    x_min, x_max = min(xs_all), max(xs_all)
    if y_range is not None:
        y_min, y_max = y_range
    else:
        y_min, y_max = min(ys_all), max(ys_all)
    if x_max == x_min:
        x_max = x_min + 1.0
    if y_max == y_min:
        y_max = y_min + 1.0

    def px(x):
        return pad_l + (x - x_min) / (x_max - x_min) * plot_w

    def py(y):
        return pad_t + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
        f'height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="20" text-anchor="middle" '
        f'font-family="sans-serif" font-size="14">{title}</text>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#333"/>',
    ]
    for frac in (0.0, 0.5, 1.0):
        yv = y_min + frac * (y_max - y_min)
        xv = x_min + frac * (x_max - x_min)
        parts.append(f'<text x="{pad_l - 6}" y="{py(yv) + 4:.1f}" '
                     f'text-anchor="end" font-family="sans-serif" '
                     f'font-size="11">{yv:.2f}</text>')
        parts.append(f'<text x="{px(xv):.1f}" y="{height - pad_b + 16}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{xv:.0f}</text>')
    for j, (label, xs, ys) in enumerate(series):
        color = _COLORS[j % len(_COLORS)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(f'<polyline points="{pts}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{pad_l + 8}" y="{pad_t + 16 + 15 * j}" '
                     f'font-family="sans-serif" font-size="12" '
                     f'fill="{color}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
