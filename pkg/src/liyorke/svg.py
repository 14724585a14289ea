"""Minimal SVG line charts (no plotting dependency)."""

import numpy as np

W, H, PAD = 480, 320, 48


def _ticks(lo, hi):
    return [10.0**k for k in range(int(np.floor(lo)), int(np.ceil(hi)) + 1)]


def line_chart(path, x, ys, labels=(), title="", logx=True, logy=True):
    """Write a chart of one or more series ``ys`` against ``x``; non-positive values are dropped on log axes."""
    x = np.asarray(x, dtype=float)
    series = [np.asarray(y, dtype=float) for y in ys]
    tx = np.log10 if logx else (lambda v: v)
    ty = np.log10 if logy else (lambda v: v)
    pts = []
    for y in series:
        ok = np.isfinite(x) & np.isfinite(y)
        if logx:
            ok &= x > 0
        if logy:
            ok &= y > 0
        pts.append((tx(x[ok]), ty(y[ok])))
    allx = np.concatenate([p[0] for p in pts]) if pts else np.zeros(1)
    ally = np.concatenate([p[1] for p in pts]) if pts else np.zeros(1)
    if allx.size == 0:
        allx = ally = np.zeros(1)
    x0, x1 = allx.min(), allx.max()
    y0, y1 = ally.min(), ally.max()
    x1 = x1 if x1 > x0 else x0 + 1
    y1 = y1 if y1 > y0 else y0 + 1

    def sx(v):
        return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD)

    def sy(v):
        return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-size="11">',
           f'<rect width="{W}" height="{H}" fill="white"/>',
           f'<text x="{W / 2}" y="18" text-anchor="middle">{title}</text>',
           f'<rect x="{PAD}" y="{PAD}" width="{W - 2 * PAD}" height="{H - 2 * PAD}" '
           'fill="none" stroke="black"/>']
    if logx:
        for t in _ticks(x0, x1):
            if x0 <= np.log10(t) <= x1:
                out.append(f'<text x="{sx(np.log10(t)):.1f}" y="{H - PAD + 14}" '
                           f'text-anchor="middle">{t:g}</text>')
    if logy:
        for t in _ticks(y0, y1):
            if y0 <= np.log10(t) <= y1:
                out.append(f'<text x="{PAD - 4}" y="{sy(np.log10(t)) + 4:.1f}" '
                           f'text-anchor="end">{t:g}</text>')
    for k, (px, py) in enumerate(pts):
        if px.size == 0:
            continue
        # thin long series to at most ~2000 vertices
        step = max(1, px.size // 2000)
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(px[::step], py[::step]))
        c = colors[k % len(colors)]
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{coords}"/>')
        if k < len(labels):
            out.append(f'<text x="{W - PAD - 4}" y="{PAD + 14 + 14 * k}" text-anchor="end" '
                       f'fill="{c}">{labels[k]}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path
