"""Dependency-free SVG charts for the comparison outputs."""
from __future__ import annotations

import warnings
from html import escape

import numpy as np

_COLORS = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02", "#a6761d"]
W, H, PAD = 640, 360, 50


def _frame(title: str, body: list[str]) -> str:
    head = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
            f'<rect width="{W}" height="{H}" fill="white"/>',
            f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="14">{escape(title)}</text>',
            f'<line x1="{PAD}" y1="{H - PAD}" x2="{W - PAD}" y2="{H - PAD}" stroke="black"/>',
            f'<line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{H - PAD}" stroke="black"/>']
    return "\n".join(head + body + ["</svg>"]) + "\n"


def error_svg(runs_by_scheme: dict, title: str = "Mean track error over runs") -> str:
    """Per-scheme mean (over runs) of the per-time mean track error."""
    curves = {}
    for s, runs in runs_by_scheme.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            per_run = np.array([np.nanmean(r.track_error, axis=1) for r in runs])
            curves[s] = (runs[0].times, np.nanmean(per_run, axis=0))
    t_max = max(float(t[-1]) for t, _ in curves.values()) or 1.0
    finite = [y[np.isfinite(y)] for _, y in curves.values()]
    y_max = max((float(f.max()) for f in finite if f.size), default=1.0) or 1.0
    body = [f'<text x="{W / 2}" y="{H - 12}" text-anchor="middle">time (s)</text>',
            f'<text x="12" y="{H / 2}" transform="rotate(-90 12 {H / 2})" text-anchor="middle">error (m)</text>',
            f'<text x="{PAD - 4}" y="{PAD + 4}" text-anchor="end">{y_max:.0f}</text>',
            f'<text x="{W - PAD}" y="{H - PAD + 14}" text-anchor="end">{t_max:.0f}</text>']
    for i, (s, (t, y)) in enumerate(curves.items()):
        color = _COLORS[i % len(_COLORS)]
        pts, segs = [], []
        for ti, yi in zip(t, y):
            if np.isfinite(yi):
                pts.append(f"{PAD + (W - 2 * PAD) * ti / t_max:.1f},{H - PAD - (H - 2 * PAD) * yi / y_max:.1f}")
            elif pts:
                segs.append(pts)
                pts = []
        if pts:
            segs.append(pts)
        for seg in segs:
            body.append(f'<polyline fill="none" stroke="{color}" points="{" ".join(seg)}"/>')
        body.append(f'<text x="{W - PAD + 4}" y="{PAD + 14 * i}" fill="{color}">{escape(s)}</text>')
    return _frame(title, body)


def resource_svg(report: dict, title: str = "Resource usage by task kind") -> str:
    """Stacked bars of mean timeline seconds per scheme."""
    kinds = sorted({k for summ in report.values() for k in summ["resource_s"]})
    totals = [sum(summ["resource_s"].values()) for summ in report.values()]
    y_max = max(totals, default=1.0) or 1.0
    n = len(report)
    bar_w = (W - 2 * PAD) / max(n, 1) * 0.7
    body = [f'<text x="{PAD - 4}" y="{PAD + 4}" text-anchor="end">{y_max:.0f} s</text>']
    for i, (s, summ) in enumerate(report.items()):
        x = PAD + (W - 2 * PAD) * (i + 0.15) / n
        y = H - PAD
        for j, k in enumerate(kinds):
            h = (H - 2 * PAD) * summ["resource_s"].get(k, 0.0) / y_max
            y -= h
            body.append(f'<rect x="{x:.1f}" y="{y:.1f}" width="{bar_w:.1f}" height="{h:.1f}" '
                        f'fill="{_COLORS[j % len(_COLORS)]}"/>')
        body.append(f'<text x="{x + bar_w / 2:.1f}" y="{H - PAD + 14}" text-anchor="middle">{escape(s)}</text>')
    for j, k in enumerate(kinds):
        body.append(f'<text x="{W - PAD}" y="{PAD + 14 * j}" text-anchor="end" '
                    f'fill="{_COLORS[j % len(_COLORS)]}">{escape(k)}</text>')
    return _frame(title, body)
