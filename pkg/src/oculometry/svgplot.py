"""Dependency-free SVG scatter plots for agreement reports.

Output is plain deterministic text: the same report always serializes to
the same bytes, so plots can be diffed and golden-tested.
"""

from __future__ import annotations

import math

import numpy as np

from .stats import AgreementReport

_WIDTH = 640
_HEIGHT = 440
_MARGIN_L = 70
_MARGIN_R = 20
_MARGIN_T = 40
_MARGIN_B = 50


def _fmt(v: float) -> str:
    return f"{v:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / max(n - 1, 1)
    mag = 10 ** math.floor(math.log10(raw))
    for mult in (1, 2, 2.5, 5, 10):
        step = mult * mag
        if step >= raw:
            break
    start = math.ceil(lo / step) * step
    out = []
    t = start
    while t <= hi + 1e-9:
        out.append(round(t, 10))
        t += step
    return out


def bland_altman_svg(report: AgreementReport) -> str:
    """Render one agreement report as an SVG scatter with dashed agreement limits."""
    means = np.asarray(report.means, dtype=float)
    diffs = np.asarray(report.diffs, dtype=float)

    x_lo, x_hi = float(means.min()), float(means.max())
    pad = (x_hi - x_lo) * 0.05 or 1.0
    x_lo, x_hi = x_lo - pad, x_hi + pad
    y_candidates = np.concatenate([diffs, [report.loa_low, report.loa_high, report.mean_diff]])
    y_lo, y_hi = float(y_candidates.min()), float(y_candidates.max())
    pad = (y_hi - y_lo) * 0.08 or 1.0
    y_lo, y_hi = y_lo - pad, y_hi + pad

    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def sx(v: float) -> float:
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def sy(v: float) -> float:
        return _MARGIN_T + (y_hi - v) / (y_hi - y_lo) * plot_h

    unit_tag = f" [{report.units}]" if report.units else ""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<text x="{_WIDTH / 2:.1f}" y="22" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{report.feature} agreement '
        f"(n={report.n}, {report.pct_outside:.2f}% outside limits)</text>",
    ]
    # axes
    lines.append(
        f'<line x1="{_MARGIN_L}" y1="{_MARGIN_T}" x2="{_MARGIN_L}" '
        f'y2="{_HEIGHT - _MARGIN_B}" stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'<line x1="{_MARGIN_L}" y1="{_HEIGHT - _MARGIN_B}" x2="{_WIDTH - _MARGIN_R}" '
        f'y2="{_HEIGHT - _MARGIN_B}" stroke="black" stroke-width="1"/>'
    )
    for t in _ticks(x_lo, x_hi):
        x = sx(t)
        lines.append(
            f'<line x1="{x:.2f}" y1="{_HEIGHT - _MARGIN_B}" x2="{x:.2f}" '
            f'y2="{_HEIGHT - _MARGIN_B + 5}" stroke="black" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{x:.2f}" y="{_HEIGHT - _MARGIN_B + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    for t in _ticks(y_lo, y_hi):
        y = sy(t)
        lines.append(
            f'<line x1="{_MARGIN_L - 5}" y1="{y:.2f}" x2="{_MARGIN_L}" y2="{y:.2f}" '
            f'stroke="black" stroke-width="1"/>'
        )
        lines.append(
            f'<text x="{_MARGIN_L - 8}" y="{y + 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
        )
    lines.append(
        f'<text x="{(_MARGIN_L + _WIDTH - _MARGIN_R) / 2:.1f}" y="{_HEIGHT - 12}" '
        f'text-anchor="middle" font-family="sans-serif" font-size="12">'
        f"mean of prediction and annotation{unit_tag}</text>"
    )
    lines.append(
        f'<text x="16" y="{(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 16 {(_MARGIN_T + _HEIGHT - _MARGIN_B) / 2:.1f})">'
        f"difference (prediction - annotation){unit_tag}</text>"
    )
    # mean line solid, agreement limits dashed
    for value, dash, label in (
        (report.mean_diff, "", "mean"),
        (report.loa_low, ' stroke-dasharray="6 4"', "low"),
        (report.loa_high, ' stroke-dasharray="6 4"', "high"),
    ):
        y = sy(value)
        lines.append(
            f'<line x1="{_MARGIN_L}" y1="{y:.2f}" x2="{_WIDTH - _MARGIN_R}" y2="{y:.2f}" '
            f'stroke="#555555" stroke-width="1.2"{dash}/>'
        )
        lines.append(
            f'<text x="{_WIDTH - _MARGIN_R - 4:.1f}" y="{y - 4:.2f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="10" fill="#555555">'
            f"{label} {_fmt(value)}</text>"
        )
    for mx, dy in zip(means, diffs):
        lines.append(
            f'<circle cx="{sx(float(mx)):.2f}" cy="{sy(float(dy)):.2f}" r="3" '
            f'fill="#1f77b4" fill-opacity="0.65"/>'
        )
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
