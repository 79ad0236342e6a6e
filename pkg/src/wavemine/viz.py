"""Static SVG rendering of ranked patterns.

One row per pattern, best rank first.  The left gutter carries the pattern
id and its risk value; each interval becomes a rounded bar labelled
"feature - level", colored by level severity, positioned horizontally by
group index so that bars sharing group indices align vertically.  A time
arrow spans the top.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

from .encoding import Endpoint

COLOR_MAP = {
    "very_low": "#d62728",   # red
    "low": "#ff8c00",        # orange
    "normal": "#2ca02c",     # green
    "high": "#87cefa",       # light blue
    "very_high": "#1f3f8f",  # dark blue
    "other": "#9e9e9e",      # gray
}


@dataclass(frozen=True)
class RenderPattern:
    groups: tuple[tuple[Endpoint, ...], ...]
    risk: float


@dataclass(frozen=True)
class RenderSpec:
    max_patterns: int = 10
    lane_height: int = 26
    group_width: int = 120
    margin_left: int = 150
    margin_top: int = 56
    bar_pad: int = 6
    row_gap: int = 16
    risk_label: str = "RR"
    severity_of: Mapping[tuple[str, str], str] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_patterns < 1:
            raise ValueError("max_patterns must be >= 1")


def _bars(groups) -> list[tuple[str, str, int, int]]:
    """Pair each Start with its Finish: (feature, level, start group, end group)."""
    pending: dict[tuple[str, str], int] = {}
    bars = []
    for gi, group in enumerate(groups):
        for ep in sorted(group, key=lambda e: e.is_finish):
            key = (ep.feature, ep.level)
            if not ep.is_finish:
                pending[key] = gi
            else:
                bars.append((ep.feature, ep.level, pending.pop(key), gi))
    bars.sort(key=lambda b: (b[2], b[0], b[1]))
    return bars


def render_svg(
    ranking: Sequence[str],
    patterns: Mapping[str, RenderPattern],
    spec: RenderSpec | None = None,
) -> str:
    """Render the top-ranked patterns as an SVG document."""
    spec = spec or RenderSpec()
    shown = [key for key in ranking if key in patterns][: spec.max_patterns]
    rows = []
    max_groups = 1
    for key in shown:
        pat = patterns[key]
        bars = _bars(pat.groups)
        rows.append((key, pat, bars))
        max_groups = max(max_groups, len(pat.groups))

    width = spec.margin_left + max_groups * spec.group_width + 40
    y = spec.margin_top
    body: list[str] = []
    for rank, (key, pat, bars) in enumerate(rows, start=1):
        lanes = max(len(bars), 1)
        row_h = lanes * spec.lane_height
        label_y = y + row_h / 2
        body.append(
            f'<text x="12" y="{label_y - 4:.1f}" class="pid">P{rank}</text>'
        )
        body.append(
            f'<text x="12" y="{label_y + 14:.1f}" class="risk">'
            f"{escape(spec.risk_label)} {pat.risk:.2f}</text>"
        )
        for lane, (feature, level, gs, ge) in enumerate(bars):
            x = spec.margin_left + gs * spec.group_width + spec.bar_pad
            w = (ge - gs + 1) * spec.group_width - 2 * spec.bar_pad
            by = y + lane * spec.lane_height + 3
            bh = spec.lane_height - 6
            severity = spec.severity_of.get((feature, level), "other")
            color = COLOR_MAP.get(severity, COLOR_MAP["other"])
            body.append(
                f'<rect x="{x}" y="{by}" width="{w}" height="{bh}" rx="6" fill="{color}"/>'
            )
            body.append(
                f'<text x="{x + w / 2:.1f}" y="{by + bh - 6:.1f}" class="bar">'
                f"{escape(feature)} - {escape(level)}</text>"
            )
        body.append(
            f'<line x1="{spec.margin_left - 8}" y1="{y + row_h + spec.row_gap / 2:.1f}" '
            f'x2="{width - 20}" y2="{y + row_h + spec.row_gap / 2:.1f}" class="sep"/>'
        )
        y += row_h + spec.row_gap
    height = y + 20

    arrow_y = spec.margin_top - 24
    header = [
        f'<line x1="{spec.margin_left}" y1="{arrow_y}" x2="{width - 28}" y2="{arrow_y}" '
        'class="axis" marker-end="url(#arrow)"/>',
        f'<text x="{spec.margin_left}" y="{arrow_y - 8}" class="axis-label">time</text>',
    ]
    doc = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        "<defs>",
        '<marker id="arrow" markerWidth="10" markerHeight="8" refX="8" refY="4" orient="auto">',
        '<path d="M0,0 L10,4 L0,8 z" fill="#2b4a8b"/>',
        "</marker>",
        "</defs>",
        "<style>",
        "text { font-family: sans-serif; font-size: 12px; }",
        ".pid { font-weight: bold; font-size: 14px; }",
        ".risk { fill: #444444; }",
        ".bar { fill: #111111; text-anchor: middle; font-size: 11px; }",
        ".axis { stroke: #2b4a8b; stroke-width: 2; }",
        ".axis-label { fill: #2b4a8b; }",
        ".sep { stroke: #dddddd; stroke-width: 1; }",
        "</style>",
        *header,
        *body,
        "</svg>",
    ]
    return "\n".join(doc) + "\n"
