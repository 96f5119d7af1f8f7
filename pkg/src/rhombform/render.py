"""ASCII and SVG pictures of a configuration.

ASCII legend: ``H`` Head, ``T`` Tail, ``A`` Active, ``.`` Passive,
``*`` Terminated, space for an empty cell.  North is up.
"""
from __future__ import annotations

from .configuration import ModuleState, Phase
from .grid import Cell, OFFSETS

GLYPH = {
    Phase.HEAD: "H",
    Phase.TAIL: "T",
    Phase.ACTIVE: "A",
    Phase.PASSIVE: ".",
    Phase.TERMINATED: "*",
}

FILL = {
    Phase.HEAD: "#d62728",
    Phase.TAIL: "#7f7f7f",
    Phase.ACTIVE: "#2ca02c",
    Phase.PASSIVE: "#ffffff",
    Phase.TERMINATED: "#1f1f1f",
}


def ascii_art(states: dict[Cell, ModuleState]) -> str:
    if not states:
        return ""
    xs = [c[0] for c in states]
    ys = [c[1] for c in states]
    rows = []
    for y in range(max(ys), min(ys) - 1, -1):
        row = "".join(GLYPH[states[(x, y)].phase] if (x, y) in states else " " for x in range(min(xs), max(xs) + 1))
        rows.append(row.rstrip())
    return "\n".join(rows) + "\n"


def svg(states: dict[Cell, ModuleState], leader: Cell | None = None, scale: int = 20) -> str:
    if not states:
        return '<svg xmlns="http://www.w3.org/2000/svg" width="0" height="0"/>\n'
    xs = [c[0] for c in states]
    ys = [c[1] for c in states]
    x0, y1 = min(xs), max(ys)
    w = (max(xs) - x0 + 1) * scale
    h = (y1 - min(ys) + 1) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">']
    for (x, y) in sorted(states, key=lambda c: (-c[1], c[0])):
        st = states[(x, y)]
        px, py = (x - x0) * scale, (y1 - y) * scale
        out.append(f'<rect x="{px}" y="{py}" width="{scale}" height="{scale}" '
                   f'fill="{FILL[st.phase]}" stroke="#000" stroke-width="1"/>')
        if leader == (x, y):
            r = scale // 5
            out.append(f'<circle cx="{px + scale // 2}" cy="{py + scale // 2}" r="{r}" fill="#1f77b4"/>')
    for (x, y) in sorted(states, key=lambda c: (-c[1], c[0])):
        st = states[(x, y)]
        if st.parent is None:
            continue
        dx, dy = OFFSETS[st.parent]
        cx, cy = (x - x0) * scale + scale / 2, (y1 - y) * scale + scale / 2
        ex, ey = cx + dx * scale * 0.7, cy - dy * scale * 0.7
        out.append(f'<line x1="{cx:g}" y1="{cy:g}" x2="{ex:g}" y2="{ey:g}" stroke="#ff7f0e" stroke-width="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
