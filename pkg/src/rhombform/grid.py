"""Geometry of the infinite square grid.

Cells are plain ``(x, y)`` integer tuples with east and north positive.  Directions
are small integers ordered anti-clockwise starting at north, which keeps the
hot loops in the protocol free of enum overhead while :class:`Direction` gives
readable names at the API boundary.
"""
from __future__ import annotations

from enum import IntEnum
from typing import Iterator

Cell = tuple[int, int]


class Direction(IntEnum):
    N = 0
    NW = 1
    W = 2
    SW = 3
    S = 4
    SE = 5
    E = 6
    NE = 7

    @property
    def offset(self) -> Cell:
        return OFFSETS[self]

    @property
    def is_side(self) -> bool:
        return not self & 1


OFFSETS: tuple[Cell, ...] = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))
SIDES = (0, 2, 4, 6)
CORNERS = (1, 3, 5, 7)
_BY_OFFSET = {off: d for d, off in enumerate(OFFSETS)}

ACW = "acw"
CW = "cw"


def add(c: Cell, d: int) -> Cell:
    dx, dy = OFFSETS[d]
    return (c[0] + dx, c[1] + dy)


def direction_between(a: Cell, b: Cell) -> int | None:
    """Direction of ``b`` as seen from ``a``; None unless the cells are adjacent."""
    return _BY_OFFSET.get((b[0] - a[0], b[1] - a[1]))


def opposite(d: int) -> int:
    return (d + 4) & 7


def rotate_acw(d: int, quarter_turns: int = 1) -> int:
    return (d + 2 * quarter_turns) & 7


def rotate_cw(d: int, quarter_turns: int = 1) -> int:
    return (d - 2 * quarter_turns) & 7


def neighborhood(c: Cell) -> list[tuple[Direction, Cell]]:
    """The eight adjacent cells, anti-clockwise from north."""
    x, y = c
    return [(Direction(d), (x + dx, y + dy)) for d, (dx, dy) in enumerate(OFFSETS)]


def neighbor_cells(c: Cell) -> list[Cell]:
    x, y = c
    return [(x + dx, y + dy) for dx, dy in OFFSETS]


def side_cells(c: Cell) -> list[Cell]:
    x, y = c
    return [(x, y + 1), (x - 1, y), (x, y - 1), (x + 1, y)]


def manhattan(a: Cell, b: Cell) -> int:
    return abs(a[0] - b[0]) + abs(a[1] - b[1])


def scan(center: Cell, start: int, orientation: str = ACW) -> list[tuple[Direction, Cell]]:
    """All eight neighbours of ``center`` in cyclic order beginning at ``start``."""
    if orientation not in (ACW, CW):
        raise ValueError(f"unknown orientation {orientation!r}")
    step = 1 if orientation == ACW else -1
    x, y = center
    out = []
    for k in range(8):
        d = (start + step * k) & 7
        dx, dy = OFFSETS[d]
        out.append((Direction(d), (x + dx, y + dy)))
    return out


def layer_of(leader: Cell, c: Cell) -> int:
    return manhattan(leader, c)


def _layer(i: int) -> Iterator[Cell]:
    # connector first, then clockwise: up to the north tip, east tip, south tip, west tip
    for k in range(i):
        yield (-(i - 1) + k, 1 + k)
    for k in range(1, i + 1):
        yield (k, i - k)
    for k in range(1, i + 1):
        yield (i - k, -k)
    for k in range(1, i + 1):
        yield (-k, -i + k)


def rhombus_cells(leader: Cell, n: int) -> list[Cell]:
    """Cells ``v_0 .. v_{n-1}`` of the diamond around ``leader`` in filling order."""
    if n < 1:
        raise ValueError("rhombus needs at least one cell")
    lx, ly = leader
    out = [leader]
    i = 1
    while len(out) < n:
        for dx, dy in _layer(i):
            out.append((lx + dx, ly + dy))
            if len(out) == n:
                break
        i += 1
    return out


def layers_for(n: int) -> int:
    """Index of the outermost (possibly partial) layer of an ``n``-cell rhombus."""
    j = 0
    while 2 * j * j + 2 * j + 1 < n:
        j += 1
    return j


# Successor direction of the Head keyed by which side neighbours are Tails
# (bit d set for side direction d).  Derived from the rhombus order and checked
# against it over the first 40 layers by tests/test_grid.py.
_SIDE_BITS = {0: 1, 2: 2, 4: 4, 6: 8}
HEAD_SUCCESSOR: dict[int, int] = {
    0b0000: Direction.N,   # v_0
    0b0100: Direction.SE,  # north tip
    0b0110: Direction.SE,  # north-east quadrant
    0b0010: Direction.SW,  # east tip
    0b0011: Direction.SW,  # south-east quadrant
    0b0001: Direction.NW,  # south tip
    0b1001: Direction.NW,  # south-west quadrant
    0b1000: Direction.N,   # west tip, next layer's connector lies north
    0b1100: Direction.NE,  # connector and north-west quadrant
}

# Side direction toward the rhombus centre for a new Head, keyed by the
# direction in which it sees the previous Head.
CENTER_FROM_PREVIOUS: dict[int, int] = {
    Direction.S: Direction.S,
    Direction.SW: Direction.S,
    Direction.NW: Direction.W,
    Direction.NE: Direction.N,
    Direction.SE: Direction.E,
}


def side_mask(flags_by_direction) -> int:
    """Pack a truthy-per-direction sequence into the 4-bit side mask."""
    m = 0
    for d, bit in _SIDE_BITS.items():
        if flags_by_direction[d]:
            m |= bit
    return m
