"""Holes, pseudo-holes, critical pairs and connectivity of finite cell sets."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import kernels
from .grid import Cell, OFFSETS, manhattan, neighbor_cells


@dataclass(frozen=True)
class PseudoHole:
    cells: frozenset[Cell]
    infinite: bool = False


@dataclass(frozen=True)
class Hole:
    cells: frozenset[Cell]
    infinite: bool = False
    pseudo_holes: tuple[PseudoHole, ...] = field(default=())


@dataclass(frozen=True)
class CriticalPair:
    c1: Cell
    c2: Cell
    bridge_from: Cell
    bridge_to: Cell


def to_mask(cells: Iterable[Cell], pad: int = 0) -> tuple[np.ndarray, int, int]:
    """Dense occupancy mask (rows = x, columns = y) plus the offset of index (0, 0)."""
    cells = list(cells)
    if not cells:
        return np.zeros((1, 1), dtype=np.uint8), 0, 0
    xs = [c[0] for c in cells]
    ys = [c[1] for c in cells]
    x0, y0 = min(xs) - pad, min(ys) - pad
    w = max(xs) - x0 + 1 + pad
    h = max(ys) - y0 + 1 + pad
    mask = np.zeros((w, h), dtype=np.uint8)
    mask[np.array(xs) - x0, np.array(ys) - y0] = 1
    return mask, x0, y0


def is_side_connected(cells: Iterable[Cell]) -> bool:
    cells = list(cells)
    if len(cells) <= 1:
        return True
    mask, _, _ = to_mask(cells)
    _, count = kernels.label(mask, 1, False)
    return count == 1


def side_components(cells: Iterable[Cell]) -> int:
    cells = list(cells)
    if not cells:
        return 0
    mask, _, _ = to_mask(cells)
    return kernels.label(mask, 1, False)[1]


def decompose(occupied: Iterable[Cell]) -> tuple[list[Hole], list[PseudoHole]]:
    """Split the empty cells around ``occupied`` into holes and pseudo-holes.

    The infinite components are clipped to the bounding box grown by one cell.
    Finite components come first, ordered by their smallest ``(y, x)`` cell;
    the infinite one is last.
    """
    occupied = list(occupied)
    if not occupied:
        raise ValueError("cannot decompose an empty configuration")
    mask, x0, y0 = to_mask(occupied, pad=1)
    w, h = mask.shape
    side_lab, n_side = kernels.label(mask, 0, False)
    corner_lab, n_corner = kernels.label(mask, 0, True)

    def group(labels: np.ndarray, count: int) -> list[tuple[frozenset[Cell], bool]]:
        members: list[list[Cell]] = [[] for _ in range(count)]
        xi, yi = np.nonzero(labels >= 0)
        for i, j in zip(xi.tolist(), yi.tolist()):
            members[labels[i, j]].append((i + x0, j + y0))
        border = set(labels[0, :].tolist()) | set(labels[-1, :].tolist())
        border |= set(labels[:, 0].tolist()) | set(labels[:, -1].tolist())
        out = [(frozenset(m), k in border) for k, m in enumerate(members)]
        out.sort(key=lambda item: (item[1], min((c[1], c[0]) for c in item[0])))
        return out

    pseudo = [PseudoHole(cells, inf) for cells, inf in group(side_lab, n_side)]
    holes = []
    for cells, inf in group(corner_lab, n_corner):
        parts = tuple(p for p in pseudo if p.cells <= cells)
        holes.append(Hole(cells, inf, parts))
    return holes, pseudo


def critical_pairs(occupied: Iterable[Cell]) -> list[CriticalPair]:
    """One critical pair per adjacent pair of pseudo-holes, sorted by ``c1`` as ``(y, x)``."""
    occ = set(occupied)
    _, pseudo = decompose(occ)
    which: dict[Cell, int] = {}
    for k, p in enumerate(pseudo):
        for c in p.cells:
            which[c] = k
    seen: set[tuple[int, int]] = set()
    out = []
    for (x, y) in sorted(which, key=lambda c: (c[1], c[0])):
        k1 = which[(x, y)]
        for dx in (-1, 1):
            e2 = (x + dx, y + 1)
            k2 = which.get(e2)
            if k2 is None or k2 == k1:
                continue
            c_a, c_b = (x + dx, y), (x, y + 1)
            if c_a not in occ or c_b not in occ:
                continue
            key = (min(k1, k2), max(k1, k2))
            if key in seen:
                continue
            seen.add(key)
            c1, c2 = sorted((c_a, c_b), key=lambda c: (c[1], c[0]))
            src, dst = ((x, y), e2) if k1 < k2 else (e2, (x, y))
            out.append(CriticalPair(c1, c2, src, dst))
    out.sort(key=lambda cp: (cp.c1[1], cp.c1[0], cp.c2[1], cp.c2[0]))
    return out


def boundary(cells: Iterable[Cell], occupied: Iterable[Cell] | None = None) -> set[Cell]:
    """Union of the neighbourhoods of ``cells`` minus ``cells`` itself.

    ``occupied`` is accepted for call-site symmetry with the other helpers; the
    boundary is a purely geometric notion and does not depend on it.
    """
    cells = set(cells)
    out: set[Cell] = set()
    for c in cells:
        out.update(neighbor_cells(c))
    return out - cells


def is_weakly_convex(cells: Iterable[Cell]) -> bool:
    """True iff every pair is joined by a Manhattan-shortest path inside the set."""
    cells = list(dict.fromkeys(cells))
    if len(cells) <= 1:
        return True
    mask, x0, y0 = to_mask(cells)
    for a in cells:
        dist = kernels.bfs_distances(mask, a[0] - x0, a[1] - y0)
        for b in cells:
            if dist[b[0] - x0, b[1] - y0] != manhattan(a, b):
                return False
    return True


def hop_distances(cells: Iterable[Cell], source: Cell) -> dict[Cell, int]:
    """Graph distances from ``source`` in the side-adjacency graph of ``cells``."""
    cells = list(cells)
    mask, x0, y0 = to_mask(cells)
    dist = kernels.bfs_distances(mask, source[0] - x0, source[1] - y0)
    return {c: int(dist[c[0] - x0, c[1] - y0]) for c in cells}


def corner_connected(empty_a: Cell, empty_b: Cell, occupied: set[Cell]) -> bool:
    """Whether two empty cells lie in the same hole of ``occupied``."""
    mask, x0, y0 = to_mask(list(occupied) + [empty_a, empty_b], pad=1)
    for c in (empty_a, empty_b):
        mask[c[0] - x0, c[1] - y0] = 0
    labels, _ = kernels.label(mask, 0, True)
    return labels[empty_a[0] - x0, empty_a[1] - y0] == labels[empty_b[0] - x0, empty_b[1] - y0]


__all__ = [
    "CriticalPair",
    "Hole",
    "OFFSETS",
    "PseudoHole",
    "boundary",
    "corner_connected",
    "critical_pairs",
    "decompose",
    "hop_distances",
    "is_side_connected",
    "is_weakly_convex",
    "side_components",
    "to_mask",
]
