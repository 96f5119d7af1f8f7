"""Spanning-tree layer: distributed BFS construction, rerooting and leaf moves.

Parent pointers are side directions stored in :class:`ModuleState.parent`.  All
functions here read a round-start snapshot ``S`` (cell -> state) and return
data; the engine turns proposals into effects.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .configuration import ModuleState, Phase
from .grid import OFFSETS, SIDES, Cell, add, direction_between, neighbor_cells, opposite, rotate_acw


@dataclass
class Move:
    origin: Cell
    dest: Cell
    kind: str  # "slide" or "convex"
    swept: tuple[Cell, ...]
    supports: tuple[Cell, ...]
    writes: dict = field(default_factory=dict)  # field updates applied to the mover if accepted
    active: bool = False
    relies: tuple[Cell, ...] = ()  # cells whose round-start state justified the move


def build_bfs_tree(cells, leader: Cell) -> tuple[dict[Cell, int | None], int]:
    """Round-synchronous BFS from ``leader``.

    A module adopts the first side neighbour (order N, W, S, E) that was reached
    one round earlier.  Returns the parent directions and the number of
    wavefront rounds, which equals the leader's eccentricity.
    """
    cells = set(cells)
    dist = {leader: 0}
    frontier = [leader]
    parents: dict[Cell, int | None] = {leader: None}
    rounds = 0
    while frontier:
        nxt = []
        for c in frontier:
            for d in SIDES:
                v = add(c, d)
                if v in cells and v not in dist:
                    dist[v] = dist[c] + 1
                    nxt.append(v)
        for v in nxt:
            for d in SIDES:
                u = add(v, d)
                if dist.get(u) == dist[v] - 1:
                    parents[v] = d
                    break
        if nxt:
            rounds += 1
        frontier = nxt
    return parents, rounds


def children(S: dict[Cell, ModuleState], p: Cell, exclude: Cell | None = None) -> list[Cell]:
    out = []
    for d in SIDES:
        c = add(p, d)
        if c == exclude:
            continue
        st = S.get(c)
        if st is not None and st.phase != Phase.ACTIVE and st.parent == opposite(d):
            out.append(c)
    return out


def parent_cell(c: Cell, st: ModuleState) -> Cell | None:
    return None if st.parent is None else add(c, st.parent)


def is_ignorable_leaf(S: dict[Cell, ModuleState], c: Cell) -> bool:
    """A Passive leaf unrelated to the request path; walked through like an empty cell."""
    st = S.get(c)
    if st is None or st.phase != Phase.PASSIVE or st.temporary or st.on_path:
        return False
    if st.pending is not None or st.ring is not None or st.parent is None:
        return False
    if children(S, c):
        return False
    par = S.get(add(c, st.parent))
    return par is not None and not par.on_path


def reroot(S: dict[Cell, ModuleState], m: Cell, anchors: tuple[Cell, ...]) -> tuple[dict[Cell, int], str | None]:
    """New parent directions for the neighbours of ``m`` once it stops being part of the tree.

    Sources are neighbours known not to descend from ``m``: Head, Tail and
    Terminated modules, modules on the request path, the given ``anchors`` and
    anything whose parent chain inside the neighbourhood reaches one of them
    without passing ``m``.  Remaining modules reachable from the sources along
    the neighbourhood ring are pointed back towards them.  Returns the updates
    and a fault message if some child of ``m`` cannot be reattached.
    """
    ring = neighbor_cells(m)
    present = {c: S[c] for c in ring if c in S and S[c].phase != Phase.ACTIVE}
    sources = set()
    for c, st in present.items():
        if st.phase in (Phase.HEAD, Phase.TAIL, Phase.TERMINATED) or st.on_path:
            sources.add(c)
    sources.update(a for a in anchors if a in present)
    # ancestors of a non-descendant are non-descendants; they keep their pointers
    for c in list(sources):
        x = c
        while (par := present[x].parent) is not None:
            x = add(x, par)
            if x not in present or x in sources:
                break
            sources.add(x)
    for c in ring:
        if c not in present or c in sources:
            continue
        chain = []
        x = c
        while x in present and x not in sources and x not in chain:
            chain.append(x)
            par = present[x].parent
            if par is None:
                break
            x = add(x, par)
        if x in sources:
            sources.update(chain)
    index = {c: i for i, c in enumerate(ring)}
    seen = set(sources)
    queue = deque(sorted(sources, key=index.__getitem__))
    updates: dict[Cell, int] = {}
    while queue:
        c = queue.popleft()
        i = index[c]
        for j in (i - 1, i + 1):
            nb = ring[j % 8]
            if nb in present and nb not in seen:
                seen.add(nb)
                updates[nb] = direction_between(nb, c)
                queue.append(nb)
    for c in children(S, m):
        if c not in seen:
            return updates, f"child {c} of {m} has no non-descendant to reattach to"
    return updates, None


# --------------------------------------------------------------------------- leaf moves


def _blocked(S: dict[Cell, ModuleState], c: Cell) -> bool:
    st = S.get(c)
    return st is not None and (
        st.on_path
        or st.pending is not None
        or st.phase in (Phase.ACTIVE, Phase.HEAD)
        or st.ring is not None
    )


def leaf_eligible(S: dict[Cell, ModuleState], u: Cell) -> bool:
    st = S.get(u)
    if st is None or st.phase != Phase.PASSIVE or st.temporary or st.on_path:
        return False
    if st.pending is not None or st.ring is not None or st.parent is None:
        return False
    if children(S, u):
        return False
    par = S.get(add(u, st.parent))
    return par is not None and not par.on_path


def _boundary_step(S: dict[Cell, ModuleState], u: Cell, wall: int) -> Move | None:
    """One clockwise step along the boundary keeping ``wall`` on the right."""
    for _ in range(4):
        t = rotate_acw(wall)
        a = add(u, t)
        b = add(a, wall)
        c = add(u, wall)
        if c not in S:
            return None
        if a in S:
            wall = t
            continue
        if b in S:
            return Move(u, a, "slide", (), (b, c))
        return Move(u, b, "convex", (a,), (c,))
    return None


def _chase(S: dict[Cell, ModuleState], start: Cell, view: set[Cell], limit: int = 32) -> list[Cell]:
    """Follow parent pointers from ``start`` while they stay inside ``view``."""
    out = []
    x = start
    while len(out) < limit:
        st = S.get(x)
        if st is None or st.parent is None:
            break
        nxt = add(x, st.parent)
        if nxt not in view or nxt in out or nxt == start:
            break
        out.append(nxt)
        x = nxt
    return out


def leaf_move(S: dict[Cell, ModuleState], u: Cell, variant: str) -> Move | None:
    """Boundary move of a Passive leaf together with its new parent, or None."""
    if not leaf_eligible(S, u):
        return None
    st = S[u]
    p = add(u, st.parent)
    mv = _boundary_step(S, u, st.parent)
    if mv is None:
        return None
    v = mv.dest
    view = set(neighbor_cells(u)) | set(neighbor_cells(v))
    for c in view:
        if c != u and _blocked(S, c):
            return None
    ancestors = _chase(S, p, view)
    candidates = []
    for d in SIDES:
        w = add(v, d)
        if w == u:
            continue
        ws = S.get(w)
        if ws is None or ws.phase == Phase.ACTIVE or ws.on_path:
            continue
        if ws.phase == Phase.PASSIVE and not children(S, w, exclude=u):
            continue
        candidates.append((d, w))
    choice = None
    relies: tuple[Cell, ...] = ()
    certified = [(ancestors.index(w), d, w) for d, w in candidates if w in ancestors]
    if certified:
        k, choice, w = max(certified)
        relies = (p, *ancestors[: k + 1])
    elif mv.kind == "convex" and direction_between(v, p) in SIDES:
        # pivot around the parent: depth unchanged, and the next step reaches the parent's side
        choice = direction_between(v, p)
        relies = (p,)
    elif variant == "v2" and candidates:
        # unverified: the depth may grow, but the old parent may become a leaf and move on
        choice, w = candidates[0]
        relies = (p, w)
    if choice is None:
        return None
    mv.writes = {"parent": choice}
    mv.relies = relies
    return mv
