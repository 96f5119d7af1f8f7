"""Brute-force reference implementations and the strict per-round validator.

Nothing here calls into the protocol, tree or topology code: every check is
recomputed from raw cell sets and stored module fields with plain flood fills,
so an agreement between the two is meaningful.
"""
from __future__ import annotations

import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable

from .configuration import Kind, ModuleState, Phase

Cell = tuple[int, int]

_SIDE = ((0, 1), (-1, 0), (0, -1), (1, 0))  # N W S E, matching direction ids 0 2 4 6
_EIGHT = ((0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1))


def _step(c: Cell, d: int) -> Cell:
    dx, dy = _EIGHT[d]
    return (c[0] + dx, c[1] + dy)


@dataclass(frozen=True)
class Violation:
    round: int
    kind: str
    detail: str

    def to_json(self) -> dict:
        return {"round": self.round, "kind": self.kind, "detail": self.detail}


# --------------------------------------------------------------------------- geometry


def side_connected(cells: Iterable[Cell]) -> bool:
    cells = set(cells)
    if not cells:
        return True
    start = next(iter(cells))
    seen = {start}
    todo = [start]
    while todo:
        x, y = todo.pop()
        for dx, dy in _SIDE:
            q = (x + dx, y + dy)
            if q in cells and q not in seen:
                seen.add(q)
                todo.append(q)
    return len(seen) == len(cells)


def removable_bruteforce(occupied: Iterable[Cell], m: Cell) -> bool:
    """True iff removing ``m`` leaves a non-empty side-connected set."""
    rest = set(occupied)
    rest.discard(m)
    return bool(rest) and side_connected(rest)


def bfs_distances(cells: Iterable[Cell], source: Cell) -> dict[Cell, int]:
    cells = set(cells)
    dist = {source: 0}
    queue = deque([source])
    while queue:
        c = queue.popleft()
        for dx, dy in _SIDE:
            q = (c[0] + dx, c[1] + dy)
            if q in cells and q not in dist:
                dist[q] = dist[c] + 1
                queue.append(q)
    return dist


def empty_components(occupied: Iterable[Cell], corners: bool) -> tuple[int, int]:
    """(finite, total) number of empty components around ``occupied``.

    Side adjacency gives pseudo-holes, corner adjacency gives holes.  The
    infinite component is found in a one-cell frame around the bounding box.
    """
    occ = set(occupied)
    xs = [c[0] for c in occ]
    ys = [c[1] for c in occ]
    x0, x1, y0, y1 = min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1
    steps = _EIGHT if corners else _SIDE
    seen: set[Cell] = set()
    finite = total = 0
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if (x, y) in occ or (x, y) in seen:
                continue
            total += 1
            edge = False
            seen.add((x, y))
            todo = [(x, y)]
            while todo:
                cx, cy = todo.pop()
                if cx in (x0, x1) or cy in (y0, y1):
                    edge = True
                for dx, dy in steps:
                    q = (cx + dx, cy + dy)
                    if x0 <= q[0] <= x1 and y0 <= q[1] <= y1 and q not in occ and q not in seen:
                        seen.add(q)
                        todo.append(q)
            if not edge:
                finite += 1
    return finite, total


def hole_of(start: Cell, occupied: set[Cell], blocked: Iterable[Cell] = ()) -> set[Cell] | None:
    """Corner-connected empty cells reachable from ``start`` within a framed box.

    Returns None if the start cell is occupied.  Components touching the frame
    are cut at the frame, which is enough to decide membership questions.
    """
    wall = set(occupied) | set(blocked)
    if start in wall:
        return None
    xs = [c[0] for c in wall] + [start[0]]
    ys = [c[1] for c in wall] + [start[1]]
    x0, x1, y0, y1 = min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1
    seen = {start}
    todo = [start]
    while todo:
        cx, cy = todo.pop()
        for dx, dy in _EIGHT:
            q = (cx + dx, cy + dy)
            if x0 <= q[0] <= x1 and y0 <= q[1] <= y1 and q not in wall and q not in seen:
                seen.add(q)
                todo.append(q)
    return seen


def rhombus_order(leader: Cell, n: int) -> list[Cell]:
    """The first ``n`` rhombus cells, computed from the layer definition.

    Layer ``i`` is the set of cells at Manhattan distance ``i``; it starts at
    the cell north of the westernmost cell of layer ``i - 1`` and runs clockwise.
    """
    lx, ly = leader
    out = [leader]
    i = 0
    while len(out) < n:
        i += 1
        ring = [(lx + dx, ly + dy) for dx in range(-i, i + 1) for dy in (i - abs(dx), -(i - abs(dx))) ]
        ring = sorted(set(ring))
        sx, sy = -(i - 1), 1

        def cw_angle(c: Cell) -> float:
            start = math.atan2(sy, sx)
            a = math.atan2(c[1] - ly, c[0] - lx)
            return (start - a) % (2 * math.pi)

        out.extend(sorted(ring, key=cw_angle))
    return out[:n]


def emd_bruteforce(cells: Iterable[Cell], targets: Iterable[Cell]) -> int:
    """Minimum total Manhattan cost over all perfect matchings (factorial time)."""
    a = list(cells)
    b = list(targets)
    if len(a) != len(b):
        raise ValueError("cell sets differ in size")
    best = None
    for perm in itertools.permutations(b):
        cost = sum(abs(p[0] - q[0]) + abs(p[1] - q[1]) for p, q in zip(a, perm))
        if best is None or cost < best:
            best = cost
    return best or 0


def polyominoes(k: int) -> list[frozenset[Cell]]:
    """All fixed polyominoes with ``k`` cells, normalised to a minimum corner of (0, 0)."""
    def norm(cells) -> frozenset[Cell]:
        mx = min(c[0] for c in cells)
        my = min(c[1] for c in cells)
        return frozenset((x - mx, y - my) for x, y in cells)

    level = {frozenset({(0, 0)})}
    for _ in range(k - 1):
        grown = set()
        for poly in level:
            for (x, y) in poly:
                for dx, dy in _SIDE:
                    q = (x + dx, y + dy)
                    if q not in poly:
                        grown.add(norm(poly | {q}))
        level = grown
    return sorted(level, key=lambda p: sorted(p))


# --------------------------------------------------------------------------- tree


def depth_of(parents: dict[Cell, int | None], m: Cell) -> int:
    """Pointer-chase length from ``m`` to the root; ValueError on a cycle or dangling pointer."""
    seen = set()
    x = m
    depth = 0
    while parents[x] is not None:
        if x in seen:
            raise ValueError(f"parent cycle through {x}")
        seen.add(x)
        x = _step(x, parents[x])
        if x not in parents:
            raise ValueError(f"parent pointer of a module leads to empty cell {x}")
        depth += 1
    return depth


def _tree_of(S: dict[Cell, ModuleState]) -> dict[Cell, int | None]:
    return {c: s.parent for c, s in S.items() if s.phase != Phase.ACTIVE}


def tree_problems(S: dict[Cell, ModuleState], root: Cell) -> list[str]:
    parents = _tree_of(S)
    out = []
    for c, d in parents.items():
        if d is None and c != root:
            out.append(f"{c} has no parent but is not the root")
        if d is not None and d & 1:
            out.append(f"{c} points at a corner")
    if out:
        return out
    ok: set[Cell] = set()
    for c in parents:
        path = []
        x = c
        while x not in ok:
            if x in path:
                return [f"parent cycle through {x}"]
            path.append(x)
            d = parents[x]
            if d is None:
                break
            x = _step(x, d)
            if x not in parents:
                return [f"{path[-1]} points at {'an Active module' if x in S else 'an empty cell'} {x}"]
        ok.update(path)
    return out


# --------------------------------------------------------------------------- request path


def request_path(S: dict[Cell, ModuleState]) -> tuple[list[Cell], list[str]]:
    """Rebuild the request path from stored entries; returns it and consistency problems.

    The j-th visit of the walk to a module consumes that module's j-th stored
    entry, which must name the previous module as its source; a pending
    Request may stand in for the next entry at the end of the path.
    """
    initiators = [c for c, s in S.items() if s.init_fwd is not None]
    problems = []
    if len(initiators) > 1:
        problems.append(f"several initiators {sorted(initiators)}")
        return [], problems
    used: dict[Cell, int] = {}
    path: list[Cell] = []
    if initiators:
        x = initiators[0]
        path.append(x)
        y = _step(x, S[x].init_fwd)
        edges = set()
        while y in S and (x, y) not in edges:
            st = S[y]
            k = used.get(y, 0)
            if k < len(st.requests):
                src, fwd = st.requests[k]
                if _step(y, src) != x:
                    break
                edges.add((x, y))
                used[y] = k + 1
                path.append(y)
                if fwd is None:
                    break
                x, y = y, _step(y, fwd)
                continue
            msg = st.pending
            if k == len(st.requests) and msg is not None and msg.kind == Kind.REQUEST and _step(y, msg.src) == x:
                path.append(y)
            break
    for c, s in S.items():
        if len(s.requests) > used.get(c, 0):
            problems.append(f"{c} stores {len(s.requests)} requests but the path uses {used.get(c, 0)}")
    return path, problems


def _cleanup_in_flight(S: dict[Cell, ModuleState]) -> bool:
    return any(s.pending is not None and s.pending.kind == Kind.CLEANUP for s in S.values())


# --------------------------------------------------------------------------- round validator


def _mover_ok(prev, o: Cell, d: Cell, movers: set[Cell]) -> str | None:
    dx, dy = d[0] - o[0], d[1] - o[1]
    if abs(dx) + abs(dy) == 1:
        for wx, wy in _SIDE:
            if (wx, wy) in ((dx, dy), (-dx, -dy)):
                continue
            p = (o[0] + wx, o[1] + wy)
            q = (d[0] + wx, d[1] + wy)
            if p in prev and q in prev and p not in movers and q not in movers:
                return None
        return "slide without two stationary supports"
    if abs(dx) == 1 and abs(dy) == 1:
        k1 = (o[0] + dx, o[1])
        k2 = (o[0], o[1] + dy)
        occ = [k for k in (k1, k2) if k in prev]
        if len(occ) != 1:
            return "convex transition needs exactly one occupied corner"
        if occ[0] in movers:
            return "convex transition pivots around a moving module"
        return None
    return "move is not to an adjacent cell"


def validate_round(prev: dict[Cell, ModuleState], cur: dict[Cell, ModuleState], rec, world) -> list[Violation]:
    """Check one executed round against the model and the invariants."""
    r = rec.round
    out: list[Violation] = []

    def bad(kind: str, detail: str) -> None:
        out.append(Violation(r, kind, detail))

    tree_mode = world.variant != "seq"
    leader = world.config.leader
    n = len(prev)

    # moves --------------------------------------------------------------
    moves = [(tuple(m["from"]), tuple(m["to"])) for m in rec.moves]
    movers = {o for o, _ in moves}
    claimed: set[Cell] = set()
    for o, d in moves:
        st = prev.get(o)
        if st is None:
            bad("move-legality", f"move from empty cell {o}")
            continue
        if st.phase in (Phase.HEAD, Phase.TAIL, Phase.TERMINATED):
            bad("move-legality", f"{st.phase.name} module at {o} moved")
        elif not tree_mode and st.phase != Phase.ACTIVE:
            bad("move-legality", f"non-Active module at {o} moved")
        if d in prev:
            bad("move-legality", f"{o}->{d} into an occupied cell")
        why = _mover_ok(prev, o, d, movers)
        if why:
            bad("move-legality", f"{o}->{d}: {why}")
        swept = [d]
        if abs(d[0] - o[0]) == 1 and abs(d[1] - o[1]) == 1:
            swept += [k for k in ((d[0], o[1]), (o[0], d[1])) if k not in prev]
        for c in swept:
            if c in claimed:
                bad("move-legality", f"{o}->{d} crosses another move at {c}")
            claimed.add(c)
    expected = (set(prev) - movers) | {d for _, d in moves}
    if set(cur) != expected or len(cur) != n:
        bad("move-legality", "modules appeared or vanished outside the recorded moves")

    # connectivity -------------------------------------------------------
    if moves:
        if not side_connected(cur):
            bad("connectivity", "configuration is not side-connected")
        if not side_connected(set(prev) - movers):
            bad("connectivity", "stationary modules are not side-connected during the round")

    # phases and memory --------------------------------------------------
    heads = [c for c, s in cur.items() if s.phase == Phase.HEAD and not s.temporary]
    temp_heads = [c for c, s in cur.items() if s.phase == Phase.HEAD and s.temporary]
    actives = [c for c, s in cur.items() if s.phase == Phase.ACTIVE]
    terminated = any(s.phase == Phase.TERMINATED for s in cur.values())
    if len(heads) > 1 or (not heads and not terminated):
        bad("phase-cardinality", f"{len(heads)} Head modules")
    if len(temp_heads) > 1:
        bad("phase-cardinality", f"{len(temp_heads)} temporary Head modules")
    if len(actives) > 1:
        bad("phase-cardinality", f"{len(actives)} Active modules")
    for c, s in cur.items():
        if len(s.requests) > 4:
            bad("memory-bound", f"{c} stores {len(s.requests)} requests")

    # Tail prefix ---------------------------------------------------------
    if len(heads) == 1:
        order = world.__dict__.setdefault("_oracle_order", rhombus_order(leader, n))
        h = heads[0]
        tails = {c for c, s in cur.items() if s.phase == Phase.TAIL and not s.temporary}
        if h not in order:
            bad("lemma1", f"Head at {h} is outside the rhombus")
        else:
            prefix = set(order[: order.index(h)])
            if tails != prefix:
                extra = sorted(tails - prefix)[:3]
                missing = sorted(prefix - tails)[:3]
                bad("lemma1", f"Tails differ from the prefix before {h}: extra {extra}, missing {missing}")

    # request path (stored entries are left behind once termination starts) --
    path, problems = request_path(cur) if not terminated else ([], [])
    if problems and not _cleanup_in_flight(cur):
        for p in problems:
            bad("lemma3-inv1", p)
    segments = []
    i = 1
    while i < len(path):
        if cur[path[i]].phase == Phase.PASSIVE:
            j = i
            while j + 1 < len(path) and cur[path[j + 1]].phase == Phase.PASSIVE:
                j += 1
            segments.append((i, j))
            i = j + 1
        else:
            i += 1
    if len(segments) > 1 or (segments and segments[-1][1] != len(path) - 1):
        bad("lemma3-inv2", f"passive segments {segments} on a path of length {len(path)}")
    for i, j in segments:
        seg = path[i: j + 1]
        if len(set(seg)) != len(seg):
            bad("lemma3-inv3", "passive segment visits a module twice")

    # critical-pair decisions ---------------------------------------------
    for ev in rec.events:
        if ev.get("event") != "critical-pair":
            continue
        verdict = _critical_pair_side(prev, ev, tree_mode)
        if verdict is not None and verdict != ev["side"]:
            bad("lemma3-inv1", f"critical pair at {ev['active']} resolved to side {ev['side']}, flood fill says {verdict}")

    # tree ----------------------------------------------------------------
    if tree_mode:
        root = leader
        for p in tree_problems(cur, root):
            bad("tree-validity", p)
        if world.variant == "v1":
            _check_v1_depths(prev, cur, moves, bad)
    return out


def _ignorable(S: dict[Cell, ModuleState], c: Cell) -> bool:
    s = S[c]
    if s.phase != Phase.PASSIVE or s.temporary or s.requests or s.init_fwd is not None:
        return False
    if s.pending is not None or s.ring is not None or s.parent is None:
        return False
    for i, (dx, dy) in enumerate(_SIDE):
        q = (c[0] + dx, c[1] + dy)
        t = S.get(q)
        if t is not None and t.phase != Phase.ACTIVE and t.parent is not None and _step(q, t.parent) == c:
            return False
    par = S.get(_step(c, s.parent))
    return par is not None and not par.requests and par.init_fwd is None


def _critical_pair_side(S: dict[Cell, ModuleState], ev: dict, tree_mode: bool) -> str | None:
    """Which side of a critical pair holds the current target cell, by flood fill."""
    target = None
    for c, s in S.items():
        if s.phase == Phase.HEAD and s.target is not None and s.init_fwd is not None:
            target = _step(c, s.target)
    if target is None:
        return None
    m = tuple(ev["active"])
    b = tuple(ev["bridge"])
    occupied = {c for c, s in S.items() if s.phase != Phase.ACTIVE}
    if tree_mode:
        occupied -= {c for c in occupied if _ignorable(S, c)}
    if target in occupied:
        return None
    region = hole_of(m, occupied, blocked=(b,))
    return "m" if region is not None and target in region else "b"


def _check_v1_depths(prev, cur, moves, bad) -> None:
    before = _tree_of(prev)
    after = _tree_of(cur)
    for o, d in moves:
        if prev[o].phase != Phase.PASSIVE or cur[d].phase != Phase.PASSIVE:
            continue
        old_parent = _step(o, prev[o].parent)
        try:
            # measure against staying put in the same tree; a concurrent reroot
            # elsewhere shifts every depth below it
            if old_parent in after and old_parent not in {x for x, _ in moves}:
                d0 = depth_of(after, old_parent) + 1
            else:
                d0 = depth_of(before, o)
            d1 = depth_of(after, d)
        except ValueError as exc:
            bad("tree-validity", str(exc))
            continue
        same_parent = old_parent == _step(d, cur[d].parent)
        if d1 > d0 or (d1 == d0 and not same_parent):
            bad("leaf-depth", f"leaf {o}->{d} went from depth {d0} to {d1}")
