"""Per-module rules of the rhombus formation protocol.

Every rule reads the round-start snapshot ``S`` (cell -> :class:`ModuleState`)
and records its outcome in an :class:`Effects` collector: field writes to
itself or to neighbours, messages for the next round, move proposals and
faults.  Nothing here mutates the snapshot.

Directions are ints (see :mod:`rhombform.grid`); message ``src`` fields are
always the sender's direction as seen by the receiver.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import tree_layer
from .configuration import Kind, Message, ModuleState, Phase
from .grid import (
    CENTER_FROM_PREVIOUS,
    HEAD_SUCCESSOR,
    OFFSETS,
    SIDES,
    Cell,
    add,
    direction_between,
    neighbor_cells,
    opposite,
    rotate_acw,
    rotate_cw,
)
from .tree_layer import Move


class ProtocolFault(RuntimeError):
    pass


@dataclass
class Effects:
    writes: list[tuple[Cell, Cell, str, object]] = field(default_factory=list)
    messages: list[tuple[Cell, Cell, Message]] = field(default_factory=list)
    moves: list[Move] = field(default_factory=list)
    faults: list[str] = field(default_factory=list)
    events: list[dict] = field(default_factory=list)

    def write(self, writer: Cell, cell: Cell, /, **fields) -> None:
        for name, value in fields.items():
            self.writes.append((writer, cell, name, value))

    def send(self, sender: Cell, d: int, kind: Kind, **extra) -> None:
        receiver = add(sender, d)
        self.messages.append((sender, receiver, Message(kind, opposite(d), **extra)))

    def fault(self, cell: Cell, text: str) -> None:
        self.faults.append(f"{cell}: {text}")


@dataclass(frozen=True)
class Rules:
    variant: str = "seq"

    @property
    def tree(self) -> bool:
        return self.variant in ("v1", "v2")


# --------------------------------------------------------------------------- local predicates


def solid(S: dict[Cell, ModuleState], c: Cell) -> bool:
    """Occupied by a module that counts for the protocol (the Active one does not)."""
    st = S.get(c)
    return st is not None and st.phase != Phase.ACTIVE


def ring_flags(S: dict[Cell, ModuleState], p: Cell) -> list[bool]:
    x, y = p
    return [solid(S, (x + dx, y + dy)) for dx, dy in OFFSETS]


def scan_next(flags: list[bool], src: int) -> int:
    """First occupied side direction after ``src`` in anti-clockwise order, else ``src``."""
    for k in range(1, 8):
        d = (src + k) & 7
        if not d & 1 and flags[d]:
            return d
    return src


def touches_hole(flags: list[bool], src: int, nxt: int) -> bool:
    """Whether an empty side cell lies strictly between ``src`` and ``nxt`` (anti-clockwise)."""
    d = (src + 1) & 7
    while d != nxt:
        if not d & 1 and not flags[d]:
            return True
        d = (d + 1) & 7
    return False


def ring_runs(flags: list[bool]) -> list[int]:
    """Label maximal runs of occupied cells around the 8-cycle; -1 for empty cells."""
    runs = [-1] * 8
    if all(flags):
        return [0] * 8
    start = flags.index(False)
    label = -1
    for k in range(1, 9):
        d = (start + k) & 7
        if flags[d]:
            if not flags[(d - 1) & 7]:
                label += 1
            runs[d] = label
    return runs


def simply_removable(flags: list[bool]) -> bool:
    runs = ring_runs(flags)
    return len({runs[d] for d in SIDES if flags[d]}) <= 1


def conditionally_removable(flags: list[bool], pred: int, succ: int) -> bool:
    runs = ring_runs(flags)
    allowed = {runs[pred], runs[succ]} - {-1}
    return all(runs[d] in allowed for d in SIDES if flags[d])


def tail_mask(S: dict[Cell, ModuleState], p: Cell) -> int:
    mask = 0
    for bit, d in enumerate(SIDES):
        st = S.get(add(p, d))
        if st is not None and st.phase == Phase.TAIL and not st.temporary:
            mask |= 1 << bit
    return mask


def head_target(S: dict[Cell, ModuleState], p: Cell) -> int | None:
    return HEAD_SUCCESSOR.get(tail_mask(S, p))


# --------------------------------------------------------------------------- entry point


def step_module(S: dict[Cell, ModuleState], p: Cell, fx: Effects, rules: Rules) -> None:
    st = S[p]
    if st.phase == Phase.TERMINATED:
        return
    if any(S.get(add(p, d)) is not None and S[add(p, d)].phase == Phase.TERMINATED for d in SIDES):
        fx.write(p, p, phase=Phase.TERMINATED, pending=None)
        return
    if st.phase == Phase.ACTIVE:
        active_step(S, p, st, fx, rules)
        return
    msg = st.pending
    if msg is not None:
        fx.write(p, p, pending=None)
        handle_message(S, p, st, msg, fx, rules)
        return
    if st.phase == Phase.HEAD:
        if st.temporary:
            temp_head_idle(S, p, st, fx, rules)
        else:
            head_idle(S, p, st, fx, rules)


def handle_message(S, p, st: ModuleState, msg: Message, fx: Effects, rules: Rules) -> None:
    kind = msg.kind
    if kind == Kind.CLEANUP:
        on_cleanup(p, st, msg, fx)
    elif kind == Kind.SPECIAL:
        on_special(S, p, st, msg, fx, rules)
    elif st.phase == Phase.PASSIVE:
        if kind == Kind.REQUEST:
            passive_request(S, p, st, msg, fx, rules)
        else:
            passive_activation(S, p, st, msg, fx, rules)
    elif st.phase == Phase.HEAD and st.temporary:
        if kind == Kind.REQUEST:
            fx.fault(p, "temporary Head received its own request back")
        else:
            start_third_pass(S, p, st, fx, rules)
    elif st.phase == Phase.HEAD and st.ring is None:
        if kind == Kind.REQUEST:
            # only the Head's own request can come back, and only through non-Passive modules
            fx.write(p, p, phase=Phase.TERMINATED, init_fwd=None)
        else:
            start_size_one(S, p, st, fx)
    else:
        relay(S, p, st, msg, fx)


def relay(S, p, st: ModuleState, msg: Message, fx: Effects) -> None:
    """Tail behaviour: pass requests on along the boundary and activations back along the path."""
    if msg.kind == Kind.REQUEST:
        nxt = scan_next(ring_flags(S, p), msg.src)
        if len(st.requests) >= 4:
            fx.fault(p, "more than four stored requests")
            return
        fx.write(p, p, requests=st.requests + ((msg.src, nxt),))
        fx.send(p, nxt, Kind.REQUEST)
    else:
        if not st.requests:
            fx.fault(p, "activation without a stored request")
            return
        src, _ = st.requests[-1]
        fx.write(p, p, requests=st.requests[:-1])
        fx.send(p, src, Kind.ACTIVATION)


def on_cleanup(p, st: ModuleState, msg: Message, fx: Effects) -> None:
    if st.cleanup_stop:
        fx.write(p, p, cleanup_stop=False)
        return
    if not st.requests:
        fx.fault(p, "cleanup without a stored request")
        return
    src, _ = st.requests[-1]
    fx.write(p, p, requests=st.requests[:-1])
    fx.send(p, src, Kind.CLEANUP)


# --------------------------------------------------------------------------- Head


def head_idle(S, p, st: ModuleState, fx: Effects, rules: Rules) -> None:
    if st.ring is not None:
        return
    t = head_target(S, p)
    if t is None:
        fx.fault(p, f"Tail pattern {tail_mask(S, p):04b} does not match any rhombus position")
        return
    tc = add(p, t)
    occ = S.get(tc)
    if occ is not None and (
        occ.phase == Phase.PASSIVE
        or (occ.phase == Phase.ACTIVE and occ.anchor is not None and add(tc, occ.anchor) == p and not occ.special)
    ):
        fx.write(p, p, phase=Phase.TAIL, target=None, init_fwd=None, ring=None, requests=())
        fx.write(
            p, tc,
            phase=Phase.HEAD, temporary=False, requests=(), target=None, init_fwd=None,
            parent=CENTER_FROM_PREVIOUS[direction_between(tc, p)] if rules.tree else None,
            pending=None, anchor=None, wall=None, ring=None, designated=False,
            cleanup_stop=False, await_cleanup=None, special=False,
        )
        return
    if occ is not None:
        if occ.phase != Phase.ACTIVE:
            fx.fault(p, f"target cell holds a {occ.phase.name} module")
        return
    if st.init_fwd is None:
        initiate(S, p, t, fx)


def initiate(S, p, t: int, fx: Effects) -> None:
    flags = ring_flags(S, p)
    for k in range(1, 8):
        d = (t + k) & 7
        if not d & 1 and flags[d]:
            fx.write(p, p, init_fwd=d, target=t)
            fx.send(p, d, Kind.REQUEST)
            return
    fx.write(p, p, phase=Phase.TERMINATED, target=None)


# --------------------------------------------------------------------------- Passive


def become_active(S, p, st: ModuleState, fx: Effects, rules: Rules, anchor: int,
                  keep: tuple[int, ...], requests=None, special: bool = False) -> None:
    fields = dict(phase=Phase.ACTIVE, anchor=anchor, wall=anchor if not anchor & 1 else None,
                  parent=None, pending=None, await_cleanup=None, special=special,
                  temporary=False, designated=False)
    if requests is not None:
        fields["requests"] = requests
    if not special:
        fields["ring"] = None
    fx.write(p, p, **fields)
    if rules.tree:
        updates, err = tree_layer.reroot(S, p, tuple(add(p, d) for d in keep))
        if err:
            fx.fault(p, err)
        for c, d in updates.items():
            if S[c].parent != d:
                fx.write(p, c, parent=d)


def passive_request(S, p, st: ModuleState, msg: Message, fx: Effects, rules: Rules) -> None:
    src = msg.src
    flags = ring_flags(S, p)
    nxt = scan_next(flags, src)
    gap = touches_hole(flags, src, nxt)
    leaf = rules.tree and not tree_layer.children(S, p)
    if gap and (leaf or simply_removable(flags)):
        become_active(S, p, st, fx, rules, anchor=src, keep=(src,))
        return
    nst = S.get(add(p, nxt))
    if nxt != src and nst.phase == Phase.PASSIVE and not nst.on_path:
        if len(st.requests) >= 4:
            fx.fault(p, "more than four stored requests")
            return
        fields = {"requests": st.requests + ((src, nxt),)}
        if rules.tree:
            fields["parent"] = src
        fx.write(p, p, **fields)
        fx.send(p, nxt, Kind.REQUEST)
        return
    # the request cannot go further: the path closes a cycle through p
    if gap and conditionally_removable(flags, src, nxt):
        become_active(S, p, st, fx, rules, anchor=src, keep=(src, nxt))
        return
    if rules.tree:
        fx.write(p, p, parent=nxt)
    fx.send(p, src, Kind.ACTIVATION)


def passive_activation(S, p, st: ModuleState, msg: Message, fx: Effects, rules: Rules) -> None:
    if not st.requests:
        fx.fault(p, "activation without a stored request")
        return
    src, fwd = st.requests[-1]
    succ = msg.src
    flags = ring_flags(S, p)
    gap = touches_hole(flags, src, fwd if fwd is not None else src)
    if gap and conditionally_removable(flags, src, succ):
        become_active(S, p, st, fx, rules, anchor=src, keep=(src, succ), requests=st.requests[:-1])
        return
    fields = {"requests": st.requests[:-1]}
    if rules.tree:
        fields["parent"] = succ
    fx.write(p, p, **fields)
    fx.send(p, src, Kind.ACTIVATION)


# --------------------------------------------------------------------------- Active


def _walk_solid(S, c: Cell, rules: Rules) -> bool:
    if not solid(S, c):
        return False
    return not (rules.tree and tree_layer.is_ignorable_leaf(S, c))


def _target_initiator(S, p: Cell) -> Cell | None:
    for q in neighbor_cells(p):
        qs = S.get(q)
        if qs is not None and qs.phase == Phase.HEAD and qs.target is not None and add(q, qs.target) == p:
            return q
    return None


def _chain(S, p: Cell, start: Cell) -> tuple[list[Cell], list, bool]:
    """Walk the request path backwards from ``start`` while it stays next to ``p``.

    A module can occur several times on the path; a per-module cursor tracks
    which of its stored entries the walk has already used.  Returns the cells
    visited, the stored entry behind each visit (None past the last one) and
    whether the walk ended at the initiator.
    """
    near = set(neighbor_cells(p))
    used: dict[Cell, int] = {}
    chain = [start]
    entries = []
    x = start
    while True:
        xs = S[x]
        k = len(xs.requests) - used.get(x, 0)
        if k <= 0:
            entries.append(None)
            return chain, entries, xs.init_fwd is not None
        entry = xs.requests[k - 1]
        entries.append(entry)
        pred = add(x, entry[0])
        if pred not in near or pred not in S:
            return chain, entries, False
        used[x] = used.get(x, 0) + 1
        chain.append(pred)
        x = pred


def _in_sweep(entry, d: int) -> bool:
    """Whether side ``d`` of a path module lies in the sector its entry swept.

    The sweep runs acw from the source, exclusive, to the forward side,
    inclusive; a U-turn entry sweeps everything but its source.
    """
    if entry is None:
        return True
    src, fwd = entry
    span = (fwd - src) & 7 or 8 if fwd is not None else 8
    return 0 < (d - src) & 7 <= span


def _pop_writes(S, p: Cell, chain: list[Cell], upto: int, fx: Effects) -> None:
    counts: dict[Cell, int] = {}
    for c in chain[:upto]:
        counts[c] = counts.get(c, 0) + 1
    for c, k in counts.items():
        reqs = S[c].requests
        fx.write(p, c, requests=reqs[: len(reqs) - k])


def active_step(S, p: Cell, st: ModuleState, fx: Effects, rules: Rules) -> None:
    if st.special:
        special_active(S, p, st, fx)
        return
    anchor = st.anchor
    wall = st.wall
    if st.await_cleanup is not None:
        cs = S.get(add(p, st.await_cleanup))
        if cs is not None and cs.cleanup_stop:
            return
        anchor = wall = st.await_cleanup
        fx.write(p, p, await_cleanup=None, anchor=anchor, wall=wall)
    if anchor is None:
        fx.fault(p, "Active module without an anchor")
        return
    x0 = add(p, anchor)
    if x0 not in S:
        fx.fault(p, "anchor cell is empty")
        return
    chain, entries, at_initiator = _chain(S, p, x0)

    init = _target_initiator(S, p)
    if init is not None:
        if not at_initiator or chain[-1] != init:
            # part of the path lies out of reach: erase it back to the initiator, then wait
            fx.events.append({"event": "target-cleanup", "active": list(p), "initiator": list(init)})
            fx.send(p, anchor, Kind.CLEANUP)
            fx.write(p, init, cleanup_stop=True)
            fx.write(p, p, await_cleanup=direction_between(p, init))
            return
        _pop_writes(S, p, chain, len(chain) - 1, fx)
        d = direction_between(p, init)
        if d != st.anchor:
            fx.write(p, p, anchor=d)
        return

    # a later visit of the same module only counts once p is inside the sector that visit swept,
    # otherwise the loop the request made in between would be skipped
    sides = [i for i, c in enumerate(chain) if direction_between(p, c) in SIDES
             and (i == 0 or _in_sweep(entries[i], direction_between(c, p)))]
    if sides:
        j = sides[-1]
        _pop_writes(S, p, chain, j, fx)
        last = chain[j]
        anchor = wall = direction_between(p, last)
    else:
        last = x0
    if wall is None:
        fx.fault(p, "Active module has no wall to follow")
        return
    if anchor != st.anchor or wall != st.wall:
        fx.write(p, p, anchor=anchor, wall=wall)
    walk(S, p, st, last, wall, fx, rules)


def walk(S, p: Cell, st: ModuleState, last: Cell, wall: int, fx: Effects, rules: Rules) -> None:
    for _ in range(4):
        t = rotate_acw(wall)
        a = add(p, t)
        b = add(a, wall)
        c = add(p, wall)
        if _walk_solid(S, a, rules):
            if c == last and not _walk_solid(S, b, rules):
                resolve_critical_pair(S, p, st, last, a, b, fx, rules)
                return
            wall = t
            continue
        if _walk_solid(S, b, rules):
            if a in S:
                swap_with_leaf(S, p, a, last, None, c, fx, "slide-blocked")
                return
            _propose(S, p, a, "slide", (), (b, c), last, wall, fx)
        else:
            if b in S:
                swap_with_leaf(S, p, b, last, c, c, fx, "convex-blocked")
                return
            if a in S:
                swap_with_leaf(S, p, a, last, c, c, fx, "convex-leaf-slides", slide_to=b)
                return
            _propose(S, p, b, "convex", (a,), (c,), last, opposite(t), fx)
        return
    fx.fault(p, "Active module is enclosed")


def _propose(S, p: Cell, dest: Cell, kind: str, swept, supports, last: Cell, new_wall: int, fx: Effects) -> None:
    anchor = direction_between(dest, last)
    if anchor is None:
        fx.fault(p, "move would lose contact with the request path")
        return
    fx.moves.append(Move(p, dest, kind, tuple(swept), tuple(supports),
                         {"anchor": anchor, "wall": new_wall}, active=True))


def swap_with_leaf(S, p: Cell, leaf: Cell, last: Cell, wall_cell: Cell | None, parent_cell: Cell,
                   fx: Effects, case: str, slide_to: Cell | None = None) -> None:
    """Hand the Active role to a blocking leaf instead of moving (tree variants)."""
    fx.events.append({"event": "leaf-swap", "case": case, "active": list(p), "leaf": list(leaf)})
    fx.write(p, p, phase=Phase.PASSIVE, parent=direction_between(p, parent_cell),
             anchor=None, wall=None, await_cleanup=None)
    if slide_to is not None:
        anchor = direction_between(slide_to, last)
        wall = direction_between(slide_to, wall_cell)
        fx.moves.append(Move(leaf, slide_to, "slide", (), (wall_cell, p),
                             {"phase": Phase.ACTIVE, "anchor": anchor, "wall": wall, "parent": None},
                             active=True))
        return
    anchor = direction_between(leaf, last)
    wall = direction_between(leaf, wall_cell) if wall_cell is not None else None
    if wall is None:
        wall = direction_between(p, parent_cell)
    fx.write(p, leaf, phase=Phase.ACTIVE, anchor=anchor, wall=wall, parent=None)


def resolve_critical_pair(S, p: Cell, st: ModuleState, x: Cell, y: Cell, b: Cell,
                          fx: Effects, rules: Rules) -> None:
    """Blocked between the last path module ``x`` and ``y``: decide which side holds the target."""
    ys = S[y]
    near = set(neighbor_cells(p))
    if ys.requests:
        src, fwd = ys.requests[-1]
        m_prev = add(y, src)
        m_next = add(y, fwd) if fwd is not None else None
        keep_side = m_next is None or m_next == m_prev or m_next not in near
        rule = "on-path"
    elif ys.init_fwd is not None:
        keep_side = _initiator_side(S, y, p, b, x, rules)
        rule = "initiator"
    else:
        keep_side = False
        rule = "off-path"
    fx.events.append({"event": "critical-pair", "active": list(p), "last": list(x), "other": list(y),
                      "bridge": list(b), "rule": rule, "side": "m" if keep_side else "b"})
    if keep_side:
        fx.send(p, direction_between(p, x), Kind.CLEANUP)
        fx.write(p, y, cleanup_stop=True)
        fx.write(p, p, await_cleanup=direction_between(p, y))
        return
    dx = direction_between(p, x)
    fx.write(p, p, phase=Phase.PASSIVE, anchor=None, wall=None,
             parent=dx if rules.tree else None, pending=Message(Kind.REQUEST, dx))
    xs = S[x]
    back = direction_between(x, p)
    if xs.requests:
        src, _ = xs.requests[-1]
        fx.write(p, x, requests=xs.requests[:-1] + ((src, back),))
    else:
        fx.write(p, x, init_fwd=back)


def _initiator_side(S, y: Cell, p: Cell, b: Cell, x: Cell, rules: Rules) -> bool:
    """True if the initiator's target cell is reachable from ``p`` without crossing ``b``."""
    ys = S[y]
    e = add(y, ys.target)
    if e == b:
        return False
    # walk the ring of y from the target over empty cells; two empty side cells
    # around a solid corner still touch diagonally
    def free(d: int) -> bool:
        c = add(y, d)
        return c == p or (c != b and c != x and not _walk_solid(S, c, rules))

    for step in (1, -1):
        d = ys.target
        for _ in range(8):
            nd = (d + step) & 7
            if not free(nd):
                if d & 1 or not nd & 1:
                    break
                nd = (nd + step) & 7
                if not free(nd):
                    break
            d = nd
            c = add(y, d)
            if c == p:
                return True
            if c == b or d == ys.target:
                break
    return False


# --------------------------------------------------------------------------- size-one hole


def _ring_next(e: Cell, hole: int, step: int) -> Cell:
    """Neighbour of the enclosed cell ``e`` after the one at ``e - hole`` (step +1 anti-clockwise)."""
    return add(e, (opposite(hole) + step) & 7)


def start_size_one(S, p: Cell, st: ModuleState, fx: Effects) -> None:
    t = st.target
    if t is None:
        fx.fault(p, "activation reached a Head without a target")
        return
    e = add(p, t)
    if any(not solid(S, c) for c in neighbor_cells(e)):
        fx.fault(p, "activation search exhausted but the target hole is larger than one cell")
        return
    nxt = _ring_next(e, t, 1)
    fx.write(p, p, ring=t, init_fwd=None)
    fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=1, hole=direction_between(nxt, e))
    fx.events.append({"event": "size-one", "head": list(p), "cell": list(e)})


def _special_removable(S, p: Cell, hole: int) -> bool:
    e = add(p, hole)
    flags = ring_flags(S, p)
    if flags[hole]:
        return False
    pred = direction_between(p, _ring_next(e, direction_between(p, e), -1))
    succ = direction_between(p, _ring_next(e, direction_between(p, e), 1))
    return conditionally_removable(flags, pred, succ)


def on_special(S, p: Cell, st: ModuleState, msg: Message, fx: Effects, rules: Rules) -> None:
    hole = msg.hole
    e = add(p, hole)
    tree = rules.tree
    if msg.stage == 1:
        if st.phase == Phase.HEAD and not st.temporary:
            if not msg.found:
                fx.fault(p, "no Passive module next to the enclosed cell")
                return
            nxt = _ring_next(e, hole, -1)
            fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=2, hole=direction_between(nxt, e))
            return
        found = msg.found
        if st.phase == Phase.PASSIVE:
            mark = not found and not hole & 1
            fields = dict(phase=Phase.TAIL, temporary=True, ring=hole, designated=mark)
            if tree:
                fields["parent"] = msg.src
            fx.write(p, p, **fields)
            found = found or mark
        nxt = _ring_next(e, hole, 1)
        fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=1, hole=direction_between(nxt, e), found=found)
        return
    if msg.stage == 2:
        if st.phase == Phase.HEAD and not st.temporary:
            fx.fault(p, "second pass went round without meeting the designated module")
            return
        if st.designated:
            if _special_removable(S, p, hole):
                become_active(S, p, st, fx, rules, anchor=hole, keep=_ring_dirs(p, e), special=True)
                return
            behind = add(p, opposite(hole))
            side = _ring_next(e, hole, 1)
            e1 = (behind[0] + side[0] - p[0], behind[1] + side[1] - p[1])
            fields = dict(phase=Phase.HEAD, temporary=True, target=direction_between(p, e1), designated=False)
            if tree:
                fields["parent"] = msg.src
            fx.write(p, p, **fields)
            fx.events.append({"event": "nested-request", "module": list(p), "cell": list(e1)})
            return
        if tree and st.temporary:
            fx.write(p, p, parent=msg.src)
        nxt = _ring_next(e, hole, -1)
        fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=2, hole=direction_between(nxt, e))
        return
    # third pass: look for a module that became removable
    if st.phase == Phase.HEAD and st.temporary:
        fx.fault(p, "third pass returned to the temporary Head")
        return
    if st.temporary and st.phase == Phase.TAIL and not hole & 1 and _special_removable(S, p, hole):
        become_active(S, p, st, fx, rules, anchor=hole, keep=_ring_dirs(p, e), special=True)
        return
    if tree and st.temporary:
        fx.write(p, p, parent=msg.src)
    nxt = _ring_next(e, hole, 1)
    fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=3, hole=direction_between(nxt, e))


def _ring_dirs(p: Cell, e: Cell) -> tuple[int, int]:
    q = direction_between(p, e)
    return (direction_between(p, _ring_next(e, q, -1)), direction_between(p, _ring_next(e, q, 1)))


def _ring_hole(p: Cell, st: ModuleState) -> Cell:
    """Enclosed cell seen from a temporary Head: the cell opposite its own target, shifted."""
    return add(p, st.ring)


def temp_head_idle(S, p: Cell, st: ModuleState, fx: Effects, rules: Rules) -> None:
    e1 = add(p, st.target)
    occ = S.get(e1)
    if occ is None:
        if st.init_fwd is None:
            initiate(S, p, st.target, fx)
        return
    if occ.phase == Phase.ACTIVE:
        if occ.anchor is not None and add(e1, occ.anchor) == p:
            e = _ring_hole(p, st)
            side = _ring_next(e, st.ring, 1)
            fx.write(p, e1, phase=Phase.PASSIVE, anchor=None, wall=None,
                     parent=direction_between(e1, side) if rules.tree else None)
            fx.write(p, p, init_fwd=None)
        return
    if occ.phase == Phase.PASSIVE:
        if _special_removable(S, p, st.ring):
            e = _ring_hole(p, st)
            become_active(S, p, st, fx, rules, anchor=st.ring, keep=_ring_dirs(p, e), special=True)
            fx.write(p, p, target=None, init_fwd=None)
        else:
            fx.fault(p, "nested target filled but the module is still not removable")


def start_third_pass(S, p: Cell, st: ModuleState, fx: Effects, rules: Rules) -> None:
    e = _ring_hole(p, st)
    fields = {"init_fwd": None}
    if rules.tree:
        fields["parent"] = direction_between(p, _ring_next(e, st.ring, -1))
    fx.write(p, p, **fields)
    nxt = _ring_next(e, st.ring, 1)
    fx.send(p, direction_between(p, nxt), Kind.SPECIAL, stage=3, hole=direction_between(nxt, e))


def special_active(S, p: Cell, st: ModuleState, fx: Effects) -> None:
    if st.ring is not None:
        q = st.ring
        e = add(p, q)
        for d in (rotate_acw(q), rotate_cw(q)):
            c = add(p, d)
            b = add(e, d)
            if solid(S, c) and solid(S, b):
                fx.moves.append(Move(p, e, "slide", (), (b, c), {"ring": None, "anchor": None, "wall": None},
                                     active=True))
                return
        fx.fault(p, "no support for the slide into the enclosed cell")
        return
    # now inside the enclosed cell: release the ring and point at the Head
    head = None
    for c in neighbor_cells(p):
        cs = S.get(c)
        if cs is None:
            continue
        if cs.phase == Phase.HEAD and not cs.temporary:
            head = c
            fx.write(p, c, ring=None)
        elif cs.temporary:
            fx.write(p, c, phase=Phase.PASSIVE, temporary=False, ring=None, designated=False,
                     target=None, init_fwd=None)
    if head is None:
        fx.fault(p, "no Head next to the enclosed cell")
        return
    fx.write(p, p, special=False, anchor=direction_between(p, head))
