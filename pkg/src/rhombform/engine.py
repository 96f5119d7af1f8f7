"""Synchronous round executor.

One round: every module that has something to do reads the round-start
snapshot, the protocol and tree rules emit effects, and the effects are merged
deterministically:

* field writes are keyed by the writer's and target's round-start cells; if two
  writers disagree on a field the one with the smaller ``(y, x)`` cell wins and
  the conflict is recorded;
* a message lands in the receiver's inbox for the next round; two messages for
  the same receiver is a fault;
* moves from the Active module (or on its behalf) are considered first, then the
  rest by origin ``(y, x)``.  A move is accepted if its destination and swept
  cells were empty at round start and are unclaimed, and its supports are
  occupied and not moving.  Accepted movers pin their supports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, TextIO

from . import protocol_core as protocol, tree_layer as tree
from .configuration import Configuration, Kind, Message, ModuleState, Phase
from .grid import Cell, SIDES, add, direction_between, neighbor_cells, rhombus_cells

VARIANTS = ("seq", "v1", "v2")


class SimulationFault(RuntimeError):
    def __init__(self, message: str, record: "RoundRecord | None" = None):
        super().__init__(message)
        self.record = record


class ValidationError(SimulationFault):
    def __init__(self, violations, record=None):
        self.violations = violations
        text = "; ".join(f"{v.kind}: {v.detail}" for v in violations[:5])
        super().__init__(f"round {violations[0].round}: {text}", record)


def _yx(c: Cell) -> tuple[int, int]:
    return (c[1], c[0])


@dataclass
class RoundRecord:
    round: int
    messages: list = field(default_factory=list)
    writes: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    rejected: list = field(default_factory=list)
    conflicts: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "round": self.round,
                "messages": self.messages,
                "writes": self.writes,
                "moves": self.moves,
                "rejected": self.rejected,
                "conflicts": self.conflicts,
                "events": self.events,
            },
            separators=(",", ":"),
            sort_keys=True,
        )


def _jsonable(value):
    if isinstance(value, ModuleState):
        return value.to_json()
    if hasattr(value, "to_json"):
        return value.to_json()
    if isinstance(value, Phase):
        return value.name
    if isinstance(value, tuple):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class RunResult:
    config: Configuration
    rounds: int
    terminated: bool
    fault: str | None = None
    setup_rounds: int = 0
    violations: list = field(default_factory=list)

    @property
    def shape_ok(self) -> bool:
        n = len(self.config)
        return self.config.occupied == frozenset(rhombus_cells(self.config.leader, n))


class World:
    """A configuration under simulation plus the bookkeeping needed to step it."""

    def __init__(self, config: Configuration, variant: str = "seq", validation: str = "fast",
                 trace: TextIO | None = None):
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
        if validation not in ("fast", "strict"):
            raise ValueError(f"unknown validation mode {validation!r}")
        self.config = config.copy()
        self.variant = variant
        self.rules = protocol.Rules(variant)
        self.validation = validation
        self.trace = trace
        self.round = 0
        self.setup_rounds = 0
        self.violations: list = []
        setup = RoundRecord(0, events=[{"event": "setup", "variant": variant}])
        if self.rules.tree:
            parents, self.setup_rounds = tree.build_bfs_tree(self.config.occupied, self.config.leader)
            for c in sorted(parents, key=_yx):
                if parents[c] is not None:
                    setup.writes.append([list(c), "parent", None, parents[c]])
            setup.events[0]["bfs_rounds"] = self.setup_rounds
            self.config.states = {c: s.evolve(parent=parents[c]) for c, s in self.config.states.items()}
        self._emit(setup)
        self._hot: set[Cell] = set()
        self._leaf_watch: set[Cell] = set(self.config.states) if self.rules.tree else set()
        self._term_cells = {c for c, s in self.config.states.items() if s.phase == Phase.TERMINATED}
        for c, s in self.config.states.items():
            self._classify(c, s)

    # ----------------------------------------------------------------- bookkeeping

    @property
    def states(self) -> dict[Cell, ModuleState]:
        return self.config.states

    @property
    def finished(self) -> bool:
        return len(self._term_cells) == len(self.config.states)

    def _classify(self, c: Cell, s: ModuleState | None) -> None:
        if s is None:
            self._hot.discard(c)
            return
        if s.phase in (Phase.HEAD, Phase.ACTIVE) or s.pending is not None:
            self._hot.add(c)
        elif s.phase != Phase.TERMINATED and any(
            (n := self.states.get(add(c, d))) is not None and n.phase == Phase.TERMINATED for d in SIDES
        ):
            self._hot.add(c)
        else:
            self._hot.discard(c)

    # ----------------------------------------------------------------- stepping

    def step(self) -> RoundRecord:
        S = self.states
        self.round += 1
        rec = RoundRecord(self.round)
        fx = protocol.Effects()
        for c in sorted(self._hot, key=_yx):
            protocol.step_module(S, c, fx, self.rules)
        leaf_moves: list[tree.Move] = []
        if self.rules.tree:
            keep = set()
            for c in sorted(self._leaf_watch, key=_yx):
                if c not in S or c in self._hot:
                    continue
                mv = tree.leaf_move(S, c, self.variant)
                if mv is not None:
                    leaf_moves.append(mv)
                    keep.add(c)
            self._leaf_watch = keep
        if fx.faults:
            rec.events.extend({"event": "fault", "detail": f} for f in fx.faults)
            self._emit(rec)
            raise SimulationFault(f"round {self.round}: " + "; ".join(fx.faults), rec)
        prev = dict(S) if self.validation == "strict" else None
        changed = self._apply(S, fx, leaf_moves, rec)
        rec.events.extend(fx.events)
        self._emit(rec)
        for c in changed:
            self._classify(c, S.get(c))
            for n in neighbor_cells(c):
                if n in S:
                    self._classify(n, S[n])
        if self.rules.tree:
            for c in changed:
                x, y = c
                for dx in range(-4, 5):
                    for dy in range(-4, 5):
                        q = (x + dx, y + dy)
                        if q in S:
                            self._leaf_watch.add(q)
        if prev is not None:
            from .oracles import validate_round

            found = validate_round(prev, S, rec, self)
            if found:
                self.violations.extend(found)
                raise ValidationError(found, rec)
        return rec

    def _emit(self, rec: RoundRecord) -> None:
        if self.trace is not None:
            self.trace.write(rec.to_json() + "\n")

    def _apply(self, S, fx: protocol.Effects, leaf_moves, rec: RoundRecord) -> set[Cell]:
        changed: set[Cell] = set()
        # field writes, resolved per (target, field)
        chosen: dict[tuple[Cell, str], tuple[Cell, object]] = {}
        for writer, target, name, value in fx.writes:
            key = (target, name)
            old = chosen.get(key)
            if old is None or old[0] == writer:
                chosen[key] = (writer, value)
                continue
            if old[1] == value:
                if _yx(writer) < _yx(old[0]):
                    chosen[key] = (writer, value)
                continue
            winner = writer if _yx(writer) < _yx(old[0]) else old[0]
            rec.conflicts.append({"cell": list(target), "field": name,
                                  "writers": sorted([list(writer), list(old[0])], key=lambda c: (c[1], c[0]))})
            if winner == writer:
                chosen[key] = (writer, value)
        per_cell: dict[Cell, dict] = {}
        for (target, name), (_, value) in sorted(chosen.items(), key=lambda kv: (_yx(kv[0][0]), kv[0][1])):
            per_cell.setdefault(target, {})[name] = value
        for target, fields in per_cell.items():
            st = S.get(target)
            if st is None:
                raise SimulationFault(f"round {self.round}: write to empty cell {target}", rec)
            new = st.evolve(**fields)
            for name, value in fields.items():
                old = getattr(st, name)
                if old != value:
                    rec.writes.append([list(target), name, _jsonable(old), _jsonable(value)])
            if new != st:
                S[target] = new
                changed.add(target)
        # messages
        inbox: dict[Cell, object] = {}
        for sender, receiver, msg in fx.messages:
            if receiver in inbox:
                raise SimulationFault(f"round {self.round}: two messages for {receiver}", rec)
            if receiver not in S:
                raise SimulationFault(f"round {self.round}: message from {sender} to empty cell {receiver}", rec)
            inbox[receiver] = msg
            rec.messages.append({"from": list(sender), "to": list(receiver), **msg.to_json()})
        for receiver, msg in inbox.items():
            S[receiver] = S[receiver].evolve(pending=msg)
            changed.add(receiver)
        # moves
        proposals = sorted(fx.moves, key=lambda m: (not m.active, _yx(m.origin))) + sorted(
            leaf_moves, key=lambda m: _yx(m.origin)
        )
        start = set(S)
        claimed: set[Cell] = set()
        pinned: set[Cell] = set()
        movers: set[Cell] = set()
        accepted = []
        for mv in proposals:
            reason = None
            if mv.origin in pinned or mv.origin in movers:
                reason = "origin pinned"
            elif mv.dest in start or mv.dest in claimed:
                reason = "destination taken"
            elif any(c in start or c in claimed for c in mv.swept):
                reason = "swept cell taken"
            elif any(c not in start or c in movers for c in mv.supports):
                reason = "support missing"
            elif any(c in per_cell or c in movers or c in inbox for c in mv.relies):
                reason = "tree changed under the move"
            if reason is not None:
                if mv.active:
                    raise SimulationFault(f"round {self.round}: Active move {mv.origin}->{mv.dest} rejected: {reason}", rec)
                rec.rejected.append({"from": list(mv.origin), "to": list(mv.dest), "reason": reason})
                continue
            accepted.append(mv)
            claimed.add(mv.dest)
            claimed.update(mv.swept)
            pinned.update(mv.supports)
            movers.add(mv.origin)
        for mv in accepted:
            st = S.pop(mv.origin)
            S[mv.dest] = st.evolve(**mv.writes) if mv.writes else st
            changed.add(mv.origin)
            changed.add(mv.dest)
            entry = {"from": list(mv.origin), "to": list(mv.dest), "kind": mv.kind}
            if mv.writes:
                entry["writes"] = {k: _jsonable(v) for k, v in mv.writes.items()}
            rec.moves.append(entry)
        for c in changed:
            st = S.get(c)
            if st is not None and st.phase == Phase.TERMINATED:
                self._term_cells.add(c)
            else:
                self._term_cells.discard(c)
        return changed

    def run(self, max_rounds: int | None = None, on_round: Callable[[RoundRecord], None] | None = None) -> RunResult:
        n = len(self.states)
        limit = max_rounds if max_rounds is not None else 20 * n * n + 100
        fault = None
        try:
            while not self.finished:
                if self.round >= limit:
                    fault = f"no termination within {limit} rounds"
                    break
                rec = self.step()
                if on_round is not None:
                    on_round(rec)
        except SimulationFault as exc:
            fault = str(exc)
            if isinstance(exc, ValidationError):
                return RunResult(self.config, self.round + self.setup_rounds, False, fault,
                                 self.setup_rounds, list(self.violations))
        return RunResult(self.config, self.round + self.setup_rounds, self.finished, fault,
                         self.setup_rounds, list(self.violations))


def _decode(name: str, value):
    if value is None:
        return None
    if name == "phase":
        return Phase[value]
    if name == "pending":
        return Message(Kind[value["kind"]], value["src"], value.get("stage", 0),
                       value.get("hole"), value.get("found", False))
    if name == "requests":
        return tuple(tuple(e) for e in value)
    return value


def replay(config: Configuration, records: Iterable[dict], upto: int) -> dict[Cell, ModuleState]:
    """Module states after round ``upto``, rebuilt from trace records alone.

    ``records`` are decoded trace lines starting with the round-0 setup record.
    Raises ValueError if the trace ends before ``upto``.
    """
    S = dict(config.states)
    last = -1
    for rec in records:
        if rec["round"] > upto:
            break
        last = rec["round"]
        for cell, name, _, value in rec["writes"]:
            c = tuple(cell)
            S[c] = S[c].evolve(**{name: _decode(name, value)})
        for msg in rec["messages"]:
            c = tuple(msg["to"])
            body = {k: v for k, v in msg.items() if k not in ("from", "to")}
            S[c] = S[c].evolve(pending=_decode("pending", body))
        moved = [(tuple(m["from"]), tuple(m["to"]), m.get("writes", {})) for m in rec["moves"]]
        states = [(S.pop(o), d, w) for o, d, w in moved]
        for st, d, w in states:
            S[d] = st.evolve(**{k: _decode(k, v) for k, v in w.items()}) if w else st
    if last != upto:
        raise ValueError(f"trace has no round {upto} (last round {last})")
    return S


def run(config: Configuration, variant: str = "seq", validation: str = "fast",
        max_rounds: int | None = None, trace: TextIO | None = None) -> RunResult:
    """Simulate until every module is Terminated or ``max_rounds`` is hit."""
    world = World(config, variant, validation, trace)
    return world.run(max_rounds)
