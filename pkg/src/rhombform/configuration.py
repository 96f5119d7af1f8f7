"""Module state, configurations, input generators and the text file format."""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Iterable

from .grid import Cell, side_cells
from .topology import is_side_connected


class Phase(IntEnum):
    PASSIVE = 0
    HEAD = 1
    TAIL = 2
    ACTIVE = 3
    TERMINATED = 4


class Kind(IntEnum):
    REQUEST = 0
    ACTIVATION = 1
    CLEANUP = 2
    SPECIAL = 3


@dataclass(frozen=True, slots=True)
class Message:
    """A message sitting in a module's inbox.

    ``src`` is the direction of the sender as seen by the receiver.  The extra
    fields are only used by the size-one-hole messages: ``stage`` (1, 2 or 3),
    ``hole`` (direction from the receiver to the enclosed cell) and ``found``.
    """

    kind: Kind
    src: int
    stage: int = 0
    hole: int | None = None
    found: bool = False

    def to_json(self) -> dict:
        d = {"kind": self.kind.name, "src": self.src}
        if self.kind == Kind.SPECIAL:
            d.update(stage=self.stage, hole=self.hole, found=self.found)
        return d


@dataclass(frozen=True, slots=True)
class ModuleState:
    """Constant-size memory of one module.

    requests      stored request entries ``(src, fwd)``; ``fwd`` is the direction
                  the request was passed on to (None if it was not forwarded)
    target        direction of the cell the Head (or temporary Head) wants filled
    init_fwd      direction the initiator sent its own request to
    parent        spanning-tree parent direction (tree variants only)
    pending       inbox, read in the next round
    anchor/wall   Active only: direction of the last module on the request path
                  and of the module it keeps on its right while walking
    ring          direction of the enclosed cell during the size-one-hole procedure
    """

    phase: Phase = Phase.PASSIVE
    temporary: bool = False
    requests: tuple[tuple[int, int | None], ...] = ()
    target: int | None = None
    init_fwd: int | None = None
    parent: int | None = None
    pending: Message | None = None
    anchor: int | None = None
    wall: int | None = None
    ring: int | None = None
    designated: bool = False
    cleanup_stop: bool = False
    await_cleanup: int | None = None
    special: bool = False

    def evolve(self, **changes) -> "ModuleState":
        return replace(self, **changes)

    @property
    def on_path(self) -> bool:
        return bool(self.requests) or self.init_fwd is not None

    def to_json(self) -> dict:
        out: dict = {"phase": self.phase.name}
        for name in ModuleState.__slots__:
            if name == "phase":
                continue
            value = getattr(self, name)
            default = _DEFAULTS[name]
            if value == default:
                continue
            if isinstance(value, Message):
                value = value.to_json()
            elif isinstance(value, tuple):
                value = [list(e) for e in value]
            out[name] = value
        return out


_DEFAULTS = {name: getattr(ModuleState(), name) for name in ModuleState.__slots__}


@dataclass
class Configuration:
    """Occupied cells with their states plus the leader cell."""

    leader: Cell
    states: dict[Cell, ModuleState] = field(default_factory=dict)

    @classmethod
    def initial(cls, cells: Iterable[Cell], leader: Cell) -> "Configuration":
        cells = list(cells)
        if leader not in cells:
            raise ValueError(f"leader {leader} is not an occupied cell")
        states = {c: ModuleState() for c in cells}
        states[leader] = ModuleState(phase=Phase.HEAD)
        return cls(leader, states)

    @property
    def occupied(self) -> frozenset[Cell]:
        return frozenset(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def copy(self) -> "Configuration":
        return Configuration(self.leader, dict(self.states))

    def same_cells(self, other: "Configuration") -> bool:
        return self.leader == other.leader and self.occupied == other.occupied


# --------------------------------------------------------------------------- generators


def line(n: int) -> Configuration:
    _check_n(n)
    return Configuration.initial([(x, 0) for x in range(n)], (0, 0))


def spiral(n: int) -> Configuration:
    """Square spiral with one empty lane between turns; arm lengths 2, 2, 4, 4, 6, 6, ..."""
    _check_n(n)
    cells = [(0, 0)]
    x = y = 0
    heading = [(1, 0), (0, 1), (-1, 0), (0, -1)]
    arm = 0
    while len(cells) < n:
        dx, dy = heading[arm % 4]
        for _ in range(2 * (arm // 2 + 1)):
            x, y = x + dx, y + dy
            cells.append((x, y))
            if len(cells) == n:
                break
        arm += 1
    return Configuration.initial(cells, (0, 0))


def chain(n: int) -> Configuration:
    """Two interleaved diagonal staircases joined at the bottom.

    The rails touch only at corners, so the single empty cells between them form
    a diagonal of pseudo-holes separated by critical pairs.  The leader sits at
    the tip of the upper rail.
    """
    _check_n(n)
    upper_len = (n - 1) // 2
    lower_len = n - 1 - upper_len
    base = (-1, -1)
    upper = _staircase((-1, 0), ((0, 1), (1, 0)), upper_len)
    lower = _staircase((0, -1), ((1, 0), (0, 1)), lower_len)
    leader = upper[-1] if upper else base
    return Configuration.initial([base, *upper, *lower], leader)


def _staircase(start: Cell, steps: tuple[Cell, Cell], length: int) -> list[Cell]:
    out = []
    x, y = start
    for k in range(length):
        if k:
            dx, dy = steps[(k - 1) % 2]
            x, y = x + dx, y + dy
        out.append((x, y))
    return out


def structured(kind: str, n: int) -> Configuration:
    try:
        gen = {"line": line, "spiral": spiral, "chain": chain}[kind]
    except KeyError:
        raise ValueError(f"unknown structured shape {kind!r}") from None
    return gen(n)


def _locally_removable(occ: set[Cell], c: Cell) -> bool:
    # quick sufficient test: occupied ring cells of c form a single run
    x, y = c
    ring = [(x, y + 1), (x - 1, y + 1), (x - 1, y), (x - 1, y - 1),
            (x, y - 1), (x + 1, y - 1), (x + 1, y), (x + 1, y + 1)]
    flags = [r in occ for r in ring]
    if all(flags):
        return True
    sides = [flags[k] for k in (0, 2, 4, 6)]
    if not any(sides):
        return False
    runs = sum(1 for k in range(8) if flags[k] and not flags[k - 1])
    if runs == 1:
        return True
    # several runs; removable locally only if all side neighbours share one run
    start = next(k for k in range(8) if not flags[k])
    run_of: dict[int, int] = {}
    r = -1
    for i in range(1, 9):
        k = (start + i) % 8
        if flags[k]:
            if not flags[(k - 1) % 8]:
                r += 1
            run_of[k] = r
    return len({run_of[k] for k in (0, 2, 4, 6) if flags[k]}) == 1


def rect_random(width: int, height: int, percent: int, seed: int, keep: int | None = None) -> Configuration:
    """Prune a full ``width x height`` rectangle at random while keeping it connected.

    The leader cell is drawn first from the same generator and is never removed.
    ``keep`` overrides the default count ``ceil(percent * width * height / 100)``.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    if not 1 <= percent <= 100:
        raise ValueError("percent must lie in 1..100")
    rng = random.Random(seed)
    cells = [(x, y) for y in range(height) for x in range(width)]
    leader = cells[rng.randrange(len(cells))]
    goal = keep if keep is not None else math.ceil(percent * width * height / 100)
    goal = max(1, min(goal, len(cells)))
    occ = set(cells)
    pool = [c for c in cells if c != leader]
    while len(occ) > goal:
        i = rng.randrange(len(pool))
        c = pool[i]
        occ.discard(c)
        ok = _locally_removable(occ, c) or is_side_connected(occ)
        if ok:
            pool[i] = pool[-1]
            pool.pop()
        else:
            occ.add(c)
    return Configuration.initial(sorted(occ, key=lambda c: (c[1], c[0])), leader)


def rect_random_for_n(n: int, percent: int, seed: int) -> Configuration:
    """Square rectangle sized so that ``percent`` of it is about ``n``; keeps exactly ``n``."""
    _check_n(n)
    side = math.ceil(math.sqrt(100 * n / percent))
    return rect_random(side, side, percent, seed, keep=n)


class GradientNoise:
    """2D gradient noise on a square lattice with period ``cell`` and seeded gradients."""

    def __init__(self, seed: int, cell: int = 8):
        self.seed = seed
        self.cell = cell
        self._grad: dict[tuple[int, int], tuple[float, float]] = {}

    def _gradient(self, i: int, j: int) -> tuple[float, float]:
        g = self._grad.get((i, j))
        if g is None:
            angle = random.Random(f"{self.seed}:{i}:{j}").random() * 2 * math.pi
            g = self._grad[(i, j)] = (math.cos(angle), math.sin(angle))
        return g

    def __call__(self, x: float, y: float) -> float:
        fx, fy = x / self.cell, y / self.cell
        i0, j0 = math.floor(fx), math.floor(fy)
        tx, ty = fx - i0, fy - j0

        def dot(i: int, j: int) -> float:
            gx, gy = self._gradient(i, j)
            return gx * (fx - i) + gy * (fy - j)

        def fade(t: float) -> float:
            return t * t * t * (t * (t * 6 - 15) + 10)

        u, v = fade(tx), fade(ty)
        a = dot(i0, j0) + u * (dot(i0 + 1, j0) - dot(i0, j0))
        b = dot(i0, j0 + 1) + u * (dot(i0 + 1, j0 + 1) - dot(i0, j0 + 1))
        return a + v * (b - a)


def perlin(n: int, seed: int, top: int = 10) -> Configuration:
    """Grow ``n`` modules from (0, 0); each step picks uniformly among the ``top`` noisiest frontier cells."""
    _check_n(n)
    noise = GradientNoise(seed)
    rng = random.Random(seed)
    occ = [(0, 0)]
    occ_set = {(0, 0)}
    frontier = set(side_cells((0, 0)))
    while len(occ) < n:
        ranked = sorted(frontier, key=lambda c: (-noise(c[0] + 0.5, c[1] + 0.5), c[1], c[0]))
        pick = ranked[rng.randrange(min(top, len(ranked)))]
        frontier.discard(pick)
        occ.append(pick)
        occ_set.add(pick)
        frontier.update(s for s in side_cells(pick) if s not in occ_set)
    return Configuration.initial(occ, (0, 0))


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError("n must be at least 1")


@dataclass(frozen=True)
class GeneratorSpec:
    kind: str
    n: int | None = None
    width: int | None = None
    height: int | None = None
    percent: int | None = None
    seed: int = 0

    def build(self) -> Configuration:
        if self.kind in ("line", "spiral", "chain"):
            if self.n is None:
                raise ValueError(f"{self.kind} needs n")
            return structured(self.kind, self.n)
        if self.kind == "rect-random":
            if self.percent is None:
                raise ValueError("rect-random needs percent")
            if self.width is not None and self.height is not None:
                keep = self.n if self.n is not None else None
                return rect_random(self.width, self.height, self.percent, self.seed, keep)
            if self.n is None:
                raise ValueError("rect-random needs width/height or n")
            return rect_random_for_n(self.n, self.percent, self.seed)
        if self.kind == "perlin":
            if self.n is None:
                raise ValueError("perlin needs n")
            return perlin(self.n, self.seed)
        raise ValueError(f"unknown generator {self.kind!r}")


# --------------------------------------------------------------------------- text format


class ConfigFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


class DuplicateCellError(ConfigFormatError):
    pass


class MissingLeaderError(ConfigFormatError):
    pass


class BadCoordinateError(ConfigFormatError):
    pass


class DisconnectedError(ConfigFormatError):
    pass


def parse(text: str) -> Configuration:
    leader: Cell | None = None
    cells: dict[Cell, int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if parts[0] not in ("leader", "module") or len(parts) != 3:
            raise ConfigFormatError(f"expected 'leader X Y' or 'module X Y', got {stripped!r}", lineno)
        try:
            cell = (int(parts[1]), int(parts[2]))
        except ValueError:
            raise BadCoordinateError(f"non-integer coordinate in {stripped!r}", lineno) from None
        if parts[0] == "leader":
            if leader is not None:
                raise ConfigFormatError("second leader line", lineno)
            leader = cell
        if cell in cells:
            raise DuplicateCellError(f"cell {cell} listed twice (first on line {cells[cell]})", lineno)
        cells[cell] = lineno
    if leader is None:
        raise MissingLeaderError("no leader line")
    if not is_side_connected(cells):
        raise DisconnectedError("modules are not side-connected")
    return Configuration.initial(cells, leader)


def serialize(config: Configuration) -> str:
    lx, ly = config.leader
    lines = [f"leader {lx} {ly}"]
    for x, y in sorted(config.occupied - {config.leader}, key=lambda c: (c[1], c[0])):
        lines.append(f"module {x} {y}")
    return "\n".join(lines) + "\n"
