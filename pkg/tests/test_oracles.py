from types import SimpleNamespace

import pytest

from rhombform import configuration as C
from rhombform.configuration import ModuleState, Phase
from rhombform.grid import Direction as D
from rhombform.oracles import (depth_of, emd_bruteforce, polyominoes, removable_bruteforce, rhombus_order,
                               tree_problems, validate_round)


def test_removable_bruteforce():
    line = {(0, 0), (1, 0), (2, 0)}
    assert removable_bruteforce(line, (0, 0)) and removable_bruteforce(line, (2, 0))
    assert not removable_bruteforce(line, (1, 0))
    block = {(0, 0), (1, 0), (0, 1), (1, 1)}
    assert all(removable_bruteforce(block, c) for c in block)
    assert not removable_bruteforce({(0, 0)}, (0, 0))


def test_depth_of():
    parents = {(0, 0): None, (1, 0): D.W, (2, 0): D.W}
    assert [depth_of(parents, (x, 0)) for x in range(3)] == [0, 1, 2]
    with pytest.raises(ValueError):
        depth_of({(0, 0): D.E, (1, 0): D.W}, (0, 0))
    with pytest.raises(ValueError):
        depth_of({(0, 0): D.N}, (0, 0))


def test_tree_problems():
    S = {(0, 0): ModuleState(), (1, 0): ModuleState(parent=D.W), (2, 0): ModuleState(parent=D.W)}
    assert tree_problems(S, (0, 0)) == []
    S[(1, 0)] = ModuleState(parent=D.E)
    S[(2, 0)] = ModuleState(parent=D.W)
    assert any("cycle" in p for p in tree_problems(S, (0, 0)))
    S[(1, 0)] = ModuleState(parent=D.NW)
    assert any("corner" in p for p in tree_problems(S, (0, 0)))
    S[(1, 0)] = ModuleState()
    assert any("not the root" in p for p in tree_problems(S, (0, 0)))


def test_polyomino_counts():
    assert [len(polyominoes(k)) for k in range(1, 8)] == [1, 2, 6, 19, 63, 216, 760]


def test_emd_bruteforce():
    assert emd_bruteforce([(0, 0), (3, 0)], [(1, 0), (2, 0)]) == 2
    with pytest.raises(ValueError):
        emd_bruteforce([(0, 0)], [])


def test_rhombus_order_first_layers():
    assert rhombus_order((0, 0), 5) == [(0, 0), (0, 1), (1, 0), (0, -1), (-1, 0)]


# round validator ---------------------------------------------------------------


def _world(leader=(0, 0), variant="seq"):
    return SimpleNamespace(variant=variant, config=SimpleNamespace(leader=leader))


def _rec(moves=(), events=()):
    return SimpleNamespace(round=1, moves=[{"from": list(o), "to": list(d)} for o, d in moves], events=list(events))


START = {(0, 0): ModuleState(phase=Phase.TAIL), (0, 1): ModuleState(phase=Phase.HEAD), (1, 0): ModuleState()}


def test_quiet_round_is_clean():
    assert validate_round(START, dict(START), _rec(), _world()) == []


def test_moved_tail_is_flagged():
    cur = dict(START)
    cur[(-1, 0)] = cur.pop((0, 0))
    kinds = {v.kind for v in validate_round(START, cur, _rec([((0, 0), (-1, 0))]), _world())}
    assert {"move-legality", "lemma1", "connectivity"} <= kinds


def test_two_heads_and_overfull_memory():
    cur = dict(START)
    cur[(1, 0)] = ModuleState(phase=Phase.HEAD, requests=((D.W, D.E),) * 5)
    kinds = {v.kind for v in validate_round(START, cur, _rec(), _world())}
    assert {"phase-cardinality", "memory-bound"} <= kinds


def test_tree_checked_only_for_tree_variants():
    S = {c: s.evolve(parent=D.N) for c, s in START.items()}
    assert validate_round(S, S, _rec(), _world()) == []
    assert {v.kind for v in validate_round(S, S, _rec(), _world(variant="v2"))} == {"tree-validity"}


def test_validator_accepts_a_real_run():
    from rhombform import engine

    result = engine.run(C.GeneratorSpec("rect-random", n=25, percent=50, seed=1).build(), "v1", "strict")
    assert result.terminated and result.violations == []
