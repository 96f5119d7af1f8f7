import io
import json

import pytest

from rhombform import configuration as C, engine
from rhombform import protocol_core as P
from rhombform.configuration import Kind, Message, ModuleState, Phase
from rhombform.grid import OFFSETS, Direction as D, rhombus_cells


def flags_of(occupied, m=(0, 0)):
    return [(m[0] + dx, m[1] + dy) in occupied for dx, dy in OFFSETS]


def trace_of(config, variant="seq"):
    buf = io.StringIO()
    result = engine.run(config, variant, "strict", trace=buf)
    return result, [json.loads(line) for line in buf.getvalue().splitlines()]


# local predicates ------------------------------------------------------------


def test_simply_removable_examples():
    assert P.simply_removable(flags_of({(1, 0), (0, 1), (1, 1)}))
    assert not P.simply_removable(flags_of({(-1, 0), (1, 0)}))
    assert P.simply_removable(flags_of({(1, 0)}))


def test_conditionally_removable_examples():
    occ = {(-1, 0), (1, 0), (0, -1), (1, -1)}
    assert P.conditionally_removable(flags_of(occ), D.W, D.E)
    assert not P.conditionally_removable(flags_of(occ - {(1, -1)}), D.W, D.E)
    # two side neighbours, both on the cycle, separated by an empty corner
    assert P.conditionally_removable(flags_of({(0, 1), (1, 0)}), D.N, D.E)


def test_ring_runs_labels_each_run():
    flags = flags_of({(0, 1), (-1, 1), (0, -1)})
    runs = P.ring_runs(flags)
    assert runs[D.N] == runs[D.NW] != runs[D.S]
    assert runs[D.E] == -1
    assert P.ring_runs([True] * 8) == [0] * 8


def test_scan_next_and_hole_contact():
    flags = flags_of({(-1, 0), (1, 0)})
    assert P.scan_next(flags, D.W) == D.E
    assert P.touches_hole(flags, D.W, D.E)  # S is empty between them
    assert P.scan_next(flags_of({(-1, 0)}), D.W) == D.W


def test_head_target_from_tail_pattern():
    S = {(0, 0): ModuleState(phase=Phase.HEAD)}
    assert P.head_target(S, (0, 0)) == D.N
    S = {(0, 0): ModuleState(phase=Phase.HEAD), (0, 1): ModuleState(phase=Phase.TAIL),
         (1, 0): ModuleState(phase=Phase.TAIL)}
    assert P.head_target(S, (0, 0)) == D.NW
    # temporary Tails do not count: only the east Tail is left, the west-tip pattern
    S[(0, 1)] = ModuleState(phase=Phase.TAIL, temporary=True)
    assert P.head_target(S, (0, 0)) == D.N


def test_head_target_unknown_pattern_faults():
    S = {(0, 0): ModuleState(phase=Phase.HEAD)}
    for d in (0, 2, 4, 6):
        S[(OFFSETS[d])] = ModuleState(phase=Phase.TAIL)
    fx = P.Effects()
    P.step_module(S, (0, 0), fx, P.Rules())
    assert fx.faults and "does not match" in fx.faults[0]


# message handlers ----------------------------------------------------------------


def test_cleanup_chain_pops_one_per_round():
    # three modules in a row, each holding the request it got from its west neighbour
    S = {(x, 0): ModuleState(requests=((D.W, D.E),)) for x in range(1, 4)}
    S[(0, 0)] = ModuleState(phase=Phase.HEAD, init_fwd=D.E, target=D.N)
    at, msg = (3, 0), Message(Kind.CLEANUP, D.E)
    for _ in range(3):
        fx = P.Effects()
        P.on_cleanup(at, S[at], msg, fx)
        assert fx.writes == [(at, at, "requests", ())]
        ((sender, at, msg),) = fx.messages
        S[sender] = S[sender].evolve(requests=())
    assert all(not S[(x, 0)].requests for x in range(1, 4))
    assert at == (0, 0)


def test_cleanup_stops_at_marked_module():
    st = ModuleState(requests=((D.W, D.E),), cleanup_stop=True)
    fx = P.Effects()
    P.on_cleanup((1, 0), st, Message(Kind.CLEANUP, D.E), fx)
    assert fx.messages == []
    assert fx.writes == [((1, 0), (1, 0), "cleanup_stop", False)]


@pytest.mark.parametrize("kind", [Kind.CLEANUP, Kind.ACTIVATION])
def test_message_without_stored_request_faults(kind):
    S = {(0, 0): ModuleState(phase=Phase.TAIL), (1, 0): ModuleState(pending=Message(kind, D.W))}
    fx = P.Effects()
    P.step_module(S, (1, 0), fx, P.Rules())
    assert fx.faults


def test_request_overflow_faults():
    full = tuple((D.W, D.E) for _ in range(4))
    S = {(x, 0): ModuleState() for x in range(-1, 3)}
    S[(0, 0)] = ModuleState(phase=Phase.TAIL, requests=full, pending=Message(Kind.REQUEST, D.W))
    fx = P.Effects()
    P.step_module(S, (0, 0), fx, P.Rules())
    assert any("four" in f for f in fx.faults)


def test_terminated_neighbour_spreads():
    S = {(0, 0): ModuleState(phase=Phase.TERMINATED), (1, 0): ModuleState()}
    fx = P.Effects()
    P.step_module(S, (1, 0), fx, P.Rules())
    assert ((1, 0), (1, 0), "phase", Phase.TERMINATED) in fx.writes


# whole-protocol scenarios -----------------------------------------------------------


def test_single_module_terminates_in_round_one():
    result, trace = trace_of(C.parse("leader 0 0\n"))
    assert result.terminated and result.rounds == 1
    assert trace[1]["writes"] == [[[0, 0], "phase", "HEAD", "TERMINATED"]]


def test_two_module_line():
    result, trace = trace_of(C.parse("leader 0 0\nmodule 1 0\n"))
    assert result.terminated and result.shape_ok
    assert result.config.occupied == {(0, 0), (0, 1)}
    r1 = trace[1]
    assert r1["moves"] == []
    assert r1["messages"] == [{"from": [0, 0], "to": [1, 0], "kind": "REQUEST", "src": D.W}]
    # the receiver is simply removable and touches the target hole
    assert [[1, 0], "phase", "PASSIVE", "ACTIVE"] in trace[2]["writes"]


def test_request_is_forwarded_past_a_cut_module():
    _, trace = trace_of(C.structured("line", 3))
    assert trace[2]["messages"] == [{"from": [1, 0], "to": [2, 0], "kind": "REQUEST", "src": D.W}]
    assert [[1, 0], "requests", [], [[D.W, D.E]]] in trace[2]["writes"]
    assert [[2, 0], "phase", "PASSIVE", "ACTIVE"] in trace[3]["writes"]


def test_active_reaching_target_becomes_head():
    _, trace = trace_of(C.parse("leader 0 0\nmodule 1 0\n"))
    arrive = next(k for k, r in enumerate(trace) if any(m["to"] == [0, 1] for m in r["moves"]))
    writes = trace[arrive + 1]["writes"]
    assert [[0, 1], "phase", "ACTIVE", "HEAD"] in writes
    assert [[0, 0], "phase", "HEAD", "TAIL"] in writes


@pytest.mark.parametrize("layers", [1, 2, 3, 4])
def test_full_rhombus_terminates_from_last_head(layers):
    n = 2 * layers * layers + 2 * layers + 1
    cells = rhombus_cells((0, 0), n)
    states = {c: ModuleState(phase=Phase.TAIL) for c in cells[:-1]}
    states[cells[-1]] = ModuleState(phase=Phase.HEAD)
    result, trace = trace_of(C.Configuration((0, 0), states))
    assert result.terminated and result.shape_ok
    # the Head's own request goes round the Tails and comes back
    assert {m["kind"] for r in trace for m in r["messages"]} == {"REQUEST"}
    head_done = next(r["round"] for r in trace
                     if [list(cells[-1]), "phase", "HEAD", "TERMINATED"] in r["writes"])
    # then the termination wave crosses the rhombus
    assert result.rounds - head_done <= 2 * layers


def _events(config, variant="seq"):
    result, trace = trace_of(config, variant)
    assert result.terminated and result.shape_ok and not result.violations
    return [e for r in trace for e in r["events"]]


@pytest.mark.parametrize("spec, variant, event, extra", [
    (C.GeneratorSpec("rect-random", n=20, percent=30, seed=4), "seq", "size-one", {}),
    (C.GeneratorSpec("rect-random", n=20, percent=30, seed=4), "seq", "nested-request", {}),
    (C.GeneratorSpec("rect-random", n=20, percent=30, seed=4), "seq", "target-cleanup", {}),
    (C.GeneratorSpec("rect-random", n=20, percent=70, seed=1), "seq", "critical-pair", {"rule": "off-path", "side": "b"}),
    (C.GeneratorSpec("rect-random", n=40, percent=90, seed=1), "seq", "critical-pair", {"rule": "on-path", "side": "m"}),
    (C.GeneratorSpec("rect-random", n=40, percent=50, seed=3), "seq", "critical-pair", {"rule": "initiator", "side": "m"}),
    (C.GeneratorSpec("rect-random", n=20, percent=30, seed=0), "v2", "leaf-swap", {"case": "convex-leaf-slides"}),
])
def test_protocol_paths_are_exercised(spec, variant, event, extra):
    events = _events(spec.build(), variant)
    assert any(e["event"] == event and all(e.get(k) == v for k, v in extra.items()) for e in events)


def test_activation_search_runs_backwards():
    # a request that cannot go on sends an Activation back to its predecessor
    _, trace = trace_of(C.GeneratorSpec("rect-random", n=20, percent=30, seed=4).build())
    assert any(m["kind"] == "ACTIVATION" for r in trace for m in r["messages"])


def test_sequential_moves_one_module_per_round():
    _, trace = trace_of(C.GeneratorSpec("perlin", n=30, seed=2).build())
    assert max(len(r["moves"]) for r in trace) == 1
