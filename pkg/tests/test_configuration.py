import math

import pytest
from hypothesis import given, strategies as st

from rhombform import configuration as C
from rhombform.configuration import ModuleState, Phase
from rhombform.oracles import side_connected
from rhombform.topology import critical_pairs


def degree(cells, c):
    x, y = c
    return sum((x + dx, y + dy) in cells for dx, dy in ((0, 1), (-1, 0), (0, -1), (1, 0)))


def test_line():
    c = C.structured("line", 5)
    assert c.occupied == {(x, 0) for x in range(5)}
    assert c.leader == (0, 0)


def test_initial_states():
    c = C.structured("line", 4)
    assert c.states[c.leader].phase == Phase.HEAD
    assert all(s == ModuleState() for p, s in c.states.items() if p != c.leader)


@pytest.mark.parametrize("kind", ["line", "spiral", "chain"])
@pytest.mark.parametrize("n", [1, 2, 3, 5, 9, 16, 40, 121])
def test_structured_contract(kind, n):
    c = C.structured(kind, n)
    assert len(c) == n
    assert side_connected(c.occupied)
    assert c.leader in c.occupied
    if n > 1:
        assert degree(c.occupied, c.leader) == 1
    assert C.structured(kind, n) == c


def test_spiral_nine():
    c = C.structured("spiral", 9)
    assert c.occupied == {(0, 0), (1, 0), (2, 0), (2, 1), (2, 2), (1, 2), (0, 2), (-1, 2), (-2, 2)}


def test_chain_has_cascaded_critical_pairs():
    counts = [len(critical_pairs(C.structured("chain", n).occupied)) for n in (10, 20, 40, 60)]
    assert counts == [1, 4, 9, 14]


def test_unknown_structured_kind():
    with pytest.raises(ValueError):
        C.structured("zigzag", 5)


def test_rect_random_full():
    c = C.rect_random(4, 3, 100, seed=1)
    assert c.occupied == {(x, y) for x in range(4) for y in range(3)}


@given(st.integers(0, 2**32), st.integers(1, 100))
def test_rect_random_contract(seed, percent):
    c = C.rect_random(4, 4, percent, seed)
    assert len(c) == max(1, math.ceil(percent * 16 / 100))
    assert side_connected(c.occupied)
    assert c == C.rect_random(4, 4, percent, seed)


def test_rect_random_half():
    for seed in range(5):
        c = C.rect_random(4, 4, 50, seed)
        assert len(c) == 8 and side_connected(c.occupied)


def test_rect_random_keeps_leader():
    full = C.rect_random(6, 6, 100, seed=3)
    pruned = C.rect_random(6, 6, 10, seed=3)
    assert pruned.leader == full.leader and pruned.leader in pruned.occupied


def test_rect_random_for_n():
    for pct in (10, 50, 90):
        c = C.rect_random_for_n(40, pct, seed=2)
        assert len(c) == 40 and side_connected(c.occupied)


def test_rect_random_rejects_bad_input():
    with pytest.raises(ValueError):
        C.rect_random(0, 3, 50, 0)
    with pytest.raises(ValueError):
        C.rect_random(3, 3, 0, 0)


def test_perlin_single():
    assert C.perlin(1, seed=5).occupied == {(0, 0)}


@given(st.integers(1, 80), st.integers(0, 2**32))
def test_perlin_contract(n, seed):
    c = C.perlin(n, seed)
    assert len(c) == n and c.leader == (0, 0)
    assert side_connected(c.occupied)
    assert c == C.perlin(n, seed)


def test_perlin_seeds_differ():
    assert C.perlin(50, 1).occupied != C.perlin(50, 2).occupied


def test_gradient_noise_is_smooth_and_zero_on_lattice():
    noise = C.GradientNoise(7)
    assert noise(0, 0) == 0 and noise(8, 16) == 0
    assert abs(noise(3.5, 3.5) - noise(3.6, 3.5)) < 0.1


@pytest.mark.parametrize("spec", [
    C.GeneratorSpec("line", n=7),
    C.GeneratorSpec("rect-random", width=5, height=5, percent=60, seed=4),
    C.GeneratorSpec("rect-random", n=30, percent=50, seed=4),
    C.GeneratorSpec("perlin", n=30, seed=9),
])
def test_generator_spec_builds(spec):
    c = spec.build()
    assert side_connected(c.occupied)
    assert spec.build() == c


@pytest.mark.parametrize("spec", [
    C.GeneratorSpec("line"),
    C.GeneratorSpec("rect-random", width=5, height=5),
    C.GeneratorSpec("rect-random", percent=5),
    C.GeneratorSpec("perlin"),
    C.GeneratorSpec("blob", n=3),
    C.GeneratorSpec("line", n=0),
])
def test_generator_spec_errors(spec):
    with pytest.raises(ValueError):
        spec.build()


def test_parse_two_modules():
    c = C.parse("leader 0 0\nmodule 1 0\n")
    assert c.occupied == {(0, 0), (1, 0)} and c.leader == (0, 0)


def test_parse_ignores_comments_and_blank_lines():
    c = C.parse("# a comment\n\nleader 2 -3\n  module 2 -2\n")
    assert c.occupied == {(2, -3), (2, -2)}


@pytest.mark.parametrize("text, error, line", [
    ("leader 0 0\nmodule 1 0\nmodule 1 0\n", C.DuplicateCellError, 3),
    ("module 0 0\nmodule 1 0\n", C.MissingLeaderError, None),
    ("leader 0 0\nmodule 1 x\n", C.BadCoordinateError, 2),
    ("leader 0 0\nmodule 2 0\n", C.DisconnectedError, None),
    ("leader 0 0\nrobot 1 0\n", C.ConfigFormatError, 2),
    ("leader 0 0\nleader 1 0\n", C.ConfigFormatError, 2),
])
def test_parse_errors(text, error, line):
    with pytest.raises(error) as info:
        C.parse(text)
    assert info.value.line == line


def test_round_trip_line():
    c = C.structured("line", 5)
    assert C.parse(C.serialize(c)) == c


@given(st.integers(1, 60), st.integers(0, 1000))
def test_round_trip_perlin(n, seed):
    c = C.perlin(n, seed)
    text = C.serialize(c)
    assert C.parse(text) == c
    assert C.serialize(C.parse(text)) == text


def test_configuration_initial_rejects_missing_leader():
    with pytest.raises(ValueError):
        C.Configuration.initial([(0, 0)], (1, 1))


def test_state_json_omits_defaults():
    assert ModuleState().to_json() == {"phase": "PASSIVE"}
    st_ = ModuleState(phase=Phase.HEAD, requests=((2, 6),), target=0)
    assert st_.to_json() == {"phase": "HEAD", "requests": [[2, 6]], "target": 0}
    assert st_.on_path and not ModuleState().on_path
