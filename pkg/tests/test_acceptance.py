"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line through ``acceptance_report`` before it
asserts; the lines are repeated in the terminal summary.
"""
import io
import random
import statistics
import time
from collections import Counter, deque

import numpy as np
import pytest

from rhombform import configuration as C, engine, metrics
from rhombform import protocol_core as P
from rhombform.grid import OFFSETS, SIDES, rhombus_cells
from rhombform.oracles import emd_bruteforce, polyominoes, removable_bruteforce

from conftest import grow

SIZES = (5, 10, 20, 40, 60)
PERCENTS = (10, 30, 50, 70, 90)
SEEDS = range(10)


def grid_specs():
    for kind in ("line", "spiral", "chain"):
        for n in SIZES:
            yield C.GeneratorSpec(kind, n=n)
    for n in SIZES:
        for seed in SEEDS:
            for pct in PERCENTS:
                yield C.GeneratorSpec("rect-random", n=n, percent=pct, seed=seed)
            yield C.GeneratorSpec("perlin", n=n, seed=seed)


def slope(xs, ys):
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def rounds(kind, n, variant):
    return engine.run(C.structured(kind, n), variant).rounds


# 1-3: shape, connectivity, invariants ---------------------------------------------


@pytest.mark.slow
def test_criterion_1_shape(acceptance_report):
    start = time.perf_counter()
    runs, wrong = 0, []
    for spec in grid_specs():
        config = spec.build()
        for variant in engine.VARIANTS:
            result = engine.run(config, variant)
            runs += 1
            if not (result.terminated and result.config.occupied == frozenset(rhombus_cells(config.leader, len(config)))):
                wrong.append((spec, variant, result.fault))
    elapsed = time.perf_counter() - start
    ok = not wrong and elapsed < 300
    acceptance_report(1, ok, f"{runs} runs, {len(wrong)} wrong final shapes, {elapsed:.0f} s")
    assert not wrong, wrong[:5]
    assert elapsed < 300


@pytest.fixture(scope="module")
def strict_sweep():
    """Violation counts by kind over the full grid in strict mode, plus runs that stopped for other reasons."""
    kinds, other, runs = Counter(), [], 0
    for spec in grid_specs():
        config = spec.build()
        for variant in engine.VARIANTS:
            result = engine.run(config, variant, "strict")
            runs += 1
            for v in result.violations:
                kinds[(variant, v.kind)] += 1
            if not result.violations and not (result.terminated and result.shape_ok):
                other.append((spec, variant, result.fault))
    return runs, kinds, other


@pytest.mark.slow
def test_criterion_2_connectivity(strict_sweep, acceptance_report):
    runs, kinds, _ = strict_sweep
    bad = sum(k for (_, kind), k in kinds.items() if kind == "connectivity")
    acceptance_report(2, bad == 0, f"{runs} strict runs, {bad} connectivity violations")
    assert bad == 0


@pytest.mark.slow
def test_criterion_3_invariants(strict_sweep, acceptance_report):
    runs, kinds, other = strict_sweep
    bad = {key: k for key, k in kinds.items() if key[1] != "connectivity"}
    ok = not bad and not other
    acceptance_report(3, ok, f"{runs} strict runs, violations {dict(bad) or 'none'}, {len(other)} other faults")
    assert not bad
    assert not other, other[:5]


# 4-5: oracle equivalence ----------------------------------------------------------


def _connected_avoiding(cells, a, b, avoid):
    seen, todo = {a}, deque([a])
    while todo:
        x, y = todo.popleft()
        if (x, y) == b:
            return True
        for d in SIDES:
            dx, dy = OFFSETS[d]
            q = (x + dx, y + dy)
            if q in cells and q != avoid and q not in seen:
                seen.add(q)
                todo.append(q)
    return False


def test_criterion_4_local_removability(acceptance_report):
    start = time.perf_counter()
    checked = simple = conditional = 0
    unsound = []
    # a lone module cannot be removed at all, so sizes start at two
    for k in range(2, 8):
        for poly in polyominoes(k):
            for m in poly:
                flags = [(m[0] + dx, m[1] + dy) in poly for dx, dy in OFFSETS]
                checked += 1
                truth = removable_bruteforce(poly, m)
                if P.simply_removable(flags):
                    simple += 1
                    if not truth:
                        unsound.append(("simple", sorted(poly), m))
                nbrs = [d for d in SIDES if flags[d]]
                for i, pred in enumerate(nbrs):
                    for succ in nbrs[i + 1:]:
                        a = (m[0] + OFFSETS[pred][0], m[1] + OFFSETS[pred][1])
                        b = (m[0] + OFFSETS[succ][0], m[1] + OFFSETS[succ][1])
                        # a path from pred to succ avoiding m closes a simple cycle through m
                        if not _connected_avoiding(poly, a, b, m):
                            continue
                        if P.conditionally_removable(flags, pred, succ):
                            conditional += 1
                            if not truth:
                                unsound.append(("conditional", sorted(poly), m, pred, succ))
    elapsed = time.perf_counter() - start
    ok = not unsound and elapsed < 120
    acceptance_report(4, ok, f"{checked} (polyomino, module) pairs, {simple} simple and {conditional} "
                             f"conditional claims, {len(unsound)} unsound, {elapsed:.0f} s")
    assert not unsound, unsound[:5]
    assert elapsed < 120


def test_criterion_5_emd(acceptance_report):
    rng = random.Random(2024)
    mismatches = []
    for _ in range(200):
        n = rng.randint(1, 8)
        cells = grow([(rng.randrange(10_000), rng.randrange(4)) for _ in range(4 * n)])[:n]
        config = C.Configuration.initial(cells, rng.choice(cells))
        fast = metrics.emd_to_rhombus(config)
        slow = emd_bruteforce(config.occupied, rhombus_cells(config.leader, len(config)))
        if fast != slow:
            mismatches.append((sorted(cells), config.leader, fast, slow))
    acceptance_report(5, not mismatches, f"200 instances with n <= 8, {len(mismatches)} mismatches")
    assert not mismatches, mismatches[:3]


# 6-9: round-count trends ------------------------------------------------------------


def test_criterion_6_sequential_line_slope(acceptance_report):
    ns = [20, 40, 60, 80, 100, 120]
    rs = [rounds("line", n, "seq") for n in ns]
    s = slope(ns, rs)
    ok = 1.7 <= s <= 2.3
    acceptance_report(6, ok, f"seq line slope {s:.3f}, rounds {rs}")
    assert ok


def test_criterion_7_v1_equals_v2_on_lines_and_spirals(acceptance_report):
    diffs = []
    for kind in ("line", "spiral"):
        for n in range(10, 61, 10):
            a, b = rounds(kind, n, "v1"), rounds(kind, n, "v2")
            if a != b:
                diffs.append(f"{kind}{n}: v1 {a} v2 {b}")
    acceptance_report(7, not diffs, "identical" if not diffs else "; ".join(diffs))
    assert not diffs


def test_criterion_8_v2_on_chains(acceptance_report):
    ns = list(range(20, 121, 20))
    v1 = [rounds("chain", n, "v1") for n in ns]
    v2 = [rounds("chain", n, "v2") for n in ns]
    s = slope(ns, v2)
    faster = all(b < a for n, a, b in zip(ns, v1, v2) if n >= 40)
    ok = 0.8 <= s <= 1.3 and faster
    acceptance_report(8, ok, f"v2 chain slope {s:.3f}, v1 {v1}, v2 {v2}")
    assert 0.8 <= s <= 1.3
    assert faster


@pytest.mark.slow
def test_criterion_9_v2_beats_emd(acceptance_report):
    v2, emd = [], []
    for pct in (30, 50, 70):
        for seed in range(20):
            config = C.rect_random_for_n(200, pct, seed)
            v2.append(engine.run(config, "v2").rounds)
            emd.append(metrics.emd_to_rhombus(config))
    mv, me = statistics.median(v2), statistics.median(emd)
    acceptance_report(9, mv < me, f"median v2 rounds {mv} vs median EMD {me} over {len(v2)} configurations")
    assert mv < me


# 10: determinism ---------------------------------------------------------------------


def test_criterion_10_determinism(acceptance_report):
    specs = [C.GeneratorSpec("chain", n=30), C.GeneratorSpec("rect-random", n=30, percent=50, seed=5),
             C.GeneratorSpec("perlin", n=30, seed=7)]
    differing = []
    for spec in specs:
        for variant in engine.VARIANTS:
            outputs = []
            for _ in range(2):
                config = spec.build()
                buf = io.StringIO()
                result = engine.run(config, variant, trace=buf)
                row = metrics.csv_row(spec.kind, spec.seed, variant, result.rounds, result.terminated,
                                      metrics.summarize(config))
                outputs.append((buf.getvalue().encode(), repr(row).encode()))
            if outputs[0] != outputs[1]:
                differing.append((spec, variant))
    acceptance_report(10, not differing, f"{3 * len(specs)} runs repeated, {len(differing)} differ")
    assert not differing
