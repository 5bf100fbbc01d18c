"""Acceptance gate: one check per criterion, one PASS/FAIL line each.

Run under pytest (lines appear in the terminal summary) or directly with
``python3 tests/test_acceptance.py``.  Runtime ceilings are part of each
criterion.
"""

from __future__ import annotations

import os
import random
import sys
import time

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import four_state_payoff, three_state_payoff  # noqa: E402
from selfstab.dynamics import (  # noqa: E402
    Status,
    cycle_demo,
    dijkstra_first_scheduler,
    first_legitimate_index,
    fixed,
    four_state_scheduler,
    generate_path,
    replay,
    rightmost_first_schedule,
    seeded,
    three_state_scheduler,
    tightness_bound,
    tightness_path,
    ImprovementStep,
    Path,
)
from selfstab.game import (  # noqa: E402
    build_alternative_first_game,
    build_chain_coordination_game,
    build_first_solution_game,
    build_four_state_game,
    build_three_state_game,
    payoff,
)
from selfstab.protocols import (  # noqa: E402
    correspondence_check,
    enumerate_traces,
    fire,
    first_solution_system,
    four_state_system,
    game_of_system,
    privileged_machines,
    run_system,
    three_state_system,
)
from selfstab.verify import (  # noqa: E402
    Unbounded,
    admits_closure,
    admits_fairness,
    admits_self_stabilization,
    admits_stability,
    build_improvement_graph,
    fip_check,
    no_nash_equilibria,
    scheduler_ensures_self_stabilization,
    worst_case_first_hit,
)

GRID = [(n, c) for n in (2, 3, 4, 5) for c in (2, 3, 4, 5)]
RESULTS: dict[int, tuple[bool, str]] = {}

# failing reports kept for the witness-soundness check
WITNESSES: list[tuple[object, object, str]] = []


def _timed(limit, fn):
    started = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - started
    if elapsed >= limit:
        ok = False
        detail += f"; runtime {elapsed:.2f}s exceeds {limit}s"
    else:
        detail += f" ({elapsed:.2f}s)"
    return ok, detail


def criterion_1():
    bad = [(n, c) for n, c in GRID if not no_nash_equilibria(build_first_solution_game(n, c)).holds]
    return not bad, f"{len(GRID)} instances, Nash equilibria found in {bad or 'none'}"


def criterion_2():
    bad = [(n, c) for n, c in GRID if not admits_stability(build_first_solution_game(n, c)).holds]
    return not bad, f"stability fails on {bad or 'none'}"


def criterion_3():
    rows = []
    ok = True
    for n in range(2, 7):
        game = build_chain_coordination_game(n, n)
        report = fip_check(game)
        run = generate_path(game, tuple(range(n)), policy=fixed(rightmost_first_schedule(n)))
        want = n * (n - 1) // 2
        good = (
            report.holds
            and report.steps == want
            and run.status is Status.REACHED_NASH
            and len(run.steps) == want
        )
        ok &= good
        rows.append(f"n={n}:{report.steps}/{len(run.steps)}")
    return ok, "longest/rightmost-first " + " ".join(rows)


def criterion_4():
    bad = [(n, c) for n, c in GRID if not admits_fairness(build_first_solution_game(n, c)).holds]
    return not bad, f"fairness fails on {bad or 'none'}"


def criterion_5():
    problems = []
    for c in (2, 3, 4, 5):
        r = admits_self_stabilization(build_first_solution_game(2, c))
        if not (r.holds and r.steps == 0):
            problems.append(f"n=2,C={c}: {r.summary()}")
    for c in (2, 3):
        r = admits_self_stabilization(build_first_solution_game(3, c), k_bound=2)
        if not r.holds:
            problems.append(f"n=3,C={c}: {r.summary()}")
    for n in (4, 5):
        for c in (2, 3, 4, 5):
            game = build_first_solution_game(n, c)
            r = admits_self_stabilization(game)
            lasso = r.witness is not None and r.witness.status is Status.CYCLE_DETECTED
            if r.holds or not lasso:
                problems.append(f"n={n},C={c}: {r.summary()}")
            WITNESSES.append((game, r.witness, f"5:n={n},C={c}"))
    return not problems, "; ".join(problems) or "n=2 holds in 0, n=3 within 2, n=4,5 fail with lasso"


def criterion_6():
    rows, ok = [], True
    for n in (3, 4, 5):
        bound = tightness_bound(n)
        for c in (n - 1, n):
            game = build_first_solution_game(n, c)
            graph = build_improvement_graph(game, dijkstra_first_scheduler(c))
            hit = worst_case_first_hit(graph)
            path = tightness_path(n, c)
            replay(game, path)
            first = first_legitimate_index(game, path)
            good = hit == bound and first == bound and len(path.steps) == bound
            ok &= good
            shown = "unbounded" if isinstance(hit, Unbounded) else hit
            rows.append(f"n={n},C={c}: worst={shown} tight={first} formula={bound}{'' if good else ' MISMATCH'}")
    return ok, "; ".join(rows)


def criterion_7():
    rows, ok = [], True
    for n in (4, 5):
        game = build_first_solution_game(n, n - 2)
        graph = build_improvement_graph(game, dijkstra_first_scheduler(n - 2))
        hit = worst_case_first_hit(graph)
        good = isinstance(hit, Unbounded) and hit.witness.status is Status.CYCLE_DETECTED
        if good:
            states = replay(game, hit.witness)
            good = not any(graph.is_legitimate(graph.index(s)) for s in states)
            WITNESSES.append((game, hit.witness, f"7:n={n}"))
        ok &= good
        rows.append(f"n={n}: {'unbounded lasso' if good else hit}")
    return ok, "; ".join(rows)


def criterion_8():
    game = build_alternative_first_game(3, 3)
    displayed = ["200", "220", "120", "122", "112", "012", "011", "001", "201", "200"]
    states = [tuple(int(ch) for ch in text) for text in displayed]
    steps = []
    for s, t in zip(states, states[1:]):
        (k,) = [j for j in range(3) if s[j] != t[j]]
        steps.append(ImprovementStep(k + 1, s[k], t[k]))
    cycle = Path(states[0], tuple(steps), Status.CYCLE_DETECTED, cycle_start=0)
    replay(game, cycle)
    generated = generate_path(game, states[0], policy=cycle_demo(3))
    closure = admits_closure(game)
    WITNESSES.append((game, closure.witness, "8:closure"))
    ok = generated.states() == states and not closure.holds
    return ok, f"displayed cycle replays; cycle-demo reproduces it; closure {closure.verdict}"


def criterion_9():
    rows, ok = [], True
    for build, f, sizes in (
        (build_three_state_game, three_state_scheduler(), (27, 81, 243)),
        (build_four_state_game, four_state_scheduler(), (16, 64, 256)),
    ):
        for n, size in zip((3, 4, 5), sizes):
            game = build(n)
            r = scheduler_ensures_self_stabilization(game, f)
            good = r.holds and game.state_space_size() == size == r.statistics["nodes"]
            ok &= good
            rows.append(f"{game.description['game']} n={n}: {r.summary()}")
    return ok, "; ".join(rows)


def _oracle_gain(system, before, after, i):
    pay = three_state_payoff if system.kind == "three-state" else four_state_payoff
    return pay(after, i) - pay(before, i)


def _double_moves(system, trace):
    """Independent count of +2 same-machine pairs, greedy left to right."""
    if system.kind == "first":
        return 0
    states = trace.states()
    j = count = 0
    while j + 1 < len(trace.moves):
        i = trace.moves[j].machine
        if (
            trace.moves[j + 1].machine == i
            and trace.cycle_start != j + 1
            and _oracle_gain(system, states[j], states[j + 2], i) == 2
        ):
            count += 1
            j += 2
        else:
            j += 1
    return count


def _check_trace(system, trace):
    game, _ = game_of_system(system)
    path = correspondence_check(system, trace)
    replay(game, path)
    if len(trace.moves) - len(path.steps) != _double_moves(system, trace):
        raise AssertionError(f"compression mismatch on {trace}")
    return len(trace.moves) - len(path.steps)


def criterion_10():
    counts = {}
    exhaustive = [first_solution_system(3, 3), first_solution_system(3, 4), three_state_system(3), four_state_system(3)]
    for system in exhaustive:
        depth = sum(1 for _ in system.states())
        traces = compressed = 0
        for trace in enumerate_traces(system, depth):
            compressed += _check_trace(system, trace)
            traces += 1
        counts[f"{system.kind}(3,{system.modulus})"] = (traces, compressed)
    rng = random.Random(2024)
    for make in (lambda n: first_solution_system(n, n), three_state_system, four_state_system):
        for n in (4, 5):
            system = make(n)
            compressed = 0
            for seed in range(1000):
                start = tuple(rng.choice(r) for r in system.value_ranges)
                trace = run_system(system, start, seeded(seed), step_budget=80)
                compressed += _check_trace(system, trace)
            counts[f"{system.kind}({n},{system.modulus})"] = (1000, compressed)
    first_ok = all(v[1] == 0 for k, v in counts.items() if k.startswith("first"))
    other_ok = all(v[1] > 0 for k, v in counts.items() if not k.startswith("first"))
    detail = " ".join(f"{k}:{t}tr/{c}x2" for k, (t, c) in counts.items())
    return first_ok and other_ok, detail


def criterion_11():
    system = three_state_system(3)
    game, _ = game_of_system(system)
    start = (2, 1, 0)
    ok = 2 in privileged_machines(system, start)
    mid = fire(system, start, 2)
    ok &= mid == (2, 2, 0) and 2 in privileged_machines(system, mid)
    end = fire(system, mid, 2)
    gain = payoff(game, end, 2) - payoff(game, start, 2)
    return ok and gain == 2, f"(2,1,0) -> {mid} -> {end}, p_2 gain {gain}"


def criterion_12():
    if not WITNESSES:
        for fn in (criterion_5, criterion_7, criterion_8):
            fn()
    bad = []
    for game, witness, label in WITNESSES:
        try:
            replay(game, witness)
        except Exception as exc:  # noqa: BLE001
            bad.append(f"{label}: {exc}")
    return not bad, f"{len(WITNESSES)} witnesses replayed; failures: {bad or 'none'}"


CRITERIA = {
    1: (criterion_1, 1.0),
    2: (criterion_2, 1.0),
    3: (criterion_3, 5.0),
    4: (criterion_4, 2.0),
    5: (criterion_5, 2.0),
    6: (criterion_6, 10.0),
    7: (criterion_7, 5.0),
    8: (criterion_8, 1.0),
    9: (criterion_9, 5.0),
    10: (criterion_10, 30.0),
    11: (criterion_11, 1.0),
    12: (criterion_12, 1.0),
}


def _line(k, ok, detail):
    return f"CRITERION {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}"


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k):
    fn, limit = CRITERIA[k]
    ok, detail = _timed(limit, fn)
    RESULTS[k] = (ok, detail)
    print(_line(k, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for k in sorted(CRITERIA):
        fn, limit = CRITERIA[k]
        ok, detail = _timed(limit, fn)
        failed += not ok
        print(_line(k, ok, detail))
    sys.exit(1 if failed else 0)
