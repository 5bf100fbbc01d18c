"""Improvement steps, schedulers, selection policies and path generation."""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass, field
from typing import Callable, Hashable, Optional, Sequence

from selfstab.errors import ContractViolation, DomainError
from selfstab.game import Game, JointStrategy, format_state


class Status(str, enum.Enum):
    REACHED_NASH = "reached_nash"
    CYCLE_DETECTED = "cycle_detected"
    TRUNCATED = "truncated"
    DEADLOCK = "deadlock"  # machine traces only: no privileged machine


@dataclass(frozen=True)
class ImprovementStep:
    mover: int
    from_colour: int
    to_colour: int

    def apply(self, s: JointStrategy) -> JointStrategy:
        k = self.mover - 1
        if s[k] != self.from_colour:
            raise ContractViolation(
                f"step expects player {self.mover} at colour {self.from_colour}, state is {s}"
            )
        return s[:k] + (self.to_colour,) + s[k + 1 :]


@dataclass(frozen=True)
class Path:
    """A finite prefix of an improvement path plus how it ended.

    With ``CYCLE_DETECTED`` the steps from ``cycle_start`` onwards return to
    ``states()[cycle_start]``: the infinite path is the stem followed by that
    cycle repeated forever.  ``TRUNCATED`` carries ``reason``: "budget",
    "schedule" (a fixed schedule ran out), "legitimate" (stopped at the first
    legitimate state) or "witness" (a finite certificate, not a run).
    """

    start: JointStrategy
    steps: tuple[ImprovementStep, ...]
    status: Status
    cycle_start: Optional[int] = None
    reason: Optional[str] = None

    def states(self) -> list[JointStrategy]:
        out = [self.start]
        for step in self.steps:
            out.append(step.apply(out[-1]))
        return out

    @property
    def stem(self) -> tuple[ImprovementStep, ...]:
        return self.steps if self.cycle_start is None else self.steps[: self.cycle_start]

    @property
    def cycle(self) -> tuple[ImprovementStep, ...]:
        return () if self.cycle_start is None else self.steps[self.cycle_start :]

    def __str__(self) -> str:
        text = " -> ".join(format_state(s) for s in self.states())
        return f"{text} [{self.status.value}]"


def is_improvement_step(game: Game, s: JointStrategy, step: ImprovementStep) -> bool:
    k = step.mover - 1
    if not 0 <= k < game.n or s[k] != step.from_colour:
        return False
    if step.to_colour not in game.strategy_sets[k]:
        return False
    return game._payoff_as(s, k, step.to_colour) > game._payoff_as(s, k, s[k])


def improvement_edges(game: Game, s: Sequence[int]) -> frozenset[ImprovementStep]:
    """Every improvement step available at ``s``; empty iff ``s`` is a Nash equilibrium."""
    s = game.check_strategy(s)
    return frozenset(
        ImprovementStep(k + 1, s[k], c) for k in range(game.n) for c in game._better(s, k)
    )


def replay(game: Game, path: Path) -> list[JointStrategy]:
    """Re-validate every step of ``path`` and its terminal claim; return the states."""
    s = game.check_strategy(path.start)
    states = [s]
    for index, step in enumerate(path.steps):
        if not is_improvement_step(game, s, step):
            raise ContractViolation(f"step {index} ({step}) is not an improvement step at {s}")
        s = step.apply(s)
        states.append(s)
    if path.status is Status.REACHED_NASH and game._deviators(s):
        raise ContractViolation(f"path claims a Nash equilibrium but ends at {s}")
    if path.status is Status.CYCLE_DETECTED:
        if path.cycle_start is None or not 0 <= path.cycle_start < len(path.steps):
            raise ContractViolation("cycle status without a non-empty cycle")
        if states[path.cycle_start] != s:
            raise ContractViolation(
                f"cycle does not close: {states[path.cycle_start]} vs {s}"
            )
    return states


# --- colours and schedulers ---------------------------------------------------


def cyclic_successor(c: int, colour_count: int) -> int:
    if not 0 <= c < colour_count:
        raise DomainError(f"colour {c} outside 0..{colour_count - 1}")
    return (c + 1) % colour_count


@dataclass(frozen=True)
class Scheduler:
    """State-based scheduler: picks the new colour of a non-best-responding player.

    ``rule(s, i)`` sees the joint strategy and a 1-indexed player.  Calling
    the scheduler checks the contract on every use.
    """

    name: str
    rule: Callable[[JointStrategy, int], int] = field(repr=False)

    def __call__(self, game: Game, s: JointStrategy, i: int) -> int:
        k = i - 1
        if not game._better(s, k):
            raise ContractViolation(f"scheduler {self.name} asked to move best-responding player {i} at {s}")
        c = self.rule(s, i)
        if c not in game.strategy_sets[k] or game._payoff_as(s, k, c) <= game._payoff_as(s, k, s[k]):
            raise ContractViolation(
                f"scheduler {self.name} chose {c} for player {i} at {s}, not a better response"
            )
        return c


def dijkstra_first_scheduler(colour_count: int) -> Scheduler:
    """Player 1 moves to the cyclic successor; others copy their predecessor."""
    if colour_count < 2:
        raise DomainError("need at least 2 colours")

    def rule(s: JointStrategy, i: int) -> int:
        if i == 1:
            return cyclic_successor(s[0], colour_count)
        return s[i - 2]

    return Scheduler("dijkstra", rule)


def three_state_scheduler() -> Scheduler:
    def rule(s: JointStrategy, i: int) -> int:
        if i == 1:
            return (s[0] + 2) % 3
        if i == len(s):
            return (s[0] + 1) % 3
        return (s[i - 1] + 1) % 3

    return Scheduler("three-state", rule)


def four_state_scheduler() -> Scheduler:
    def rule(s: JointStrategy, i: int) -> int:
        if i == 1 or i == len(s):
            return (s[i - 1] + 2) % 4
        return (s[i - 1] + 1) % 4

    return Scheduler("four-state", rule)


def scheduler_for(game: Game) -> Scheduler:
    """The scheduler under which a built-in game self-stabilizes."""
    kind = game.description.get("game")
    if kind == "first":
        return dijkstra_first_scheduler(game.colour_count)
    if kind == "three-state":
        return three_state_scheduler()
    if kind == "four-state":
        return four_state_scheduler()
    raise DomainError(f"no built-in scheduler for game {kind!r}")


# --- selection policies ------------------------------------------------------


class Selector:
    """Per-run mover selection with its own memory.

    ``memory()`` is part of the recurrence key used for cycle detection;
    ``None`` from ``pick`` means the policy has nothing left to schedule.
    """

    def pick(self, s: JointStrategy, eligible: Sequence[int]) -> Optional[int]:
        raise NotImplementedError

    def colour(self, choices: Sequence[int]) -> int:
        return choices[0]

    def memory(self) -> Hashable:
        return None


@dataclass(frozen=True)
class SelectionPolicy:
    """Factory for selectors; ``name`` round-trips through the CLI and traces."""

    name: str
    make: Callable[[], Selector] = field(repr=False, compare=False)

    def selector(self) -> Selector:
        return self.make()


class _Lowest(Selector):
    def pick(self, s, eligible):
        return min(eligible)


class _Rotating(Selector):
    def __init__(self, n: int, direction: int):
        self.n = n
        self.direction = direction
        # Clockwise starts at player 1, counterclockwise at player n.
        self.last = n if direction > 0 else 1

    def pick(self, s, eligible):
        allowed = set(eligible)
        i = self.last
        for _ in range(self.n):
            i = (i - 1 + self.direction) % self.n + 1
            if i in allowed:
                self.last = i
                return i
        raise ContractViolation(f"no eligible player among {sorted(allowed)}")

    def memory(self):
        return self.last


class _Fixed(Selector):
    def __init__(self, sequence: Sequence[int]):
        self.sequence = tuple(sequence)
        self.position = 0

    def pick(self, s, eligible):
        if self.position >= len(self.sequence):
            return None
        i = self.sequence[self.position]
        if i not in eligible:
            raise ContractViolation(
                f"fixed schedule entry {self.position} selects player {i}, "
                f"who is not eligible at {s} (eligible: {sorted(eligible)})"
            )
        self.position += 1
        return i

    def memory(self):
        return self.position


class _Periodic(_Fixed):
    def pick(self, s, eligible):
        i = self.sequence[self.position % len(self.sequence)]
        if i not in eligible:
            raise ContractViolation(f"periodic schedule selects player {i}, not eligible at {s}")
        self.position += 1
        return i

    def memory(self):
        return self.position % len(self.sequence)


class _Seeded(Selector):
    def __init__(self, seed: int):
        self.rng = random.Random(seed)

    def pick(self, s, eligible):
        return self.rng.choice(sorted(eligible))

    def colour(self, choices):
        return self.rng.choice(list(choices))


def adversarial() -> SelectionPolicy:
    """Deterministic enumeration order: lowest player, then lowest colour."""
    return SelectionPolicy("adversarial", _Lowest)


def round_robin(n: int) -> SelectionPolicy:
    return SelectionPolicy("round-robin", lambda: _Rotating(n, +1))


def counterclockwise(n: int) -> SelectionPolicy:
    """Visit players n, n-1, ..., 1, n, ... skipping those with nothing to do."""
    return SelectionPolicy("counterclockwise", lambda: _Rotating(n, -1))


def fixed(sequence: Sequence[int]) -> SelectionPolicy:
    sequence = tuple(int(i) for i in sequence)
    return SelectionPolicy("fixed:" + ",".join(map(str, sequence)), lambda: _Fixed(sequence))


def periodic(sequence: Sequence[int]) -> SelectionPolicy:
    """Repeat ``sequence`` forever; every entry must be eligible when reached."""
    sequence = tuple(int(i) for i in sequence)
    if not sequence:
        raise DomainError("periodic schedule needs at least one player")
    return SelectionPolicy("periodic:" + ",".join(map(str, sequence)), lambda: _Periodic(sequence))


def cycle_demo(n: int) -> SelectionPolicy:
    """Movers 2, 1, n, n-1, ..., 3 repeated: the mod-k counterexample's order."""
    return periodic((2, 1) + tuple(range(n, 2, -1)))


def seeded(seed: int) -> SelectionPolicy:
    return SelectionPolicy(f"seeded:{seed}", lambda: _Seeded(seed))


# --- path generation -----------------------------------------------------------


def default_budget(game: Game) -> int:
    return 4 * game.state_space_size()


def generate_path(
    game: Game,
    start: Sequence[int],
    scheduler: Optional[Scheduler] = None,
    policy: Optional[SelectionPolicy] = None,
    step_budget: Optional[int] = None,
) -> Path:
    """Follow improvement steps from ``start`` until Nash, recurrence or budget.

    Recurrence is keyed on (state, selector memory).  For seeded policies the
    random generator is not part of the key, so a reported cycle is a cycle
    the run closed in the improvement graph, not a prediction of the run.
    """
    s = game.check_strategy(start)
    policy = policy or adversarial()
    budget = default_budget(game) if step_budget is None else step_budget
    if budget < 0:
        raise DomainError("step budget must be non-negative")
    selector = policy.selector()
    seen = {(s, selector.memory()): 0}
    steps: list[ImprovementStep] = []
    while True:
        eligible = [k + 1 for k in game._deviators(s)]
        if not eligible:
            return Path(game.check_strategy(start), tuple(steps), Status.REACHED_NASH)
        if len(steps) >= budget:
            return Path(tuple(start), tuple(steps), Status.TRUNCATED, reason="budget")
        i = selector.pick(s, eligible)
        if i is None:
            return Path(tuple(start), tuple(steps), Status.TRUNCATED, reason="schedule")
        if scheduler is not None:
            c = scheduler(game, s, i)
        else:
            c = selector.colour(game._better(s, i - 1))
        step = ImprovementStep(i, s[i - 1], c)
        s = step.apply(s)
        steps.append(step)
        key = (s, selector.memory())
        if key in seen:
            return Path(tuple(start), tuple(steps), Status.CYCLE_DETECTED, cycle_start=seen[key])
        seen[key] = len(steps)


def first_legitimate_index(game: Game, path: Path) -> Optional[int]:
    """Number of steps before the first legitimate state of ``path``, if any."""
    for index, s in enumerate(path.states()):
        if len(game._deviators(s)) == 1:
            return index
    return None


def rightmost_first_schedule(n: int) -> tuple[int, ...]:
    """Chain order n; n-1, n; n-2, n-1, n; ...; 2, ..., n.

    From a start with all colours distinct every entry is a forced copy of
    the left neighbour, n(n-1)/2 moves in total.
    """
    if n < 2:
        raise DomainError(f"need n >= 2 players, got {n}")
    moves: list[int] = []
    for first in range(n, 1, -1):
        moves.extend(range(first, n + 1))
    return tuple(moves)


# --- the lower-bound construction -------------------------------------------------


def tightness_bound(n: int) -> int:
    """(3n + 1)(n - 2) / 2, always an integer."""
    return (3 * n + 1) * (n - 2) // 2


def tightness_schedule(n: int) -> tuple[int, ...]:
    """Mover sequence of the worst-case run of the first-solution game.

    Phase j (j = 1..n-2): player 1 advances, then players n, n-1, ..., 2 each
    copy their predecessor, shifting the whole ring by one.  Final phase: one
    more advance of player 1, then the rightmost-first chain order delayed so
    the last two players reach a legitimate state as late as possible.
    """
    if n < 3:
        raise DomainError(f"tightness construction needs n >= 3, got {n}")
    moves: list[int] = []
    for _ in range(n - 2):
        moves.append(1)
        moves.extend(range(n, 1, -1))
    moves.append(1)
    # (n), (n-1, n), ..., (4, ..., n), (3, ..., n-1), (2, ..., n-2, n, n-1, n)
    for first in range(n, 3, -1):
        moves.extend(range(first, n + 1))
    moves.extend(range(3, n))
    moves.extend(list(range(2, n - 1)) + [n, n - 1, n])
    return tuple(moves)


def tightness_start(n: int) -> JointStrategy:
    """c_1 c_{n-1} c_{n-2} ... c_1 with c_j encoded as colour j - 1."""
    return (0,) + tuple(range(n - 2, -1, -1))


def tightness_path(n: int, colour_count: int) -> Path:
    """Replay the worst-case construction under the Dijkstra scheduler.

    The run stops at its first legitimate state (status ``TRUNCATED``,
    reason ``"legitimate"``); the tail of the final phase is never needed.
    """
    from selfstab.game import build_first_solution_game

    if n < 3 or colour_count < n - 1:
        raise DomainError(f"need n >= 3 and colour_count >= n - 1, got n={n}, |C|={colour_count}")
    game = build_first_solution_game(n, colour_count)
    scheduler = dijkstra_first_scheduler(colour_count)
    s = start = tightness_start(n)
    steps: list[ImprovementStep] = []
    for i in tightness_schedule(n):
        if len(game._deviators(s)) == 1:
            break
        step = ImprovementStep(i, s[i - 1], scheduler(game, s, i))
        s = step.apply(s)
        steps.append(step)
    return Path(start, tuple(steps), Status.TRUNCATED, reason="legitimate")
