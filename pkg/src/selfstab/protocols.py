"""Machine-level simulators of the three ring protocols.

Each machine sees its own value ``S``, its left neighbour ``L`` (machine
i - 1, machine n for machine 1) and, on undirected rings, its right
neighbour ``R`` (machine i + 1, machine 1 for machine n).  One privileged
machine fires per step (central daemon).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator, Optional, Sequence

from selfstab.dynamics import (
    ImprovementStep,
    Path,
    Scheduler,
    SelectionPolicy,
    Status,
    adversarial,
    dijkstra_first_scheduler,
    four_state_scheduler,
    three_state_scheduler,
)
from selfstab.errors import ContractViolation, CorrespondenceViolation, DomainError
from selfstab.game import (
    Game,
    build_first_solution_game,
    build_four_state_game,
    build_three_state_game,
)

SystemState = tuple[int, ...]


@dataclass(frozen=True)
class MachineRule:
    name: str
    privilege: Callable[[int, int, Optional[int]], bool] = field(repr=False)
    action: Callable[[int, int, Optional[int]], int] = field(repr=False)


@dataclass(frozen=True, eq=False)
class RingSystem:
    kind: str
    n: int
    modulus: int
    value_ranges: tuple[tuple[int, ...], ...]
    rules: tuple[MachineRule, ...]
    undirected: bool

    @property
    def regime(self) -> Optional[str]:
        """Colour-count regime of a first-solution ring, None otherwise."""
        if self.kind != "first":
            return None
        k, n = self.modulus, self.n
        return "k>=n" if k >= n else "k=n-1" if k == n - 1 else "k=n-2" if k == n - 2 else "k<n-2"

    def description(self) -> dict:
        out = {"protocol": self.kind, "n": self.n}
        if self.kind == "first":
            out["k"] = self.modulus
        return out

    def check_state(self, values: Sequence[int]) -> SystemState:
        values = tuple(values)
        if len(values) != self.n:
            raise DomainError(f"state {values} has length {len(values)}, expected {self.n}")
        for i, (v, allowed) in enumerate(zip(values, self.value_ranges), start=1):
            if v not in allowed:
                raise DomainError(f"machine {i} cannot hold {v}; range is {allowed}")
        return values

    def states(self) -> Iterator[SystemState]:
        return itertools.product(*self.value_ranges)

    def _view(self, values: SystemState, i: int) -> tuple[int, int, Optional[int]]:
        left = values[i - 2]  # index -1 wraps to machine n for machine 1
        right = values[i % self.n] if self.undirected else None
        return values[i - 1], left, right


def first_solution_system(n: int, k: int) -> RingSystem:
    """Dijkstra's k-state ring.  Any k >= 2 is accepted; see ``regime``."""
    if n < 2 or k < 2:
        raise DomainError(f"need n >= 2 and k >= 2, got n={n}, k={k}")
    bottom = MachineRule("bottom", lambda s, l, r: l == s, lambda s, l, r: (s + 1) % k)
    other = MachineRule("other", lambda s, l, r: l != s, lambda s, l, r: l)
    values = tuple(range(k))
    return RingSystem("first", n, k, (values,) * n, (bottom,) + (other,) * (n - 1), False)


def _normal(mod: int) -> MachineRule:
    return MachineRule(
        "normal",
        lambda s, l, r: l == (s + 1) % mod or (s + 1) % mod == r,
        lambda s, l, r: (s + 1) % mod,
    )


def _bottom(mod: int) -> MachineRule:
    return MachineRule("bottom", lambda s, l, r: (s + 1) % mod == r, lambda s, l, r: (s + 2) % mod)


def three_state_system(n: int) -> RingSystem:
    if n < 3:
        raise DomainError(f"three-state ring needs n >= 3, got {n}")
    top = MachineRule(
        "top", lambda s, l, r: l == r and s != (r + 1) % 3, lambda s, l, r: (r + 1) % 3
    )
    rules = (_bottom(3),) + (_normal(3),) * (n - 2) + (top,)
    return RingSystem("three-state", n, 3, ((0, 1, 2),) * n, rules, True)


def four_state_system(n: int) -> RingSystem:
    if n < 3:
        raise DomainError(f"four-state ring needs n >= 3, got {n}")
    top = MachineRule("top", lambda s, l, r: l == (s + 1) % 4, lambda s, l, r: (s + 2) % 4)
    rules = (_bottom(4),) + (_normal(4),) * (n - 2) + (top,)
    ranges = ((1, 3),) + ((0, 1, 2, 3),) * (n - 2) + ((0, 2),)
    return RingSystem("four-state", n, 4, ranges, rules, True)


SYSTEMS = {
    "first": first_solution_system,
    "three-state": lambda n, k=None: three_state_system(n),
    "four-state": lambda n, k=None: four_state_system(n),
}


def privileged_machines(system: RingSystem, state: Sequence[int]) -> frozenset[int]:
    values = system.check_state(state)
    return frozenset(_privileged(system, values))


def _privileged(system: RingSystem, values: SystemState) -> list[int]:
    return [i for i in range(1, system.n + 1) if system.rules[i - 1].privilege(*system._view(values, i))]


def fire(system: RingSystem, state: Sequence[int], machine: int) -> SystemState:
    values = system.check_state(state)
    if not 1 <= machine <= system.n:
        raise DomainError(f"machine {machine} outside 1..{system.n}")
    view = system._view(values, machine)
    rule = system.rules[machine - 1]
    if not rule.privilege(*view):
        raise ContractViolation(f"machine {machine} is not privileged at {values}")
    new = rule.action(*view)
    if new not in system.value_ranges[machine - 1]:
        raise ContractViolation(f"machine {machine} left its range: {new}")
    return values[: machine - 1] + (new,) + values[machine:]


def is_legitimate_system(system: RingSystem, state: Sequence[int]) -> bool:
    return len(privileged_machines(system, state)) == 1


@dataclass(frozen=True)
class MachineMove:
    machine: int
    from_value: int
    to_value: int


@dataclass(frozen=True)
class MachineTrace:
    """Same terminal conventions as :class:`selfstab.dynamics.Path`."""

    start: SystemState
    moves: tuple[MachineMove, ...]
    status: Status
    cycle_start: Optional[int] = None
    reason: Optional[str] = None

    def states(self) -> list[SystemState]:
        out = [self.start]
        for m in self.moves:
            s = out[-1]
            if s[m.machine - 1] != m.from_value:
                raise ContractViolation(f"move {m} does not fit state {s}")
            out.append(s[: m.machine - 1] + (m.to_value,) + s[m.machine :])
        return out


def run_system(
    system: RingSystem,
    state: Sequence[int],
    daemon: Optional[SelectionPolicy] = None,
    step_budget: int = 1000,
) -> MachineTrace:
    """Let the daemon fire privileged machines until deadlock, recurrence or budget."""
    values = start = system.check_state(state)
    selector = (daemon or adversarial()).selector()
    seen = {(values, selector.memory()): 0}
    moves: list[MachineMove] = []
    while True:
        privileged = _privileged(system, values)
        if not privileged:
            return MachineTrace(start, tuple(moves), Status.DEADLOCK)
        if len(moves) >= step_budget:
            return MachineTrace(start, tuple(moves), Status.TRUNCATED, reason="budget")
        i = selector.pick(values, privileged)
        if i is None:
            return MachineTrace(start, tuple(moves), Status.TRUNCATED, reason="schedule")
        new = fire(system, values, i)
        moves.append(MachineMove(i, values[i - 1], new[i - 1]))
        values = new
        key = (values, selector.memory())
        if key in seen:
            return MachineTrace(start, tuple(moves), Status.CYCLE_DETECTED, cycle_start=seen[key])
        seen[key] = len(moves)


def enumerate_traces(system: RingSystem, depth: int, starts=None) -> Iterator[MachineTrace]:
    """Every daemon choice sequence of length ``depth`` (shorter only at deadlock)."""
    for start in starts if starts is not None else system.states():
        start = system.check_state(start)
        stack = [(start, ())]
        while stack:
            values, moves = stack.pop()
            privileged = _privileged(system, values)
            if not privileged or len(moves) == depth:
                status = Status.TRUNCATED if privileged else Status.DEADLOCK
                yield MachineTrace(start, moves, status, reason="budget" if privileged else None)
                continue
            for i in reversed(privileged):
                new = fire(system, values, i)
                stack.append((new, moves + (MachineMove(i, values[i - 1], new[i - 1]),)))


# --- game correspondence ------------------------------------------------------


def game_of_system(system: RingSystem) -> tuple[Game, Callable[[Sequence[int]], tuple[int, ...]]]:
    """The matching game and the (identity) map from machine states to joint strategies."""
    if system.kind == "first":
        game = build_first_solution_game(system.n, system.modulus)
    elif system.kind == "three-state":
        game = build_three_state_game(system.n)
    elif system.kind == "four-state":
        game = build_four_state_game(system.n)
    else:
        raise DomainError(f"no game for custom system {system.kind!r}")
    return game, tuple


def scheduler_of_system(system: RingSystem) -> Scheduler:
    if system.kind == "first":
        return dijkstra_first_scheduler(system.modulus)
    if system.kind == "three-state":
        return three_state_scheduler()
    if system.kind == "four-state":
        return four_state_scheduler()
    raise DomainError(f"no scheduler for custom system {system.kind!r}")


def move_groups(system: RingSystem, trace: MachineTrace) -> list[tuple[int, ...]]:
    """Partition move indices into game steps.

    First solution: one move per step.  Otherwise two consecutive moves of
    the same machine form one step when together they raise that player's
    payoff by 2; a pair never straddles the start of a detected cycle.
    """
    if system.kind == "first":
        return [(j,) for j in range(len(trace.moves))]
    game, _ = game_of_system(system)
    states = trace.states()
    groups = []
    j = 0
    while j < len(trace.moves):
        i = trace.moves[j].machine
        pair_ok = (
            j + 1 < len(trace.moves)
            and trace.moves[j + 1].machine == i
            and trace.cycle_start != j + 1
        )
        if pair_ok:
            before, after = states[j], states[j + 2]
            gain = game._payoff_as(after, i - 1, after[i - 1]) - game._payoff_as(before, i - 1, before[i - 1])
            if gain == 2:
                groups.append((j, j + 1))
                j += 2
                continue
        groups.append((j,))
        j += 1
    return groups


def correspondence_check(system: RingSystem, trace: MachineTrace) -> Path:
    """Map a machine trace onto an improvement path and validate the image.

    Every single move must be the scheduler's choice for that player and an
    improvement step.  Every compressed pair must be the scheduler applied
    twice, with the combined step raising the payoff by exactly 2.  Raises
    :class:`CorrespondenceViolation` otherwise.
    """
    game, to_joint = game_of_system(system)
    scheduler = scheduler_of_system(system)
    states = trace.states()
    steps = []
    boundary = {}
    for group in move_groups(system, trace):
        boundary[group[0]] = len(steps)
        s = to_joint(states[group[0]])
        i = trace.moves[group[0]].machine
        k = i - 1
        before = game._payoff_as(s, k, s[k])
        current = s
        for j in group:
            if j != group[0] and trace.moves[j].machine != i:
                raise CorrespondenceViolation(f"group {group} mixes machines")
            try:
                chosen = scheduler(game, current, i)
            except ContractViolation as exc:
                raise CorrespondenceViolation(f"move {j}: {exc}") from exc
            if chosen != trace.moves[j].to_value:
                raise CorrespondenceViolation(
                    f"move {j}: machine {i} wrote {trace.moves[j].to_value}, scheduler picks {chosen}"
                )
            current = to_joint(states[j + 1])
        gain = game._payoff_as(current, k, current[k]) - before
        if gain != len(group) or gain <= 0:
            raise CorrespondenceViolation(f"moves {group} raise player {i}'s payoff by {gain}")
        steps.append(ImprovementStep(i, s[k], current[k]))
    boundary[len(trace.moves)] = len(steps)

    start = to_joint(trace.start)
    if trace.status is Status.DEADLOCK:
        path = Path(start, tuple(steps), Status.REACHED_NASH)
    elif trace.status is Status.CYCLE_DETECTED:
        path = Path(start, tuple(steps), Status.CYCLE_DETECTED, cycle_start=boundary[trace.cycle_start])
    else:
        path = Path(start, tuple(steps), trace.status, reason=trace.reason)
    if system.kind == "first" and len(path.steps) != len(trace.moves):
        raise CorrespondenceViolation("first-solution image is not length preserving")
    return path
