"""Finite strategic games on directed graphs.

Players are numbered 1..n at every public entry point.  A joint strategy is
a plain tuple of colours where entry ``k`` holds the colour of player
``k + 1``; colours are integers ``0..|C|-1`` and render as letters
``a, b, c, ...`` in human-facing output.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterator, Mapping, Sequence, Union

from selfstab.errors import DomainError

JointStrategy = tuple[int, ...]


@dataclass(frozen=True)
class DirectedGraph:
    node_count: int
    edges: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        if self.node_count < 1:
            raise DomainError("graph needs at least one node")
        for j, i in self.edges:
            if not (1 <= j <= self.node_count and 1 <= i <= self.node_count):
                raise DomainError(f"edge {j}->{i} leaves the node range")

    def neighbours(self, i: int) -> tuple[int, ...]:
        """Nodes ``j`` with an edge ``j -> i``, ascending."""
        return tuple(sorted(j for j, k in self.edges if k == i))

    @classmethod
    def ring(cls, n: int, both_directions: bool = False) -> DirectedGraph:
        edges = {(i, i % n + 1) for i in range(1, n + 1)}
        if both_directions:
            edges |= {(b, a) for a, b in edges}
        return cls(n, frozenset(e for e in edges if e[0] != e[1]))

    @classmethod
    def chain(cls, n: int) -> DirectedGraph:
        return cls(n, frozenset((i, i + 1) for i in range(1, n)))


@dataclass(frozen=True)
class Coordination:
    """Payoff = number of neighbours holding the player's colour."""


@dataclass(frozen=True)
class AntiCoordination:
    """Payoff = number of neighbours holding a different colour."""


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Payoff looked up from ``(own, *neighbour colours)``.

    ``neighbours`` lists at most two players, in (left, right) order; they
    must be graph neighbours of the owning player.
    """

    neighbours: tuple[int, ...]
    table: Mapping[tuple[int, ...], int]
    label: str = "tabulated"

    def __post_init__(self) -> None:
        if not 1 <= len(self.neighbours) <= 2:
            raise DomainError("tabulated payoffs read one or two neighbours")
        object.__setattr__(self, "table", MappingProxyType(dict(self.table)))

    @classmethod
    def from_rule(
        cls,
        neighbours: Sequence[int],
        domains: Sequence[Sequence[int]],
        rule: Callable[..., int],
        label: str = "tabulated",
    ) -> Tabulated:
        """Tabulate ``rule(own, *neighbour_colours)`` over ``domains``.

        ``domains[0]`` is the owner's strategy set, the rest follow
        ``neighbours``.
        """
        table = {key: rule(*key) for key in itertools.product(*domains)}
        return cls(tuple(neighbours), table, label)


PayoffRule = Union[Coordination, AntiCoordination, Tabulated]


@dataclass(frozen=True, eq=False)
class Game:
    graph: DirectedGraph
    colour_count: int
    strategy_sets: tuple[tuple[int, ...], ...]
    payoff_rules: tuple[PayoffRule, ...]
    # Enough to rebuild the game: {"game": "first", "n": 3, "colours": 2}, ...
    description: Mapping[str, object] = field(default_factory=dict)
    _readers: tuple[tuple[int, ...], ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        n = self.graph.node_count
        if n < 2:
            raise DomainError(f"a game needs n > 1 players, got {n}")
        if self.colour_count < 2:
            raise DomainError(f"need at least 2 colours, got {self.colour_count}")
        if len(self.strategy_sets) != n or len(self.payoff_rules) != n:
            raise DomainError("one strategy set and one payoff rule per player")
        sets = []
        for i, a in enumerate(self.strategy_sets, start=1):
            a = tuple(sorted(set(a)))
            if not a:
                raise DomainError(f"player {i} has an empty strategy set")
            if a[0] < 0 or a[-1] >= self.colour_count:
                raise DomainError(f"player {i} strategies {a} leave 0..{self.colour_count - 1}")
            sets.append(a)
        object.__setattr__(self, "strategy_sets", tuple(sets))
        object.__setattr__(self, "description", MappingProxyType(dict(self.description)))

        readers = []
        for i, rule in enumerate(self.payoff_rules, start=1):
            nbrs = self.graph.neighbours(i)
            if isinstance(rule, Tabulated):
                missing = [j for j in rule.neighbours if j not in nbrs]
                if missing:
                    raise DomainError(f"player {i} reads non-neighbours {missing}")
                domains = [sets[i - 1]] + [sets[j - 1] for j in rule.neighbours]
                for key in itertools.product(*domains):
                    if key not in rule.table:
                        raise DomainError(f"player {i} payoff table misses {key}")
                readers.append(tuple(j - 1 for j in rule.neighbours))
            elif isinstance(rule, (Coordination, AntiCoordination)):
                readers.append(tuple(j - 1 for j in nbrs))
            else:
                raise DomainError(f"unsupported payoff rule {rule!r}")
        object.__setattr__(self, "_readers", tuple(readers))

    @property
    def n(self) -> int:
        return self.graph.node_count

    @property
    def players(self) -> range:
        return range(1, self.n + 1)

    def state_space_size(self) -> int:
        return math.prod(len(a) for a in self.strategy_sets)

    def states(self) -> Iterator[JointStrategy]:
        """All joint strategies in mixed-radix order (player 1 most significant)."""
        return itertools.product(*self.strategy_sets)

    def check_strategy(self, s: Sequence[int]) -> JointStrategy:
        s = tuple(s)
        if len(s) != self.n:
            raise DomainError(f"joint strategy {s} has length {len(s)}, expected {self.n}")
        for i, (c, a) in enumerate(zip(s, self.strategy_sets), start=1):
            if c not in a:
                raise DomainError(f"player {i} cannot play colour {c}; strategies are {a}")
        return s

    def check_player(self, i: int) -> int:
        if not isinstance(i, int) or not 1 <= i <= self.n:
            raise DomainError(f"player {i!r} outside 1..{self.n}")
        return i

    # Unchecked fast path: ``k`` is 0-indexed, ``c`` replaces s[k].
    def _payoff_as(self, s: Sequence[int], k: int, c: int) -> int:
        rule = self.payoff_rules[k]
        readers = self._readers[k]
        if isinstance(rule, Coordination):
            return sum(1 for j in readers if s[j] == c)
        if isinstance(rule, AntiCoordination):
            return sum(1 for j in readers if s[j] != c)
        return rule.table[(c,) + tuple(s[j] for j in readers)]

    def _better(self, s: Sequence[int], k: int) -> list[int]:
        current = self._payoff_as(s, k, s[k])
        return [c for c in self.strategy_sets[k] if self._payoff_as(s, k, c) > current]

    def _deviators(self, s: Sequence[int]) -> list[int]:
        out = []
        for k in range(self.n):
            current = self._payoff_as(s, k, s[k])
            if any(self._payoff_as(s, k, c) > current for c in self.strategy_sets[k]):
                out.append(k)
        return out


def payoff(game: Game, s: Sequence[int], i: int) -> int:
    s = game.check_strategy(s)
    i = game.check_player(i)
    return game._payoff_as(s, i - 1, s[i - 1])


def payoff_vector(game: Game, s: Sequence[int]) -> tuple[int, ...]:
    s = game.check_strategy(s)
    return tuple(game._payoff_as(s, k, s[k]) for k in range(game.n))


def best_responses(game: Game, s: Sequence[int], i: int) -> frozenset[int]:
    """Colours in A(i) maximising player i's payoff against s_{-i}."""
    s = game.check_strategy(s)
    k = game.check_player(i) - 1
    scores = {c: game._payoff_as(s, k, c) for c in game.strategy_sets[k]}
    top = max(scores.values())
    return frozenset(c for c, v in scores.items() if v == top)


def better_responses(game: Game, s: Sequence[int], i: int) -> tuple[int, ...]:
    """Colours that strictly raise player i's payoff, ascending."""
    s = game.check_strategy(s)
    return tuple(game._better(s, game.check_player(i) - 1))


def non_best_responders(game: Game, s: Sequence[int]) -> tuple[int, ...]:
    s = game.check_strategy(s)
    return tuple(k + 1 for k in game._deviators(s))


def is_nash(game: Game, s: Sequence[int]) -> bool:
    return not non_best_responders(game, s)


def is_legitimate(game: Game, s: Sequence[int]) -> bool:
    """Exactly one player fails to play a best response."""
    return len(non_best_responders(game, s)) == 1


# --- builders ---------------------------------------------------------------


def _need(cond: bool, message: str) -> None:
    if not cond:
        raise DomainError(message)


def build_first_solution_game(n: int, colour_count: int) -> Game:
    """Directed ring where player 1 anti-coordinates and everyone else coordinates."""
    _need(n >= 2, f"need n >= 2 players, got {n}")
    _need(colour_count >= 2, f"need at least 2 colours, got {colour_count}")
    colours = tuple(range(colour_count))
    rules = (AntiCoordination(),) + (Coordination(),) * (n - 1)
    return Game(
        DirectedGraph.ring(n),
        colour_count,
        (colours,) * n,
        rules,
        {"game": "first", "n": n, "colours": colour_count},
    )


def build_alternative_first_game(n: int, k: int) -> Game:
    """First-solution ring, but player 1 is paid only for ``s_1 = s_n + 1 (mod k)``."""
    _need(n >= 2, f"need n >= 2 players, got {n}")
    _need(k >= 2, f"need k >= 2, got {k}")
    colours = tuple(range(k))
    p1 = Tabulated.from_rule(
        (n,), (colours, colours), lambda own, last: int(own == (last + 1) % k), "mod-k successor"
    )
    return Game(
        DirectedGraph.ring(n),
        k,
        (colours,) * n,
        (p1,) + (Coordination(),) * (n - 1),
        {"game": "alt-first", "n": n, "colours": k},
    )


def build_chain_coordination_game(n: int, colour_count: int) -> Game:
    _need(n >= 2, f"need n >= 2 players, got {n}")
    _need(colour_count >= 2, f"need at least 2 colours, got {colour_count}")
    colours = tuple(range(colour_count))
    return Game(
        DirectedGraph.chain(n),
        colour_count,
        (colours,) * n,
        (Coordination(),) * n,
        {"game": "chain", "n": n, "colours": colour_count},
    )


def _middle_payoff(mod: int) -> Callable[[int, int, int], int]:
    def rule(own: int, left: int, right: int) -> int:
        around = {left, right}
        if (own + 1) % mod in around:
            return 0 if (own + 2) % mod in around else 1
        return 2

    return rule


def _bottom_payoff(mod: int) -> Callable[[int, int], int]:
    return lambda own, right: 0 if (own + 1) % mod == right else 1


def build_three_state_game(n: int) -> Game:
    """Undirected ring, bottom = player 1, top = player n, arithmetic mod 3.

    The top player's right neighbour is the bottom player.
    """
    _need(n >= 3, f"three-state game needs n >= 3, got {n}")
    a = (0, 1, 2)
    bottom = Tabulated.from_rule((2,), (a, a), _bottom_payoff(3), "bottom")
    middle = [
        Tabulated.from_rule((i - 1, i + 1), (a, a, a), _middle_payoff(3), "normal")
        for i in range(2, n)
    ]
    top = Tabulated.from_rule(
        (n - 1, 1),
        (a, a, a),
        lambda own, left, right: 0 if left == right and own != (right + 1) % 3 else 1,
        "top",
    )
    return Game(
        DirectedGraph.ring(n, both_directions=True),
        3,
        (a,) * n,
        (bottom, *middle, top),
        {"game": "three-state", "n": n, "colours": 3},
    )


def build_four_state_game(n: int) -> Game:
    """Ghosh's four-state ring: A(1) = {1,3}, A(n) = {0,2}, arithmetic mod 4."""
    _need(n >= 3, f"four-state game needs n >= 3, got {n}")
    full, odd, even = (0, 1, 2, 3), (1, 3), (0, 2)
    sets = [odd] + [full] * (n - 2) + [even]
    bottom = Tabulated.from_rule((2,), (odd, sets[1]), _bottom_payoff(4), "bottom")
    middle = [
        Tabulated.from_rule(
            (i - 1, i + 1), (full, sets[i - 2], sets[i]), _middle_payoff(4), "normal"
        )
        for i in range(2, n)
    ]
    top = Tabulated.from_rule(
        (n - 1,), (even, sets[n - 2]), lambda own, left: 0 if (own + 1) % 4 == left else 1, "top"
    )
    return Game(
        DirectedGraph.ring(n, both_directions=True),
        4,
        tuple(sets),
        (bottom, *middle, top),
        {"game": "four-state", "n": n, "colours": 4},
    )


BUILDERS: dict[str, Callable[..., Game]] = {
    "first": build_first_solution_game,
    "alt-first": build_alternative_first_game,
    "chain": build_chain_coordination_game,
    "three-state": lambda n, colours=3: build_three_state_game(n),
    "four-state": lambda n, colours=4: build_four_state_game(n),
}


def game_to_dict(game: Game) -> dict:
    """Serialisable description sufficient to rebuild ``game``."""
    if game.description.get("game") in BUILDERS:
        return dict(game.description)
    players = []
    for i, (a, rule) in enumerate(zip(game.strategy_sets, game.payoff_rules), start=1):
        entry: dict = {"strategies": list(a)}
        if isinstance(rule, Tabulated):
            entry["payoff"] = "tabulated"
            entry["reads"] = list(rule.neighbours)
            entry["table"] = [[*key, value] for key, value in sorted(rule.table.items())]
        else:
            entry["payoff"] = "coordination" if isinstance(rule, Coordination) else "anti"
        players.append(entry)
    return {
        "game": "custom-tabulated",
        "n": game.n,
        "colours": game.colour_count,
        "edges": sorted([list(e) for e in game.graph.edges]),
        "players": players,
    }


def game_from_dict(data: Mapping) -> Game:
    """Inverse of :func:`game_to_dict`; also the config-file game syntax."""
    kind = data.get("game")
    if kind in BUILDERS:
        n = int(data["n"])
        if kind in ("three-state", "four-state"):
            return BUILDERS[kind](n)
        return BUILDERS[kind](n, int(data["colours"]))
    if kind != "custom-tabulated":
        raise DomainError(f"unknown game kind {kind!r}")
    n = int(data["n"])
    graph = DirectedGraph(n, frozenset((int(a), int(b)) for a, b in data["edges"]))
    sets, rules = [], []
    for entry in data["players"]:
        sets.append(tuple(int(c) for c in entry["strategies"]))
        kind = entry.get("payoff", "tabulated")
        if kind == "coordination":
            rules.append(Coordination())
        elif kind == "anti":
            rules.append(AntiCoordination())
        elif kind == "tabulated":
            table = {tuple(int(x) for x in row[:-1]): int(row[-1]) for row in entry["table"]}
            rules.append(Tabulated(tuple(int(j) for j in entry["reads"]), table))
        else:
            raise DomainError(f"unknown payoff kind {kind!r}")
    return Game(graph, int(data["colours"]), tuple(sets), tuple(rules), {"game": "custom-tabulated", "n": n})


def colour_letter(c: int) -> str:
    return chr(ord("a") + c) if c < 26 else f"<{c}>"


def format_state(s: Sequence[int]) -> str:
    """Letters for human output: (0, 1, 0) -> 'aba'."""
    return "".join(colour_letter(c) for c in s)
