"""Explicit-state deciders over the finite improvement graph.

Nodes are joint strategies indexed in mixed-radix order (player 1 most
significant, each digit the position of the colour in that player's sorted
strategy set).  Every decider quantifies over all start states, so cycle
witnesses need no stem: the cycle's first state is itself a legal start.

Self-stabilization "in k steps" is decided as worst-case first hit of a
legitimate state.  This is sound only after stability has been checked:
once legitimacy is reached, stability keeps every later state legitimate.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Union

from selfstab.dynamics import ImprovementStep, Path, Scheduler, Status
from selfstab.errors import BudgetExceeded, UsageError
from selfstab.game import Game, JointStrategy

DEFAULT_NODE_BUDGET = 10**7
BUDGET_ENV = "SELFSTAB_NODE_BUDGET"

# (mover, new colour, target node)
Edge = tuple[int, int, int]


def node_budget(override: Optional[int] = None) -> int:
    if override is not None:
        return override
    return int(os.environ.get(BUDGET_ENV, DEFAULT_NODE_BUDGET))


@dataclass(frozen=True, eq=False)
class ImprovementGraph:
    game: Game
    scheduler: Optional[Scheduler]
    states: tuple[JointStrategy, ...]
    edges: tuple[tuple[Edge, ...], ...]
    deviators: tuple[tuple[int, ...], ...]
    _strides: tuple[int, ...] = field(repr=False)
    _positions: tuple[dict, ...] = field(repr=False)

    @property
    def node_count(self) -> int:
        return len(self.states)

    @property
    def edge_count(self) -> int:
        return sum(len(e) for e in self.edges)

    def index(self, s: Iterable[int]) -> int:
        return sum(pos[c] * stride for c, pos, stride in zip(s, self._positions, self._strides))

    def is_legitimate(self, v: int) -> bool:
        return len(self.deviators[v]) == 1

    def is_nash(self, v: int) -> bool:
        return not self.deviators[v]

    def legitimate_nodes(self) -> list[int]:
        return [v for v in range(self.node_count) if len(self.deviators[v]) == 1]

    def nash_nodes(self) -> list[int]:
        return [v for v in range(self.node_count) if not self.deviators[v]]

    def step(self, v: int, edge: Edge) -> ImprovementStep:
        mover, colour, _ = edge
        return ImprovementStep(mover, self.states[v][mover - 1], colour)


def build_improvement_graph(
    game: Game, scheduler: Optional[Scheduler] = None, budget: Optional[int] = None
) -> ImprovementGraph:
    """Full improvement graph, or the scheduler-restricted one.

    Restricted graphs keep one edge per non-best-responding player: the
    scheduler's choice for that player.
    """
    limit = node_budget(budget)
    size = game.state_space_size()
    if size > limit:
        raise BudgetExceeded(size, limit)
    sets = game.strategy_sets
    strides = [1] * game.n
    for k in range(game.n - 2, -1, -1):
        strides[k] = strides[k + 1] * len(sets[k + 1])
    positions = tuple({c: p for p, c in enumerate(a)} for a in sets)
    states = tuple(game.states())
    edges, deviators = [], []
    for s in states:
        out: list[Edge] = []
        movers = []
        for k in range(game.n):
            better = game._better(s, k)
            if not better:
                continue
            movers.append(k + 1)
            if scheduler is not None:
                better = [scheduler(game, s, k + 1)]
            base = sum(positions[j][s[j]] * strides[j] for j in range(game.n) if j != k)
            out.extend((k + 1, c, base + positions[k][c] * strides[k]) for c in better)
        edges.append(tuple(out))
        deviators.append(tuple(movers))
    return ImprovementGraph(game, scheduler, states, tuple(edges), tuple(deviators), tuple(strides), positions)


# --- reports -----------------------------------------------------------------


@dataclass
class PropertyReport:
    """Verdict of one decider.

    ``steps`` carries the numeric result where one exists: the
    self-stabilization step count, or the longest improvement path for FIP.
    ``extremal`` is a path attaining ``steps``.
    """

    property: str
    holds: bool
    witness: Optional[Path] = None
    steps: Optional[int] = None
    unbounded: bool = False
    extremal: Optional[Path] = None
    notes: list[str] = field(default_factory=list)
    statistics: dict = field(default_factory=dict)
    instance: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        return "holds" if self.holds else "fails"

    def summary(self) -> str:
        text = f"{self.property}: {self.verdict}"
        if self.unbounded:
            text += " (unbounded)"
        elif self.steps is not None:
            text += f" (steps={self.steps})"
        return text


@dataclass(frozen=True)
class Unbounded:
    """No finite first-hit bound; ``witness`` never reaches a legitimate state."""

    witness: Path


def _report(name: str, graph: ImprovementGraph, started: float, **kwargs) -> PropertyReport:
    stats = {
        "nodes": graph.node_count,
        "edges": graph.edge_count,
        "seconds": round(time.perf_counter() - started, 6),
    }
    instance = dict(graph.game.description)
    if graph.scheduler is not None:
        instance["scheduler"] = graph.scheduler.name
    return PropertyReport(name, statistics=stats, instance=instance, **kwargs)


# --- graph algorithms ----------------------------------------------------------

NodePred = Callable[[int], bool]
EdgePred = Callable[[int, Edge], bool]


def _all(*_: object) -> bool:
    return True


def find_cycle(
    graph: ImprovementGraph, node_ok: NodePred = _all, edge_ok: EdgePred = _all
) -> Optional[Path]:
    """Some cycle of the subgraph selected by the predicates, as a lasso with empty stem."""
    n = graph.node_count
    colour = bytearray(n)  # 0 unseen, 1 on the DFS stack, 2 finished
    depth = {}
    for root in range(n):
        if colour[root] or not node_ok(root):
            continue
        stack = [(root, iter(graph.edges[root]))]
        via: list[Edge] = []
        colour[root] = 1
        depth[root] = 0
        while stack:
            v, it = stack[-1]
            for e in it:
                w = e[2]
                if not node_ok(w) or not edge_ok(v, e):
                    continue
                if colour[w] == 1:
                    first = depth[w]
                    nodes = [u for u, _ in stack[first:]]
                    cycle = via[first:] + [e]
                    steps = tuple(graph.step(u, edge) for u, edge in zip(nodes, cycle))
                    return Path(graph.states[w], steps, Status.CYCLE_DETECTED, cycle_start=0)
                if colour[w] == 0:
                    colour[w] = 1
                    depth[w] = len(stack)
                    stack.append((w, iter(graph.edges[w])))
                    via.append(e)
                    break
            else:
                colour[v] = 2
                stack.pop()
                if via:
                    via.pop()
    return None


def _topological(graph: ImprovementGraph, node_ok: NodePred, edge_ok: EdgePred) -> Optional[list[int]]:
    """Kahn order of the selected subgraph, or None when it has a cycle."""
    nodes = [v for v in range(graph.node_count) if node_ok(v)]
    indeg = dict.fromkeys(nodes, 0)
    for v in nodes:
        for e in graph.edges[v]:
            if e[2] in indeg and edge_ok(v, e):
                indeg[e[2]] += 1
    order = [v for v in nodes if indeg[v] == 0]
    head = 0
    while head < len(order):
        v = order[head]
        head += 1
        for e in graph.edges[v]:
            w = e[2]
            if w in indeg and edge_ok(v, e):
                indeg[w] -= 1
                if indeg[w] == 0:
                    order.append(w)
    return order if len(order) == len(nodes) else None


def _walk(graph: ImprovementGraph, v: int, choose: Callable[[int], Optional[Edge]]) -> list[ImprovementStep]:
    steps = []
    while (e := choose(v)) is not None:
        steps.append(graph.step(v, e))
        v = e[2]
    return steps


def _strongly_connected(graph: ImprovementGraph, node_ok: NodePred) -> list[list[int]]:
    """Tarjan's algorithm, iterative, on the subgraph induced by ``node_ok``."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    components = []
    counter = 0
    for root in range(graph.node_count):
        if root in index or not node_ok(root):
            continue
        work = [(root, iter(graph.edges[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for e in it:
                w = e[2]
                if not node_ok(w):
                    continue
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(graph.edges[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                low[u] = min(low[u], low[v])
            if low[v] == index[v]:
                component = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == v:
                        break
                components.append(component)
    return components


# --- deciders --------------------------------------------------------------------


def _graph_for(game_or_graph: Union[Game, ImprovementGraph], budget: Optional[int] = None) -> ImprovementGraph:
    if isinstance(game_or_graph, ImprovementGraph):
        return game_or_graph
    return build_improvement_graph(game_or_graph, budget=budget)


def nash_equilibria(game: Game) -> list[JointStrategy]:
    graph = build_improvement_graph(game)
    return [graph.states[v] for v in graph.nash_nodes()]


def no_nash_equilibria(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """Holds iff no joint strategy is a Nash equilibrium; a failure shows one."""
    started = time.perf_counter()
    graph = _graph_for(game)
    nash = graph.nash_nodes()
    witness = Path(graph.states[nash[0]], (), Status.REACHED_NASH) if nash else None
    return _report("no-nash", graph, started, holds=not nash, witness=witness,
                   notes=[f"{len(nash)} Nash equilibria"])


def admits_stability(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """Every improvement step out of a legitimate state lands on a legitimate state."""
    started = time.perf_counter()
    graph = _graph_for(game)
    for v in graph.legitimate_nodes():
        for e in graph.edges[v]:
            if not graph.is_legitimate(e[2]):
                witness = Path(graph.states[v], (graph.step(v, e),), Status.TRUNCATED, reason="witness")
                return _report("stability", graph, started, holds=False, witness=witness)
    return _report("stability", graph, started, holds=True)


def admits_closure(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """No maximal improvement path avoids legitimate states forever.

    Such a path either stops at a Nash equilibrium (never legitimate) or
    eventually cycles through non-legitimate states.
    """
    started = time.perf_counter()
    graph = _graph_for(game)
    nash = graph.nash_nodes()
    if nash:
        witness = Path(graph.states[nash[0]], (), Status.REACHED_NASH)
        return _report("closure", graph, started, holds=False, witness=witness)
    cycle = find_cycle(graph, node_ok=lambda v: not graph.is_legitimate(v))
    return _report("closure", graph, started, holds=cycle is None, witness=cycle)


def admits_fairness(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """No infinite improvement path leaves some player out from some point on.

    Equivalent to: for each player i, the edges not moving i form an acyclic
    graph.  Finite maximal paths (ending in a Nash equilibrium) cannot select
    anyone infinitely often; when they exist the verdict covers infinite
    paths only and a note says so.
    """
    started = time.perf_counter()
    graph = _graph_for(game)
    notes = []
    if graph.nash_nodes():
        notes.append(
            "finite maximal paths exist (the game has Nash equilibria); "
            "fairness evaluated on infinite paths only"
        )
    for i in graph.game.players:
        cycle = find_cycle(graph, edge_ok=lambda v, e, i=i: e[0] != i)
        if cycle is not None:
            notes.append(f"player {i} is never selected on the witness cycle")
            return _report("fairness", graph, started, holds=False, witness=cycle, notes=notes)
    return _report("fairness", graph, started, holds=True, notes=notes)


def worst_case_first_hit(graph: ImprovementGraph) -> Union[int, Unbounded]:
    """Longest number of steps, over starts and mover choices, before a legitimate state."""
    result, _ = _first_hit(graph)
    return result


def _first_hit(graph: ImprovementGraph) -> tuple[Union[int, Unbounded], Optional[Path]]:
    for v in graph.nash_nodes():
        if not graph.is_legitimate(v):
            return Unbounded(Path(graph.states[v], (), Status.REACHED_NASH)), None
    illegit = lambda v: not graph.is_legitimate(v)  # noqa: E731
    order = _topological(graph, illegit, _all)
    if order is None:
        return Unbounded(find_cycle(graph, node_ok=illegit)), None
    dist = [0] * graph.node_count
    best: list[Optional[Edge]] = [None] * graph.node_count
    for v in reversed(order):
        for e in graph.edges[v]:
            if 1 + dist[e[2]] > dist[v]:
                dist[v] = 1 + dist[e[2]]
                best[v] = e
    top = max(range(graph.node_count), key=dist.__getitem__)
    path = Path(graph.states[top], tuple(_walk(graph, top, best.__getitem__)), Status.TRUNCATED, reason="legitimate")
    return dist[top], path


def _self_stabilization(name: str, graph: ImprovementGraph, started: float, bound: Optional[int]) -> PropertyReport:
    notes = []
    if graph.nash_nodes():
        # A finite maximal path selects nobody infinitely often.
        witness = Path(graph.states[graph.nash_nodes()[0]], (), Status.REACHED_NASH)
        return _report(name, graph, started, holds=False, witness=witness,
                       notes=["a Nash equilibrium ends a finite maximal path"])
    for check in (admits_stability, admits_fairness):
        sub = check(graph)
        if not sub.holds:
            return _report(name, graph, started, holds=False, witness=sub.witness,
                           notes=[f"{sub.property} fails"] + sub.notes)
    hit, extremal = _first_hit(graph)
    if isinstance(hit, Unbounded):
        return _report(name, graph, started, holds=False, witness=hit.witness, unbounded=True,
                       notes=["closure fails: some path never reaches a legitimate state"])
    holds = True
    if bound is not None:
        if hit > bound:
            holds = False
            notes.append(f"worst-case first hit {hit} exceeds bound {bound}")
        else:
            notes.append(f"bound {bound} {'attained' if hit == bound else 'not attained'}")
    return _report(name, graph, started, holds=holds, steps=hit, extremal=extremal,
                   witness=None if holds else extremal, notes=notes)


def admits_self_stabilization(game: Union[Game, ImprovementGraph], k_bound: Optional[int] = None) -> PropertyReport:
    """Every improvement path self-stabilizes; ``steps`` is the exact worst case."""
    started = time.perf_counter()
    return _self_stabilization("self-stabilization", _graph_for(game), started, k_bound)


def scheduler_ensures_self_stabilization(
    game: Game, scheduler: Scheduler, expected_bound: Optional[int] = None, budget: Optional[int] = None
) -> PropertyReport:
    """Same decision on the scheduler-restricted graph.

    Mover choice stays adversarial; only the colour is fixed by the scheduler.
    """
    started = time.perf_counter()
    graph = build_improvement_graph(game, scheduler, budget)
    return _self_stabilization("scheduled-self-stabilization", graph, started, expected_bound)


def fip_check(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """Finite improvement property; ``steps`` is the longest improvement path."""
    started = time.perf_counter()
    graph = _graph_for(game)
    order = _topological(graph, _all, _all)
    if order is None:
        return _report("fip", graph, started, holds=False, witness=find_cycle(graph), unbounded=True)
    length = [0] * graph.node_count
    best: list[Optional[Edge]] = [None] * graph.node_count
    for v in reversed(order):
        for e in graph.edges[v]:
            if 1 + length[e[2]] > length[v]:
                length[v] = 1 + length[e[2]]
                best[v] = e
    top = max(range(graph.node_count), key=length.__getitem__)
    extremal = Path(graph.states[top], tuple(_walk(graph, top, best.__getitem__)), Status.REACHED_NASH)
    return _report("fip", graph, started, holds=True, steps=length[top], extremal=extremal)


def weak_self_stabilization(game: Union[Game, ImprovementGraph]) -> PropertyReport:
    """From every state some improvement path self-stabilizes.

    Decision procedure: such a path ends up inside one strongly connected
    component of the legitimate-only subgraph and can traverse every edge
    of it infinitely often.  So a component qualifies when its internal
    edges move every player; the property holds iff every state reaches a
    qualifying component.
    """
    started = time.perf_counter()
    graph = _graph_for(game)
    legit = graph.is_legitimate
    players = set(graph.game.players)
    good = set()
    for component in _strongly_connected(graph, legit):
        members = set(component)
        movers = {e[0] for v in component for e in graph.edges[v] if e[2] in members}
        if movers == players:
            good |= members
    reverse: list[list[int]] = [[] for _ in range(graph.node_count)]
    for v, out in enumerate(graph.edges):
        for e in out:
            reverse[e[2]].append(v)
    reached = set(good)
    frontier = list(good)
    while frontier:
        w = frontier.pop()
        for v in reverse[w]:
            if v not in reached:
                reached.add(v)
                frontier.append(v)
    notes = ["decided via legitimate-only SCCs whose internal edges move every player"]
    for v in range(graph.node_count):
        if v not in reached:
            witness = Path(graph.states[v], (), Status.TRUNCATED, reason="witness")
            notes.append("no improvement path from the witness state self-stabilizes")
            return _report("weak-self-stabilization", graph, started, holds=False, witness=witness, notes=notes)
    return _report("weak-self-stabilization", graph, started, holds=True, notes=notes)


def extract_witness(report: PropertyReport) -> Path:
    if report.holds:
        raise UsageError(f"{report.property} holds; there is no counterexample")
    if report.witness is None:
        raise UsageError(f"{report.property} failed without a recorded witness")
    return report.witness


def regime(n: int, colour_count: int) -> str:
    """Which colour-count regime a first-solution instance falls in."""
    if colour_count >= n:
        return "k>=n"
    if colour_count == n - 1:
        return "k=n-1"
    if colour_count == n - 2:
        return "k=n-2"
    return "k<n-2"
