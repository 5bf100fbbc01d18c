import networkx as nx
import pytest

from selfstab.dynamics import Status, dijkstra_first_scheduler, replay, three_state_scheduler
from selfstab.errors import BudgetExceeded, UsageError
from selfstab.game import (
    AntiCoordination,
    Coordination,
    DirectedGraph,
    Game,
    build_alternative_first_game,
    build_chain_coordination_game,
    build_first_solution_game,
    build_three_state_game,
)
from selfstab.dynamics import improvement_edges
from selfstab.verify import (
    Unbounded,
    admits_closure,
    admits_fairness,
    admits_self_stabilization,
    admits_stability,
    build_improvement_graph,
    extract_witness,
    find_cycle,
    fip_check,
    nash_equilibria,
    no_nash_equilibria,
    regime,
    scheduler_ensures_self_stabilization,
    weak_self_stabilization,
    worst_case_first_hit,
)


def _pennies_with_follower():
    """Players 1 and 2 play matching pennies; player 3 copies player 2."""
    graph = DirectedGraph(3, frozenset({(1, 2), (2, 1), (2, 3)}))
    return Game(graph, 2, ((0, 1),) * 3, (Coordination(), AntiCoordination(), Coordination()))


def _to_networkx(graph, keep=lambda v: True):
    g = nx.DiGraph()
    g.add_nodes_from(v for v in range(graph.node_count) if keep(v))
    for v, out in enumerate(graph.edges):
        if keep(v):
            g.add_edges_from((v, e[2]) for e in out if keep(e[2]))
    return g


@pytest.mark.parametrize("n,colours", [(3, 2), (4, 3), (5, 2)])
def test_graph_shape_matches_edges(n, colours):
    game = build_first_solution_game(n, colours)
    graph = build_improvement_graph(game)
    assert graph.node_count == colours**n
    for v, s in enumerate(graph.states):
        assert graph.index(s) == v
        assert {graph.step(v, e) for e in graph.edges[v]} == improvement_edges(game, s)
        for e in graph.edges[v]:
            assert graph.states[e[2]] == graph.step(v, e).apply(s)


def test_restricted_graph_has_one_edge_per_deviator():
    game = build_first_solution_game(4, 5)
    graph = build_improvement_graph(game, dijkstra_first_scheduler(5))
    for v in range(graph.node_count):
        assert [e[0] for e in graph.edges[v]] == list(graph.deviators[v])


def test_node_budget_enforced(monkeypatch):
    game = build_first_solution_game(4, 4)
    with pytest.raises(BudgetExceeded):
        build_improvement_graph(game, budget=100)
    monkeypatch.setenv("SELFSTAB_NODE_BUDGET", "10")
    with pytest.raises(BudgetExceeded, match="SELFSTAB_NODE_BUDGET"):
        build_improvement_graph(game)


def test_chain_has_nash_equilibria_first_game_has_none():
    assert sorted(nash_equilibria(build_chain_coordination_game(3, 2))) == [(0, 0, 0), (1, 1, 1)]
    assert no_nash_equilibria(build_first_solution_game(3, 3)).holds
    report = no_nash_equilibria(build_chain_coordination_game(2, 2))
    assert not report.holds and report.witness.status is Status.REACHED_NASH


def test_stability_failure_witness():
    report = admits_stability(build_chain_coordination_game(2, 2))
    assert not report.holds
    witness = extract_witness(report)
    assert len(witness.steps) == 1


def test_fairness_failure_names_the_idle_player():
    game = _pennies_with_follower()
    report = admits_fairness(game)
    assert not report.holds
    cycle = extract_witness(report)
    replay(game, cycle)
    assert 3 not in {step.mover for step in cycle.cycle}


def test_fairness_note_when_nash_exists():
    report = admits_fairness(build_chain_coordination_game(3, 3))
    assert report.holds
    assert any("Nash" in note for note in report.notes)


def test_weak_self_stabilization_failure_and_success():
    assert not weak_self_stabilization(_pennies_with_follower()).holds
    assert weak_self_stabilization(build_first_solution_game(4, 4)).holds
    assert weak_self_stabilization(build_first_solution_game(2, 2)).holds


def test_closure_fails_on_alternative_game_with_replayable_cycle():
    game = build_alternative_first_game(3, 3)
    report = admits_closure(game)
    assert not report.holds
    states = replay(game, report.witness)
    graph = build_improvement_graph(game)
    assert not any(graph.is_legitimate(graph.index(s)) for s in states)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_fip_on_chain_matches_networkx(n):
    game = build_chain_coordination_game(n, n)
    report = fip_check(game)
    graph = build_improvement_graph(game)
    g = _to_networkx(graph)
    assert report.holds == nx.is_directed_acyclic_graph(g)
    assert report.steps == nx.dag_longest_path_length(g) == n * (n - 1) // 2
    assert len(replay(game, report.extremal)) == report.steps + 1


@pytest.mark.parametrize("game", [build_first_solution_game(3, 3), build_alternative_first_game(3, 3), _pennies_with_follower()])
def test_fip_failure_agrees_with_networkx(game):
    graph = build_improvement_graph(game)
    report = fip_check(graph)
    assert not report.holds and report.unbounded
    assert not nx.is_directed_acyclic_graph(_to_networkx(graph))
    replay(game, report.witness)


@pytest.mark.parametrize(
    "n,colours,expected",
    [(3, 2, 1), (3, 3, 2), (4, 3, 13), (4, 4, 13), (4, 5, 13), (5, 4, 24), (5, 5, 24)],
)
def test_first_hit_matches_networkx(n, colours, expected):
    game = build_first_solution_game(n, colours)
    graph = build_improvement_graph(game, dijkstra_first_scheduler(colours))
    illegit = lambda v: not graph.is_legitimate(v)  # noqa: E731
    g = _to_networkx(graph, illegit)
    # one extra step enters the legitimate set from any non-legitimate node with an edge there
    longest = {v: 0 for v in g}
    for v in reversed(list(nx.topological_sort(g))):
        exits = any(graph.is_legitimate(e[2]) for e in graph.edges[v])
        inner = [1 + longest[w] for w in g.successors(v)]
        longest[v] = max(inner + ([1] if exits else []))
    assert worst_case_first_hit(graph) == max(longest.values()) == expected


@pytest.mark.parametrize("n", [4, 5])
def test_fhp_regime_is_unbounded(n):
    game = build_first_solution_game(n, n - 2)
    graph = build_improvement_graph(game, dijkstra_first_scheduler(n - 2))
    hit = worst_case_first_hit(graph)
    assert isinstance(hit, Unbounded)
    states = replay(game, hit.witness)
    assert not any(graph.is_legitimate(graph.index(s)) for s in states)


def test_find_cycle_none_on_dag():
    graph = build_improvement_graph(build_chain_coordination_game(3, 3))
    assert find_cycle(graph) is None


def test_self_stabilization_grid_values():
    assert admits_self_stabilization(build_first_solution_game(2, 3)).steps == 0
    report = admits_self_stabilization(build_first_solution_game(3, 3), k_bound=2)
    assert report.holds and report.steps == 2
    assert not admits_self_stabilization(build_first_solution_game(3, 3), k_bound=1).holds
    failing = admits_self_stabilization(build_first_solution_game(4, 3))
    assert not failing.holds and failing.unbounded


def test_scheduled_three_state_reports_exact_worst_case():
    report = scheduler_ensures_self_stabilization(build_three_state_game(4), three_state_scheduler())
    assert report.holds and report.steps == 10
    assert report.statistics["nodes"] == 81


def test_extract_witness_refuses_holding_report():
    report = admits_stability(build_first_solution_game(3, 2))
    with pytest.raises(UsageError):
        extract_witness(report)


def test_regimes():
    assert [regime(5, c) for c in (6, 5, 4, 3, 2)] == ["k>=n", "k>=n", "k=n-1", "k=n-2", "k<n-2"]
