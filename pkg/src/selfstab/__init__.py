"""Dijkstra's self-stabilizing rings as strategic games with better-response dynamics."""

from selfstab.dynamics import (
    ImprovementStep,
    Path,
    Scheduler,
    SelectionPolicy,
    Status,
    adversarial,
    counterclockwise,
    cycle_demo,
    cyclic_successor,
    dijkstra_first_scheduler,
    first_legitimate_index,
    fixed,
    four_state_scheduler,
    generate_path,
    periodic,
    improvement_edges,
    replay,
    rightmost_first_schedule,
    round_robin,
    seeded,
    three_state_scheduler,
    tightness_bound,
    tightness_path,
)
from selfstab.errors import (
    BudgetExceeded,
    ContractViolation,
    CorrespondenceViolation,
    DomainError,
    SelfStabError,
    UsageError,
)
from selfstab.game import (
    AntiCoordination,
    Coordination,
    DirectedGraph,
    Game,
    Tabulated,
    best_responses,
    build_alternative_first_game,
    build_chain_coordination_game,
    build_first_solution_game,
    build_four_state_game,
    build_three_state_game,
    is_legitimate,
    is_nash,
    payoff,
)
from selfstab.verify import (
    ImprovementGraph,
    PropertyReport,
    Unbounded,
    admits_closure,
    admits_fairness,
    admits_self_stabilization,
    admits_stability,
    build_improvement_graph,
    extract_witness,
    fip_check,
    scheduler_ensures_self_stabilization,
    weak_self_stabilization,
    worst_case_first_hit,
)

__version__ = "0.1.0"
