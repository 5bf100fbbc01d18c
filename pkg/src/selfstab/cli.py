"""Command-line front end.

Exit codes (stable):

    0  run completed / verdict matches the bundled expectation / replay identical
    1  verdict or bound disagrees with the bundled expectation; replay mismatch
    2  configuration or usage error
    3  step budget truncated the run, or the state space exceeds the node budget
    4  verdict computed but no bundled expectation covers the instance
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import random
import sys
from typing import Optional, Sequence

from selfstab import dynamics, verify
from selfstab.dynamics import Status
from selfstab.errors import BudgetExceeded, ContractViolation, SelfStabError
from selfstab.expected import expected_verdict, matches
from selfstab.export import (
    atomic_write,
    dumps,
    graph_to_dot,
    machine_to_trace,
    path_to_trace,
    replay_trace,
    report_to_dict,
)
from selfstab.game import BUILDERS, Game, format_state, game_from_dict
from selfstab.protocols import SYSTEMS, RingSystem, run_system

EXIT_OK, EXIT_MISMATCH, EXIT_CONFIG, EXIT_BUDGET, EXIT_UNKNOWN = 0, 1, 2, 3, 4

GAMES = sorted(BUILDERS) + ["custom-tabulated"]
PROPERTIES = {
    "no-nash": verify.no_nash_equilibria,
    "stability": verify.admits_stability,
    "closure": verify.admits_closure,
    "fairness": verify.admits_fairness,
    "selfstab": verify.admits_self_stabilization,
    "scheduled-selfstab": verify.scheduler_ensures_self_stabilization,
    "fip": verify.fip_check,
    "weak-selfstab": verify.weak_self_stabilization,
}


class ConfigError(SelfStabError):
    pass


# --- configuration -------------------------------------------------------------

_DEFAULTS = {
    "game": None,
    "protocol": None,
    "n": None,
    "colours": None,
    "scheduler": None,
    "policy": "adversarial",
    "init": None,
    "budget": None,
    "node_budget": None,
    "out": None,
}


def _config(args: argparse.Namespace) -> dict:
    """Flags win over the config file, which wins over defaults."""
    cfg = dict(_DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config) as f:
                loaded = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    for key, value in vars(args).items():
        if value is not None and key not in ("config", "command", "func"):
            cfg[key] = value
    return cfg


def _game(cfg: dict) -> Game:
    kind = cfg.get("game")
    if kind is None:
        raise ConfigError("choose a game with --game")
    if kind == "custom-tabulated":
        spec = cfg.get("custom")
        if not isinstance(spec, dict):
            raise ConfigError("custom-tabulated needs a 'custom' game object in the config file")
        return game_from_dict({**spec, "game": "custom-tabulated"})
    if kind not in BUILDERS:
        raise ConfigError(f"unknown game {kind!r}; choose from {', '.join(GAMES)}")
    if cfg.get("n") is None:
        raise ConfigError("missing -n")
    n = int(cfg["n"])
    if kind == "three-state":
        if cfg.get("colours") not in (None, 3):
            raise ConfigError("the three-state game has exactly 3 colours")
        return BUILDERS[kind](n)
    if kind == "four-state":
        if cfg.get("colours") not in (None, 4):
            raise ConfigError("the four-state game has exactly 4 colours")
        return BUILDERS[kind](n)
    if cfg.get("colours") is None:
        raise ConfigError(f"game {kind} needs a colour count (-c / -k)")
    return BUILDERS[kind](n, int(cfg["colours"]))


def _system(cfg: dict) -> RingSystem:
    kind = cfg["protocol"]
    if kind not in SYSTEMS:
        raise ConfigError(f"unknown protocol {kind!r}")
    if cfg.get("n") is None:
        raise ConfigError("missing -n")
    if kind == "first":
        if cfg.get("colours") is None:
            raise ConfigError("the first-solution ring needs -k")
        return SYSTEMS[kind](int(cfg["n"]), int(cfg["colours"]))
    return SYSTEMS[kind](int(cfg["n"]))


def _scheduler(cfg: dict, game: Game, default: Optional[str]) -> Optional[dynamics.Scheduler]:
    name = cfg.get("scheduler") or default
    if name in (None, "none"):
        return None
    if name == "auto":
        return dynamics.scheduler_for(game)
    if name == "dijkstra":
        return dynamics.dijkstra_first_scheduler(game.colour_count)
    if name == "three-state":
        return dynamics.three_state_scheduler()
    if name == "four-state":
        return dynamics.four_state_scheduler()
    raise ConfigError(f"unknown scheduler {name!r}")


def _policy(spec: str, n: int) -> dynamics.SelectionPolicy:
    name, _, arg = str(spec).partition(":")
    if name == "adversarial":
        return dynamics.adversarial()
    if name == "round-robin":
        return dynamics.round_robin(n)
    if name == "counterclockwise":
        return dynamics.counterclockwise(n)
    if name == "cycle-demo":
        return dynamics.cycle_demo(n)
    if name == "tightness":
        return dynamics.fixed(dynamics.tightness_schedule(n))
    try:
        if name == "fixed":
            return dynamics.fixed([int(x) for x in arg.split(",") if x])
        if name == "periodic":
            return dynamics.periodic([int(x) for x in arg.split(",") if x])
        if name == "seeded":
            return dynamics.seeded(int(arg))
    except ValueError as exc:
        raise ConfigError(f"bad policy {spec!r}") from exc
    raise ConfigError(
        f"unknown policy {spec!r}; use adversarial, round-robin, counterclockwise, "
        "cycle-demo, tightness, fixed:I,J,..., periodic:I,J,... or seeded:SEED"
    )


def parse_vector(text) -> tuple[int, ...]:
    """'a,b,a', 'aba', '2,0,0' or '200' (a list from a config file also works)."""
    if isinstance(text, (list, tuple)):
        return tuple(int(x) for x in text)
    text = str(text).strip()
    parts = text.split(",") if "," in text else list(text)
    out = []
    for p in (p.strip() for p in parts):
        if p.isdigit():
            out.append(int(p))
        elif len(p) == 1 and p.isalpha():
            out.append(ord(p.lower()) - ord("a"))
        else:
            raise ConfigError(f"cannot read {p!r} in initial vector {text!r}")
    return tuple(out)


def _starts(cfg: dict, ranges: Sequence[Sequence[int]]) -> Optional[list[tuple[int, ...]]]:
    """Explicit, seeded-random or exhaustive initial states; None = exhaustive."""
    init = cfg.get("init")
    if init is None:
        raise ConfigError("missing --init (vector, random:SEED or exhaustive)")
    if init == "exhaustive":
        return None
    if isinstance(init, str) and init.startswith("random:"):
        rng = random.Random(int(init.split(":", 1)[1]))
        return [tuple(rng.choice(list(a)) for a in ranges)]
    return [parse_vector(init)]


def _emit(cfg: dict, text: str) -> None:
    out = cfg.get("out")
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


# --- subcommands ---------------------------------------------------------------


def cmd_simulate(cfg: dict) -> int:
    if cfg.get("protocol") and cfg.get("game"):
        raise ConfigError("give either --game or --protocol, not both")
    if cfg.get("protocol"):
        return _simulate_machine(cfg)
    game = _game(cfg)
    scheduler = _scheduler(cfg, game, None)
    policy = _policy(cfg["policy"], game.n)
    starts = _starts(cfg, game.strategy_sets)
    budget = cfg.get("budget")
    traces, code = [], EXIT_OK
    for start in starts if starts is not None else list(game.states()):
        path = dynamics.generate_path(game, start, scheduler, policy, budget)
        trace = path_to_trace(
            game, path, scheduler=scheduler.name if scheduler else None, policy=policy.name
        )
        traces.append(trace)
        if path.status is Status.TRUNCATED and path.reason == "budget":
            code = EXIT_BUDGET
        if starts is not None:
            print(" -> ".join(format_state(s) for s in path.states()))
    _summarise(traces)
    if cfg.get("out"):
        _emit(cfg, dumps(traces[0] if starts is not None else {"schema_version": 1, "traces": traces}))
    return code


def _simulate_machine(cfg: dict) -> int:
    system = _system(cfg)
    policy = _policy(cfg["policy"], system.n)
    starts = _starts(cfg, system.value_ranges)
    budget = cfg.get("budget")
    budget = 4 * len(list(system.states())) if budget is None else int(budget)
    traces, code = [], EXIT_OK
    for start in starts if starts is not None else list(system.states()):
        run = run_system(system, start, policy, budget)
        traces.append(machine_to_trace(system, run, policy=policy.name))
        if run.status is Status.TRUNCATED and run.reason == "budget":
            code = EXIT_BUDGET
        if starts is not None:
            print(" -> ".join("".join(map(str, s)) for s in run.states()))
    _summarise(traces)
    if cfg.get("out"):
        _emit(cfg, dumps(traces[0] if starts is not None else {"schema_version": 1, "traces": traces}))
    return code


def _summarise(traces: list[dict]) -> None:
    if len(traces) == 1:
        t = traces[0]
        hit = t["first_legitimate"]
        print(
            f"status={t['terminal']['status']} steps={len(t['steps'])} "
            f"first_legitimate={'NONE' if hit is None else hit}"
        )
        return
    hits = [t["first_legitimate"] for t in traces]
    never = sum(h is None for h in hits)
    worst = max((h for h in hits if h is not None), default=None)
    print(f"runs={len(traces)} worst_first_legitimate={worst} never_legitimate={never}")


def cmd_verify(cfg: dict, prop: str, bound: Optional[str]) -> int:
    game = _game(cfg)
    decide = PROPERTIES[prop]
    budget = cfg.get("node_budget")
    scheduler = None
    if prop == "scheduled-selfstab":
        scheduler = _scheduler(cfg, game, "auto")
        if scheduler is None:
            raise ConfigError("scheduled-selfstab needs a scheduler")
    limit = None
    if bound == "auto":
        n = game.n
        limit = dynamics.tightness_bound(n) if n >= 3 and game.description.get("game") == "first" else None
    elif bound is not None:
        limit = int(bound)
    if prop == "scheduled-selfstab":
        report = decide(game, scheduler, limit, budget=budget)
    else:
        graph = verify.build_improvement_graph(game, budget=budget)
        report = decide(graph, limit) if prop == "selfstab" else decide(graph)
    d = game.description
    row = expected_verdict(
        str(d.get("game")), game.n, game.colour_count, prop, scheduler.name if scheduler else None
    )
    data = report_to_dict(report, game, row)
    print(report.summary())
    for note in report.notes:
        print(f"  note: {note}")
    if report.witness is not None:
        print(f"  witness: {report.witness}")
    if cfg.get("out"):
        _emit(cfg, dumps(data))
    if row is None:
        print("  expected: no bundled expectation for this instance")
        return EXIT_UNKNOWN
    ok = matches(report, row)
    print(f"  expected: {row['verdict']} -> {'match' if ok else 'MISMATCH'}")
    return EXIT_OK if ok else EXIT_MISMATCH


def _int_range(text: str) -> list[int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        return [int(x) for x in text.split(",")]
    return list(range(int(lo), int(hi) + 1))


def _colour_exprs(text: str, n: int) -> list[int]:
    out = []
    for expr in text.split(","):
        expr = expr.strip().replace(" ", "")
        if expr.startswith("n"):
            out.append(n + (int(expr[1:]) if expr[1:] else 0))
        else:
            out.append(int(expr))
    return out


def bounds_rows(ns: Sequence[int], colours: str) -> list[dict]:
    rows = []
    for n in ns:
        for c in _colour_exprs(colours, n):
            if n < 2 or c < 2:
                continue
            game = BUILDERS["first"](n, c)
            graph = verify.build_improvement_graph(game, dynamics.dijkstra_first_scheduler(c))
            hit = verify.worst_case_first_hit(graph)
            measured = hit if isinstance(hit, int) else "unbounded"
            formula = dynamics.tightness_bound(n) if n >= 2 else 0
            if n == 2 or c >= n - 1:
                expected = formula
            elif c == n - 2:
                expected = "unbounded"
            else:
                expected = None
            attained = "n/a"
            if n >= 3 and c >= n - 1:
                path = dynamics.tightness_path(n, c)
                attained = "yes" if dynamics.first_legitimate_index(game, path) == formula else "no"
            rows.append(
                {
                    "n": n,
                    "colours": c,
                    "regime": verify.regime(n, c),
                    "formula": formula,
                    "measured": measured,
                    "attained": attained,
                    "match": "n/a" if expected is None else str(measured == expected).lower(),
                }
            )
    return rows


def cmd_bounds(cfg: dict, ns: str, colours: str, figure: Optional[str]) -> int:
    rows = bounds_rows(_int_range(ns), colours)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]) if rows else ["n"], lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    _emit(cfg, buf.getvalue())
    out = cfg.get("out")
    if figure is None and out not in (None, "-"):
        figure = out.rsplit(".", 1)[0] + ".png"
    if figure and figure != "none" and rows:
        from selfstab.plotting import plot_bounds

        plot_bounds(rows, figure)
    return EXIT_OK if all(r["match"] != "false" for r in rows) else EXIT_MISMATCH


def cmd_export_graph(cfg: dict) -> int:
    game = _game(cfg)
    scheduler = _scheduler(cfg, game, None)
    graph = verify.build_improvement_graph(game, scheduler, cfg.get("node_budget"))
    _emit(cfg, graph_to_dot(graph))
    return EXIT_OK


def cmd_replay(path: str) -> int:
    try:
        with open(path) as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read trace {path}: {exc}") from exc
    traces = data["traces"] if "traces" in data else [data]
    for t in traces:
        try:
            states = replay_trace(t)
        except ContractViolation as exc:
            print(f"replay MISMATCH: {exc}")
            return EXIT_MISMATCH
        render = format_state if t["kind"] == "game" else (lambda s: "".join(map(str, s)))
        print(" -> ".join(render(s) for s in states) + f" [{t['terminal']['status']}]")
    print(f"replayed {len(traces)} trace(s): identical")
    return EXIT_OK


# --- argument parsing ----------------------------------------------------------


def _instance_flags(p: argparse.ArgumentParser, protocol: bool = False) -> None:
    p.add_argument("--config", help="JSON config file; flags win on conflict")
    p.add_argument("--game", choices=GAMES)
    if protocol:
        p.add_argument("--protocol", choices=sorted(SYSTEMS), help="simulate machines instead of a game")
    p.add_argument("-n", type=int, help="number of players / machines")
    p.add_argument("-c", "--colours", "-k", dest="colours", type=int, help="colour count |C| or modulus k")
    p.add_argument("--scheduler", choices=["none", "auto", "dijkstra", "three-state", "four-state"])
    p.add_argument("--node-budget", type=int, help=f"override {verify.BUDGET_ENV}")
    p.add_argument("-o", "--out", help="output file ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selfstab", description="Ring self-stabilization as better-response dynamics."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one improvement path or machine trace")
    _instance_flags(p, protocol=True)
    p.add_argument("--policy", help="adversarial | round-robin | counterclockwise | cycle-demo | "
                   "tightness | fixed:I,J,... | periodic:I,J,... | seeded:SEED")
    p.add_argument("--init", help="a,b,a | 2,0,0 | random:SEED | exhaustive")
    p.add_argument("--budget", type=int, help="step budget (default 4 x state count)")

    p = sub.add_parser("verify", help="decide a property exhaustively")
    _instance_flags(p)
    p.add_argument("property", choices=sorted(PROPERTIES))
    p.add_argument("--bound", help="step bound to check: an integer or 'auto'")

    p = sub.add_parser("bounds", help="CSV (+ figure) of worst-case steps under the successor scheduler")
    p.add_argument("--n", dest="ns", default="2:6", help="'lo:hi' or comma list")
    p.add_argument("--colours-expr", dest="colours_expr", default="n-2,n-1,n",
                   help="colour counts per n, e.g. 'n-2,n-1,n' or '3,4'")
    p.add_argument("--figure", help="PNG path (default: next to --out); 'none' to skip")
    p.add_argument("-o", "--out", help="CSV file ('-' or absent: stdout)")

    p = sub.add_parser("export-graph", help="DOT file of the (restricted) improvement graph")
    _instance_flags(p)

    p = sub.add_parser("replay", help="re-validate a trace file")
    p.add_argument("trace")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "replay":
            return cmd_replay(args.trace)
        if args.command == "bounds":
            cfg = dict(_DEFAULTS, out=args.out)
            return cmd_bounds(cfg, args.ns, args.colours_expr, args.figure)
        extra = {}
        if args.command == "verify":
            extra = {"prop": args.property, "bound": args.bound}
            del args.property, args.bound
        cfg = _config(args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, **extra)
        return cmd_export_graph(cfg)
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ConfigError, SelfStabError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
