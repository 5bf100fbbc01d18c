"""File formats: trace JSON, report JSON and DOT.

Trace JSON (``schema_version: 1``)::

    {
      "schema_version": 1,
      "kind": "game" | "machine",
      "instance": {"game": "first", "n": 3, "colours": 2, "scheduler": "dijkstra", "policy": "adversarial"}
                  (machine traces: {"protocol": "three-state", "n": 3, ...}),
      "start": [0, 1, 0],
      "steps": [{"index": 0, "mover": 1, "from": 0, "to": 1, "payoff_before": 0, "payoff_after": 1}, ...]
               (machine traces: {"index", "machine", "from", "to", "privileged": [...]}),
      "states": [{"state": [0, 1, 0], "legitimate": false}, ...],
      "terminal": {"status": "cycle_detected", "cycle_start": 0, "reason": null},
      "first_legitimate": 1 | null
    }

Colours are integers in JSON (letter a = 0 in human output).
"""

from __future__ import annotations

import json
import os
import tempfile
from typing import Optional, Union

from selfstab.dynamics import ImprovementStep, Path, Status, replay
from selfstab.errors import ContractViolation, DomainError
from selfstab.game import Game, format_state, game_from_dict, game_to_dict
from selfstab.protocols import SYSTEMS, MachineMove, MachineTrace, RingSystem, _privileged, fire
from selfstab.verify import ImprovementGraph, PropertyReport

SCHEMA_VERSION = 1


def atomic_write(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(data: dict) -> str:
    return json.dumps(data, indent=2, sort_keys=False) + "\n"


def _terminal(status: Status, cycle_start: Optional[int], reason: Optional[str]) -> dict:
    return {"status": status.value, "cycle_start": cycle_start, "reason": reason}


def path_to_trace(game: Game, path: Path, **instance) -> dict:
    states = replay(game, path)
    steps = []
    for index, (s, step) in enumerate(zip(states, path.steps)):
        t = states[index + 1]
        k = step.mover - 1
        steps.append(
            {
                "index": index,
                "mover": step.mover,
                "from": step.from_colour,
                "to": step.to_colour,
                "payoff_before": game._payoff_as(s, k, s[k]),
                "payoff_after": game._payoff_as(t, k, t[k]),
            }
        )
    flags = [len(game._deviators(s)) == 1 for s in states]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "game",
        "instance": {**game_to_dict(game), **instance},
        "start": list(path.start),
        "steps": steps,
        "states": [{"state": list(s), "legitimate": f} for s, f in zip(states, flags)],
        "terminal": _terminal(path.status, path.cycle_start, path.reason),
        "first_legitimate": flags.index(True) if True in flags else None,
    }


def machine_to_trace(system: RingSystem, trace: MachineTrace, **instance) -> dict:
    states = trace.states()
    steps = []
    for index, (s, move) in enumerate(zip(states, trace.moves)):
        steps.append(
            {
                "index": index,
                "machine": move.machine,
                "from": move.from_value,
                "to": move.to_value,
                "privileged": _privileged(system, s),
            }
        )
    flags = [len(_privileged(system, s)) == 1 for s in states]
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "machine",
        "instance": {**system.description(), **instance},
        "start": list(trace.start),
        "steps": steps,
        "states": [{"state": list(s), "legitimate": f} for s, f in zip(states, flags)],
        "terminal": _terminal(trace.status, trace.cycle_start, trace.reason),
        "first_legitimate": flags.index(True) if True in flags else None,
    }


def system_from_dict(data: dict) -> RingSystem:
    kind = data.get("protocol")
    if kind not in SYSTEMS:
        raise DomainError(f"unknown protocol {kind!r}")
    return SYSTEMS[kind](int(data["n"]), data.get("k"))


def trace_from_dict(data: dict) -> tuple[Union[Game, RingSystem], Union[Path, MachineTrace]]:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise DomainError(f"unsupported trace schema {data.get('schema_version')!r}")
    term = data["terminal"]
    status = Status(term["status"])
    start = tuple(data["start"])
    if data["kind"] == "game":
        game = game_from_dict(data["instance"])
        steps = tuple(ImprovementStep(d["mover"], d["from"], d["to"]) for d in data["steps"])
        return game, Path(start, steps, status, term.get("cycle_start"), term.get("reason"))
    if data["kind"] == "machine":
        system = system_from_dict(data["instance"])
        moves = tuple(MachineMove(d["machine"], d["from"], d["to"]) for d in data["steps"])
        return system, MachineTrace(start, moves, status, term.get("cycle_start"), term.get("reason"))
    raise DomainError(f"unknown trace kind {data['kind']!r}")


def replay_trace(data: dict) -> list[tuple[int, ...]]:
    """Re-execute a trace file from its own contents and check every recorded field."""
    model, run = trace_from_dict(data)
    if isinstance(model, Game):
        states = replay(model, run)
        rebuilt = path_to_trace(model, run)
    else:
        states = [model.check_state(run.start)]
        for index, move in enumerate(run.moves):
            new = fire(model, states[-1], move.machine)
            if new[move.machine - 1] != move.to_value:
                raise ContractViolation(f"move {index} recorded {move.to_value}, rule gives {new[move.machine - 1]}")
            states.append(new)
        if run.status is Status.DEADLOCK and _privileged(model, states[-1]):
            raise ContractViolation("trace claims deadlock but a machine is privileged")
        rebuilt = machine_to_trace(model, run)
    if run.status is Status.CYCLE_DETECTED and states[run.cycle_start] != states[-1]:
        raise ContractViolation("recorded cycle does not close")
    for key in ("steps", "states", "first_legitimate"):
        if rebuilt[key] != data[key]:
            raise ContractViolation(f"recorded {key!r} disagrees with the replay")
    return states


def report_to_dict(report: PropertyReport, game: Optional[Game] = None, expected: Optional[dict] = None) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "property": report.property,
        "verdict": report.verdict,
        "steps": report.steps,
        "unbounded": report.unbounded,
        "instance": report.instance,
        "notes": report.notes,
        "statistics": report.statistics,
        "witness": None,
        "extremal": None,
    }
    if game is not None:
        if report.witness is not None:
            out["witness"] = path_to_trace(game, report.witness)
        if report.extremal is not None:
            out["extremal"] = path_to_trace(game, report.extremal)
    if expected is not None:
        out["expected"] = expected
    return out


_FILL = {"legitimate": "palegreen", "nash": "gold", "other": "white"}


def graph_to_dot(graph: ImprovementGraph) -> str:
    """Deterministic DOT: nodes in mixed-radix order, edges labelled by mover."""
    title = " ".join(f"{k}={v}" for k, v in graph.game.description.items())
    if graph.scheduler is not None:
        title += f" scheduler={graph.scheduler.name}"
    lines = [
        "digraph improvement {",
        f'  label="{title}";',
        '  node [shape=box, style=filled, fontname="monospace"];',
    ]
    for v, s in enumerate(graph.states):
        kind = "legitimate" if graph.is_legitimate(v) else "nash" if graph.is_nash(v) else "other"
        lines.append(f'  n{v} [label="{format_state(s)}", fillcolor="{_FILL[kind]}"];')
    for v, out in enumerate(graph.edges):
        for mover, _, w in out:
            lines.append(f'  n{v} -> n{w} [label="{mover}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
