"""Bundled table of verdicts the theory predicts for concrete instances."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from typing import Optional

from selfstab.verify import PropertyReport


@lru_cache(maxsize=None)
def _rows() -> tuple[dict, ...]:
    text = resources.files("selfstab").joinpath("data/expected_verdicts.json").read_text()
    return tuple(json.loads(text)["rows"])


def expected_verdict(
    game: str, n: int, colours: int, prop: str, scheduler: Optional[str] = None
) -> Optional[dict]:
    for row in _rows():
        if (row["game"], row["n"], row["colours"], row["property"]) != (game, n, colours, prop):
            continue
        if row.get("scheduler") not in (None, scheduler):
            continue
        return row
    return None


def matches(report: PropertyReport, row: dict) -> bool:
    """Does ``report`` agree with every field the row pins down?"""
    if report.verdict != row["verdict"]:
        return False
    if "steps" in row and report.steps != row["steps"]:
        return False
    if "max_steps" in row and (report.steps is None or report.steps > row["max_steps"]):
        return False
    if "unbounded" in row and report.unbounded != row["unbounded"]:
        return False
    return True
