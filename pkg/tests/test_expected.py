import pytest

from selfstab.cli import PROPERTIES
from selfstab.dynamics import scheduler_for
from selfstab.expected import _rows, expected_verdict, matches
from selfstab.game import BUILDERS


def _param(row):
    marks = [pytest.mark.slow] if row["colours"] ** row["n"] > 10_000 else []
    label = f"{row['game']}-{row['n']}-{row['colours']}-{row['property']}"
    return pytest.param(row, marks=marks, id=label)


@pytest.mark.parametrize("row", [_param(r) for r in _rows()])
def test_bundled_row_recomputes(row):
    game = BUILDERS[row["game"]](row["n"], row["colours"])
    decide = PROPERTIES[row["property"]]
    if row["property"] == "scheduled-selfstab":
        report = decide(game, scheduler_for(game))
    else:
        report = decide(game)
    assert matches(report, row), (report.summary(), row)


def test_lookup():
    row = expected_verdict("first", 4, 3, "scheduled-selfstab", "dijkstra")
    assert row["verdict"] == "holds" and row["steps"] == 13
    assert expected_verdict("first", 4, 3, "scheduled-selfstab", "three-state") is None
    assert expected_verdict("chain", 9, 9, "fip") is None
