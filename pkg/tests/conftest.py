"""Shared fixtures: the fixture map set, random map generation, and a summary
hook that prints one PASS/FAIL line per acceptance criterion."""
from __future__ import annotations

import random
from collections import defaultdict
from pathlib import Path

import pytest

from wayfinder.gridworld import GridMap, Position
from wayfinder.reports import load_maps_dir
from wayfinder.translator import Explanation

REPO_ROOT = Path(__file__).resolve().parents[1]
MAPS_DIR = REPO_ROOT / "maps"

CORRIDOR5_TEXT = "#####\n#S..#\n###.#\n#G..#\n#####\n"
OPEN_ROOM_TEXT = "#####\n#S..#\n#...#\n#..G#\n#####\n"


@pytest.fixture(scope="session")
def fixture_maps() -> dict[str, GridMap]:
    return load_maps_dir(MAPS_DIR)


@pytest.fixture(scope="session")
def corridor(fixture_maps) -> GridMap:
    return fixture_maps["corridor5"]


@pytest.fixture(scope="session")
def open_room(fixture_maps) -> GridMap:
    return fixture_maps["open-room"]


def make_explanation(text: str, map_id: str = "corridor5", eid: str = "e") -> Explanation:
    return Explanation(id=eid, map_id=map_id, text=text)


def random_map(rng: random.Random, width: int | None = None, height: int | None = None) -> GridMap:
    """A random valid map: boundary walls, interior wall density ~30%,
    regenerated until the goal is reachable."""
    width = width or rng.randint(5, 12)
    height = height or rng.randint(5, 12)
    while True:
        rows = []
        for r in range(height):
            if r in (0, height - 1):
                rows.append("#" * width)
            else:
                rows.append(
                    "#" + "".join("#" if rng.random() < 0.3 else "." for _ in range(width - 2)) + "#"
                )
        floors = [
            Position(r, c)
            for r in range(height)
            for c in range(width)
            if rows[r][c] == "."
        ]
        if len(floors) < 2:
            continue
        start, goal = rng.sample(floors, 2)
        try:
            return GridMap(id=f"rand-{rng.randint(0, 10**9)}", rows=tuple(rows), start=start, goal=goal)
        except ValueError:
            continue


# ---------------------------------------------------------------------------
# acceptance summary: one line per criterion at the end of the run
# ---------------------------------------------------------------------------

_acceptance_results: dict[str, list[tuple[str, bool]]] = defaultdict(list)


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if not name.startswith("test_a"):
        return
    criterion = name.split("_")[1].upper()  # test_a4_... -> A4
    _acceptance_results[criterion].append((report.nodeid, report.passed))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for criterion in sorted(_acceptance_results, key=lambda c: (len(c), c)):
        outcomes = _acceptance_results[criterion]
        ok = all(passed for _, passed in outcomes)
        status = "PASS" if ok else "FAIL"
        detail = "" if ok else " (" + ", ".join(n.split("::")[-1] for n, p in outcomes if not p) + ")"
        terminalreporter.write_line(f"{criterion}: {status} [{len(outcomes)} check(s)]{detail}")
