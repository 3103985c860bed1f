"""Gridworld maps: ASCII format, deterministic dynamics, local observations,
and reachability-graph metrics.

Coordinates are row-major with row 0 at top (ASCII reading order). Movement is
4-connected; a move into a wall or off the map is a no-op that still consumes
a step.
"""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

WALL = "#"
FLOOR = "."
UNKNOWN = "?"
GOAL = "G"

_MAP_CHARS = {"#", ".", "S", "G"}


class MalformedMapError(ValueError):
    """Raised for ragged rows, illegal characters, or missing/duplicate S/G."""


class UnreachableGoalError(ValueError):
    """Raised when the goal cannot be reached from the start."""


class Position(NamedTuple):
    row: int
    col: int


class Action(enum.IntEnum):
    """The four moves, in canonical order (used for tie-breaking everywhere)."""

    UP = 0
    DOWN = 1
    LEFT = 2
    RIGHT = 3

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]

    def apply(self, pos: Position) -> Position:
        dr, dc = _DELTAS[self]
        return Position(pos.row + dr, pos.col + dc)

    @classmethod
    def from_token(cls, token: str) -> "Action":
        try:
            return cls[token.strip().upper()]
        except KeyError:
            raise ValueError(f"unknown action token {token!r}") from None


_DELTAS: dict[Action, tuple[int, int]] = {
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
}


@dataclass(frozen=True)
class GridMap:
    """A fully observed world: walls, floors, start and goal.

    `rows` holds one string per map row using only '#' and '.'; the start and
    goal cells are floor.
    """

    id: str
    rows: tuple[str, ...]
    start: Position
    goal: Position
    pair_id: str | None = None

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0])

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.row < self.height and 0 <= pos.col < self.width

    def is_floor(self, pos: Position) -> bool:
        return self.in_bounds(pos) and self.rows[pos.row][pos.col] == FLOOR

    def floor_cells(self) -> Iterator[Position]:
        for r, row in enumerate(self.rows):
            for c, ch in enumerate(row):
                if ch == FLOOR:
                    yield Position(r, c)

    def __post_init__(self) -> None:
        if not self.rows or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise MalformedMapError("empty or ragged map")
        if self.width * self.height < 9:
            raise MalformedMapError("map smaller than 9 cells")
        for name, pos in (("start", self.start), ("goal", self.goal)):
            if not self.is_floor(pos):
                raise MalformedMapError(f"{name} {tuple(pos)} is not a floor cell")
        if shortest_path_length(self, self.start, self.goal) is None:
            raise UnreachableGoalError(
                f"goal {tuple(self.goal)} unreachable from start {tuple(self.start)}"
            )


@dataclass(frozen=True)
class Observation:
    """A (2r+1)x(2r+1) window around `center`; cells off the map are unknown,
    and the goal renders as 'G' whenever it falls inside the window."""

    center: Position
    radius: int
    window: tuple[str, ...]
    steps_taken: int = 0


@dataclass(frozen=True)
class MapMetrics:
    shortest_path: int
    brittleness: float
    openness: float
    reachable_cells: int
    isolated_fraction: float = field(default=0.0)


def parse_map(text: str) -> GridMap:
    """Parse the ASCII map format: optional `@key value` headers, then rows of
    '#', '.', 'S', 'G' (exactly one S and one G)."""
    map_id = ""
    pair_id: str | None = None
    grid_lines: list[str] = []
    blank_seen = False
    for raw in text.split("\n"):
        line = raw.rstrip("\r")
        if not line:
            blank_seen = bool(grid_lines)
            continue
        if blank_seen:
            raise MalformedMapError("blank line inside map body")
        if not grid_lines and line.startswith("@"):
            key, _, value = line[1:].partition(" ")
            if key == "id":
                map_id = value.strip()
            elif key == "pair_id":
                pair_id = value.strip()
            else:
                raise MalformedMapError(f"unknown header key {key!r}")
        else:
            grid_lines.append(line)
    if not grid_lines:
        raise MalformedMapError("no map rows")

    width = len(grid_lines[0])
    start = goal = None
    rows: list[str] = []
    for r, line in enumerate(grid_lines):
        if len(line) != width:
            raise MalformedMapError(f"ragged row {r}: expected width {width}")
        for c, ch in enumerate(line):
            if ch not in _MAP_CHARS:
                raise MalformedMapError(f"illegal character {ch!r} at ({r}, {c})")
            if ch == "S":
                if start is not None:
                    raise MalformedMapError("duplicate start cell")
                start = Position(r, c)
            elif ch == "G":
                if goal is not None:
                    raise MalformedMapError("duplicate goal cell")
                goal = Position(r, c)
        rows.append(line.replace("S", FLOOR).replace("G", FLOOR))
    if start is None:
        raise MalformedMapError("missing start cell")
    if goal is None:
        raise MalformedMapError("missing goal cell")
    return GridMap(id=map_id, rows=tuple(rows), start=start, goal=goal, pair_id=pair_id)


def serialize_map(grid: GridMap) -> str:
    """Canonical ASCII form; round-trips byte-exact through parse_map."""
    lines: list[str] = []
    if grid.id:
        lines.append(f"@id {grid.id}")
    if grid.pair_id:
        lines.append(f"@pair_id {grid.pair_id}")
    for r, row in enumerate(grid.rows):
        chars = list(row)
        if r == grid.start.row:
            chars[grid.start.col] = "S"
        if r == grid.goal.row:
            chars[grid.goal.col] = "G"
        lines.append("".join(chars))
    return "\n".join(lines) + "\n"


def step(grid: GridMap, pos: Position, action: Action) -> Position:
    """Deterministic transition: blocked moves (wall or map edge) are no-ops."""
    nxt = action.apply(pos)
    return nxt if grid.is_floor(nxt) else pos


def observe(grid: GridMap, pos: Position, radius: int, steps_taken: int = 0) -> Observation:
    """Local field of view around `pos`; pure function of its arguments."""
    side = 2 * radius + 1
    c_lo, c_hi = pos.col - radius, pos.col + radius + 1
    pad_left = UNKNOWN * max(0, -c_lo)
    pad_right = UNKNOWN * max(0, c_hi - grid.width)
    window: list[str] = []
    for r in range(pos.row - radius, pos.row + radius + 1):
        if r < 0 or r >= grid.height:
            window.append(UNKNOWN * side)
            continue
        body = grid.rows[r][max(0, c_lo) : min(grid.width, c_hi)]
        line = pad_left + body + pad_right
        if r == grid.goal.row and c_lo <= grid.goal.col < c_hi:
            i = grid.goal.col - c_lo
            line = line[:i] + GOAL + line[i + 1 :]
        window.append(line)
    return Observation(center=pos, radius=radius, window=tuple(window), steps_taken=steps_taken)


def _bfs_distances(grid: GridMap, origin: Position) -> dict[Position, int]:
    dist = {origin: 0}
    queue = deque([origin])
    while queue:
        cur = queue.popleft()
        for action in Action:
            nxt = action.apply(cur)
            if nxt not in dist and grid.is_floor(nxt):
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
    return dist


def shortest_path_length(grid: GridMap, src: Position, dst: Position) -> int | None:
    """BFS distance under 4-connectivity, or None when no path exists."""
    if src == dst:
        return 0
    return _bfs_distances(grid, src).get(dst)


def shortest_path_actions(grid: GridMap, src: Position, dst: Position) -> list[Action] | None:
    """One shortest action sequence src -> dst.

    BFS expands neighbours in canonical action order and keeps the first parent
    found, which fixes the tie-break among equal-length paths.
    """
    if src == dst:
        return []
    parent: dict[Position, tuple[Position, Action]] = {}
    seen = {src}
    queue = deque([src])
    while queue:
        cur = queue.popleft()
        for action in Action:
            nxt = action.apply(cur)
            if nxt in seen or not grid.is_floor(nxt):
                continue
            parent[nxt] = (cur, action)
            if nxt == dst:
                path: list[Action] = []
                node = dst
                while node != src:
                    node, act = parent[node]
                    path.append(act)
                path.reverse()
                return path
            seen.add(nxt)
            queue.append(nxt)
    return None


def graph_metrics(grid: GridMap) -> MapMetrics:
    """Degree statistics of the floor cells reachable from the start."""
    reachable = set(_bfs_distances(grid, grid.start))
    n = len(reachable)
    deg1or2 = deg3plus = deg0 = 0
    for cell in reachable:
        degree = sum(1 for a in Action if grid.is_floor(a.apply(cell)))
        if degree == 0:
            deg0 += 1
        elif degree <= 2:
            deg1or2 += 1
        else:
            deg3plus += 1
    sp = shortest_path_length(grid, grid.start, grid.goal)
    assert sp is not None  # guaranteed by GridMap invariant
    return MapMetrics(
        shortest_path=sp,
        brittleness=deg1or2 / n,
        openness=deg3plus / n,
        reachable_cells=n,
        isolated_fraction=deg0 / n,
    )


def default_budget(grid: GridMap) -> int:
    """Episode step budget used when none is configured."""
    sp = shortest_path_length(grid, grid.start, grid.goal)
    assert sp is not None
    return max(50, 4 * sp)
