"""Worlds: parse a map, walk around it, peek through the fog, and compute the
reachability-graph metrics that characterize map difficulty."""
from pathlib import Path

from wayfinder.gridworld import Action, graph_metrics, observe, parse_map, serialize_map, step

MAPS = Path(__file__).resolve().parents[1] / "maps"

grid = parse_map((MAPS / "corridor5.map").read_text())
print(f"map {grid.id}: {grid.width}x{grid.height}, start {tuple(grid.start)}, goal {tuple(grid.goal)}")
print(serialize_map(grid))

# Deterministic dynamics: bumping a wall is a no-op that still costs a step.
pos = grid.start
for action in (Action.UP, Action.RIGHT, Action.RIGHT):
    nxt = step(grid, pos, action)
    print(f"{action.name:>5} : {tuple(pos)} -> {tuple(nxt)}{'  (blocked)' if nxt == pos else ''}")
    pos = nxt

# The listener only ever sees a local window; off-map cells read as '?'.
obs = observe(grid, pos, radius=2)
print("\nlocal view from", tuple(pos))
for row in obs.window:
    print(" ", row)

# Graph metrics: corridors and dead ends make a map brittle; junctions open.
print(f"\n{'map':14s} {'bfs':>4s} {'brittleness':>12s} {'openness':>9s} {'cells':>6s}")
for f in sorted(MAPS.glob("*.map")):
    g = parse_map(f.read_text())
    m = graph_metrics(g)
    print(f"{g.id:14s} {m.shortest_path:4d} {m.brittleness:12.3f} {m.openness:9.3f} {m.reachable_cells:6d}")
