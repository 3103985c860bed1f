"""The guidance DSL: parse a program, lint it against a map, and ground it
into the policy prior and value map the planner consumes."""
from pathlib import Path

from wayfinder.gridworld import Position, parse_map
from wayfinder.guidance import ground, parse_program, serialize_program, validate

MAPS = Path(__file__).resolve().parents[1] / "maps"
grid = parse_map((MAPS / "corridor5.map").read_text())

text = """\
POLICY
MOVE RIGHT 2
MOVE DOWN 2
VALUE
REGION 3 1 3 1 10   # the treasure cell
RULES
IF SEE GOAL THEN MOVE LEFT 1
"""
program = parse_program(text)
print("canonical form:")
print(serialize_program(program))

diags = validate(program, grid.width, grid.height, grid.start)
print("diagnostics:", diags or "none")

compiled = ground(program, grid.width, grid.height, grid.start)

print("\npolicy prior along the intended trajectory:")
for pos, dist in sorted(compiled.policy_prior.items()):
    biased = max(dist, key=dist.get)
    print(f"  {tuple(pos)}: {biased.name} gets {dist[biased]:.3f}, others {min(dist.values()):.3f}")

print("\nvalue map (10 at the annotated cell, falling off by Manhattan distance):")
for r in range(grid.height):
    print("  " + " ".join(f"{compiled.value_at(Position(r, c)):5.1f}" for c in range(grid.width)))

bad = parse_program("POLICY\nMOVE RIGHT 10")
print("\nan overshooting program lints as:", validate(bad, grid.width, grid.height, grid.start)[0])
