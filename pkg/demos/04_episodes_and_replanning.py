"""Episodes: the listener follows guidance under fog, detects that guidance
has failed, re-queries the translator, and degrades to value-greedy search
when its re-query budget runs out."""
from pathlib import Path

from wayfinder.gridworld import parse_map
from wayfinder.guidance import serialize_program
from wayfinder.planner import EpisodeParams, ScriptedActor, direct_episode, run_episode
from wayfinder.translator import Explanation, OracleTranslator, ScriptedTranslator, oracle_translate

MAPS = Path(__file__).resolve().parents[1] / "maps"
grid = parse_map((MAPS / "corridor5.map").read_text())
e = Explanation(id="demo", map_id=grid.id, text="demo")
params = EpisodeParams(rng_seed=7)


def show(label, attempt):
    print(f"{label:28s} success={attempt.success} length={attempt.length} replans={attempt.replans}")


show("oracle guidance", run_episode(grid, e, OracleTranslator(), params))

# First compilation walks into a wall; the replanning loop recovers.
bad_then_good = ScriptedTranslator(["POLICY\nMOVE UP 3", serialize_program(oracle_translate(grid))])
show("bad guidance, then good", run_episode(grid, e, bad_then_good, params))

# Nothing ever parses: replans burn out, then the value-greedy fallback walks.
show("unusable guidance forever", run_episode(grid, e, ScriptedTranslator(["???"]), params))

# The direct-action baseline has no program and no replanning loop at all.
actor = ScriptedActor(["RIGHT", "RIGHT", "DOWN", "DOWN", "LEFT", "LEFT"])
show("direct-action baseline", direct_episode(grid, e, actor, params))

attempt = run_episode(grid, e, bad_then_good, params)
print("\ntrajectory of the recovery run (replanned steps marked *):")
for t in attempt.trajectory:
    mark = "*" if t.replanned else " "
    blocked = " blocked" if t.blocked else ""
    print(f" {mark} step {t.index}: {t.action.name if t.action else 'NOOP':5s} -> {tuple(t.position)}{blocked}")
