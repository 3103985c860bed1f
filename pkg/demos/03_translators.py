"""Translators: the oracle (BFS upper bound), the keyword pattern compiler,
and scripted fixtures. A remote chat model plugs in behind the same interface;
this demo sticks to the offline ones."""
from pathlib import Path

from wayfinder.gridworld import parse_map
from wayfinder.translator import (
    Explanation,
    KeywordTranslator,
    ScriptedTranslator,
    oracle_translate,
)
from wayfinder.guidance import serialize_program

MAPS = Path(__file__).resolve().parents[1] / "maps"
grid = parse_map((MAPS / "zigzag-a.map").read_text())

print("oracle program for", grid.id)
print(serialize_program(oracle_translate(grid)))

keyword = KeywordTranslator()
for text in (
    "go right six then down two then left six",
    "the treasure is in the bottom left corner",
    "if you see a wall up then move right twice",
    "good luck, have fun!",
):
    e = Explanation(id="demo", map_id=grid.id, text=text)
    rec = keyword.compile(e, grid, seed=0)
    print(f"--- {text!r}")
    if rec.failed:
        print(f"  no guidance extracted ({rec.program.message})")
    else:
        print("  " + serialize_program(rec.program).replace("\n", "\n  ").rstrip())

scripted = ScriptedTranslator(["POLICY\nMOVE UP 3", "POLICY\nMOVE DOWN 1"])
e = Explanation(id="demo", map_id=grid.id, text="x")
print("scripted outputs cycle by seed:",
      [scripted.compile(e, grid, seed).raw_output.splitlines()[1] for seed in range(4)])
