"""Corpus analysis: strategy coding, failure modes, and the map-structure
correlations, on a small synthetic corpus."""
from pathlib import Path

from wayfinder.analysis import (
    CorpusEntry,
    classify_failures,
    code_keywords,
    corpus_stats,
    spearman,
    welch_t,
)
from wayfinder.gridworld import parse_map
from wayfinder.planner import EpisodeParams
from wayfinder.scoring import evaluate
from wayfinder.translator import Explanation, KeywordTranslator

MAPS = Path(__file__).resolve().parents[1] / "maps"
maps = {p.stem: parse_map(p.read_text()) for p in sorted(MAPS.glob("*.map"))}

texts = {
    "steps": "go right twice then down twice then left twice",
    "landmark": "the treasure sits in the bottom left corner",
    "contingent": "if you see a wall up then move right twice",
    "vague": "somewhere near the middle",
    "rambling": "walk around for a bit and if anything looks odd turn back and "
    "try the other way until you find something that looks promising near a wall",
}

print("strategy coding (non-exclusive):")
for eid, text in texts.items():
    e = Explanation(id=eid, map_id="corridor5", text=text)
    c = code_keywords(e)
    print(f"  {eid:10s} value={c.has_value} low={c.has_low_policy} high={c.has_high_policy}")

print("\nfailure modes (need a low success rate to fire):")
translator = KeywordTranslator()
for eid, text in texts.items():
    e = Explanation(id=eid, map_id="corridor5", text=text)
    res = evaluate(e, maps["corridor5"], translator, EpisodeParams(rng_seed=1), n=5)
    modes = classify_failures(e, res)
    print(f"  {eid:10s} succ={res.succ:.2f} -> {sorted(m.value for m in modes) or 'none'}")

entries = [
    CorpusEntry(explanation=Explanation(id=f"{mid}-e", map_id=mid, text="w " * (5 + i)))
    for i, mid in enumerate(sorted(maps))
]
report = corpus_stats(entries, list(maps.values()))
print("\nlength vs map structure over", len(maps), "maps:")
print("  rho(length, shortest_path) =", report.rho_length_vs_shortest_path)
print("  rho(length, brittleness)   =", report.rho_length_vs_brittleness)
print("  rho(length, openness)      =", report.rho_length_vs_openness)

print("\nplain statistics:")
print("  spearman([1,2,2,4], [1,3,2,4]) =", round(spearman([1, 2, 2, 4], [1, 3, 2, 4]), 4))
w = welch_t([8.0, 9.5, 7.5, 9.0], [6.0, 6.5, 7.0, 5.5])
print(f"  welch t={w.t:.3f} df={w.df:.1f} d={w.d:.3f}")
