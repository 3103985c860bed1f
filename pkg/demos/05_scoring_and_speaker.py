"""Scoring: N-attempt evaluation, the utility that trades off replanning,
efficiency and success, both baselines, per-map normalization, quality bins,
and the softmax speaker that prefers high-utility explanations."""
from pathlib import Path

from wayfinder.gridworld import parse_map
from wayfinder.planner import EpisodeParams
from wayfinder.scoring import (
    SpeakerParams,
    UtilityParams,
    bin_quality,
    evaluate,
    length_score,
    normalize_per_map,
    speaker_distribution,
    utility,
)
from wayfinder.translator import Explanation, KeywordTranslator

MAPS = Path(__file__).resolve().parents[1] / "maps"
grid = parse_map((MAPS / "corridor5.map").read_text())

corpus = {
    "precise": "go right twice then down twice then left twice",
    "landmark": "the treasure is in the bottom left corner",
    "terse": "go down",
    "noise": "best of luck my friend",
}

translator = KeywordTranslator()
params = EpisodeParams(rng_seed=11)
up = UtilityParams()

utilities = {}
print(f"{'id':10s} {'succ':>5s} {'len_min':>8s} {'replan':>7s} {'U':>8s} {'U_len':>7s}")
for eid, text in corpus.items():
    e = Explanation(id=eid, map_id=grid.id, text=text)
    res = evaluate(e, grid, translator, params, n=5)
    u = utility(res, up)
    utilities[eid] = u
    print(f"{eid:10s} {res.succ:5.2f} {res.len_min:8d} {res.replan_mean:7.2f} {u:8.3f} {length_score(e):7.1f}")

norm = normalize_per_map(utilities)
print("\nnormalized per map:", {k: round(v, 3) for k, v in norm.items()})

print("\nquality bins (terciles of the normalized score):")
for qb in bin_quality(norm):
    print(f"  {qb.label:<6s} members={list(qb.member_ids)} representative={qb.selected_explanation_id}")

ids = sorted(utilities)
probs = speaker_distribution([utilities[i] for i in ids], SpeakerParams(lam=2.0))
print("\nspeaker distribution (lambda=2): who would a helpful explainer sound like?")
for eid, p in sorted(zip(ids, probs), key=lambda t: -t[1]):
    print(f"  {eid:10s} {p:.3f}")
