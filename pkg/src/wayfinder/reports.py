"""Batch scoring, ranking and analysis pipelines with stable on-disk outputs.

Score reports are emitted in two formats with identical content (CSV and
line-delimited JSON). Outputs are keyed by (explanation, map, model, seed) and
resumable: existing rows are reused verbatim, so re-runs and different worker
counts produce byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .analysis import (
    CorpusEntry,
    FailureMode,
    FailureThresholds,
    classify_failures,
    corpus_stats,
    count_direction_words,
)
from .gridworld import GridMap, parse_map
from .planner import Attempt, EpisodeParams, direct_episode, run_episode
from .scoring import (
    EvaluationResult,
    SpeakerParams,
    UtilityParams,
    bin_quality,
    direct_score,
    length_score,
    normalize_per_map,
    speaker_distribution,
    utility,
)
from .seeding import derive_seed
from .translator import Explanation, Translator, lexicon_hash, load_lexicon

MODELS = ("utility", "length", "direct")

SCORE_FIELDS = [
    "explanation_id",
    "map_id",
    "model",
    "seed",
    "raw_score",
    "normalized_score",
    "bin",
    "replan_mean",
    "len_min",
    "succ",
    "params",
]


class DataError(ValueError):
    """Bad input data (maps, corpus, trajectories)."""


def load_maps_dir(path: str | Path) -> dict[str, GridMap]:
    maps: dict[str, GridMap] = {}
    files = sorted(Path(path).glob("*.map"))
    if not files:
        raise DataError(f"no .map files under {path}")
    for f in files:
        try:
            grid = parse_map(f.read_text(encoding="utf-8"))
        except ValueError as e:
            raise DataError(f"{f}: {e}") from None
        if not grid.id:
            grid = GridMap(id=f.stem, rows=grid.rows, start=grid.start, goal=grid.goal, pair_id=grid.pair_id)
        if grid.id in maps:
            raise DataError(f"duplicate map id {grid.id!r} ({f})")
        maps[grid.id] = grid
    return maps


def _fmt(x: float | int | str) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


class KeywordDirectActor:
    """Offline direct-action baseline: reads the movement phrases out of the
    explanation once, then emits them one token per step (no-ops after)."""

    def __init__(self, explanation: Explanation, world: GridMap, lexicon: dict | None = None):
        from .guidance import PolicyStep
        from .translator import EmptyProgramError, keyword_translate

        tokens: list[str] = []
        try:
            program = keyword_translate(explanation, world, lexicon)
            for s in program.policy_steps:
                if isinstance(s, PolicyStep):
                    tokens.extend([s.direction.name] * s.count)
        except EmptyProgramError:
            pass
        self._tokens = tokens
        self._i = 0

    def __call__(self, explanation: Explanation, observation_text: str, history_text: str) -> str:
        if self._i >= len(self._tokens):
            return ""
        tok = self._tokens[self._i]
        self._i += 1
        return tok


@dataclass(frozen=True)
class ScoreRow:
    explanation_id: str
    map_id: str
    model: str
    seed: int
    raw_score: str  # stored as written, to keep resumed files byte-stable
    replan_mean: str
    len_min: str
    succ: str

    @property
    def key(self) -> tuple[str, str, str, str]:
        return (self.explanation_id, self.map_id, self.model, str(self.seed))


def _read_existing_scores(path: Path) -> dict[tuple[str, str, str, str], ScoreRow]:
    rows: dict[tuple[str, str, str, str], ScoreRow] = {}
    if not path.exists():
        return rows
    with path.open("r", encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(line for line in fh if not line.startswith("#")):
            row = ScoreRow(
                explanation_id=rec["explanation_id"],
                map_id=rec["map_id"],
                model=rec["model"],
                seed=int(rec["seed"]),
                raw_score=rec["raw_score"],
                replan_mean=rec["replan_mean"],
                len_min=rec["len_min"],
                succ=rec["succ"],
            )
            rows[row.key] = row
    return rows


def _run_attempts_pool(
    work: list[tuple[Explanation, GridMap, EpisodeParams, str]],
    translator: Translator,
    n_attempts: int,
    parallelism: int,
    direct_actor_factory=None,
) -> dict[tuple[str, str, str], EvaluationResult]:
    """Fan (explanation x map x attempt) items over a bounded pool, then
    aggregate per pair. Results depend only on the work list, not scheduling."""
    from dataclasses import replace as dc_replace

    from .planner import derive_attempt_seed

    make_actor = direct_actor_factory or KeywordDirectActor

    tasks: list[tuple[tuple[str, str, str], int, Explanation, GridMap, EpisodeParams]] = []
    for explanation, world, params, model in work:
        for i in range(n_attempts):
            per = dc_replace(params, rng_seed=derive_attempt_seed(params.rng_seed, i))
            tasks.append(((explanation.id, world.id, model), i, explanation, world, per))

    results: dict[tuple[str, str, str], list[Attempt | None]] = {
        key: [None] * n_attempts for key, *_ in tasks
    }

    def run_one(task) -> tuple[tuple[str, str, str], int, Attempt]:
        key, i, explanation, world, per = task
        if key[2] == "direct":
            return key, i, direct_episode(world, explanation, make_actor(explanation, world), per)
        return key, i, run_episode(world, explanation, translator, per)

    if parallelism <= 1:
        outcomes = [run_one(t) for t in tasks]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            outcomes = list(pool.map(run_one, tasks))
    for key, i, attempt in outcomes:
        results[key][i] = attempt
    return {
        key: EvaluationResult.from_attempts(tuple(a for a in attempts if a is not None))
        for key, attempts in results.items()
    }


def score_corpus(
    entries: list[CorpusEntry],
    maps: dict[str, GridMap],
    translator: Translator,
    out_dir: str | Path,
    episode: EpisodeParams,
    up: UtilityParams,
    n_attempts: int = 10,
    parallelism: int = 1,
    models: tuple[str, ...] = MODELS,
    direct_actor_factory=None,
) -> Path:
    """Score every (explanation, map, model) and write scores.csv/.jsonl.
    Already-present (explanation, map, model, seed) rows are not recomputed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "scores.csv"
    existing = _read_existing_scores(csv_path)

    for e in entries:
        if e.explanation.map_id not in maps:
            raise DataError(f"corpus entry {e.explanation.id!r} references unknown map {e.explanation.map_id!r}")

    base_seed = episode.rng_seed
    pending: list[tuple[Explanation, GridMap, EpisodeParams, str]] = []
    for entry in sorted(entries, key=lambda e: (e.explanation.map_id, e.explanation.id)):
        world = maps[entry.explanation.map_id]
        for model in models:
            key = (entry.explanation.id, world.id, model, str(base_seed))
            if key in existing:
                continue
            if model == "length":
                continue  # computed directly, no episodes needed
            from dataclasses import replace as dc_replace

            per_pair = dc_replace(
                episode,
                rng_seed=derive_seed(base_seed, model, entry.explanation.id, world.id),
            )
            pending.append((entry.explanation, world, per_pair, model))

    computed = (
        _run_attempts_pool(pending, translator, n_attempts, parallelism, direct_actor_factory)
        if pending
        else {}
    )

    rows: dict[tuple[str, str, str, str], ScoreRow] = dict(existing)
    for entry in entries:
        world = maps[entry.explanation.map_id]
        for model in models:
            key = (entry.explanation.id, world.id, model, str(base_seed))
            if key in rows:
                continue
            if model == "length":
                raw = length_score(entry.explanation)
                rows[key] = ScoreRow(entry.explanation.id, world.id, model, base_seed, repr(raw), "", "", "")
                continue
            result = computed[(entry.explanation.id, world.id, model)]
            raw = utility(result, up) if model == "utility" else direct_score(result, up)
            rows[key] = ScoreRow(
                entry.explanation.id,
                world.id,
                model,
                base_seed,
                repr(raw),
                repr(result.replan_mean),
                str(result.len_min),
                repr(result.succ),
            )

    _write_score_report(csv_path, out / "scores.jsonl", rows, up, episode, n_attempts)
    return csv_path


def _write_score_report(
    csv_path: Path,
    jsonl_path: Path,
    rows: dict[tuple[str, str, str, str], ScoreRow],
    up: UtilityParams,
    episode: EpisodeParams,
    n_attempts: int,
) -> None:
    # normalization and bins are recomputed over the full row set
    by_map_model: dict[tuple[str, str], dict[str, float]] = {}
    for row in rows.values():
        by_map_model.setdefault((row.map_id, row.model), {})[row.explanation_id] = float(row.raw_score)

    normalized: dict[tuple[str, str, str], float] = {}
    bins: dict[tuple[str, str, str], str] = {}
    for (map_id, model), scores in by_map_model.items():
        for eid, v in normalize_per_map(scores).items():
            normalized[(eid, map_id, model)] = v
        if len(scores) >= 3:
            for qb in bin_quality(normalize_per_map(scores)):
                for eid in qb.member_ids:
                    bins[(eid, map_id, model)] = qb.label

    params_json = json.dumps(
        {
            "alpha": up.alpha,
            "beta": up.beta,
            "gamma": up.gamma,
            "delta": up.delta,
            "n_attempts": n_attempts,
            "fov_radius": episode.fov_radius,
            "max_replans": episode.max_replans,
            "revisit_limit": episode.revisit_limit,
            "stall_limit": episode.stall_limit,
            "budget": episode.budget,
            "epsilon": episode.epsilon,
            "kappa": episode.kappa,
            "rho": episode.rho,
            "lexicon": lexicon_hash(),
        },
        sort_keys=True,
    )

    ordered = sorted(rows.values(), key=lambda r: (r.map_id, r.model, r.explanation_id, r.seed))
    csv_buf = io.StringIO()
    writer = csv.DictWriter(csv_buf, fieldnames=SCORE_FIELDS, lineterminator="\n")
    writer.writeheader()
    json_lines = []
    for r in ordered:
        rec = {
            "explanation_id": r.explanation_id,
            "map_id": r.map_id,
            "model": r.model,
            "seed": str(r.seed),
            "raw_score": r.raw_score,
            "normalized_score": repr(normalized[(r.explanation_id, r.map_id, r.model)]),
            "bin": bins.get((r.explanation_id, r.map_id, r.model), ""),
            "replan_mean": r.replan_mean,
            "len_min": r.len_min,
            "succ": r.succ,
            "params": params_json,
        }
        writer.writerow(rec)
        json_lines.append(json.dumps(rec, sort_keys=True))
    csv_path.write_text(csv_buf.getvalue(), encoding="utf-8")
    jsonl_path.write_text("\n".join(json_lines) + "\n", encoding="utf-8")


def rank_corpus(
    scores_csv: Path,
    out_dir: str | Path,
    sp: SpeakerParams,
) -> tuple[Path, Path]:
    """From a utility score table, emit per-map quality bins and the speaker
    distribution (softmax over raw utilities)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = _read_existing_scores(scores_csv)
    util_by_map: dict[str, dict[str, float]] = {}
    for row in rows.values():
        if row.model == "utility":
            util_by_map.setdefault(row.map_id, {})[row.explanation_id] = float(row.raw_score)
    if not util_by_map:
        raise DataError(f"no utility rows in {scores_csv}")

    bins_path = out / "bins.csv"
    speaker_path = out / "speaker.csv"

    bins_buf = io.StringIO()
    bw = csv.writer(bins_buf, lineterminator="\n")
    bw.writerow(["map_id", "label", "selected_explanation_id", "member_ids", "normalized_scores"])
    speaker_buf = io.StringIO()
    sw = csv.writer(speaker_buf, lineterminator="\n")
    sw.writerow(["map_id", "explanation_id", "utility", "probability"])

    for map_id in sorted(util_by_map):
        scores = util_by_map[map_id]
        norm = normalize_per_map(scores)
        if len(scores) >= 3:
            for qb in bin_quality(norm):
                bw.writerow(
                    [
                        map_id,
                        qb.label,
                        qb.selected_explanation_id,
                        ";".join(qb.member_ids),
                        ";".join(repr(s) for s in qb.bin_scores),
                    ]
                )
        eids = sorted(scores)
        probs = speaker_distribution([scores[e] for e in eids], sp)
        for eid, p in zip(eids, probs):
            sw.writerow([map_id, eid, repr(scores[eid]), repr(p)])

    bins_path.write_text(bins_buf.getvalue(), encoding="utf-8")
    speaker_path.write_text(speaker_buf.getvalue(), encoding="utf-8")
    return bins_path, speaker_path


def analyze_corpus(
    entries: list[CorpusEntry],
    maps: dict[str, GridMap],
    out_dir: str | Path,
    scores_csv: Path | None = None,
    thresholds: FailureThresholds | None = None,
) -> Path:
    """Corpus descriptives plus the failure-mode table; succ per explanation
    comes from an existing utility score table when provided."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    th = thresholds or FailureThresholds()
    lex = load_lexicon()
    report = corpus_stats(entries, list(maps.values()))

    succ_by_key: dict[tuple[str, str], tuple[float, float, int]] = {}
    if scores_csv is not None and Path(scores_csv).exists():
        for row in _read_existing_scores(Path(scores_csv)).values():
            if row.model == "utility" and row.succ:
                succ_by_key[(row.explanation_id, row.map_id)] = (
                    float(row.succ),
                    float(row.replan_mean),
                    int(row.len_min),
                )

    mode_rows: dict[FailureMode, list[CorpusEntry]] = {m: [] for m in FailureMode}
    classified = 0
    for entry in entries:
        key = (entry.explanation.id, entry.explanation.map_id)
        if key not in succ_by_key:
            continue
        classified += 1
        succ, replan_mean, len_min = succ_by_key[key]
        stub = EvaluationResult(
            explanation_id=entry.explanation.id,
            map_id=entry.explanation.map_id,
            n=1,
            attempts=(),
            replan_mean=replan_mean,
            len_min=len_min,
            succ=succ,
            budget=max(len_min, 1),
        )
        for mode in classify_failures(entry.explanation, stub, th, lex):
            mode_rows[mode].append(entry)

    lines = [
        f"# lexicon_version={lex['version']} lexicon_hash={lexicon_hash()}",
        "# thresholds="
        + json.dumps(
            {
                "direction_words_min": th.direction_words_min,
                "overcomplicated_words_min": th.overcomplicated_words_min,
                "compressed_words_max": th.compressed_words_max,
                "succ_max": th.succ_max,
            },
            sort_keys=True,
        ),
        "section,key,value",
        f"corpus,n_entries,{report.n_entries}",
        f"corpus,n_classified,{classified}",
    ]
    for mid, mean_len in report.per_map_mean_length.items():
        lines.append(f"length,mean_words_{mid},{_fmt(mean_len)}")
    for name, rho in [
        ("rho_length_vs_shortest_path", report.rho_length_vs_shortest_path),
        ("rho_length_vs_brittleness", report.rho_length_vs_brittleness),
        ("rho_length_vs_openness", report.rho_length_vs_openness),
    ]:
        lines.append(f"correlation,{name},{'NA' if rho is None else _fmt(rho)}")
    for name, frac in report.strategy_proportions.items():
        lines.append(f"strategy,{name},{_fmt(frac)}")
    for cond, mean_len in report.condition_path_length_means.items():
        lines.append(f"condition,mean_path_length_{cond},{_fmt(mean_len)}")
    for mode in FailureMode:
        group = mode_rows[mode]
        n = len(group)
        lines.append(f"failure,{mode.value}_n,{n}")
        if n:
            mean_succ = sum(succ_by_key[(e.explanation.id, e.explanation.map_id)][0] for e in group) / n
            mean_len = sum(e.explanation.word_count for e in group) / n
            mean_dir = sum(count_direction_words(e.explanation.text, lex) for e in group) / n
            lines.append(f"failure,{mode.value}_mean_succ,{_fmt(mean_succ)}")
            lines.append(f"failure,{mode.value}_mean_words,{_fmt(mean_len)}")
            lines.append(f"failure,{mode.value}_mean_direction_words,{_fmt(mean_dir)}")

    path = out / "analysis.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
