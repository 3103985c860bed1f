"""Corpus ingestion and descriptive analyses: keyword strategy coding,
failure-mode classification, rank correlation, Welch's t, and the per-map
corpus report."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .gridworld import GridMap, graph_metrics
from .scoring import EvaluationResult
from .translator import Explanation, load_lexicon

CONDITIONS = ("None", "Bad", "Medium", "Good")


class DegenerateInputError(ValueError):
    """Statistic undefined for the given input (e.g. zero variance)."""


class UnknownMapReferenceError(KeyError):
    """A corpus entry points at a map id that was not loaded."""


@dataclass(frozen=True)
class StrategyCode:
    has_value: bool
    has_low_policy: bool
    has_high_policy: bool


class FailureMode(enum.Enum):
    DIRECTION_OVERLOAD = "DirectionOverload"
    OVERCOMPLICATED = "Overcomplicated"
    OVERLY_COMPRESSED = "OverlyCompressed"
    SPATIAL_AMBIGUITY = "SpatialAmbiguity"


@dataclass(frozen=True)
class FailureThresholds:
    """Cutoffs for the four failure categories; calibrated against reported
    per-category means, kept as config rather than constants."""

    direction_words_min: int = 4
    overcomplicated_words_min: int = 30
    compressed_words_max: int = 8
    succ_max: float = 0.5


@dataclass(frozen=True)
class CorpusEntry:
    explanation: Explanation
    helpfulness_rating: float | None = None
    condition: str | None = None  # None | Bad | Medium | Good
    path_length: int | None = None

    def __post_init__(self) -> None:
        if self.helpfulness_rating is not None and not (0 <= self.helpfulness_rating <= 100):
            raise ValueError("rating must be in [0, 100]")
        if self.condition is not None and self.condition not in CONDITIONS:
            raise ValueError(f"condition must be one of {CONDITIONS}")


def load_corpus(path: str | Path) -> list[CorpusEntry]:
    """Line-delimited corpus records: {id, map_id, text, rating?, condition?,
    path_length?}, UTF-8, one record per line."""
    entries: list[CorpusEntry] = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}:{line_no}: bad corpus record: {e}") from None
        entries.append(
            CorpusEntry(
                explanation=Explanation(id=str(rec["id"]), map_id=str(rec["map_id"]), text=rec["text"]),
                helpfulness_rating=rec.get("rating"),
                condition=rec.get("condition"),
                path_length=rec.get("path_length"),
            )
        )
    return entries


def dump_corpus(entries: Iterable[CorpusEntry]) -> str:
    lines = []
    for e in entries:
        rec: dict = {"id": e.explanation.id, "map_id": e.explanation.map_id, "text": e.explanation.text}
        if e.helpfulness_rating is not None:
            rec["rating"] = e.helpfulness_rating
        if e.condition is not None:
            rec["condition"] = e.condition
        if e.path_length is not None:
            rec["path_length"] = e.path_length
        lines.append(json.dumps(rec, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def _tokens(text: str) -> list[str]:
    return text.lower().replace("-", " ").replace(",", " , ").replace(".", " . ").split()


def count_direction_words(text: str, lexicon: dict | None = None) -> int:
    lex = lexicon or load_lexicon()
    directions = lex["directions"]
    return sum(1 for t in _tokens(text) if t in directions)


def code_keywords(explanation: Explanation, lexicon: dict | None = None) -> StrategyCode:
    """Non-exclusive strategy flags from token/pattern matches: value terms,
    direction-plus-count movement patterns, and conditional markers."""
    lex = lexicon or load_lexicon()
    toks = _tokens(explanation.text)
    tokset = set(toks)

    has_value = bool(tokset & set(lex["strategy_value_terms"]))
    has_high = bool(tokset & set(lex["strategy_high_policy_terms"]))

    directions = lex["directions"]
    counts = lex["count_words"]
    fillers = set(lex["filler_tokens"])

    def is_count(tok: str) -> bool:
        return tok.isdigit() or tok in counts

    has_low = False
    for i, tok in enumerate(toks):
        if tok not in directions:
            continue
        for direction in (1, -1):
            j = i + direction
            hops = 0
            while 0 <= j < len(toks) and hops < 2:
                if is_count(toks[j]):
                    has_low = True
                    break
                if toks[j] not in fillers:
                    break
                j += direction
                hops += 1
            if has_low:
                break
        if has_low:
            break
    if not has_low and ("step" in tokset or "steps" in tokset):
        has_low = any(t in directions for t in toks)
    return StrategyCode(has_value=has_value, has_low_policy=has_low, has_high_policy=has_high)


def classify_failures(
    explanation: Explanation,
    result: EvaluationResult,
    thresholds: FailureThresholds | None = None,
    lexicon: dict | None = None,
) -> set[FailureMode]:
    """Non-exclusive failure categories; all require a below-threshold success
    rate, so nothing fires on explanations that mostly work."""
    th = thresholds or FailureThresholds()
    lex = lexicon or load_lexicon()
    modes: set[FailureMode] = set()
    if result.succ >= th.succ_max:
        return modes

    text = explanation.text
    words = explanation.word_count
    lowered = text.lower()
    toks = _tokens(text)
    tokset = set(toks)

    if count_direction_words(text, lex) >= th.direction_words_min:
        modes.add(FailureMode.DIRECTION_OVERLOAD)
    has_conditional = bool(tokset & set(lex["strategy_high_policy_terms"]))
    if words >= th.overcomplicated_words_min and has_conditional:
        modes.add(FailureMode.OVERCOMPLICATED)
    if words <= th.compressed_words_max:
        modes.add(FailureMode.OVERLY_COMPRESSED)

    has_vague = any(cue in lowered for cue in lex["vague_locative_cues"])
    concrete = set(lex["concrete_landmark_terms"])
    has_concrete = bool(tokset & concrete) or any(t.isdigit() for t in toks)
    if has_vague and not has_concrete:
        modes.add(FailureMode.SPATIAL_AMBIGUITY)
    return modes


def _average_ranks(xs: Sequence[float]) -> np.ndarray:
    """Ranks starting at 1, ties given the average of their positions."""
    arr = np.asarray(xs, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(len(arr), dtype=np.float64)
    i = 0
    while i < len(arr):
        j = i
        while j + 1 < len(arr) and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Spearman rank correlation with average ranks for ties. Returns None
    (the explicit degenerate marker) when either input is constant."""
    if len(xs) != len(ys):
        raise ValueError("inputs must have equal length")
    if len(xs) < 3:
        raise ValueError("need at least 3 pairs")
    if len(set(xs)) == 1 or len(set(ys)) == 1:
        return None
    rx = _average_ranks(xs)
    ry = _average_ranks(ys)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = float(np.sqrt((rx * rx).sum() * (ry * ry).sum()))
    return float((rx * ry).sum() / denom)


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    d: float  # Cohen's d with pooled SD


def welch_t(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Welch's t statistic, Welch-Satterthwaite df, and Cohen's d."""
    if len(a) < 2 or len(b) < 2:
        raise ValueError("need at least 2 observations per sample")
    xa = np.asarray(a, dtype=np.float64)
    xb = np.asarray(b, dtype=np.float64)
    na, nb = len(xa), len(xb)
    va = float(xa.var(ddof=1))
    vb = float(xb.var(ddof=1))
    if va == 0.0 and vb == 0.0:
        raise DegenerateInputError("both samples have zero variance")
    se2 = va / na + vb / nb
    t = float((xa.mean() - xb.mean()) / np.sqrt(se2))
    df = se2**2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    pooled = np.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    d = float((xa.mean() - xb.mean()) / pooled)
    return WelchResult(t=t, df=float(df), d=d)


@dataclass(frozen=True)
class CorpusReport:
    """Descriptive statistics over a corpus against its maps."""

    n_entries: int
    per_map_mean_length: dict[str, float]
    rho_length_vs_shortest_path: float | None
    rho_length_vs_brittleness: float | None
    rho_length_vs_openness: float | None
    strategy_proportions: dict[str, float]
    condition_path_length_means: dict[str, float]


def corpus_stats(entries: Sequence[CorpusEntry], maps: Sequence[GridMap]) -> CorpusReport:
    """Per-map explanation lengths, their correlation with map-graph metrics,
    strategy-code proportions, and condition-wise navigation path lengths."""
    by_id = {m.id: m for m in maps}
    for e in entries:
        if e.explanation.map_id not in by_id:
            raise UnknownMapReferenceError(e.explanation.map_id)

    lengths_by_map: dict[str, list[int]] = {}
    for e in entries:
        lengths_by_map.setdefault(e.explanation.map_id, []).append(e.explanation.word_count)
    per_map_mean = {mid: sum(v) / len(v) for mid, v in sorted(lengths_by_map.items())}

    map_ids = sorted(per_map_mean)
    rho_sp = rho_br = rho_op = None
    if len(map_ids) >= 3:
        mean_lengths = [per_map_mean[m] for m in map_ids]
        metrics = {m: graph_metrics(by_id[m]) for m in map_ids}
        rho_sp = spearman(mean_lengths, [metrics[m].shortest_path for m in map_ids])
        rho_br = spearman(mean_lengths, [metrics[m].brittleness for m in map_ids])
        rho_op = spearman(mean_lengths, [metrics[m].openness for m in map_ids])

    lex = load_lexicon()
    n = len(entries)
    codes = [code_keywords(e.explanation, lex) for e in entries]
    strategy = {
        "value": sum(c.has_value for c in codes) / n if n else 0.0,
        "low_policy": sum(c.has_low_policy for c in codes) / n if n else 0.0,
        "high_policy": sum(c.has_high_policy for c in codes) / n if n else 0.0,
        "mixed": sum(c.has_value and (c.has_low_policy or c.has_high_policy) for c in codes) / n if n else 0.0,
    }

    cond_lengths: dict[str, list[int]] = {}
    for e in entries:
        if e.condition is not None and e.path_length is not None:
            cond_lengths.setdefault(e.condition, []).append(e.path_length)
    cond_means = {c: sum(v) / len(v) for c, v in sorted(cond_lengths.items())}

    return CorpusReport(
        n_entries=n,
        per_map_mean_length=per_map_mean,
        rho_length_vs_shortest_path=rho_sp,
        rho_length_vs_brittleness=rho_br,
        rho_length_vs_openness=rho_op,
        strategy_proportions=strategy,
        condition_path_length_means=cond_means,
    )
