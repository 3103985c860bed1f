"""Aggregation of attempts into utility scores, the two baselines, per-map
normalization, quality bins, and the speaker distribution."""
from __future__ import annotations

import statistics
from concurrent.futures import Executor
from dataclasses import dataclass, replace

import numpy as np

from .gridworld import GridMap
from .planner import Attempt, EpisodeParams, derive_attempt_seed, run_episode
from .translator import Explanation, Translator


class TooFewExplanationsError(ValueError):
    """Quality binning needs at least three explanations per map."""


@dataclass(frozen=True)
class EvaluationResult:
    """Aggregate of N independent attempts for one (explanation, map)."""

    explanation_id: str
    map_id: str
    n: int
    attempts: tuple[Attempt, ...]
    replan_mean: float
    len_min: int
    succ: float
    budget: int

    @classmethod
    def from_attempts(cls, attempts: tuple[Attempt, ...]) -> "EvaluationResult":
        if not attempts:
            raise ValueError("need at least one attempt")
        n = len(attempts)
        budget = attempts[0].budget
        successful = [a.length for a in attempts if a.success]
        return cls(
            explanation_id=attempts[0].explanation_id,
            map_id=attempts[0].map_id,
            n=n,
            attempts=attempts,
            replan_mean=sum(a.replans for a in attempts) / n,
            len_min=min(successful) if successful else budget,
            succ=sum(a.success for a in attempts) / n,
            budget=budget,
        )


@dataclass(frozen=True)
class UtilityParams:
    alpha: float = 0.5
    beta: float | None = None  # None: 1/budget, so the length term lands in [0, 1]
    gamma: float = 1.0
    delta: float = 1.0

    def resolved_beta(self, budget: int) -> float:
        return self.beta if self.beta is not None else 1.0 / budget


@dataclass(frozen=True)
class SpeakerParams:
    lam: float = 2.0


@dataclass(frozen=True)
class QualityBin:
    label: str  # Good | Medium | Bad
    selected_explanation_id: str
    bin_scores: tuple[float, ...]
    member_ids: tuple[str, ...]


def evaluate(
    explanation: Explanation,
    world: GridMap,
    translator: Translator,
    params: EpisodeParams,
    n: int,
    executor: Executor | None = None,
) -> EvaluationResult:
    """Run N independent attempts (seeds derived from params.rng_seed) and
    aggregate. With an executor, attempts fan out; aggregation is a symmetric
    function of the attempt set, so scheduling cannot change the result."""
    if n < 1:
        raise ValueError("n must be >= 1")
    per_attempt = [
        replace(params, rng_seed=derive_attempt_seed(params.rng_seed, i)) for i in range(n)
    ]
    if executor is None:
        attempts = tuple(run_episode(world, explanation, translator, p) for p in per_attempt)
    else:
        futures = [executor.submit(run_episode, world, explanation, translator, p) for p in per_attempt]
        attempts = tuple(f.result() for f in futures)
    return EvaluationResult.from_attempts(attempts)


def utility(result: EvaluationResult, p: UtilityParams) -> float:
    """U = -alpha * Replan - beta * Len_min + gamma * Succ."""
    beta = p.resolved_beta(result.budget)
    return -p.alpha * result.replan_mean - beta * result.len_min + p.gamma * result.succ


def length_score(explanation: Explanation) -> float:
    """Length-only baseline: negative word count."""
    return -float(explanation.word_count)


def direct_score(result: EvaluationResult, p: UtilityParams) -> float:
    """Direct-action baseline: delta * Succ - alpha * E[L], failures charged
    the full budget."""
    lengths = [a.length if a.success else a.budget for a in result.attempts]
    return p.delta * result.succ - p.alpha * (sum(lengths) / len(lengths))


def normalize_per_map(scores: dict[str, float]) -> dict[str, float]:
    """Min-max normalize one map's scores into [0, 1]; a flat set maps to 0.5."""
    if not scores:
        return {}
    lo, hi = min(scores.values()), max(scores.values())
    if hi == lo:
        return {k: 0.5 for k in scores}
    return {k: (v - lo) / (hi - lo) for k, v in scores.items()}


def bin_quality(scores: dict[str, float]) -> list[QualityBin]:
    """Tercile split of one map's scores into Bad / Medium / Good.

    Ties are ordered by explanation id for determinism. Representatives:
    Good = max score, Bad = min score, Medium = closest to the medium bin's
    median (ties to the lexically smallest id).
    """
    if len(scores) < 3:
        raise TooFewExplanationsError(f"need >= 3 explanations per map, got {len(scores)}")
    ordered = sorted(scores.items(), key=lambda kv: (kv[1], kv[0]))
    n = len(ordered)
    cut1 = int(n / 3 + 0.5)
    cut2 = int(2 * n / 3 + 0.5)
    groups = {
        "Bad": ordered[:cut1],
        "Medium": ordered[cut1:cut2],
        "Good": ordered[cut2:],
    }

    def rep_extreme(items: list[tuple[str, float]], best: bool) -> str:
        target = max(v for _, v in items) if best else min(v for _, v in items)
        return min(k for k, v in items if v == target)

    def rep_median(items: list[tuple[str, float]]) -> str:
        med = statistics.median(v for _, v in items)
        closest = min(abs(v - med) for _, v in items)
        return min(k for k, v in items if abs(v - med) == closest)

    bins = []
    for label, items in groups.items():
        if label == "Good":
            rep = rep_extreme(items, best=True)
        elif label == "Bad":
            rep = rep_extreme(items, best=False)
        else:
            rep = rep_median(items)
        bins.append(
            QualityBin(
                label=label,
                selected_explanation_id=rep,
                bin_scores=tuple(v for _, v in items),
                member_ids=tuple(k for k, _ in items),
            )
        )
    return bins


def speaker_distribution(utilities: list[float], sp: SpeakerParams) -> list[float]:
    """Softmax over utilities with inverse temperature lambda, max-subtracted
    for numerical stability."""
    if not utilities:
        raise ValueError("need at least one utility")
    arr = np.asarray(utilities, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("utilities must be finite")
    z = sp.lam * arr
    z -= z.max()
    w = np.exp(z)
    p = w / w.sum()
    return [float(x) for x in p]
