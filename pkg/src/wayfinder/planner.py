"""The listener: accumulates partial knowledge of the map, follows compiled
guidance, detects unusable guidance, re-queries the translator, and runs
complete episodes.

Each timestep: observe, merge the window into the known map, check the Fail
predicate (at most one re-query per step), pick an action, step. Blocked moves
are no-ops that still consume budget.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol, Sequence

import numpy as np

from .gridworld import (
    FLOOR,
    GOAL,
    UNKNOWN,
    WALL,
    Action,
    GridMap,
    Observation,
    Position,
    default_budget,
    observe,
    step,
)
from .guidance import (
    AtRegion,
    CompiledGuidance,
    ConditionalRule,
    Cursor,
    SeeGoal,
    SeeWall,
    ground,
    validate,
)
from .seeding import compile_seed, derive_seed
from .translator import Explanation, Translator

DEFAULT_RHO = 0.5


class InconsistentObservationError(RuntimeError):
    """An observation contradicts already-known cells (simulator bug guard)."""


class NoLegalActionError(RuntimeError):
    """All four neighbours are known walls (map/sim bug guard)."""


@dataclass
class PlannerState:
    """What the listener knows: position, remembered cells, visit counts."""

    position: Position
    known: np.ndarray  # H x W of '#', '.', '?', 'G'
    visit_counts: dict[Position, int] = field(default_factory=dict)
    steps_taken: int = 0

    @classmethod
    def empty(cls, height: int, width: int, position: Position) -> "PlannerState":
        known = np.full((height, width), UNKNOWN, dtype="<U1")
        return cls(position=position, known=known)

    @property
    def height(self) -> int:
        return int(self.known.shape[0])

    @property
    def width(self) -> int:
        return int(self.known.shape[1])

    def cell(self, pos: Position) -> str:
        if not (0 <= pos.row < self.height and 0 <= pos.col < self.width):
            return WALL  # the listener knows the map bounds
        return str(self.known[pos.row, pos.col])

    def is_known_wall(self, pos: Position) -> bool:
        return self.cell(pos) == WALL

    def goal_position(self) -> Position | None:
        hits = np.argwhere(self.known == GOAL)
        if len(hits) == 0:
            return None
        return Position(int(hits[0][0]), int(hits[0][1]))


@dataclass(frozen=True)
class EpisodeParams:
    budget: int | None = None  # None: max(50, 4 * shortest path)
    fov_radius: int = 2
    max_replans: int = 3
    revisit_limit: int = 3  # visits to one cell before Fail fires
    stall_limit: int = 10  # steps without value progress before Fail fires
    rng_seed: int = 0
    epsilon: float = 0.1
    kappa: float = 1.0
    rho: float = DEFAULT_RHO


@dataclass(frozen=True)
class TrajectoryStep:
    index: int
    position: Position  # position after the action resolved
    action: Action | None  # None: unparseable direct-actor output
    blocked: bool
    replanned: bool


@dataclass(frozen=True)
class Attempt:
    """One simulated episode. `length` includes blocked no-op steps; it is 0
    only in the degenerate start-equals-goal case."""

    explanation_id: str
    map_id: str
    replans: int
    length: int
    success: int
    trajectory: tuple[TrajectoryStep, ...]
    seed: int
    budget: int


def ground_state(
    observation: Observation,
    previous: PlannerState | None = None,
    grid_shape: tuple[int, int] | None = None,
) -> PlannerState:
    """Merge an observation into the known map; knowledge never regresses."""
    if previous is None:
        if grid_shape is None:
            raise ValueError("grid_shape required for the first observation")
        state = PlannerState.empty(grid_shape[0], grid_shape[1], observation.center)
    else:
        state = previous
        state.position = observation.center

    radius = observation.radius
    r0 = observation.center.row - radius
    c0 = observation.center.col - radius
    rr0, rr1 = max(0, r0), min(state.height, r0 + 2 * radius + 1)
    cc0, cc1 = max(0, c0), min(state.width, c0 + 2 * radius + 1)
    if rr0 < rr1 and cc0 < cc1:
        win = np.array(
            [list(row[cc0 - c0 : cc1 - c0]) for row in observation.window[rr0 - r0 : rr1 - r0]],
            dtype="<U1",
        )
        have = state.known[rr0:rr1, cc0:cc1]
        seen = win != UNKNOWN
        floor_or_goal = ((have == FLOOR) | (have == GOAL)) & ((win == FLOOR) | (win == GOAL))
        conflict = seen & (have != UNKNOWN) & (have != win) & ~floor_or_goal
        if conflict.any():
            r, c = (int(x) for x in np.argwhere(conflict)[0])
            raise InconsistentObservationError(
                f"cell ({rr0 + r}, {cc0 + c}) known {have[r, c]!r} but observed {win[r, c]!r}"
            )
        have[seen & (have == UNKNOWN)] = win[seen & (have == UNKNOWN)]
        have[(have == FLOOR) & (win == GOAL)] = GOAL  # goal marking is permanent
    state.visit_counts[observation.center] = state.visit_counts.get(observation.center, 0) + 1
    state.steps_taken = observation.steps_taken
    return state


def _condition_holds(condition, state: PlannerState, fov_radius: int) -> bool:
    if isinstance(condition, SeeGoal):
        goal = state.goal_position()
        return goal is not None and (
            abs(goal.row - state.position.row) <= fov_radius
            and abs(goal.col - state.position.col) <= fov_radius
        )
    if isinstance(condition, SeeWall):
        return state.is_known_wall(condition.direction.apply(state.position))
    if isinstance(condition, AtRegion):
        return condition.region.contains(state.position)
    raise TypeError(f"unknown condition {condition!r}")


def _greedy_action(
    guidance: CompiledGuidance | None, state: PlannerState, rho: float
) -> Action:
    """Rule 3: climb the value map minus a visit penalty, canonical tie-break."""
    best_action: Action | None = None
    best_score = -float("inf")
    for action in Action:
        nxt = action.apply(state.position)
        if state.is_known_wall(nxt):
            continue
        value = guidance.value_at(nxt) if guidance is not None else 0.0
        score = value - rho * state.visit_counts.get(nxt, 0)
        if score > best_score:
            best_score = score
            best_action = action
    if best_action is None:
        raise NoLegalActionError(f"all neighbours of {tuple(state.position)} are known walls")
    return best_action


def plan(
    guidance: CompiledGuidance | None,
    state: PlannerState,
    rules: Sequence[ConditionalRule],
    rng: random.Random,
    cursor: Cursor | None = None,
    fov_radius: int = 2,
    rho: float = DEFAULT_RHO,
    rules_enabled: bool = True,
) -> Action:
    """Action selection: (1) first matching rule, (2) the policy cursor when
    its prescribed move is not into a known wall, (3) value-greedy with a
    visit penalty. Deterministic; `rng` is part of the interface for plug-in
    selection rules but the built-in rules draw nothing from it."""
    if rules_enabled:
        for rule in rules:
            if _condition_holds(rule.condition, state, fov_radius):
                return rule.response.direction
    if cursor is not None and not cursor.exhausted:
        direction = cursor.current_direction()
        assert direction is not None
        if not state.is_known_wall(direction.apply(state.position)):
            cursor.advance()
            return direction
    return _greedy_action(guidance, state, rho)


@dataclass
class StallTracker:
    """Progress monitor behind Fail case (d): the best value seen so far and
    how many consecutive post-cursor steps failed to improve it."""

    best_value: float = -float("inf")
    stall_steps: int = 0

    def update(self, value: float, cursor_exhausted: bool) -> None:
        if not cursor_exhausted:
            self.best_value = max(self.best_value, value)
            self.stall_steps = 0
        elif value > self.best_value + 1e-12:
            self.best_value = value
            self.stall_steps = 0
        else:
            self.stall_steps += 1


def fail(
    guidance: CompiledGuidance | None,
    state: PlannerState,
    tracker: StallTracker,
    cursor: Cursor | None = None,
    revisit_limit: int = 3,
    stall_limit: int = 10,
) -> bool:
    """The Fail predicate: unusable compilation, policy contradicting a known
    wall, revisit churn, or a stalled value search."""
    if guidance is None:
        return True
    if cursor is not None and not cursor.exhausted:
        direction = cursor.current_direction()
        assert direction is not None
        if state.is_known_wall(direction.apply(state.position)):
            return True
    if state.visit_counts.get(state.position, 0) > revisit_limit:
        return True
    if cursor is not None and cursor.exhausted and tracker.stall_steps >= stall_limit:
        return True
    return False


def _usable_guidance(record, world: GridMap, params: EpisodeParams) -> CompiledGuidance | None:
    """Ground a compilation record, or None when it parsed badly or fails
    validation (both count as unusable guidance for the Fail predicate)."""
    if record.failed:
        return None
    program = record.program
    diags = validate(program, world.width, world.height, world.start)
    if any(d.severity == "error" for d in diags):
        return None
    return ground(
        program,
        world.width,
        world.height,
        world.start,
        epsilon=params.epsilon,
        kappa=params.kappa,
    )


Observer = Callable[[int, PlannerState], None]


def run_episode(
    world: GridMap,
    explanation: Explanation,
    translator: Translator,
    params: EpisodeParams,
    observer: Observer | None = None,
) -> Attempt:
    """One full episode with the replanning loop.

    Re-queries keep the accumulated known map and visit counts; only the
    program cursor and stall tracker reset. After `max_replans` re-queries the
    agent degrades to value-greedy search on steps where Fail still fires.
    """
    budget = params.budget if params.budget is not None else default_budget(world)
    episode_seed = params.rng_seed
    rng = random.Random(episode_seed)

    record = translator.compile(explanation, world, compile_seed(episode_seed, 0), sample_index=0)
    guidance = _usable_guidance(record, world, params)
    cursor = guidance.fresh_cursor() if guidance is not None else None
    tracker = StallTracker()

    pos = world.start
    state: PlannerState | None = None
    replans = 0
    steps_taken = 0
    trajectory: list[TrajectoryStep] = []

    if pos == world.goal:
        return Attempt(
            explanation_id=explanation.id,
            map_id=world.id,
            replans=0,
            length=0,
            success=1,
            trajectory=(),
            seed=episode_seed,
            budget=budget,
        )

    while steps_taken < budget:
        obs = observe(world, pos, params.fov_radius, steps_taken=steps_taken)
        state = ground_state(obs, state, grid_shape=(world.height, world.width))
        if observer is not None:
            observer(steps_taken, state)

        replanned_now = False
        failing = fail(
            guidance,
            state,
            tracker,
            cursor=cursor,
            revisit_limit=params.revisit_limit,
            stall_limit=params.stall_limit,
        )
        if failing and replans < params.max_replans:
            replans += 1
            replanned_now = True
            record = translator.compile(
                explanation, world, compile_seed(episode_seed, replans), sample_index=replans
            )
            guidance = _usable_guidance(record, world, params)
            cursor = guidance.fresh_cursor() if guidance is not None else None
            tracker = StallTracker()
            failing = guidance is None

        if failing or guidance is None:
            action = _greedy_action(guidance, state, params.rho)  # fallback: rule 3 only
        else:
            action = plan(
                guidance,
                state,
                guidance.rules,
                rng,
                cursor=cursor,
                fov_radius=params.fov_radius,
                rho=params.rho,
            )

        new_pos = step(world, pos, action)
        blocked = new_pos == pos
        steps_taken += 1
        trajectory.append(
            TrajectoryStep(
                index=steps_taken - 1,
                position=new_pos,
                action=action,
                blocked=blocked,
                replanned=replanned_now,
            )
        )
        pos = new_pos
        if guidance is not None:
            tracker.update(
                guidance.value_at(pos), cursor.exhausted if cursor is not None else True
            )
        if pos == world.goal:
            break

    success = 1 if pos == world.goal else 0
    return Attempt(
        explanation_id=explanation.id,
        map_id=world.id,
        replans=replans,
        length=steps_taken,
        success=success,
        trajectory=tuple(trajectory),
        seed=episode_seed,
        budget=budget,
    )


class DirectActor(Protocol):
    """Maps (explanation, observation rendering, trajectory summary) to an
    action token such as "RIGHT". Anything unparseable becomes a no-op step."""

    def __call__(self, explanation: Explanation, observation_text: str, history_text: str) -> str: ...


class ScriptedActor:
    """Plays a fixed token sequence, then empty (no-op) tokens."""

    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self._i = 0

    def __call__(self, explanation: Explanation, observation_text: str, history_text: str) -> str:
        if self._i >= len(self.tokens):
            return ""
        tok = self.tokens[self._i]
        self._i += 1
        return tok


def render_observation(obs: Observation) -> str:
    rows = [f"position: row {obs.center.row}, col {obs.center.col}; steps: {obs.steps_taken}"]
    rows.extend(obs.window)
    return "\n".join(rows)


def direct_episode(
    world: GridMap,
    explanation: Explanation,
    actor: DirectActor,
    params: EpisodeParams,
) -> Attempt:
    """Baseline without program-like guidance: the actor names the next action
    from the rendered observation; no replanning loop, so replans is always 0."""
    budget = params.budget if params.budget is not None else default_budget(world)
    pos = world.start
    steps_taken = 0
    trajectory: list[TrajectoryStep] = []
    recent: list[str] = []

    if pos == world.goal:
        return Attempt(
            explanation_id=explanation.id,
            map_id=world.id,
            replans=0,
            length=0,
            success=1,
            trajectory=(),
            seed=params.rng_seed,
            budget=budget,
        )

    while steps_taken < budget:
        obs = observe(world, pos, params.fov_radius, steps_taken=steps_taken)
        history = f"moves so far: {','.join(recent[-8:]) if recent else '(none)'}"
        token = actor(explanation, render_observation(obs), history)
        action: Action | None
        try:
            action = Action.from_token(token)
        except ValueError:
            action = None
        new_pos = step(world, pos, action) if action is not None else pos
        blocked = new_pos == pos
        steps_taken += 1
        trajectory.append(
            TrajectoryStep(
                index=steps_taken - 1,
                position=new_pos,
                action=action,
                blocked=blocked,
                replanned=False,
            )
        )
        recent.append(action.name if action is not None else "NOOP")
        pos = new_pos
        if pos == world.goal:
            break

    return Attempt(
        explanation_id=explanation.id,
        map_id=world.id,
        replans=0,
        length=steps_taken,
        success=1 if pos == world.goal else 0,
        trajectory=tuple(trajectory),
        seed=params.rng_seed,
        budget=budget,
    )


# --------------------------------------------------------------------------
# Trajectory log (line-delimited records, replayable by the CLI and web UI)
# --------------------------------------------------------------------------


def attempt_to_jsonl(attempt: Attempt, world: GridMap, params: EpisodeParams) -> str:
    meta = {
        "kind": "meta",
        "map_id": attempt.map_id,
        "explanation_id": attempt.explanation_id,
        "seed": attempt.seed,
        "budget": attempt.budget,
        "fov_radius": params.fov_radius,
        "start": [world.start.row, world.start.col],
        "replans": attempt.replans,
        "length": attempt.length,
        "success": attempt.success,
    }
    lines = [json.dumps(meta, sort_keys=True)]
    for t in attempt.trajectory:
        lines.append(
            json.dumps(
                {
                    "kind": "step",
                    "i": t.index,
                    "row": t.position.row,
                    "col": t.position.col,
                    "action": t.action.name if t.action is not None else None,
                    "blocked": t.blocked,
                    "replanned": t.replanned,
                },
                sort_keys=True,
            )
        )
    return "\n".join(lines) + "\n"


def write_trajectory(path: str | Path, attempt: Attempt, world: GridMap, params: EpisodeParams) -> None:
    Path(path).write_text(attempt_to_jsonl(attempt, world, params), encoding="utf-8")


def read_trajectory(path: str | Path) -> tuple[dict, list[dict]]:
    """Returns (meta record, step records)."""
    meta: dict | None = None
    steps: list[dict] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        if rec.get("kind") == "meta":
            meta = rec
        elif rec.get("kind") == "step":
            steps.append(rec)
        else:
            raise ValueError(f"unknown trajectory record kind: {rec.get('kind')!r}")
    if meta is None:
        raise ValueError("trajectory file has no meta record")
    return meta, steps


def derive_attempt_seed(base_seed: int, attempt_index: int) -> int:
    """Seed for the attempt_index-th independent attempt of an evaluation."""
    return derive_seed(base_seed, "attempt", attempt_index)
