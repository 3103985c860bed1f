"""The guidance DSL: programs with POLICY / VALUE / RULES sections, a
line-oriented parser with positioned diagnostics, a map-aware validator, and
the grounding pass that turns a program into a policy prior plus value map.

Grammar (case-sensitive keywords, `#` starts a comment):

    program     := section+
    section     := "POLICY" NL step+ | "VALUE" NL annot+ | "RULES" NL rule+
    step        := "MOVE" dir INT NL | "GOTO" INT INT NL
    dir         := "UP" | "DOWN" | "LEFT" | "RIGHT"
    annot       := "REGION" INT INT INT INT REAL NL
    rule        := "IF" cond "THEN" step
    cond        := "SEE GOAL" | "SEE WALL" dir | "AT" INT INT INT INT

`GOTO r c` desugars at grounding time into a single-cell value annotation with
value 10 and contributes no policy mass.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

from .gridworld import Action, Position

DEFAULT_EPSILON = 0.1
DEFAULT_KAPPA = 1.0
GOTO_VALUE = 10.0


class GuidanceSyntaxError(ValueError):
    """Parse error with a 1-based source position."""

    def __init__(self, line: int, col: int, message: str):
        self.line = line
        self.col = col
        self.message = message
        super().__init__(f"{line}:{col}: {message}")


class EmptyProgramError(ValueError):
    """The program text contains no sections at all."""


class Rect(NamedTuple):
    """Inclusive cell rectangle."""

    r0: int
    c0: int
    r1: int
    c1: int

    def contains(self, pos: Position) -> bool:
        return self.r0 <= pos.row <= self.r1 and self.c0 <= pos.col <= self.c1

    def manhattan_to(self, pos: Position) -> int:
        dr = max(self.r0 - pos.row, 0, pos.row - self.r1)
        dc = max(self.c0 - pos.col, 0, pos.col - self.c1)
        return dr + dc


@dataclass(frozen=True)
class PolicyStep:
    direction: Action
    count: int


@dataclass(frozen=True)
class GotoStep:
    row: int
    col: int


Step = Union[PolicyStep, GotoStep]


@dataclass(frozen=True)
class ValueAnnotation:
    region: Rect
    value: float


@dataclass(frozen=True)
class SeeGoal:
    pass


@dataclass(frozen=True)
class SeeWall:
    direction: Action


@dataclass(frozen=True)
class AtRegion:
    region: Rect


Condition = Union[SeeGoal, SeeWall, AtRegion]


@dataclass(frozen=True)
class ConditionalRule:
    condition: Condition
    response: PolicyStep


@dataclass(frozen=True)
class GuidanceProgram:
    policy_steps: tuple[Step, ...] = ()
    value_annotations: tuple[ValueAnnotation, ...] = ()
    rules: tuple[ConditionalRule, ...] = ()
    source_text: str = ""


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning"
    code: str
    message: str


@dataclass
class Cursor:
    """Program counter over the MOVE steps: current step index and how many
    repetitions of it remain."""

    steps: tuple[PolicyStep, ...]
    step_index: int = 0
    remaining: int = 0

    def __post_init__(self) -> None:
        if self.steps and self.remaining == 0 and self.step_index == 0:
            self.remaining = self.steps[0].count

    @property
    def exhausted(self) -> bool:
        return self.step_index >= len(self.steps)

    def current_direction(self) -> Action | None:
        if self.exhausted:
            return None
        return self.steps[self.step_index].direction

    def advance(self) -> None:
        if self.exhausted:
            return
        self.remaining -= 1
        if self.remaining <= 0:
            self.step_index += 1
            if not self.exhausted:
                self.remaining = self.steps[self.step_index].count


@dataclass(frozen=True)
class CompiledGuidance:
    """Grounded guidance: per-cell action distributions along the intended
    trajectory, a dense value map, and the rules kept for runtime dispatch."""

    width: int
    height: int
    start: Position
    move_steps: tuple[PolicyStep, ...]
    rules: tuple[ConditionalRule, ...]
    policy_prior: dict[Position, dict[Action, float]]
    value_map: np.ndarray
    epsilon: float = DEFAULT_EPSILON
    kappa: float = DEFAULT_KAPPA

    def action_distribution(self, pos: Position) -> dict[Action, float]:
        """Distribution at `pos`: biased along the intended trajectory,
        uniform everywhere else."""
        if pos in self.policy_prior:
            return dict(self.policy_prior[pos])
        return {a: 0.25 for a in Action}

    def value_at(self, pos: Position) -> float:
        return float(self.value_map[pos.row, pos.col])

    def fresh_cursor(self) -> Cursor:
        return Cursor(steps=self.move_steps)


_DIRECTIONS = {"UP": Action.UP, "DOWN": Action.DOWN, "LEFT": Action.LEFT, "RIGHT": Action.RIGHT}


class _Token(NamedTuple):
    text: str
    line: int
    col: int


class _LineParser:
    """One logical line of tokens with positioned take/expect helpers."""

    def __init__(self, tokens: list[_Token], line_no: int):
        self.tokens = tokens
        self.line_no = line_no
        self.idx = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.idx] if self.idx < len(self.tokens) else None

    def take(self, what: str) -> _Token:
        tok = self.peek()
        if tok is None:
            last = self.tokens[-1]
            raise GuidanceSyntaxError(
                self.line_no, last.col + len(last.text), f"expected {what} at end of line"
            )
        self.idx += 1
        return tok

    def take_int(self, what: str) -> tuple[int, _Token]:
        tok = self.take(what)
        if not tok.text.isdigit():
            raise GuidanceSyntaxError(tok.line, tok.col, f"expected {what}, got {tok.text!r}")
        return int(tok.text), tok

    def take_real(self, what: str) -> float:
        tok = self.take(what)
        try:
            return float(tok.text)
        except ValueError:
            raise GuidanceSyntaxError(tok.line, tok.col, f"expected {what}, got {tok.text!r}") from None

    def take_direction(self) -> Action:
        tok = self.take("direction")
        if tok.text not in _DIRECTIONS:
            raise GuidanceSyntaxError(tok.line, tok.col, f"expected direction, got {tok.text!r}")
        return _DIRECTIONS[tok.text]

    def expect_end(self) -> None:
        tok = self.peek()
        if tok is not None:
            raise GuidanceSyntaxError(tok.line, tok.col, f"unexpected trailing token {tok.text!r}")


def _tokenize(text: str) -> list[_LineParser]:
    lines: list[_LineParser] = []
    for line_no, raw in enumerate(text.split("\n"), start=1):
        body = raw.split("#", 1)[0]
        tokens: list[_Token] = []
        i = 0
        while i < len(body):
            if body[i].isspace():
                i += 1
                continue
            j = i
            while j < len(body) and not body[j].isspace():
                j += 1
            tokens.append(_Token(body[i:j], line_no, i + 1))
            i = j
        if tokens:
            lines.append(_LineParser(tokens, line_no))
    return lines


def _parse_move(lp: _LineParser) -> PolicyStep:
    direction = lp.take_direction()
    count, tok = lp.take_int("step count")
    if count < 1:
        raise GuidanceSyntaxError(tok.line, tok.col, "step count must be >= 1")
    lp.expect_end()
    return PolicyStep(direction=direction, count=count)


def _parse_goto(lp: _LineParser) -> GotoStep:
    row, _ = lp.take_int("row")
    col, _ = lp.take_int("column")
    lp.expect_end()
    return GotoStep(row=row, col=col)


def _parse_region(lp: _LineParser) -> ValueAnnotation:
    r0, _ = lp.take_int("region r0")
    c0, _ = lp.take_int("region c0")
    r1, t1 = lp.take_int("region r1")
    c1, t2 = lp.take_int("region c1")
    value = lp.take_real("region value")
    lp.expect_end()
    if r1 < r0:
        raise GuidanceSyntaxError(t1.line, t1.col, "region rows out of order")
    if c1 < c0:
        raise GuidanceSyntaxError(t2.line, t2.col, "region columns out of order")
    return ValueAnnotation(region=Rect(r0, c0, r1, c1), value=value)


def _parse_rule(lp: _LineParser) -> ConditionalRule:
    head = lp.take("IF")
    if head.text != "IF":
        raise GuidanceSyntaxError(head.line, head.col, f"expected IF, got {head.text!r}")
    cond_tok = lp.take("condition")
    condition: Condition
    if cond_tok.text == "SEE":
        what = lp.take("GOAL or WALL")
        if what.text == "GOAL":
            condition = SeeGoal()
        elif what.text == "WALL":
            condition = SeeWall(direction=lp.take_direction())
        else:
            raise GuidanceSyntaxError(what.line, what.col, f"expected GOAL or WALL, got {what.text!r}")
    elif cond_tok.text == "AT":
        r0, _ = lp.take_int("region r0")
        c0, _ = lp.take_int("region c0")
        r1, t1 = lp.take_int("region r1")
        c1, t2 = lp.take_int("region c1")
        if r1 < r0:
            raise GuidanceSyntaxError(t1.line, t1.col, "region rows out of order")
        if c1 < c0:
            raise GuidanceSyntaxError(t2.line, t2.col, "region columns out of order")
        condition = AtRegion(region=Rect(r0, c0, r1, c1))
    else:
        raise GuidanceSyntaxError(cond_tok.line, cond_tok.col, f"expected SEE or AT, got {cond_tok.text!r}")
    then = lp.take("THEN")
    if then.text != "THEN":
        raise GuidanceSyntaxError(then.line, then.col, f"expected THEN, got {then.text!r}")
    verb = lp.take("MOVE")
    if verb.text != "MOVE":
        raise GuidanceSyntaxError(verb.line, verb.col, "rule responses must be MOVE steps")
    response = _parse_move(lp)
    return ConditionalRule(condition=condition, response=response)


def parse_program(text: str) -> GuidanceProgram:
    """Parse DSL text into a GuidanceProgram.

    Raises GuidanceSyntaxError with a 1-based (line, col) on any grammar
    violation, and EmptyProgramError when no section is present.
    """
    lines = _tokenize(text)
    if not lines:
        raise EmptyProgramError("program has no sections")

    _check_nonempty_sections(lines)

    policy: list[Step] = []
    annots: list[ValueAnnotation] = []
    rules: list[ConditionalRule] = []
    section: str | None = None

    for lp in lines:
        head = lp.tokens[0]
        if head.text in ("POLICY", "VALUE", "RULES"):
            lp.idx = 1
            lp.expect_end()
            section = head.text
            continue
        if section is None:
            raise GuidanceSyntaxError(
                head.line, head.col, f"expected a section keyword (POLICY, VALUE or RULES), got {head.text!r}"
            )
        lp.idx = 1
        if section == "POLICY":
            if head.text == "MOVE":
                policy.append(_parse_move(lp))
            elif head.text == "GOTO":
                policy.append(_parse_goto(lp))
            else:
                raise GuidanceSyntaxError(head.line, head.col, f"expected MOVE or GOTO, got {head.text!r}")
        elif section == "VALUE":
            if head.text != "REGION":
                raise GuidanceSyntaxError(head.line, head.col, f"expected REGION, got {head.text!r}")
            annots.append(_parse_region(lp))
        else:
            lp.idx = 0
            rules.append(_parse_rule(lp))

    return GuidanceProgram(
        policy_steps=tuple(policy),
        value_annotations=tuple(annots),
        rules=tuple(rules),
        source_text=text,
    )


def _check_nonempty_sections(lines: list[_LineParser]) -> None:
    keywords = {"POLICY", "VALUE", "RULES"}
    for i, lp in enumerate(lines):
        if lp.tokens[0].text in keywords:
            nxt = lines[i + 1].tokens[0] if i + 1 < len(lines) else None
            if nxt is None or nxt.text in keywords:
                tok = lp.tokens[0]
                raise GuidanceSyntaxError(tok.line, tok.col, f"section {tok.text} has no entries")


def _canon_real(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def serialize_program(program: GuidanceProgram) -> str:
    """Canonical text form; `parse_program(serialize_program(p))` equals `p`
    up to source_text."""
    out: list[str] = []
    if program.policy_steps:
        out.append("POLICY")
        for s in program.policy_steps:
            if isinstance(s, PolicyStep):
                out.append(f"MOVE {s.direction.name} {s.count}")
            else:
                out.append(f"GOTO {s.row} {s.col}")
    if program.value_annotations:
        out.append("VALUE")
        for a in program.value_annotations:
            r = a.region
            out.append(f"REGION {r.r0} {r.c0} {r.r1} {r.c1} {_canon_real(a.value)}")
    if program.rules:
        out.append("RULES")
        for rule in program.rules:
            cond = rule.condition
            if isinstance(cond, SeeGoal):
                cond_text = "SEE GOAL"
            elif isinstance(cond, SeeWall):
                cond_text = f"SEE WALL {cond.direction.name}"
            else:
                rg = cond.region
                cond_text = f"AT {rg.r0} {rg.c0} {rg.r1} {rg.c1}"
            resp = rule.response
            out.append(f"IF {cond_text} THEN MOVE {resp.direction.name} {resp.count}")
    return "\n".join(out) + "\n"


def programs_equal(a: GuidanceProgram, b: GuidanceProgram) -> bool:
    """Structural equality ignoring source_text."""
    return (
        a.policy_steps == b.policy_steps
        and a.value_annotations == b.value_annotations
        and a.rules == b.rules
    )


def _trace_policy(steps: tuple[Step, ...], start: Position) -> list[tuple[Position, Action]]:
    """Intended trajectory over an obstacle-free grid: (cell, prescribed action)
    pairs for every cell the policy acts from."""
    trace: list[tuple[Position, Action]] = []
    pos = start
    for s in steps:
        if isinstance(s, GotoStep):
            continue
        for _ in range(s.count):
            trace.append((pos, s.direction))
            pos = s.direction.apply(pos)
    return trace


def validate(program: GuidanceProgram, grid_width: int, grid_height: int, start: Position) -> list[Diagnostic]:
    """Map-aware lint: regions must fit the map and the policy trace must stay
    inside it. An empty result means the program grounds cleanly."""

    def rect_ok(rect: Rect) -> bool:
        return 0 <= rect.r0 and rect.r1 < grid_height and 0 <= rect.c0 and rect.c1 < grid_width

    diags: list[Diagnostic] = []
    for a in program.value_annotations:
        if not rect_ok(a.region):
            diags.append(
                Diagnostic("error", "RegionOutOfBounds", f"value region {tuple(a.region)} exceeds {grid_height}x{grid_width} map")
            )
    for s in program.policy_steps:
        if isinstance(s, GotoStep) and not rect_ok(Rect(s.row, s.col, s.row, s.col)):
            diags.append(
                Diagnostic("error", "RegionOutOfBounds", f"GOTO target ({s.row}, {s.col}) exceeds {grid_height}x{grid_width} map")
            )
    pos = start
    for cell, action in _trace_policy(program.policy_steps, start):
        pos = action.apply(cell)
        if not (0 <= pos.row < grid_height and 0 <= pos.col < grid_width):
            diags.append(
                Diagnostic(
                    "error",
                    "OutOfBoundsDisplacement",
                    f"policy trace leaves the map at {tuple(pos)} (started from {tuple(start)})",
                )
            )
            break
    for rule in program.rules:
        cond = rule.condition
        if isinstance(cond, AtRegion) and not rect_ok(cond.region):
            diags.append(
                Diagnostic("error", "RuleRegionOutOfBounds", f"rule region {tuple(cond.region)} exceeds {grid_height}x{grid_width} map")
            )
    return diags


def ground(
    program: GuidanceProgram,
    grid_width: int,
    grid_height: int,
    start: Position,
    epsilon: float = DEFAULT_EPSILON,
    kappa: float = DEFAULT_KAPPA,
) -> CompiledGuidance:
    """Ground a validated program into (policy prior, value map).

    The policy prior traces the MOVE steps over an obstacle-free grid and, at
    each visited cell, mixes a point mass on the prescribed action with a
    uniform distribution: prescribed gets 1 - 3*eps/4, each other action
    eps/4. Cells off the trace stay uniform. The value map is the pointwise
    max over annotations of (value - kappa * Manhattan distance to region);
    GOTO targets act as single-cell annotations of value 10. With no
    annotations the value map is identically zero.
    """
    prior: dict[Position, dict[Action, float]] = {}
    for cell, action in _trace_policy(program.policy_steps, start):
        if cell in prior:
            continue  # first prescription wins on self-crossing traces
        prior[cell] = {a: (1.0 - epsilon + epsilon / 4.0) if a == action else epsilon / 4.0 for a in Action}

    annots = list(program.value_annotations)
    for s in program.policy_steps:
        if isinstance(s, GotoStep):
            annots.append(ValueAnnotation(region=Rect(s.row, s.col, s.row, s.col), value=GOTO_VALUE))

    value_map = np.zeros((grid_height, grid_width), dtype=np.float64)
    if annots:
        for r in range(grid_height):
            for c in range(grid_width):
                p = Position(r, c)
                value_map[r, c] = max(a.value - kappa * a.region.manhattan_to(p) for a in annots)
    value_map.flags.writeable = False

    move_steps = tuple(s for s in program.policy_steps if isinstance(s, PolicyStep))
    return CompiledGuidance(
        width=grid_width,
        height=grid_height,
        start=start,
        move_steps=move_steps,
        rules=program.rules,
        policy_prior=prior,
        value_map=value_map,
        epsilon=epsilon,
        kappa=kappa,
    )
