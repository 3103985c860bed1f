"""Translators: pluggable compilers from explanation text to guidance programs.

Four kinds are provided:

* oracle   - ignores the text and emits the BFS-optimal program for the map
             (ground-truth upper bound, used heavily in tests),
* keyword  - deterministic offline pattern matcher driven by a versioned
             lexicon file,
* scripted - replays canned DSL strings from a fixture file,
* remote   - chat-completion endpoint speaking the de-facto open schema,
             with retries, bounded concurrency and an on-disk cache.
"""
from __future__ import annotations

import json
import os
import re
import threading
import time
from dataclasses import dataclass, field, replace
from hashlib import sha256
from importlib import resources
from pathlib import Path
from typing import Sequence

import httpx

from .gridworld import Action, GridMap, serialize_map, shortest_path_actions
from .seeding import derive_seed
from .guidance import (
    AtRegion,
    ConditionalRule,
    EmptyProgramError,
    GuidanceProgram,
    GuidanceSyntaxError,
    PolicyStep,
    Rect,
    SeeGoal,
    SeeWall,
    ValueAnnotation,
    parse_program,
    serialize_program,
)

API_KEY_ENV = "WAYFINDER_API_KEY"
MAX_REPLY_BYTES = 16 * 1024
REGION_VALUE = 10.0


class RemoteUnavailableError(RuntimeError):
    """The chat endpoint could not be reached after bounded retries."""


@dataclass(frozen=True)
class Explanation:
    id: str
    map_id: str
    text: str
    word_count: int = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "word_count", len(self.text.split()))


@dataclass(frozen=True)
class ParseFailure:
    message: str


@dataclass(frozen=True)
class TranslatorConfig:
    kind: str = "keyword"  # oracle | keyword | remote | scripted
    endpoint_url: str | None = None
    model_name: str | None = None
    temperature: float = 0.7
    max_samples: int = 5
    cache_dir: str | None = None
    compiler_sees_map: bool = False
    max_concurrency: int = 4
    api_key: str | None = None
    script_path: str | None = None

    def __post_init__(self) -> None:
        if self.kind == "remote" and not (self.endpoint_url and self.model_name):
            raise ValueError("remote translator requires endpoint_url and model_name")
        if self.max_samples < 1:
            raise ValueError("max_samples must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompilationRecord:
    explanation_id: str
    map_id: str
    sample_index: int
    raw_output: str
    program: GuidanceProgram | ParseFailure
    seed: int

    @property
    def failed(self) -> bool:
        return isinstance(self.program, ParseFailure)

    def to_json_dict(self) -> dict:
        return {
            "explanation_id": self.explanation_id,
            "map_id": self.map_id,
            "sample_index": self.sample_index,
            "raw_output": self.raw_output,
            "program": None if self.failed else serialize_program(self.program),
            "failure": self.program.message if self.failed else None,
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "CompilationRecord":
        program: GuidanceProgram | ParseFailure
        if data.get("program") is None:
            program = ParseFailure(data.get("failure") or "unknown failure")
        else:
            program = parse_program(data["program"])
        return cls(
            explanation_id=data["explanation_id"],
            map_id=data["map_id"],
            sample_index=data["sample_index"],
            raw_output=data["raw_output"],
            program=program,
            seed=data["seed"],
        )


def load_lexicon() -> dict:
    with resources.files("wayfinder.data").joinpath("lexicon.json").open("r", encoding="utf-8") as fh:
        return json.load(fh)


def lexicon_hash() -> str:
    raw = resources.files("wayfinder.data").joinpath("lexicon.json").read_bytes()
    return sha256(raw).hexdigest()[:16]


def _parse_raw(raw: str) -> GuidanceProgram | ParseFailure:
    try:
        return parse_program(raw)
    except GuidanceSyntaxError as e:
        return ParseFailure(str(e))
    except EmptyProgramError:
        return ParseFailure("empty program")


class Translator:
    """Base: turn (explanation, world, seed) into a raw DSL string, then parse."""

    kind = "base"

    def raw_output(self, explanation: Explanation, world: GridMap, seed: int) -> str:
        raise NotImplementedError

    def compile(
        self, explanation: Explanation, world: GridMap, seed: int, sample_index: int = 0
    ) -> CompilationRecord:
        raw = self.raw_output(explanation, world, seed)
        return CompilationRecord(
            explanation_id=explanation.id,
            map_id=world.id,
            sample_index=sample_index,
            raw_output=raw,
            program=_parse_raw(raw),
            seed=seed,
        )


def compile_explanation(
    translator: Translator, explanation: Explanation, world: GridMap, seed: int, sample_index: int = 0
) -> CompilationRecord:
    """Functional entry point over Translator.compile."""
    return translator.compile(explanation, world, seed, sample_index)


def draw_compilations(
    translator: Translator, explanation: Explanation, world: GridMap, k: int, base_seed: int
) -> list[CompilationRecord]:
    """K samples from the compilation distribution, with distinct derived seeds."""
    return [
        translator.compile(explanation, world, derive_seed(base_seed, "compilation", i), sample_index=i)
        for i in range(k)
    ]


# --------------------------------------------------------------------------
# Oracle
# --------------------------------------------------------------------------


def path_to_runs(actions: Sequence[Action]) -> list[PolicyStep]:
    """Compress an action sequence into maximal same-direction runs."""
    runs: list[PolicyStep] = []
    for a in actions:
        if runs and runs[-1].direction == a:
            runs[-1] = PolicyStep(direction=a, count=runs[-1].count + 1)
        else:
            runs.append(PolicyStep(direction=a, count=1))
    return runs


def oracle_translate(world: GridMap) -> GuidanceProgram:
    """BFS shortest path compressed into MOVE runs, plus a value annotation on
    the goal cell. Ties between equal-length paths are fixed by the BFS
    neighbour expansion order (canonical action order)."""
    actions = shortest_path_actions(world, world.start, world.goal)
    assert actions is not None
    policy = tuple(path_to_runs(actions))
    goal = world.goal
    annots = (ValueAnnotation(region=Rect(goal.row, goal.col, goal.row, goal.col), value=REGION_VALUE),)
    program = GuidanceProgram(policy_steps=policy, value_annotations=annots)
    return replace(program, source_text=serialize_program(program))


class OracleTranslator(Translator):
    kind = "oracle"

    def raw_output(self, explanation: Explanation, world: GridMap, seed: int) -> str:
        return serialize_program(oracle_translate(world))


# --------------------------------------------------------------------------
# Keyword
# --------------------------------------------------------------------------


def _band(size: int, third: int, which: str) -> tuple[int, int]:
    if which == "low":
        return (0, third - 1)
    if which == "high":
        return (size - third, size - 1)
    lo = min(third, size - 1)
    hi = max(size - third - 1, lo)
    return (lo, hi)


def _region_for(world: GridMap, vertical: str | None, horizontal: str | None) -> Rect:
    h, w = world.height, world.width
    bh, bw = max(1, h // 3), max(1, w // 3)
    if vertical == "top":
        r0, r1 = _band(h, bh, "low")
    elif vertical == "bottom":
        r0, r1 = _band(h, bh, "high")
    elif vertical == "mid":
        r0, r1 = _band(h, bh, "mid")
    else:
        r0, r1 = 0, h - 1
    if horizontal == "left":
        c0, c1 = _band(w, bw, "low")
    elif horizontal == "right":
        c0, c1 = _band(w, bw, "high")
    elif horizontal == "mid":
        c0, c1 = _band(w, bw, "mid")
    else:
        c0, c1 = 0, w - 1
    return Rect(r0, c0, r1, c1)


_TOKEN_RE = re.compile(r"[a-z0-9]+|[,.;:!?]")


def _tokens(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower().replace("-", " "))


class _Extraction:
    """Scratch state for one keyword-translation pass."""

    def __init__(self, tokens: list[str], lex: dict):
        self.tokens = tokens
        self.lex = lex
        self.consumed = [False] * len(tokens)

    def is_free(self, i: int) -> bool:
        return 0 <= i < len(self.tokens) and not self.consumed[i]

    def consume(self, *indices: int) -> None:
        for i in indices:
            if 0 <= i < len(self.tokens):
                self.consumed[i] = True


def _find_region_phrase(ex: _Extraction, i: int, world: GridMap) -> tuple[Rect, list[int]] | None:
    """Match a corner / side / center phrase starting at token i."""
    toks, lex = ex.tokens, ex.lex
    vert, horiz = lex["vertical_words"], lex["horizontal_words"]
    tok = toks[i]
    if tok in lex["center_words"]:
        return _region_for(world, "mid", "mid"), [i]
    if tok in vert and i + 1 < len(toks):
        nxt = toks[i + 1]
        if nxt in horiz:  # "top left [corner]"
            used = [i, i + 1]
            if i + 2 < len(toks) and toks[i + 2] in ("corner", "corners"):
                used.append(i + 2)
            return _region_for(world, vert[tok], horiz[nxt]), used
        if nxt in lex["side_words"] or nxt in ("corner", "corners", "row", "rows"):
            return _region_for(world, vert[tok], None), [i, i + 1]
    if tok in horiz and i + 1 < len(toks):
        nxt = toks[i + 1]
        if nxt in lex["side_words"] or nxt in ("corner", "corners", "column", "columns"):
            return _region_for(world, None, horiz[tok]), [i, i + 1]
    return None


def _count_near(ex: _Extraction, i: int) -> tuple[int, list[int]]:
    """Count attached to the direction token at i: prefer the tokens after,
    then before, skipping filler words; default 1."""
    lex = ex.lex
    fillers = set(lex["filler_tokens"])
    counts = lex["count_words"]

    def as_count(tok: str) -> int | None:
        if tok.isdigit():
            return int(tok)
        return counts.get(tok)

    for step_dir in (1, -1):
        j = i + step_dir
        hops = 0
        while 0 <= j < len(ex.tokens) and hops < 2:
            tok = ex.tokens[j]
            if not ex.is_free(j):
                break
            n = as_count(tok)
            if n is not None and n >= 1:
                return n, [j]
            if tok not in fillers:
                break
            j += step_dir
            hops += 1
    return 1, []


def _extract_rules(ex: _Extraction, world: GridMap) -> list[ConditionalRule]:
    toks, lex = ex.tokens, ex.lex
    directions = lex["directions"]
    rules: list[ConditionalRule] = []
    sentence_breaks = {".", ";", "!", "?"}
    i = 0
    while i < len(toks):
        if toks[i] not in ("if", "when") or not ex.is_free(i):
            i += 1
            continue
        # condition segment runs to then/and/comma, response to sentence end
        j = i + 1
        while j < len(toks) and toks[j] not in ("then", "and", ",") and toks[j] not in sentence_breaks:
            j += 1
        if j >= len(toks) or toks[j] in sentence_breaks:
            i += 1
            continue
        k = j + 1
        while k < len(toks) and toks[k] not in sentence_breaks and toks[k] not in ("if", "when"):
            k += 1
        cond_span = list(range(i, j))
        resp_span = list(range(j + 1, k))

        condition = None
        cond_used: list[int] = []
        cond_toks = [toks[n] for n in cond_span]
        if any(t in lex["goal_words"] for t in cond_toks):
            condition = SeeGoal()
            cond_used = cond_span
        elif any(t in lex["wall_words"] for t in cond_toks):
            dir_tok = next((t for t in cond_toks if t in directions), None)
            if dir_tok is not None:
                condition = SeeWall(direction=Action[directions[dir_tok]])
                cond_used = cond_span
        else:
            for n in cond_span:
                hit = _find_region_phrase(ex, n, world)
                if hit is not None:
                    condition = AtRegion(region=hit[0])
                    cond_used = cond_span
                    break

        response = None
        resp_used: list[int] = []
        if condition is not None:
            for n in resp_span:
                tok = toks[n]
                if tok in directions and ex.is_free(n):
                    count, used = _count_near(ex, n)
                    response = PolicyStep(direction=Action[directions[tok]], count=count)
                    resp_used = [n, *used]
                    break
        if condition is not None and response is not None:
            rules.append(ConditionalRule(condition=condition, response=response))
            ex.consume(i, j, *cond_used, *resp_used)
            i = k
        else:
            i += 1
    return rules


def keyword_translate(explanation: Explanation, world: GridMap, lexicon: dict | None = None) -> GuidanceProgram:
    """Deterministic pattern extraction: movement phrases become MOVE steps,
    corner/side/center phrases become value regions at fixed map fractions,
    and recognized if-clauses become rules. Raises EmptyProgramError when the
    text yields nothing."""
    lex = lexicon or load_lexicon()
    ex = _Extraction(_tokens(explanation.text), lex)

    rules = _extract_rules(ex, world)

    annots: list[ValueAnnotation] = []
    i = 0
    while i < len(ex.tokens):
        if ex.is_free(i):
            hit = _find_region_phrase(ex, i, world)
            if hit is not None:
                region, used = hit
                annots.append(ValueAnnotation(region=region, value=REGION_VALUE))
                ex.consume(*used)
                i = used[-1] + 1
                continue
        i += 1

    steps: list[PolicyStep] = []
    directions = lex["directions"]
    for i, tok in enumerate(ex.tokens):
        if tok in directions and ex.is_free(i):
            count, used = _count_near(ex, i)
            steps.append(PolicyStep(direction=Action[directions[tok]], count=count))
            ex.consume(i, *used)

    if not (steps or annots or rules):
        raise EmptyProgramError(f"no guidance extracted from {explanation.text!r}")
    program = GuidanceProgram(
        policy_steps=tuple(steps), value_annotations=tuple(annots), rules=tuple(rules)
    )
    return replace(program, source_text=serialize_program(program))


class KeywordTranslator(Translator):
    kind = "keyword"

    def __init__(self, lexicon: dict | None = None):
        self.lexicon = lexicon or load_lexicon()

    def raw_output(self, explanation: Explanation, world: GridMap, seed: int) -> str:
        try:
            return serialize_program(keyword_translate(explanation, world, self.lexicon))
        except EmptyProgramError:
            return ""


# --------------------------------------------------------------------------
# Scripted
# --------------------------------------------------------------------------


class ScriptedTranslator(Translator):
    """Replays canned raw DSL strings: output index is `seed % len(outputs)`.

    Episode replan seeds are snapped so that the replan ordinal survives the
    modulo (see seeding.compile_seed), hence scripts with up to 16 entries
    replay in authoring order within an episode.
    """

    kind = "scripted"

    def __init__(self, outputs: Sequence[str]):
        if not outputs:
            raise ValueError("scripted translator needs at least one output")
        self.outputs = list(outputs)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedTranslator":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list) or not all(isinstance(s, str) for s in data):
            raise ValueError("script file must be a JSON list of DSL strings")
        return cls(data)

    def raw_output(self, explanation: Explanation, world: GridMap, seed: int) -> str:
        return self.outputs[seed % len(self.outputs)]


# --------------------------------------------------------------------------
# Remote
# --------------------------------------------------------------------------

PROMPT_GRAMMAR = """program     := section+
section     := "POLICY" NL step+ | "VALUE" NL annot+ | "RULES" NL rule+
step        := "MOVE" dir INT NL | "GOTO" INT INT NL
dir         := "UP" | "DOWN" | "LEFT" | "RIGHT"
annot       := "REGION" INT INT INT INT REAL NL
rule        := "IF" cond "THEN" step
cond        := "SEE GOAL" | "SEE WALL" dir | "AT" INT INT INT INT"""

SYSTEM_PROMPT = (
    "You convert route explanations into a small guidance program for an agent "
    "that walks a grid it cannot fully see. Reply with exactly one fenced code "
    "block containing a program in this grammar:\n\n" + PROMPT_GRAMMAR + "\n\n"
    "Rows are counted from 0 at the top, columns from 0 at the left. MOVE lines "
    "give step-by-step actions, REGION lines mark where the goal or useful "
    "landmarks are (higher value = more promising), and IF rules give "
    "contingencies. Use only what the explanation supports."
)

_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*\r?\n(.*?)```", re.DOTALL)


def build_prompt(explanation: Explanation, world: GridMap, compiler_sees_map: bool = False) -> list[dict]:
    """Chat messages for the remote compiler. The map layout is withheld by
    default: the compiler stands in for the listener, who cannot see the map."""
    lines = [
        f"Map: {world.height} rows x {world.width} columns.",
        f"The agent starts at row {world.start.row}, column {world.start.col}.",
    ]
    if compiler_sees_map:
        lines.append("Full map layout ('#' wall, '.' floor, 'S' start, 'G' goal):")
        lines.append(serialize_map(world).rstrip("\n"))
    lines.append("")
    lines.append(f'Explanation: "{explanation.text}"')
    return [
        {"role": "system", "content": SYSTEM_PROMPT},
        {"role": "user", "content": "\n".join(lines)},
    ]


def extract_fenced_block(reply: str) -> str | None:
    m = _FENCE_RE.search(reply)
    return m.group(1) if m else None


class ResponseCache:
    """One file per record under cache_dir, named by the hex cache key.

    Concurrent readers are free; writers take a per-key lock so a request for
    a key being written blocks until the write lands (no duplicate remote
    calls). Writes are atomic via rename.
    """

    def __init__(self, cache_dir: str | Path):
        self.dir = Path(cache_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._registry_lock = threading.Lock()

    def lock_for(self, key: str) -> threading.Lock:
        with self._registry_lock:
            return self._locks.setdefault(key, threading.Lock())

    def path(self, key: str) -> Path:
        return self.dir / key

    def get(self, key: str) -> dict | None:
        p = self.path(key)
        if not p.exists():
            return None
        return json.loads(p.read_text(encoding="utf-8"))

    def put(self, key: str, payload: dict) -> None:
        tmp = self.path(key).with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        os.replace(tmp, self.path(key))


def _auth_headers(config: TranslatorConfig) -> dict[str, str]:
    key = config.api_key or os.environ.get(API_KEY_ENV)
    headers = {"Content-Type": "application/json"}
    if key:
        headers["Authorization"] = f"Bearer {key}"
    return headers


def request_chat_reply(
    client: httpx.Client,
    config: TranslatorConfig,
    messages: list[dict],
    seed: int,
    semaphore: threading.Semaphore,
    max_attempts: int = 3,
    backoff_start: float = 1.0,
) -> str:
    """POST to the chat-completion endpoint with bounded retries and
    exponential backoff; raises RemoteUnavailableError when exhausted."""
    body = {
        "model": config.model_name,
        "messages": messages,
        "temperature": config.temperature,
        "seed": seed,
    }
    delay = backoff_start
    last_error: Exception | None = None
    for attempt in range(max_attempts):
        if attempt:
            time.sleep(delay)
            delay *= 2
        try:
            with semaphore:
                resp = client.post(config.endpoint_url, json=body, headers=_auth_headers(config))
            resp.raise_for_status()
            data = resp.json()
            return data["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as e:
            last_error = e
    raise RemoteUnavailableError(f"endpoint {config.endpoint_url} unavailable: {last_error}")


def _first_direction_token(reply: str) -> str:
    """First direction word in a chat reply, or the raw reply when none
    (which the episode runner then treats as a no-op)."""
    for token in re.findall(r"[A-Za-z]+", reply):
        if token.upper() in ("UP", "DOWN", "LEFT", "RIGHT"):
            return token.upper()
    return reply


DIRECT_SYSTEM_PROMPT = (
    "You steer an agent through a grid it cannot fully see. Given the route "
    "explanation, the current local view ('#' wall, '.' floor, 'G' treasure, "
    "'?' unseen) and the moves so far, reply with exactly one word: UP, DOWN, "
    "LEFT or RIGHT."
)


class RemoteDirectActor:
    """Direct-action baseline actor: asks the chat endpoint for the next move
    from the observation rendering alone (no program, no replanning)."""

    def __init__(self, config: TranslatorConfig, transport: httpx.BaseTransport | None = None):
        if config.kind != "remote":
            raise ValueError("RemoteDirectActor requires a remote TranslatorConfig")
        self.config = config
        self.cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        self._semaphore = threading.Semaphore(config.max_concurrency)
        self._client = httpx.Client(transport=transport, timeout=60.0)
        self.seed = 0

    def __call__(self, explanation: Explanation, observation_text: str, history_text: str) -> str:
        messages = [
            {"role": "system", "content": DIRECT_SYSTEM_PROMPT},
            {
                "role": "user",
                "content": f'Explanation: "{explanation.text}"\n{observation_text}\n{history_text}',
            },
        ]
        key = None
        if self.cache is not None:
            h = sha256()
            h.update(json.dumps(messages, sort_keys=True).encode("utf-8"))
            h.update(f"{self.config.model_name}|{self.config.temperature!r}|{self.seed}".encode("utf-8"))
            key = h.hexdigest()
            with self.cache.lock_for(key):
                cached = self.cache.get(key)
                if cached is not None:
                    return cached["reply"]
                reply = request_chat_reply(self._client, self.config, messages, self.seed, self._semaphore)
                self.cache.put(key, {"reply": reply})
                return _first_direction_token(reply)
        return _first_direction_token(
            request_chat_reply(self._client, self.config, messages, self.seed, self._semaphore)
        )


class RemoteTranslator(Translator):
    """Chat-completion client: fixed prompt, bounded retries, response cache."""

    kind = "remote"
    max_attempts = 3
    backoff_start = 1.0

    def __init__(self, config: TranslatorConfig, transport: httpx.BaseTransport | None = None):
        if config.kind != "remote":
            raise ValueError("RemoteTranslator requires a remote TranslatorConfig")
        self.config = config
        self.cache = ResponseCache(config.cache_dir) if config.cache_dir else None
        self._semaphore = threading.Semaphore(config.max_concurrency)
        self._client = httpx.Client(transport=transport, timeout=60.0)

    def _cache_key(self, prompt: list[dict], seed: int) -> str:
        h = sha256()
        h.update(json.dumps(prompt, sort_keys=True).encode("utf-8"))
        h.update(str(self.config.model_name).encode("utf-8"))
        h.update(repr(self.config.temperature).encode("utf-8"))
        h.update(str(seed).encode("utf-8"))
        return h.hexdigest()

    def _request_reply(self, prompt: list[dict], seed: int) -> str:
        return request_chat_reply(
            self._client,
            self.config,
            prompt,
            seed,
            semaphore=self._semaphore,
            max_attempts=self.max_attempts,
            backoff_start=self.backoff_start,
        )

    def compile(
        self, explanation: Explanation, world: GridMap, seed: int, sample_index: int = 0
    ) -> CompilationRecord:
        prompt = build_prompt(explanation, world, self.config.compiler_sees_map)
        key = self._cache_key(prompt, seed)
        if self.cache is not None:
            with self.cache.lock_for(key):
                cached = self.cache.get(key)
                if cached is not None:
                    return CompilationRecord.from_json_dict(cached)
                record = self._compile_uncached(explanation, world, seed, sample_index, prompt)
                self.cache.put(key, record.to_json_dict())
                return record
        return self._compile_uncached(explanation, world, seed, sample_index, prompt)

    def _compile_uncached(
        self, explanation: Explanation, world: GridMap, seed: int, sample_index: int, prompt: list[dict]
    ) -> CompilationRecord:
        reply = self._request_reply(prompt, seed)
        program: GuidanceProgram | ParseFailure
        if len(reply.encode("utf-8")) > MAX_REPLY_BYTES:
            program = ParseFailure("reply exceeds 16 KiB")
        else:
            block = extract_fenced_block(reply)
            program = ParseFailure("no fenced code block in reply") if block is None else _parse_raw(block)
        return CompilationRecord(
            explanation_id=explanation.id,
            map_id=world.id,
            sample_index=sample_index,
            raw_output=reply,
            program=program,
            seed=seed,
        )


def make_translator(config: TranslatorConfig, transport: httpx.BaseTransport | None = None) -> Translator:
    if config.kind == "oracle":
        return OracleTranslator()
    if config.kind == "keyword":
        return KeywordTranslator()
    if config.kind == "scripted":
        if not config.script_path:
            raise ValueError("scripted translator requires script_path")
        return ScriptedTranslator.from_file(config.script_path)
    if config.kind == "remote":
        return RemoteTranslator(config, transport=transport)
    raise ValueError(f"unknown translator kind {config.kind!r}")
