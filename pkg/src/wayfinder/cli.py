"""Command-line entry point.

Subcommands: simulate, score, rank, analyze, replay, serve, validate-maps.
Exit codes: 0 success, 1 usage error, 2 data error, 3 remote-translator
failure. Config precedence: flag > config file > built-in default; the
effective configuration is echoed to the output directory for provenance.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .analysis import load_corpus
from .gridworld import GOAL, UNKNOWN, GridMap, Position, parse_map, serialize_map
from .planner import (
    EpisodeParams,
    ScriptedActor,
    attempt_to_jsonl,
    direct_episode,
    read_trajectory,
    run_episode,
)
from .reports import DataError, analyze_corpus, load_maps_dir, rank_corpus, score_corpus
from .scoring import SpeakerParams, UtilityParams
from .translator import RemoteUnavailableError, TranslatorConfig, make_translator

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_REMOTE = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit code 1 instead of argparse's 2
        raise UsageError(message)


def _build_parser() -> _Parser:
    p = _Parser(prog="wayfinder", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, corpus=True):
        sp.add_argument("--maps", required=True, help="directory of .map files")
        if corpus:
            sp.add_argument("--corpus", required=True, help="line-delimited corpus file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--config", help="JSON config file (flag > file > default)")
        sp.add_argument("--translator", choices=["oracle", "keyword", "scripted", "remote"])
        sp.add_argument("--script", help="scripted translator fixture file")
        sp.add_argument("--endpoint-url")
        sp.add_argument("--model-name")
        sp.add_argument("--cache-dir")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--attempts", type=int, help="attempts N per evaluation")
        sp.add_argument("--budget", type=int)
        sp.add_argument("--fov", type=int)
        sp.add_argument("--max-replans", type=int)
        sp.add_argument("--parallelism", type=int)
        sp.add_argument("--alpha", type=float)
        sp.add_argument("--beta", type=float)
        sp.add_argument("--gamma", type=float)
        sp.add_argument("--delta", type=float)
        sp.add_argument("--lam", type=float, help="speaker inverse temperature")

    sp = sub.add_parser("simulate", help="run one episode and print the attempt")
    sp.add_argument("--map", required=True, help="single .map file")
    sp.add_argument("--translator", choices=["oracle", "keyword", "scripted", "remote"], default="oracle")
    sp.add_argument("--script")
    sp.add_argument("--endpoint-url")
    sp.add_argument("--model-name")
    sp.add_argument("--cache-dir")
    sp.add_argument("--explanation", default="")
    sp.add_argument("--explanation-id", default="cli")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--budget", type=int)
    sp.add_argument("--fov", type=int, default=2)
    sp.add_argument("--max-replans", type=int, default=3)
    sp.add_argument("--direct-actions", help="comma/space separated tokens; replays them through the direct baseline")
    sp.add_argument("--out", help="directory for the trajectory file")

    sp = sub.add_parser("score", help="score a corpus under all three models")
    add_common(sp)

    sp = sub.add_parser("rank", help="normalize, bin and rank explanations per map")
    add_common(sp)
    sp.add_argument("--scores", help="existing scores.csv (skips re-scoring)")

    sp = sub.add_parser("analyze", help="corpus statistics and failure modes")
    add_common(sp)
    sp.add_argument("--scores", help="existing scores.csv (provides success rates)")

    sp = sub.add_parser("replay", help="render a trajectory as ASCII frames")
    sp.add_argument("--trajectory", required=True)
    sp.add_argument("--map", help="single .map file")
    sp.add_argument("--maps", help="directory of .map files (uses the trajectory's map id)")

    sp = sub.add_parser("serve", help="start the HTTP service")
    sp.add_argument("--maps", required=True)
    sp.add_argument("--corpus")
    sp.add_argument("--store", default="sessions")
    sp.add_argument("--ui", help="static UI bundle directory")
    sp.add_argument("--host", default="127.0.0.1")
    sp.add_argument("--port", type=int, default=8000)
    sp.add_argument("--fov", type=int, default=2)
    sp.add_argument("--budget", type=int)

    sp = sub.add_parser("validate-maps", help="lint a maps directory")
    sp.add_argument("maps_dir")
    return p


_DEFAULTS = {
    "translator": "keyword",
    "seed": 0,
    "attempts": 10,
    "fov": 2,
    "max_replans": 3,
    "parallelism": 1,
    "alpha": 0.5,
    "beta": None,
    "gamma": 1.0,
    "delta": 1.0,
    "lam": 2.0,
    "budget": None,
    "script": None,
    "endpoint_url": None,
    "model_name": None,
    "cache_dir": None,
}


def _effective_config(args: argparse.Namespace) -> dict:
    """flag > config file > default."""
    merged = dict(_DEFAULTS)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            merged.update(json.loads(Path(config_path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as e:
            raise DataError(f"bad config file {config_path}: {e}") from None
    for key in _DEFAULTS:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _make_translator_from(cfg: dict):
    config = TranslatorConfig(
        kind=cfg["translator"],
        endpoint_url=cfg.get("endpoint_url"),
        model_name=cfg.get("model_name"),
        cache_dir=cfg.get("cache_dir"),
        script_path=cfg.get("script"),
    )
    return make_translator(config)


def _direct_actor_factory(cfg: dict):
    """The direct baseline asks the chat endpoint when one is configured and
    otherwise replays keyword-extracted moves."""
    if cfg["translator"] != "remote":
        return None
    from .translator import RemoteDirectActor

    config = TranslatorConfig(
        kind="remote",
        endpoint_url=cfg.get("endpoint_url"),
        model_name=cfg.get("model_name"),
        cache_dir=cfg.get("cache_dir"),
    )
    return lambda explanation, world: RemoteDirectActor(config)


def _episode_params(cfg: dict) -> EpisodeParams:
    return EpisodeParams(
        budget=cfg.get("budget"),
        fov_radius=cfg.get("fov", 2),
        max_replans=cfg.get("max_replans", 3),
        rng_seed=cfg.get("seed", 0),
    )


def _utility_params(cfg: dict) -> UtilityParams:
    return UtilityParams(alpha=cfg["alpha"], beta=cfg["beta"], gamma=cfg["gamma"], delta=cfg["delta"])


def _echo_config(out_dir: str | Path, cfg: dict, command: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    payload = {"command": command, **{k: cfg.get(k) for k in sorted(cfg)}}
    (out / "run-config.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cmd_simulate(args: argparse.Namespace) -> int:
    from .translator import Explanation

    grid = parse_map(Path(args.map).read_text(encoding="utf-8"))
    if not grid.id:
        grid = GridMap(id=Path(args.map).stem, rows=grid.rows, start=grid.start, goal=grid.goal, pair_id=grid.pair_id)
    params = EpisodeParams(
        budget=args.budget, fov_radius=args.fov, max_replans=args.max_replans, rng_seed=args.seed
    )
    explanation = Explanation(id=args.explanation_id, map_id=grid.id, text=args.explanation)

    if args.direct_actions:
        tokens = [t for t in args.direct_actions.replace(",", " ").split() if t]
        attempt = direct_episode(grid, explanation, ScriptedActor(tokens), params)
    else:
        cfg = TranslatorConfig(
            kind=args.translator,
            endpoint_url=args.endpoint_url,
            model_name=args.model_name,
            cache_dir=args.cache_dir,
            script_path=args.script,
        )
        attempt = run_episode(grid, explanation, make_translator(cfg), params)

    print(
        f"map={grid.id} S={attempt.success} L={attempt.length} R={attempt.replans} "
        f"seed={attempt.seed} budget={attempt.budget}"
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        traj = out / f"trajectory-{grid.id}-{args.seed}.jsonl"
        traj.write_text(attempt_to_jsonl(attempt, grid, params), encoding="utf-8")
        print(f"trajectory={traj}")
    return EXIT_OK


def _cmd_score(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    maps = load_maps_dir(args.maps)
    entries = load_corpus(args.corpus)
    translator = _make_translator_from(cfg)
    _echo_config(args.out, cfg, "score")
    path = score_corpus(
        entries,
        maps,
        translator,
        args.out,
        _episode_params(cfg),
        _utility_params(cfg),
        n_attempts=cfg["attempts"],
        parallelism=cfg["parallelism"],
    )
    print(f"scores={path}")
    return EXIT_OK


def _cmd_rank(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    _echo_config(args.out, cfg, "rank")
    scores = Path(args.scores) if args.scores else Path(args.out) / "scores.csv"
    if not scores.exists():
        maps = load_maps_dir(args.maps)
        entries = load_corpus(args.corpus)
        translator = _make_translator_from(cfg)
        scores = score_corpus(
            entries,
            maps,
            translator,
            args.out,
            _episode_params(cfg),
            _utility_params(cfg),
            n_attempts=cfg["attempts"],
            parallelism=cfg["parallelism"],
            direct_actor_factory=_direct_actor_factory(cfg),
        )
    bins_path, speaker_path = rank_corpus(scores, args.out, SpeakerParams(lam=cfg["lam"]))
    print(f"bins={bins_path}")
    print(f"speaker={speaker_path}")
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    cfg = _effective_config(args)
    maps = load_maps_dir(args.maps)
    entries = load_corpus(args.corpus)
    _echo_config(args.out, cfg, "analyze")
    scores = Path(args.scores) if args.scores else Path(args.out) / "scores.csv"
    if not scores.exists():
        translator = _make_translator_from(cfg)
        scores = score_corpus(
            entries,
            maps,
            translator,
            args.out,
            _episode_params(cfg),
            _utility_params(cfg),
            n_attempts=cfg["attempts"],
            parallelism=cfg["parallelism"],
            direct_actor_factory=_direct_actor_factory(cfg),
        )
    path = analyze_corpus(entries, maps, args.out, scores_csv=scores)
    print(f"analysis={path}")
    return EXIT_OK


def _render_frame(grid: GridMap, known, agent: Position, header: str) -> str:
    rows = [header]
    for r in range(grid.height):
        chars = []
        for c in range(grid.width):
            pos = Position(r, c)
            if pos == agent:
                chars.append("@")
            elif known[r][c] == UNKNOWN:
                chars.append("?")
            elif pos == grid.goal and known[r][c] == GOAL:
                chars.append("G")
            else:
                chars.append(grid.rows[r][c])
        rows.append("".join(chars))
    return "\n".join(rows)


def _cmd_replay(args: argparse.Namespace) -> int:
    meta, steps = read_trajectory(args.trajectory)
    if args.map:
        grid = parse_map(Path(args.map).read_text(encoding="utf-8"))
    elif args.maps:
        maps = load_maps_dir(args.maps)
        map_id = meta["map_id"]
        if map_id not in maps:
            raise DataError(f"map {map_id!r} not found under {args.maps}")
        grid = maps[map_id]
    else:
        raise UsageError("replay needs --map or --maps")

    from .gridworld import observe

    fov = int(meta.get("fov_radius", 2))
    known = [[UNKNOWN] * grid.width for _ in range(grid.height)]

    def merge(pos: Position) -> None:
        obs = observe(grid, pos, fov)
        for wr, row in enumerate(obs.window):
            for wc, ch in enumerate(row):
                r, c = pos.row - fov + wr, pos.col - fov + wc
                if ch != UNKNOWN and 0 <= r < grid.height and 0 <= c < grid.width:
                    known[r][c] = ch

    pos = Position(*meta["start"])
    merge(pos)
    print(_render_frame(grid, known, pos, f"frame 0 start map={meta['map_id']}"))
    for rec in steps:
        pos = Position(rec["row"], rec["col"])
        merge(pos)
        marks = "".join(
            [" blocked" if rec.get("blocked") else "", " replanned" if rec.get("replanned") else ""]
        )
        print()
        print(_render_frame(grid, known, pos, f"frame {rec['i'] + 1} action={rec.get('action')}{marks}"))
    print()
    print(
        f"result: success={meta.get('success')} length={meta.get('length')} "
        f"replans={meta.get('replans')} budget={meta.get('budget')}"
    )
    return EXIT_OK


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(
        maps_dir=args.maps,
        corpus_path=args.corpus,
        store_dir=args.store,
        ui_dir=args.ui,
        fov_radius=args.fov,
        budget=args.budget,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def _cmd_validate_maps(args: argparse.Namespace) -> int:
    files = sorted(Path(args.maps_dir).glob("*.map"))
    if not files:
        print(f"no .map files under {args.maps_dir}", file=sys.stderr)
        return EXIT_DATA
    failures = 0
    seen: dict[str, str] = {}
    for f in files:
        try:
            grid = parse_map(f.read_text(encoding="utf-8"))
            round_trip = serialize_map(grid)
            if grid.id:
                if grid.id in seen:
                    raise DataError(f"duplicate id {grid.id!r} (also {seen[grid.id]})")
                seen[grid.id] = f.name
            if parse_map(round_trip) != grid:
                raise DataError("serialization does not round-trip")
            print(f"{f.name}: OK ({grid.width}x{grid.height}, id={grid.id or f.stem!r})")
        except (ValueError, DataError) as e:
            failures += 1
            print(f"{f.name}: ERROR {e}")
    return EXIT_DATA if failures else EXIT_OK


def run_command(argv: list[str]) -> int:
    """Dispatch one CLI invocation; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        handler = {
            "simulate": _cmd_simulate,
            "score": _cmd_score,
            "rank": _cmd_rank,
            "analyze": _cmd_analyze,
            "replay": _cmd_replay,
            "serve": _cmd_serve,
            "validate-maps": _cmd_validate_maps,
        }[args.command]
        return handler(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except RemoteUnavailableError as e:
        print(f"remote translator failure: {e}", file=sys.stderr)
        return EXIT_REMOTE
    except (DataError, ValueError, KeyError, OSError) as e:
        print(f"data error: {e}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
