"""Wayfinder: scores natural-language navigation explanations by compiling
them into program-like guidance and simulating a partially informed listener
in a gridworld."""

__version__ = "0.1.0"

from .gridworld import Action, GridMap, MapMetrics, Observation, Position  # noqa: F401
from .guidance import CompiledGuidance, GuidanceProgram, parse_program, serialize_program  # noqa: F401
from .planner import Attempt, EpisodeParams, PlannerState, direct_episode, run_episode  # noqa: F401
from .scoring import (  # noqa: F401
    EvaluationResult,
    QualityBin,
    SpeakerParams,
    UtilityParams,
    bin_quality,
    direct_score,
    evaluate,
    length_score,
    normalize_per_map,
    speaker_distribution,
    utility,
)
from .translator import (  # noqa: F401
    CompilationRecord,
    Explanation,
    KeywordTranslator,
    OracleTranslator,
    RemoteTranslator,
    ScriptedTranslator,
    TranslatorConfig,
    keyword_translate,
    make_translator,
    oracle_translate,
)
