import math
import random

import pytest

from wayfinder.analysis import (
    CorpusEntry,
    DegenerateInputError,
    FailureMode,
    FailureThresholds,
    UnknownMapReferenceError,
    classify_failures,
    code_keywords,
    corpus_stats,
    dump_corpus,
    load_corpus,
    spearman,
    welch_t,
)
from wayfinder.scoring import EvaluationResult

from conftest import make_explanation


def _entry(text, map_id="corridor5", eid="e", **kw):
    return CorpusEntry(explanation=make_explanation(text, map_id=map_id, eid=eid), **kw)


def _result_with_succ(succ, eid="e", mid="corridor5"):
    return EvaluationResult(
        explanation_id=eid, map_id=mid, n=10, attempts=(), replan_mean=0.0, len_min=10, succ=succ, budget=50
    )


class TestCodeKeywords:
    def test_value_only(self):
        code = code_keywords(make_explanation("the treasure is in the top-left corner"))
        assert (code.has_value, code.has_low_policy, code.has_high_policy) == (True, False, False)

    def test_low_policy_only(self):
        code = code_keywords(make_explanation("go up twice"))
        assert (code.has_value, code.has_low_policy, code.has_high_policy) == (False, True, False)

    def test_high_policy_and_value(self):
        code = code_keywords(make_explanation("if you see a wall, go right until the corner"))
        assert code.has_high_policy
        assert code.has_value
        assert not code.has_low_policy  # no step counts anywhere

    def test_mixed(self):
        code = code_keywords(make_explanation("go up 3 steps to the middle, then right once"))
        assert code.has_value and code.has_low_policy

    def test_non_exclusive_all(self):
        code = code_keywords(make_explanation("if stuck go down 2 steps toward the bottom side"))
        assert code.has_value and code.has_low_policy and code.has_high_policy


class TestClassifyFailures:
    def test_direction_overload(self):
        text = (
            "go up then down then left then right and again left up down around the long corridor walk "
            "and keep moving forward"
        )
        e = make_explanation(text)
        assert e.word_count >= 20
        modes = classify_failures(e, _result_with_succ(0.4))
        assert FailureMode.DIRECTION_OVERLOAD in modes

    def test_overly_compressed(self):
        modes = classify_failures(make_explanation("go up twice then stop"), _result_with_succ(0.1))
        assert FailureMode.OVERLY_COMPRESSED in modes

    def test_spatial_ambiguity_with_compression(self):
        modes = classify_failures(make_explanation("somewhere near the middle"), _result_with_succ(0.1))
        assert modes >= {FailureMode.OVERLY_COMPRESSED, FailureMode.SPATIAL_AMBIGUITY}

    def test_concrete_landmark_blocks_ambiguity(self):
        modes = classify_failures(make_explanation("somewhere near the top-left corner"), _result_with_succ(0.1))
        assert FailureMode.SPATIAL_AMBIGUITY not in modes

    def test_overcomplicated(self):
        text = " ".join(["walk around the area and"] * 7) + " if you see anything strange turn back"
        e = make_explanation(text)
        assert e.word_count >= 30
        modes = classify_failures(e, _result_with_succ(0.3))
        assert FailureMode.OVERCOMPLICATED in modes

    def test_nothing_fires_on_success(self):
        modes = classify_failures(make_explanation("somewhere near the middle"), _result_with_succ(0.9))
        assert modes == set()

    def test_thresholds_configurable(self):
        th = FailureThresholds(compressed_words_max=2)
        modes = classify_failures(make_explanation("go up twice now"), _result_with_succ(0.0), th)
        assert FailureMode.OVERLY_COMPRESSED not in modes


def _spearman_oracle(xs, ys):
    def ranks(v):
        order = sorted(range(len(v)), key=lambda i: v[i])
        out = [0.0] * len(v)
        i = 0
        while i < len(v):
            j = i
            while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                out[order[k]] = avg
            i = j + 1
        return out

    rx, ry = ranks(xs), ranks(ys)
    n = len(xs)
    mx, my = sum(rx) / n, sum(ry) / n
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den


class TestSpearman:
    def test_perfect_monotone(self):
        assert spearman([1, 2, 3], [10, 20, 30]) == pytest.approx(1.0)

    def test_perfect_antimonotone(self):
        assert spearman([1, 2, 3], [30, 20, 10]) == pytest.approx(-1.0)

    def test_ties_against_oracle(self):
        xs, ys = [1, 2, 2, 4], [1, 3, 2, 4]
        assert spearman(xs, ys) == pytest.approx(_spearman_oracle(xs, ys), abs=1e-12)

    def test_degenerate_marker(self):
        assert spearman([1, 1, 1], [1, 2, 3]) is None
        assert spearman([1, 2, 3], [5, 5, 5]) is None

    def test_symmetry(self):
        xs, ys = [3, 1, 4, 1, 5], [2, 7, 1, 8, 2]
        assert spearman(xs, ys) == pytest.approx(spearman(ys, xs))

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            spearman([1, 2], [1, 2, 3])

    def test_monotone_transform_invariance(self):
        rng = random.Random(5)
        for _ in range(30):
            n = rng.randint(3, 12)
            xs = [rng.randint(0, 6) for _ in range(n)]
            ys = [rng.randint(0, 6) for _ in range(n)]
            r = spearman(xs, ys)
            r2 = spearman([x * 3 + 1 for x in xs], [y**3 for y in ys])
            if r is None:
                assert r2 is None
            else:
                assert r2 == pytest.approx(r, abs=1e-12)


class TestWelch:
    def test_identical_samples(self):
        res = welch_t([1, 2, 3], [1, 2, 3])
        assert res.t == 0.0
        assert res.d == 0.0

    def test_zero_variance_both(self):
        with pytest.raises(DegenerateInputError):
            welch_t([0, 0, 0, 0], [1, 1, 1, 1])

    def test_hand_formula(self):
        a, b = [1.0, 2.0, 3.0, 4.0], [2.0, 3.0, 4.0, 5.0]
        res = welch_t(a, b)
        # direct evaluation: means 2.5/3.5, var 5/3 each, n 4
        se2 = (5 / 3) / 4 + (5 / 3) / 4
        t = (2.5 - 3.5) / math.sqrt(se2)
        df = se2**2 / (((5 / 3) / 4) ** 2 / 3 + ((5 / 3) / 4) ** 2 / 3)
        pooled = math.sqrt(((3 * 5 / 3) + (3 * 5 / 3)) / 6)
        assert res.t == pytest.approx(t, abs=1e-12)
        assert res.df == pytest.approx(df, abs=1e-12)
        assert res.d == pytest.approx(-1 / pooled, abs=1e-12)

    def test_antisymmetry(self):
        a, b = [1.0, 5.0, 2.0], [4.0, 4.5, 9.0]
        r1, r2 = welch_t(a, b), welch_t(b, a)
        assert r1.t == pytest.approx(-r2.t)
        assert r1.d == pytest.approx(-r2.d)
        assert r1.df == pytest.approx(r2.df)

    def test_too_small(self):
        with pytest.raises(ValueError):
            welch_t([1.0], [1.0, 2.0])


class TestCorpusStats:
    def test_monotone_brittleness_correlation(self, fixture_maps):
        from wayfinder.gridworld import graph_metrics

        maps = list(fixture_maps.values())
        # word count strictly increases with brittleness, preserving ties
        levels = sorted({graph_metrics(m).brittleness for m in maps})
        entries = []
        for i, m in enumerate(maps):
            words = 1 + levels.index(graph_metrics(m).brittleness)
            entries.append(_entry("w " * words, map_id=m.id, eid=f"e{i}"))
        report = corpus_stats(entries, maps)
        assert report.rho_length_vs_brittleness == pytest.approx(1.0)

    def test_unknown_map(self, fixture_maps):
        with pytest.raises(UnknownMapReferenceError):
            corpus_stats([_entry("hi", map_id="nope")], list(fixture_maps.values()))

    def test_degenerate_lengths_propagate_marker(self, fixture_maps):
        maps = list(fixture_maps.values())[:5]
        entries = [_entry("one two three four five", map_id=m.id, eid=f"e{i}") for i, m in enumerate(maps)]
        report = corpus_stats(entries, maps)
        assert report.rho_length_vs_brittleness is None

    def test_strategy_proportions(self, corridor):
        entries = [
            _entry("go up twice", eid="a"),
            _entry("the treasure is in the middle", eid="b"),
            _entry("if you see a wall go right 2 steps", eid="c"),
            _entry("hello there", eid="d"),
        ]
        report = corpus_stats(entries, [corridor])
        assert report.strategy_proportions["low_policy"] == pytest.approx(2 / 4)
        assert report.strategy_proportions["value"] == pytest.approx(1 / 4)
        assert report.strategy_proportions["high_policy"] == pytest.approx(1 / 4)

    def test_condition_path_lengths(self, corridor):
        entries = [
            _entry("x", eid="a", condition="Good", path_length=8),
            _entry("x", eid="b", condition="Good", path_length=12),
            _entry("x", eid="c", condition="Bad", path_length=30),
            _entry("x", eid="d", condition="None", path_length=40),
        ]
        report = corpus_stats(entries, [corridor])
        assert report.condition_path_length_means["Good"] == pytest.approx(10.0)
        assert report.condition_path_length_means["Bad"] == pytest.approx(30.0)
        assert report.condition_path_length_means["None"] == pytest.approx(40.0)


class TestCorpusIO:
    def test_roundtrip(self, tmp_path):
        entries = [
            _entry("go up", eid="a"),
            _entry("down then right", eid="b", helpfulness_rating=55.0, condition="Good", path_length=9),
        ]
        p = tmp_path / "c.jsonl"
        p.write_text(dump_corpus(entries), encoding="utf-8")
        back = load_corpus(p)
        assert back == entries

    def test_rating_range_enforced(self):
        with pytest.raises(ValueError):
            _entry("x", helpfulness_rating=101.0)

    def test_bad_condition_rejected(self):
        with pytest.raises(ValueError):
            _entry("x", condition="Great")

    def test_bad_json_line(self, tmp_path):
        p = tmp_path / "c.jsonl"
        p.write_text('{"id": "a", "map_id": "m", "text": "x"}\nnot json\n', encoding="utf-8")
        with pytest.raises(ValueError):
            load_corpus(p)
