import random

import pytest

from wayfinder.gridworld import Action, Position, observe, shortest_path_length
from wayfinder.guidance import parse_program
from wayfinder.planner import (
    EpisodeParams,
    InconsistentObservationError,
    NoLegalActionError,
    PlannerState,
    ScriptedActor,
    StallTracker,
    attempt_to_jsonl,
    direct_episode,
    fail,
    ground_state,
    plan,
    read_trajectory,
    run_episode,
    write_trajectory,
)
from wayfinder.translator import OracleTranslator, ScriptedTranslator

from conftest import make_explanation, random_map

ORACLE_CORRIDOR = "POLICY\nMOVE RIGHT 2\nMOVE DOWN 2\nMOVE LEFT 2\nVALUE\nREGION 3 1 3 1 10"
ALWAYS_UP_RULE = "RULES\nIF AT 0 0 4 4 THEN MOVE UP 1"


def _ground(text, grid, start=None):
    from wayfinder.guidance import ground

    return ground(parse_program(text), grid.width, grid.height, start or grid.start)


class TestGroundState:
    def test_first_observation(self, corridor):
        obs = observe(corridor, corridor.start, 1)
        state = ground_state(obs, None, grid_shape=(5, 5))
        resolved = (state.known != "?").sum()
        assert resolved == 9
        assert state.visit_counts[corridor.start] == 1

    def test_union_of_windows(self, corridor):
        s = ground_state(observe(corridor, Position(1, 1), 1), None, grid_shape=(5, 5))
        before = (s.known != "?").sum()
        s = ground_state(observe(corridor, Position(1, 2), 1), s)
        after = (s.known != "?").sum()
        assert after > before
        assert s.known[1, 1] == "."  # earlier knowledge retained

    def test_goal_marked_permanently(self, corridor):
        s = ground_state(observe(corridor, Position(3, 2), 1), None, grid_shape=(5, 5))
        assert s.known[3, 1] == "G"
        s = ground_state(observe(corridor, Position(3, 2), 1), s)
        assert s.known[3, 1] == "G"

    def test_inconsistent_observation_raises(self, corridor):
        s = ground_state(observe(corridor, Position(1, 1), 1), None, grid_shape=(5, 5))
        from wayfinder.gridworld import Observation

        bad = Observation(center=Position(1, 1), radius=1, window=("###", "##.", "###"))
        with pytest.raises(InconsistentObservationError):
            ground_state(bad, s)

    def test_monotone_growth(self, corridor):
        rng = random.Random(0)
        s = None
        resolved = 0
        pos = corridor.start
        for _ in range(30):
            s = ground_state(observe(corridor, pos, 2), s, grid_shape=(5, 5))
            now = (s.known != "?").sum()
            assert now >= resolved
            resolved = now
            from wayfinder.gridworld import step as gstep

            pos = gstep(corridor, pos, rng.choice(list(Action)))


class TestPlan:
    def test_cursor_step(self, corridor):
        g = _ground(ORACLE_CORRIDOR, corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        cur = g.fresh_cursor()
        action = plan(g, s, g.rules, random.Random(0), cursor=cur)
        assert action == Action.RIGHT
        assert (cur.step_index, cur.remaining) == (0, 1)

    def test_blocked_cursor_falls_to_greedy(self, corridor):
        g = _ground("POLICY\nMOVE UP 1", corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        cur = g.fresh_cursor()
        action = plan(g, s, g.rules, random.Random(0), cursor=cur)
        assert action == Action.RIGHT  # only non-wall neighbour
        assert not cur.exhausted  # cursor untouched when its move is skipped

    def test_rule_precedence_over_cursor(self, corridor):
        g = _ground("POLICY\nMOVE RIGHT 2\nRULES\nIF SEE GOAL THEN MOVE LEFT 1", corridor)
        s = ground_state(observe(corridor, Position(3, 3), 2), None, grid_shape=(5, 5))
        action = plan(g, s, g.rules, random.Random(0), cursor=g.fresh_cursor())
        assert action == Action.LEFT

    def test_see_goal_requires_fov(self, corridor):
        g = _ground("RULES\nIF SEE GOAL THEN MOVE LEFT 1\nPOLICY\nMOVE RIGHT 1", corridor)
        s = ground_state(observe(corridor, Position(3, 3), 2), None, grid_shape=(5, 5))
        s.position = Position(1, 1)  # goal known but out of the current fov window
        s = ground_state(observe(corridor, Position(1, 1), 2), s)
        action = plan(g, s, g.rules, random.Random(0), cursor=g.fresh_cursor(), fov_radius=1)
        assert action == Action.RIGHT

    def test_see_wall_rule(self, corridor):
        g = _ground("RULES\nIF SEE WALL UP THEN MOVE RIGHT 1", corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        assert plan(g, s, g.rules, random.Random(0)) == Action.RIGHT

    def test_at_region_rule(self, corridor):
        g = _ground("RULES\nIF AT 1 1 1 1 THEN MOVE DOWN 1", corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        assert plan(g, s, g.rules, random.Random(0)) == Action.DOWN

    def test_greedy_tie_break_canonical(self, open_room):
        g = _ground("POLICY\nMOVE UP 1", open_room)  # V == 0 everywhere
        s = ground_state(observe(open_room, Position(2, 2), 2), None, grid_shape=(5, 5))
        cur = g.fresh_cursor()
        cur.advance()  # exhaust
        action = plan(g, s, g.rules, random.Random(0), cursor=cur)
        assert action == Action.UP  # all neighbours tie at 0; canonical order

    def test_greedy_visit_penalty(self, open_room):
        g = _ground("POLICY\nMOVE UP 1", open_room)
        s = ground_state(observe(open_room, Position(2, 2), 2), None, grid_shape=(5, 5))
        s.visit_counts[Position(1, 2)] = 2  # push the walker away from UP
        cur = g.fresh_cursor()
        cur.advance()
        assert plan(g, s, g.rules, random.Random(0), cursor=cur) == Action.DOWN

    def test_no_legal_action(self):
        from wayfinder.gridworld import GridMap

        grid = GridMap(id="dot", rows=("###", "#.#", "###"), start=Position(1, 1), goal=Position(1, 1))
        s = ground_state(observe(grid, Position(1, 1), 1), None, grid_shape=(3, 3))
        with pytest.raises(NoLegalActionError):
            plan(None, s, (), random.Random(0))


class TestFail:
    def test_parse_failure_fails(self, corridor):
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        assert fail(None, s, StallTracker()) is True

    def test_blocked_cursor_fails(self, corridor):
        g = _ground("POLICY\nMOVE UP 3", corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        assert fail(g, s, StallTracker(), cursor=g.fresh_cursor()) is True

    def test_open_cursor_ok(self, corridor):
        g = _ground(ORACLE_CORRIDOR, corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        assert fail(g, s, StallTracker(), cursor=g.fresh_cursor()) is False

    def test_revisit_limit(self, corridor):
        g = _ground(ORACLE_CORRIDOR, corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        s.visit_counts[corridor.start] = 4
        assert fail(g, s, StallTracker(), cursor=g.fresh_cursor(), revisit_limit=3) is True

    def test_stall_detection(self, corridor):
        g = _ground("VALUE\nREGION 3 1 3 1 10", corridor)
        s = ground_state(observe(corridor, corridor.start, 2), None, grid_shape=(5, 5))
        tracker = StallTracker(best_value=10.0)
        cur = g.fresh_cursor()  # empty policy: exhausted immediately
        for _ in range(10):
            tracker.update(5.0, cursor_exhausted=True)
        assert fail(g, s, tracker, cursor=cur, stall_limit=10) is True

    def test_stall_resets_on_progress(self):
        tracker = StallTracker(best_value=1.0, stall_steps=7)
        tracker.update(2.0, cursor_exhausted=True)
        assert tracker.stall_steps == 0
        assert tracker.best_value == 2.0


class TestRunEpisode:
    def test_oracle_corridor(self, corridor):
        attempt = run_episode(corridor, make_explanation("x"), OracleTranslator(), EpisodeParams(budget=50, rng_seed=7))
        assert (attempt.success, attempt.length, attempt.replans) == (1, 6, 0)

    def test_oracle_on_all_fixture_maps(self, fixture_maps):
        for grid in fixture_maps.values():
            attempt = run_episode(grid, make_explanation("x", map_id=grid.id), OracleTranslator(), EpisodeParams(rng_seed=3))
            bfs = shortest_path_length(grid, grid.start, grid.goal)
            assert (attempt.success, attempt.replans) == (1, 0), grid.id
            assert attempt.length == bfs, grid.id

    def test_bad_then_oracle_script(self, corridor):
        script = ["POLICY\nMOVE UP 3", ORACLE_CORRIDOR]
        attempt = run_episode(
            corridor, make_explanation("x"), ScriptedTranslator(script), EpisodeParams(budget=50, rng_seed=1)
        )
        assert attempt.success == 1
        assert attempt.replans == 1
        assert attempt.length <= 8

    def test_all_failing_script_uses_fallback(self, corridor):
        attempt = run_episode(
            corridor,
            make_explanation("x"),
            ScriptedTranslator(["not a program"]),
            EpisodeParams(budget=10, max_replans=2, rng_seed=5),
        )
        assert attempt.replans == 2
        assert attempt.length <= 10
        # on the corridor the visit-penalty walk still finds the goal
        assert attempt.success == 1
        assert attempt.length == 6

    def test_replans_capped(self, corridor):
        for seed in range(5):
            attempt = run_episode(
                corridor,
                make_explanation("x"),
                ScriptedTranslator(["???"]),
                EpisodeParams(budget=30, max_replans=3, rng_seed=seed),
            )
            assert attempt.replans <= 3

    def test_budget_respected(self, fixture_maps):
        grid = fixture_maps["serpent-long"]
        attempt = run_episode(
            grid, make_explanation("x", map_id=grid.id), ScriptedTranslator(["???"]), EpisodeParams(budget=20, rng_seed=2)
        )
        assert attempt.length == 20
        assert attempt.success == 0

    def test_deterministic(self, fixture_maps):
        grid = fixture_maps["zigzag-a"]
        params = EpisodeParams(rng_seed=99)
        t = ScriptedTranslator(["POLICY\nMOVE DOWN 2", ORACLE_CORRIDOR])
        a = run_episode(grid, make_explanation("x", map_id=grid.id), t, params)
        b = run_episode(grid, make_explanation("x", map_id=grid.id), t, params)
        assert a == b

    def test_start_equals_goal(self):
        from wayfinder.gridworld import GridMap

        grid = GridMap(id="dot", rows=("###", "#.#", "###"), start=Position(1, 1), goal=Position(1, 1))
        attempt = run_episode(grid, make_explanation("x", map_id="dot"), OracleTranslator(), EpisodeParams(budget=5))
        assert (attempt.success, attempt.length, attempt.replans) == (1, 0, 0)

    def test_replanned_flag_recorded(self, corridor):
        attempt = run_episode(
            corridor,
            make_explanation("x"),
            ScriptedTranslator(["POLICY\nMOVE UP 3", ORACLE_CORRIDOR]),
            EpisodeParams(budget=50, rng_seed=1),
        )
        assert any(t.replanned for t in attempt.trajectory)

    def test_invalid_program_counts_as_failure(self, corridor):
        # parses fine but the region lies outside the map: unusable guidance
        script = ["VALUE\nREGION 9 9 9 9 10", ORACLE_CORRIDOR]
        attempt = run_episode(
            corridor, make_explanation("x"), ScriptedTranslator(script), EpisodeParams(budget=50, rng_seed=1)
        )
        assert attempt.replans == 1
        assert attempt.success == 1


class TestDirectEpisode:
    def test_scripted_actor_solves_corridor(self, corridor):
        actor = ScriptedActor(["RIGHT", "RIGHT", "DOWN", "DOWN", "LEFT", "LEFT"])
        attempt = direct_episode(corridor, make_explanation("x"), actor, EpisodeParams(budget=50))
        assert (attempt.success, attempt.length, attempt.replans) == (1, 6, 0)

    def test_garbage_tokens_noop(self, corridor):
        actor = ScriptedActor(["sideways"])
        attempt = direct_episode(corridor, make_explanation("x"), actor, EpisodeParams(budget=4))
        assert attempt.success == 0
        assert attempt.length == 4
        assert all(t.blocked for t in attempt.trajectory)
        assert all(t.action is None for t in attempt.trajectory)

    def test_open_room_replayer(self, open_room):
        actor = ScriptedActor(["DOWN", "DOWN", "RIGHT", "RIGHT"])
        attempt = direct_episode(open_room, make_explanation("x", map_id="open-room"), actor, EpisodeParams(budget=50))
        assert (attempt.success, attempt.length) == (1, 4)

    def test_replans_always_zero(self, corridor):
        actor = ScriptedActor(["UP", "UP", "UP"])
        attempt = direct_episode(corridor, make_explanation("x"), actor, EpisodeParams(budget=3))
        assert attempt.replans == 0


class TestTrajectoryLog:
    def test_roundtrip(self, corridor, tmp_path):
        params = EpisodeParams(budget=50, rng_seed=7)
        attempt = run_episode(corridor, make_explanation("x"), OracleTranslator(), params)
        path = tmp_path / "t.jsonl"
        write_trajectory(path, attempt, corridor, params)
        meta, steps = read_trajectory(path)
        assert meta["map_id"] == "corridor5"
        assert meta["length"] == 6
        assert len(steps) == 6
        assert [s["i"] for s in steps] == list(range(6))

    def test_blocked_flag_serialized(self, corridor, tmp_path):
        actor = ScriptedActor(["UP"])
        params = EpisodeParams(budget=1)
        attempt = direct_episode(corridor, make_explanation("x"), actor, params)
        text = attempt_to_jsonl(attempt, corridor, params)
        assert '"blocked": true' in text


class TestInvariants:
    def test_randomized_episode_invariants(self, fixture_maps):
        rng = random.Random(123)
        programs = [
            "???",
            "POLICY\nMOVE UP 2",
            "POLICY\nMOVE RIGHT 3\nVALUE\nREGION 1 1 2 2 5",
            "RULES\nIF SEE WALL UP THEN MOVE DOWN 1",
        ]
        for _ in range(60):
            grid = random_map(rng)
            script = [rng.choice(programs) for _ in range(rng.randint(1, 3))]
            params = EpisodeParams(budget=rng.randint(10, 60), max_replans=rng.randint(0, 3), rng_seed=rng.getrandbits(32))
            resolved_history = []

            def observer(t, state):
                resolved_history.append(int((state.known != "?").sum()))

            attempt = run_episode(
                grid, make_explanation("x", map_id=grid.id), ScriptedTranslator(script), params, observer=observer
            )
            assert attempt.length <= params.budget
            assert attempt.replans <= params.max_replans
            if attempt.success:
                bfs = shortest_path_length(grid, grid.start, grid.goal)
                assert attempt.length >= bfs
            assert resolved_history == sorted(resolved_history)
