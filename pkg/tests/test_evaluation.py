from dataclasses import replace

import pytest

from dataset_io.trace import TraceHeader
from evaluation.metrics import MetricsTracker
from evaluation.scoring import OUTCOME_EXIT_CODES, Outcome, decide_outcome, score_run, severity_score
from evaluation.termination import TerminalReason, horizon_ticks, stalled_ticks, update_evaluation
from pipeline.run_loop import RunConfig, simulate
from policy_harness.binding import BuiltinPolicy
from scenario_model.types import ActorClass, EvaluationConstraints, EvaluationMode
from world_engine.engine import ENGINE_VERSION, init_world
from world_engine.state import CollisionEvent, EventKind, WorldEvent


def collision(tick, actor_id, actor_class, speed=5.0):
    return WorldEvent(tick, EventKind.COLLISION, {
        "actor_id": actor_id, "actor_true_class": actor_class, "relative_speed": speed, "penetration": 0.2,
    })


def test_window_ticks(minimal_spec):
    assert stalled_ticks(minimal_spec, 0.05) == 200
    assert horizon_ticks(minimal_spec, 0.05) == 600
    shifted = minimal_spec.model_copy(update={"t0": 5.0, "tn": 6.0})
    assert horizon_ticks(shifted, 0.05) == 20


def test_termination_precedence(minimal_spec):
    world = init_world(minimal_spec, 0)
    hit = [collision(600, "parked-car", "car")]
    everything = replace(world, tick=600, goal_reached=True, still_ticks=500)
    assert update_evaluation(everything, hit, minimal_spec) == TerminalReason.COLLISION
    assert update_evaluation(everything, [], minimal_spec) == TerminalReason.GOAL
    assert update_evaluation(replace(everything, goal_reached=False), [], minimal_spec) == TerminalReason.STALLED
    assert update_evaluation(replace(world, tick=600), [], minimal_spec) == TerminalReason.TIMEOUT
    assert update_evaluation(replace(world, tick=599, still_ticks=199), [], minimal_spec) is None


def test_collision_does_not_end_run_when_disabled(minimal_spec):
    spec = minimal_spec.model_copy(update={"constraints": EvaluationConstraints(end_on_collision=False)})
    world = init_world(spec, 0)
    assert update_evaluation(world, [collision(1, "parked-car", "car")], spec) is None


def test_severity_uses_true_class():
    table = EvaluationConstraints().weight_table
    events = [collision(3, "kid", "child_pedestrian").collision, collision(9, "sign", "stop_sign").collision]
    assert severity_score(events, table) == pytest.approx(10.5)
    assert severity_score([], table) == 0.0


def test_binary_outcomes():
    binary = EvaluationConstraints()
    assert decide_outcome(TerminalReason.GOAL, 0.0, 0, binary) == Outcome.SUCCESS
    assert decide_outcome(TerminalReason.GOAL, 0.5, 1, binary) == Outcome.COLLISION_FAILURE
    assert decide_outcome(TerminalReason.COLLISION, 5.0, 1, binary) == Outcome.COLLISION_FAILURE
    assert decide_outcome(TerminalReason.STALLED, 0.0, 0, binary) == Outcome.STALLED
    assert decide_outcome(TerminalReason.TIMEOUT, 0.0, 0, binary) == Outcome.TIMEOUT
    assert decide_outcome(TerminalReason.POLICY_FAULT, 0.0, 0, binary) == Outcome.POLICY_FAULT


def test_weighted_outcomes():
    weighted = EvaluationConstraints(mode=EvaluationMode.WEIGHTED, failure_threshold=1.0, end_on_collision=False)
    assert decide_outcome(TerminalReason.GOAL, 0.5, 1, weighted) == Outcome.SUCCESS
    assert decide_outcome(TerminalReason.GOAL, 1.0, 2, weighted) == Outcome.SUCCESS
    assert decide_outcome(TerminalReason.GOAL, 10.0, 1, weighted) == Outcome.COLLISION_FAILURE


def test_score_run_records_collisions():
    events = [
        WorldEvent(1, EventKind.TRIGGER_FIRED, {"trigger_id": "t", "action": "despawn", "actor_id": "a"}),
        collision(4, "cart", "shopping_cart", speed=7.5),
    ]
    result = score_run(events, EvaluationConstraints(), TerminalReason.COLLISION)
    assert result.outcome == Outcome.COLLISION_FAILURE
    assert result.exit_code == 1
    assert result.severity_score == 2.0
    (record,) = result.collisions
    assert record.actor_true_class == ActorClass.SHOPPING_CART
    assert record.relative_speed == 7.5
    assert record.tick == 4


def test_exit_codes():
    assert OUTCOME_EXIT_CODES[Outcome.SUCCESS] == 0
    assert OUTCOME_EXIT_CODES[Outcome.STALLED] == 1
    assert OUTCOME_EXIT_CODES[Outcome.POLICY_FAULT] == 3


def test_metrics_progress_and_distance(minimal_spec):
    tracker = MetricsTracker(minimal_spec)
    world = init_world(minimal_spec, 0)
    tracker.update(world)
    assert tracker.result().route_completion == 0.0
    assert tracker.result().min_distance_to_any_actor == pytest.approx((60.0 ** 2 + 3.5 ** 2) ** 0.5)

    halfway = replace(world, tick=160, ego=world.ego.moved(x=80.0))
    tracker.update(halfway)
    metrics = tracker.result()
    assert metrics.route_completion == pytest.approx(0.5)
    assert metrics.ticks_elapsed == 160

    tracker.update(replace(halfway, ego=halfway.ego.moved(x=10.0)))
    assert tracker.result().route_completion == pytest.approx(0.5)


def test_metrics_time_to_collision(minimal_spec):
    spec = minimal_spec.model_copy(update={"actors": minimal_spec.actors, "triggers": ()})
    world = init_world(spec, 0)
    parked = world.actor_states["parked-car"]
    ahead = replace(world, actor_states={"parked-car": parked.moved(y=-1.75)})
    tracker = MetricsTracker(spec)
    tracker.update(ahead)
    assert tracker.result().min_time_to_collision == pytest.approx(6.0)


def test_collision_event_round_trip():
    event = collision(2, "kid", "child_pedestrian")
    parsed = WorldEvent.from_dict(event.to_dict())
    assert parsed == event
    assert isinstance(parsed.collision, CollisionEvent)


def run_builtin(spec, name):
    header = TraceHeader(engine_version=ENGINE_VERSION, scenario_id=spec.id, seed=1, policy="builtin:" + name,
                         dt=0.05, channels=["detections"])
    return simulate(spec, 1, BuiltinPolicy(name), header, RunConfig(channels=("detections",)))


def test_passive_run_stalls_after_exact_stillness(minimal_spec):
    output = run_builtin(minimal_spec, "passive")
    assert output.result.terminal_reason == TerminalReason.STALLED
    assert output.result.outcome == Outcome.STALLED
    assert output.world.still_ticks == stalled_ticks(minimal_spec, 0.05) == 200
    speeds = [r["ego"]["speed"] for r in output.trace.records]
    first_still = next(i for i, v in enumerate(speeds) if v < 0.1)
    assert output.world.tick == first_still + 199


def test_unreachable_goal_times_out_at_horizon(minimal_spec):
    spec = minimal_spec.model_copy(update={"tn": 3.0})
    output = run_builtin(spec, "constant_speed")
    assert output.result.terminal_reason == TerminalReason.TIMEOUT
    assert output.result.outcome == Outcome.TIMEOUT
    assert output.world.tick == 60
    assert output.world.sim_time == pytest.approx(3.0)
    assert len(output.trace) == 60
