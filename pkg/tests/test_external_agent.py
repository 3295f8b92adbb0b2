import json
import sys
from pathlib import Path

import pytest

from perception.observation import PerceptionConfig, observe
from policy_harness.actions import STOP, STRAIGHT
from policy_harness.external_agent import ExternalAgent, decode_message, encode_message
from scenario_model.errors import PolicyFault, PolicyStartupError
from scenario_model.weather import get_weather
from world_engine.engine import ENGINE_VERSION, init_world

RAYS = 36
AGENTS_DIR = Path(__file__).resolve().parent / "agents"


def agent(script, *args, **kwargs):
    kwargs.setdefault("tick_timeout_ms", 2000)
    return ExternalAgent([sys.executable, str(AGENTS_DIR / script)] + list(args), **kwargs)


@pytest.fixture
def observation(minimal_spec):
    world = init_world(minimal_spec, 0)
    return observe(world, minimal_spec, get_weather("clear-noon"), PerceptionConfig(lidar_rays=RAYS))


def at(observation, tick):
    return observation.model_copy(update={"tick": tick})


def test_encode_is_compact_and_sorted():
    line = encode_message("terminate", 7, {"reason": "goal"})
    assert line == b'{"payload":{"reason":"goal"},"tick":7,"type":"terminate"}\n'
    assert decode_message(line) == {"type": "terminate", "tick": 7, "payload": {"reason": "goal"}}


@pytest.mark.parametrize("line", [
    b"not json\n",
    b"[1, 2]\n",
    b'{"type": "action", "tick": 1}\n',
    b'{"type": "action", "tick": true, "payload": {}}\n',
    b'{"type": 3, "tick": 1, "payload": {}}\n',
    b'{"type": "action", "tick": 1, "payload": {}, "extra": 0}\n',
])
def test_decode_rejects(line):
    with pytest.raises(ValueError):
        decode_message(line)


def test_discrete_agent_exchange(observation):
    a = agent("stop_sign_agent.py")
    try:
        assert a.start(RAYS, ENGINE_VERSION) == "discrete"
        for tick in range(3):
            action, reason = a.exchange(at(observation, tick))
            assert action == STRAIGHT and reason is None
    finally:
        a.close("goal_reached", 3)
    assert a._proc.returncode is not None


def test_continuous_agent_exchange(observation):
    a = agent("continuous_agent.py")
    try:
        assert a.start(RAYS, ENGINE_VERSION) == "continuous"
        action, reason = a.exchange(at(observation, 0))
        assert reason is None
        assert action.continuous.throttle == pytest.approx(0.3)
    finally:
        a.close()


def test_single_garbage_reply_is_substituted(observation):
    a = agent("garbage_agent.py", "once")
    try:
        a.start(RAYS, ENGINE_VERSION)
        results = [a.exchange(at(observation, tick)) for tick in range(5)]
    finally:
        a.close()
    assert [r[0] for r in results] == [STRAIGHT, STRAIGHT, STOP, STRAIGHT, STRAIGHT]
    assert results[2][1].startswith("unreadable message")
    assert a.consecutive_substitutions == 0


def test_repeated_garbage_faults(observation):
    a = agent("garbage_agent.py", "always", max_substitutions=3)
    try:
        a.start(RAYS, ENGINE_VERSION)
        assert a.exchange(at(observation, 0))[0] == STOP
        assert a.exchange(at(observation, 1))[0] == STOP
        with pytest.raises(PolicyFault, match="3 consecutive"):
            a.exchange(at(observation, 2))
    finally:
        a.close()


def test_agent_exit_is_a_fault(observation):
    a = agent("dying_agent.py")
    try:
        a.start(RAYS, ENGINE_VERSION)
        for tick in range(5):
            assert a.exchange(at(observation, tick))[0] == STRAIGHT
        with pytest.raises(PolicyFault):
            a.exchange(at(observation, 5))
    finally:
        a.close()


def test_late_reply_substituted_then_dropped_as_stale(observation):
    a = agent("slow_agent.py", tick_timeout_ms=1000)
    try:
        a.start(RAYS, ENGINE_VERSION)
        assert a.exchange(at(observation, 0)) == (STRAIGHT, None)
        action, reason = a.exchange(at(observation, 1))
        assert action == STOP and reason == "no action within 1000 ms"
        assert a.exchange(at(observation, 2)) == (STRAIGHT, None)
    finally:
        a.close()


def test_wrong_protocol_version():
    a = agent("bad_hello_agent.py")
    with pytest.raises(PolicyStartupError, match="protocol version"):
        a.start(RAYS, ENGINE_VERSION)


def test_silent_agent_times_out_in_handshake():
    a = agent("silent_agent.py", handshake_timeout=0.5)
    with pytest.raises(PolicyStartupError, match="did not answer hello"):
        a.start(RAYS, ENGINE_VERSION)


def test_missing_executable():
    a = ExternalAgent(["/nonexistent/agent-binary"])
    with pytest.raises(PolicyStartupError):
        a.start(RAYS, ENGINE_VERSION)


def test_hello_payload(tmp_path):
    # an agent that echoes what it received to a file, then answers
    script = tmp_path / "echo_agent.py"
    capture = tmp_path / "hello.json"
    script.write_text(
        "import json, sys\n"
        "line = sys.stdin.readline()\n"
        f"open({str(capture)!r}, 'w').write(line)\n"
        "print(json.dumps({'type': 'hello', 'tick': 0, 'payload': {'schema_version': 1, 'action_mode': 'discrete'}}), flush=True)\n"
        "sys.stdin.read()\n"
    )
    a = ExternalAgent([sys.executable, str(script)])
    a.start(RAYS, ENGINE_VERSION)
    a.close()
    hello = json.loads(capture.read_text())
    assert hello == {
        "type": "hello",
        "tick": 0,
        "payload": {"schema_version": 1, "engine_version": ENGINE_VERSION, "lidar_rays": RAYS,
                    "action_modes": ["discrete", "continuous"]},
    }
