# policy_harness/external_agent.py
"""
External agents: a child process that speaks newline-delimited JSON on its
standard streams, one message per line, each shaped {type, tick, payload}.

    engine -> agent   hello        {schema_version, engine_version, lidar_rays, action_modes}
    agent  -> engine  hello        {schema_version, action_mode}
    engine -> agent   observation  Observation            (once per tick)
    agent  -> engine  action       {"discrete": ...} | {"continuous": {...}}
    engine -> agent   terminate    {reason}

The exchange is lockstep. A reply that is malformed, for the wrong action
mode, or later than the per-tick timeout is replaced by Stop; too many
replacements in a row, or the agent going away, is a PolicyFault.
"""

import json
import logging
import queue
import shlex
import subprocess
import threading
import time
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from perception.observation import Observation
from policy_harness.actions import STOP, EgoAction, MalformedAction
from scenario_model.errors import PolicyFault, PolicyStartupError

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
ACTION_MODES = ("discrete", "continuous")
DEFAULT_HANDSHAKE_TIMEOUT = 5.0
DEFAULT_TICK_TIMEOUT_MS = 50
DEFAULT_MAX_SUBSTITUTIONS = 3
_SHUTDOWN_WAIT = 1.0
_EOF = None


def encode_message(kind: str, tick: int, payload: Dict[str, Any]) -> bytes:
    text = json.dumps({"type": kind, "tick": tick, "payload": payload},
                      sort_keys=True, separators=(",", ":"), allow_nan=False)
    return text.encode("utf-8") + b"\n"


def decode_message(line: bytes) -> Dict[str, Any]:
    """Parse one protocol line; raises ValueError on anything that is not a message"""
    message = json.loads(line.decode("utf-8"))
    if not isinstance(message, dict) or set(message) != {"type", "tick", "payload"}:
        raise ValueError("message must hold exactly type, tick and payload")
    if not isinstance(message["type"], str):
        raise ValueError("message type must be a string")
    if isinstance(message["tick"], bool) or not isinstance(message["tick"], int):
        raise ValueError("message tick must be an integer")
    return message


class ExternalAgent:
    """One agent process bound to one simulation run"""

    def __init__(self, command: Union[str, Sequence[str]],
                 handshake_timeout: float = DEFAULT_HANDSHAKE_TIMEOUT,
                 tick_timeout_ms: int = DEFAULT_TICK_TIMEOUT_MS,
                 max_substitutions: int = DEFAULT_MAX_SUBSTITUTIONS):
        self.argv: List[str] = shlex.split(command) if isinstance(command, str) else list(command)
        self.handshake_timeout = handshake_timeout
        self.tick_timeout = tick_timeout_ms / 1000.0
        self.max_substitutions = max_substitutions
        self.action_mode: Optional[str] = None
        self.consecutive_substitutions = 0
        self._proc: Optional[subprocess.Popen] = None
        self._lines: "queue.Queue[Optional[bytes]]" = queue.Queue()
        self._reader: Optional[threading.Thread] = None
        self._closed = False

    # process plumbing

    def _read_stdout(self) -> None:
        stream = self._proc.stdout
        try:
            for line in iter(stream.readline, b""):
                self._lines.put(line)
        except (OSError, ValueError):
            pass
        finally:
            self._lines.put(_EOF)

    def _send(self, kind: str, tick: int, payload: Dict[str, Any]) -> None:
        try:
            self._proc.stdin.write(encode_message(kind, tick, payload))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError, ValueError) as e:
            raise PolicyFault(f"agent input closed: {e}") from None

    def _next_line(self, deadline: float) -> Optional[bytes]:
        """Next raw line before deadline; raises queue.Empty on timeout, returns None on EOF"""
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            raise queue.Empty
        return self._lines.get(timeout=remaining)

    # lifecycle

    def start(self, lidar_rays: int, engine_version: str) -> str:
        """Launch the process and complete the hello exchange; returns the agreed action mode"""
        if not self.argv:
            raise PolicyStartupError("empty agent command")
        try:
            self._proc = subprocess.Popen(
                self.argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE, bufsize=0,
            )
        except OSError as e:
            raise PolicyStartupError(f"cannot launch agent {self.argv[0]!r}: {e}") from None
        self._reader = threading.Thread(target=self._read_stdout, name="agent-stdout", daemon=True)
        self._reader.start()
        logger.info("[+] Agent started (pid %s): %s", self._proc.pid, " ".join(self.argv))

        try:
            self._send("hello", 0, {
                "schema_version": PROTOCOL_VERSION,
                "engine_version": engine_version,
                "lidar_rays": lidar_rays,
                "action_modes": list(ACTION_MODES),
            })
            line = self._next_line(time.monotonic() + self.handshake_timeout)
        except PolicyFault as e:
            self.close("startup_failed")
            raise PolicyStartupError(str(e)) from None
        except queue.Empty:
            self.close("startup_failed")
            raise PolicyStartupError(f"agent did not answer hello within {self.handshake_timeout}s") from None
        if line is _EOF:
            self.close("startup_failed")
            raise PolicyStartupError("agent exited during handshake")

        try:
            reply = decode_message(line)
            payload = reply["payload"]
            if reply["type"] != "hello" or not isinstance(payload, dict):
                raise ValueError(f"expected hello, got {reply['type']!r}")
            if payload.get("schema_version") != PROTOCOL_VERSION:
                raise ValueError(f"unsupported protocol version {payload.get('schema_version')!r}")
            if payload.get("action_mode") not in ACTION_MODES:
                raise ValueError(f"unknown action mode {payload.get('action_mode')!r}")
        except (ValueError, UnicodeDecodeError) as e:
            self.close("startup_failed")
            raise PolicyStartupError(f"bad handshake: {e}") from None
        self.action_mode = payload["action_mode"]
        return self.action_mode

    def close(self, reason: str = "finished", tick: int = 0) -> None:
        if self._closed or self._proc is None:
            self._closed = True
            return
        self._closed = True
        if self._proc.poll() is None:
            try:
                self._send("terminate", tick, {"reason": reason})
            except PolicyFault:
                pass
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=_SHUTDOWN_WAIT)
        except subprocess.TimeoutExpired:
            logger.warning("[!] Agent did not exit, killing pid %s", self._proc.pid)
            self._proc.kill()
            self._proc.wait()
        if self._reader is not None:
            self._reader.join(timeout=_SHUTDOWN_WAIT)

    # per-tick exchange

    def _read_action(self, tick: int) -> EgoAction:
        deadline = time.monotonic() + self.tick_timeout
        while True:
            line = self._next_line(deadline)
            if line is _EOF:
                raise PolicyFault(f"agent exited at tick {tick}")
            try:
                message = decode_message(line)
            except (ValueError, UnicodeDecodeError) as e:
                raise MalformedAction(f"unreadable message: {e}") from None
            if message["type"] == "action" and message["tick"] < tick:
                logger.debug("[!] Dropping stale action for tick %s", message["tick"])
                continue
            if message["type"] != "action" or message["tick"] != tick:
                raise MalformedAction(f"expected action for tick {tick}, got {message['type']} for tick {message['tick']}")
            action = EgoAction.from_wire(message["payload"])
            if self.action_mode == "discrete" and action.discrete is None:
                raise MalformedAction("continuous action from a discrete agent")
            if self.action_mode == "continuous" and action.continuous is None:
                raise MalformedAction("discrete action from a continuous agent")
            return action

    def exchange(self, observation: Observation) -> Tuple[EgoAction, Optional[str]]:
        """
        Send one observation and return the agent's action, or Stop plus the
        reason it was substituted.
        """
        tick = observation.tick
        self._send("observation", tick, observation.to_wire())
        try:
            action = self._read_action(tick)
        except queue.Empty:
            reason = f"no action within {int(self.tick_timeout * 1000)} ms"
        except MalformedAction as e:
            reason = str(e)
        else:
            self.consecutive_substitutions = 0
            return action, None

        self.consecutive_substitutions += 1
        logger.warning("[!] Tick %s: substituting Stop (%s)", tick, reason)
        if self.consecutive_substitutions >= self.max_substitutions:
            raise PolicyFault(f"{self.consecutive_substitutions} consecutive substituted actions, last: {reason}")
        return STOP, reason
