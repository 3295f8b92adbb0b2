# world_engine/rng.py
"""
Named deterministic random streams.
Each consumer draws from its own stream derived from (seed, label), so adding
a consumer never perturbs the numbers another one sees.
"""

import hashlib
from dataclasses import dataclass, replace
from typing import Any, Dict, Tuple

import numpy as np

TRAFFIC_STREAM = "traffic"
LIDAR_STREAM = "lidar"

# (state, inc, has_uint32, uinteger) of a PCG64 bit generator
Position = Tuple[int, int, int, int]


def stream_key(label: str) -> int:
    return int.from_bytes(hashlib.sha256(label.encode("utf-8")).digest()[:8], "little")


def make_stream(seed: int, label: str) -> np.random.Generator:
    sequence = np.random.SeedSequence([int(seed), stream_key(label)])
    return np.random.Generator(np.random.PCG64(sequence))


def _position_of(generator: np.random.Generator) -> Position:
    state = generator.bit_generator.state
    return (int(state["state"]["state"]), int(state["state"]["inc"]),
            int(state["has_uint32"]), int(state["uinteger"]))


def _generator_at(position: Position) -> np.random.Generator:
    bit_generator = np.random.PCG64()
    bit_generator.state = {
        "bit_generator": "PCG64",
        "state": {"state": position[0], "inc": position[1]},
        "has_uint32": position[2],
        "uinteger": position[3],
    }
    return np.random.Generator(bit_generator)


@dataclass(frozen=True)
class RngStreams:
    """
    The run's random state as immutable stream positions. Drawing never
    mutates a RngStreams: callers get a fresh Generator and, when the draw
    must persist, store `advanced(...)` in the next state.
    """

    seed: int
    positions: Tuple[Tuple[str, Position], ...] = ()

    def generator(self, label: str) -> np.random.Generator:
        for name, position in self.positions:
            if name == label:
                return _generator_at(position)
        return make_stream(self.seed, label)

    def advanced(self, label: str, generator: np.random.Generator) -> "RngStreams":
        kept = [(name, pos) for name, pos in self.positions if name != label]
        return replace(self, positions=tuple(sorted(kept + [(label, _position_of(generator))])))

    def tick_stream(self, label: str, tick: int) -> np.random.Generator:
        """A stream owned by one tick; the same (seed, label, tick) always gives the same draws"""
        return make_stream(self.seed, f"{label}@{int(tick)}")

    def snapshot(self) -> Dict[str, Any]:
        return {"seed": self.seed, "streams": {name: list(pos) for name, pos in self.positions}}
