#!/usr/bin/env python3
"""Continuous agent driving on unseeded random controls; only a recorded trace can reproduce it."""
import json
import random
import sys

rng = random.SystemRandom()


def main():
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "hello":
            reply = {"type": "hello", "tick": 0, "payload": {"schema_version": 1, "action_mode": "continuous"}}
        elif msg["type"] == "observation":
            control = {"throttle": rng.random(), "brake": rng.random() * 0.3, "steer": rng.uniform(-0.2, 0.2)}
            reply = {"type": "action", "tick": msg["tick"], "payload": {"continuous": control}}
        else:
            break
        print(json.dumps(reply), flush=True)


if __name__ == "__main__":
    main()
