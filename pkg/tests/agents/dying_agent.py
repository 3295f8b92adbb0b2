#!/usr/bin/env python3
"""Discrete agent that exits without a word after answering a few ticks."""
import json
import sys

LAST_TICK = 4


def main():
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "hello":
            print(json.dumps({"type": "hello", "tick": 0,
                              "payload": {"schema_version": 1, "action_mode": "discrete"}}), flush=True)
        elif msg["type"] == "observation":
            if msg["tick"] > LAST_TICK:
                sys.exit(1)
            print(json.dumps({"type": "action", "tick": msg["tick"], "payload": {"discrete": "Straight"}}), flush=True)


if __name__ == "__main__":
    main()
