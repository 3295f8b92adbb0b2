#!/usr/bin/env python3
"""Continuous agent holding a light throttle and a straight wheel."""
import json
import sys


def main():
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "hello":
            reply = {"type": "hello", "tick": 0, "payload": {"schema_version": 1, "action_mode": "continuous"}}
        elif msg["type"] == "observation":
            control = {"throttle": 0.3, "brake": 0.0, "steer": 0.0}
            reply = {"type": "action", "tick": msg["tick"], "payload": {"continuous": control}}
        else:
            break
        print(json.dumps(reply), flush=True)


if __name__ == "__main__":
    main()
