#!/usr/bin/env python3
"""Toy trainer speaking the wire protocol; behavior is picked by config["mode"]."""
import json
import sys
import time
from pathlib import Path

msg = json.loads(sys.stdin.readline())
mode = msg["config"].get("mode", "ok")
ckpt = Path(msg["checkpoint_dir"])
(ckpt / "last_resource").write_text(str(msg["resource"]))

if mode == "fail":
    print("diverged", file=sys.stderr)
    sys.exit(3)
if mode == "garbage":
    print("epoch 1 done")
    print("loss: not json")
    sys.exit(0)
if mode == "nan":
    print(json.dumps({"loss": float("nan")}))
    sys.exit(0)
if mode == "sleep":
    time.sleep(30)

print("training...")
print(json.dumps({"loss": msg["config"].get("base", 0.5) + 1.0 / msg["resource"]}))
