"""Test server that dies mid-request after a clean handshake."""
import json
import sys

print(json.dumps({"type": "ready", "n_columns": 3, "trainable": False}), flush=True)
sys.stdin.readline()  # swallow the first request, then vanish
sys.exit(9)
