"""Test model server: predicts the first column of each row."""
import json
import sys

N_COLUMNS = int(sys.argv[1]) if len(sys.argv) > 1 else 3


def main():
    print(json.dumps({"type": "ready", "n_columns": N_COLUMNS, "trainable": False}), flush=True)
    for line in sys.stdin:
        msg = json.loads(line)
        if msg["type"] == "shutdown":
            return 0
        if msg["type"] == "predict":
            values = [row[0] for row in msg["rows"]]
            print(json.dumps({"type": "prediction", "id": msg["id"], "values": values}),
                  flush=True)
        else:
            print(json.dumps({"type": "error", "id": msg.get("id"),
                              "message": f"unsupported type {msg['type']}"}), flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
