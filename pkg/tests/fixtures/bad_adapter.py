"""Misbehaving adapter for error-taxonomy tests; the mode is argv[1]."""
import json
import sys
import time

mode = sys.argv[1]
for line in sys.stdin:
    req = json.loads(line)
    rid, k = req["id"], req.get("k", 1)
    if mode == "crash":
        sys.exit(5)
    if mode == "hang":
        time.sleep(60)
    if mode == "garbage":
        print("this is not json", flush=True)
        continue
    if mode == "short":
        for _ in range(3):
            print(json.dumps({"id": rid, "candidate": req["source"].replace("[mask]", "x")}), flush=True)
        continue
    if mode == "wrong_id":
        print(json.dumps({"id": rid + 100, "candidate": "x"}), flush=True)
        continue
    if mode == "no_candidate":
        print(json.dumps({"id": rid}), flush=True)
        continue
    if mode == "bad_tree":
        print(json.dumps({"id": rid, "tree": "[IN:BROKEN"}), flush=True)
        continue
    if mode == "unknown_label":
        for _ in range(k):
            print(json.dumps({"id": rid, "candidate": "[in:invented x in:invented]"}), flush=True)
        continue
    if mode == "flat":
        # well-formed, known labels, but always the one-mask skeleton
        for _ in range(k):
            print(json.dumps({"id": rid, "candidate": "[in:get_distance x in:get_distance]"}), flush=True)
        continue
    if mode == "stderr_flood":
        # lots of stderr must not block the protocol
        sys.stderr.write("noise " * 20000 + "\n")
        sys.stderr.flush()
        for _ in range(k):
            print(json.dumps({"id": rid, "candidate": req["source"].replace("[mask]", "x")}), flush=True)
