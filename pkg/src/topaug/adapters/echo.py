"""Echo generator: answers every request with ``k`` copies of its source,
each mask replaced by a fixed word.

Useful as a conformance target for the protocol and as a template for
wrapping a real generator.
"""
from __future__ import annotations

import json
import sys
from typing import TextIO

FILLER = "x"


def fill(source: str, word: str = FILLER) -> str:
    return source.replace("[mask]", word)


def serve(stdin: TextIO = sys.stdin, stdout: TextIO = sys.stdout) -> int:
    for line in stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        out = fill(req["source"])
        for _ in range(int(req["k"])):
            stdout.write(json.dumps({"id": req["id"], "candidate": out}) + "\n")
        stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(serve())
