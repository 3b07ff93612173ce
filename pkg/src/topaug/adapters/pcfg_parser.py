"""Parser adapter serving a saved grammar: ``{"id", "utterance"}`` in,
``{"id", "tree"}`` out (``tree`` is null when there is no parse)."""
from __future__ import annotations

import json
import sys

from topaug.pcfg import Grammar
from topaug.tree import serialize


def main(argv: list[str]) -> int:
    if len(argv) != 1 or argv[0] in ("-h", "--help"):
        print("usage: python -m topaug.adapters.pcfg_parser GRAMMAR.json", file=sys.stderr)
        return 1
    grammar = Grammar.load(argv[0])
    for line in sys.stdin:
        if not line.strip():
            continue
        req = json.loads(line)
        tree = grammar(req["utterance"].split())
        sys.stdout.write(json.dumps({"id": req["id"], "tree": serialize(tree) if tree is not None else None}) + "\n")
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
