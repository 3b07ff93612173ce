# Plugging in an external generator
#
# Any program that reads one JSON request per line on stdin and answers with
# JSON lines on stdout can act as the generator.  The echo adapter fills
# every mask with a fixed word, which is enough to exercise the protocol.

import sys

from topaug.adapter import external_generate
from topaug.tree import labels_of, parse_template

templates = [
    parse_template("[IN:GET_DISTANCE [mask] [SL:DESTINATION [mask] ] ]"),
    parse_template("[IN:GET_DIRECTIONS [mask] [SL:SOURCE [mask] ] [mask] [SL:DESTINATION [mask] ] ]"),
]
labels = set().union(*(labels_of(t) for t in templates))
for s in external_generate([sys.executable, "-m", "topaug.adapters.echo"], templates, labels, k=2):
    print(s.generator_id, s.tree, s.rejected)

# The same runs from the command line with
#   topaug generate --train train.tsv --generator "python -m topaug.adapters.echo" --out-dir out
