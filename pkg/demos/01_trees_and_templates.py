# Trees, templates and generator forms
#
# An annotation is a bracketed tree.  Intents (IN:) and slots (SL:) alternate,
# and words sit at the leaves.

from topaug import Form, extract_template, fill_template, parse_linearized, serialize, template_key, utterance_of
from topaug.tree import from_generator_output, labels_of

tree = parse_linearized("[IN:GET_DISTANCE how far is [SL:DESTINATION boston ] ]")
print(serialize(tree))
print(utterance_of(tree))

# A template replaces every maximal run of words with one mask.  Its key is
# the canonical string and is what frequency statistics count.

tpl = extract_template(tree)
print(template_key(tpl))

# The generator sees the template in a lowercased form with labeled closers,
# and is trained to produce the filled tree in the same form.

src = serialize(tpl, Form.GENERATOR_SOURCE)
tgt = serialize(tree, Form.GENERATOR_TARGET)
print(src)
print(tgt)

# Generator output is parsed back against the set of known labels.  Anything
# malformed or carrying an invented label is rejected with a reason.

assert from_generator_output(tgt, labels_of(tree)) == tree

# Filling the template with new spans gives a new annotated utterance.

new = fill_template(tpl, [["how", "far", "away", "is"], ["the", "airport"]])
print(serialize(new))
