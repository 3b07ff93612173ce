# A PCFG auxiliary parser and exact-match filtering
#
# A grammar induced from the real training trees parses every synthetic
# utterance.  Only candidates parsed back to exactly their own tree are kept.

from topaug.corpus import filter_unsupported, template_stats
from topaug.filtering import filter_synthetic, soundness_violations
from topaug.infill import fit_infiller, generate
from topaug.pcfg import induce_grammar
from topaug.toy import make_toy_corpora

train, _ = make_toy_corpora(seed=0)
train = filter_unsupported(train)
grammar = induce_grammar(train)
print(len(grammar.rules), "rules,", len(grammar.lexicon), "preterminals")

res = grammar.parse("how far is it to boston".split())
print(res.tree, round(res.log_probability, 2))

samples = generate(fit_infiller(train), train.templates(), k=5, p=0.9, seed=0)
samples, report = filter_synthetic(grammar, samples, template_stats(train))
print(report.to_dict())

# Every kept sample is reproduced by the parser that kept it.

print("violations:", len(soundness_violations(grammar, samples)))
