# Nucleus-sampled infilling with backoff
#
# The built-in infiller estimates, for every mask position, which word spans
# filled it in training.  Sampling keeps only the top-p nucleus.

from topaug.corpus import filter_unsupported
from topaug.infill import backoff_histogram, fit_infiller, generate, mask_contexts, top_p_truncate
from topaug.toy import make_toy_corpora

train, _ = make_toy_corpora(seed=0)
train = filter_unsupported(train)
model = fit_infiller(train)

# The nucleus of a small distribution: outcomes by descending probability,
# cut where the cumulative mass reaches p.

print(top_p_truncate({"a": 0.5, "b": 0.3, "c": 0.2}, p=0.7))

# Distribution for the first mask of a common template

tpl = train.templates()[0]
ctx = mask_contexts(tpl)[0]
level, nucleus = model.nucleus(ctx, p=0.9)
print(level.name, [(" ".join(span), round(prob, 3)) for span, prob in nucleus[:5]])

# Generate k candidates per distinct template.  Duplicates of real data and
# of each other are dropped.

samples = generate(model, train.templates(), k=5, p=0.9, seed=0)
print(len(samples), "candidates")
for s in samples[:3]:
    print(" ", s.tree)
print(backoff_histogram(samples))
