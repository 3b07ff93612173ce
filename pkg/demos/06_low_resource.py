# Low-resource protocol: one utterance per template
#
# Each seed keeps one randomly chosen utterance per distinct template, and
# the whole pipeline runs on that subsample.  Results are reported as
# mean ± standard deviation over seeds.

from topaug.pipeline import PipelineConfig, augment_seeds
from topaug.toy import make_toy_corpora

train, test = make_toy_corpora(seed=0)
results, summary = augment_seeds(PipelineConfig(subsample=True), [0, 1, 2], train, test)
print(summary["table"])
for r in results:
    print("seed", r.seed, "train size", r.train_size, "kept", r.filter_report.kept)
