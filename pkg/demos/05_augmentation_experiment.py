# Baseline versus augmented training on the toy corpus
#
# The pipeline trains a PCFG on real data, generates and filters synthetic
# data, retrains on the union and compares exact match by frequency bucket.

from topaug.evaluation import render_table
from topaug.pipeline import PipelineConfig, augment
from topaug.toy import make_toy_corpora

train, test = make_toy_corpora(seed=0)
result = augment(PipelineConfig(), train, test, seed=0)
print(render_table(result.baseline, [result.augmented]))
print("kept", result.filter_report.kept, "of", result.filter_report.total)
