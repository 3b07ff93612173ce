# Template frequency statistics on a toy navigation corpus
#
# The toy domain draws templates from a Zipf law, so a few templates cover a
# large share of the data and many occur only once.

from topaug.corpus import Bucket, filter_unsupported, frequency_bucket, template_stats
from topaug.toy import make_toy_corpora

train, test = make_toy_corpora(seed=0)
stats = template_stats(train)
print(len(train), "utterances,", len(stats), "distinct templates")
print("top-10 mass %.3f" % stats.top_k_mass(10))
print("singleton fraction %.3f" % stats.singleton_fraction())
print("fitted Zipf exponent %.2f" % stats.zipf_exponent(100))

# The most common templates

for key, count in stats.ranked()[:5]:
    print(f"{count:5d}  {key}")

# Out-of-scope requests are usually removed before training.

print(len(train) - len(filter_unsupported(train)), "UNSUPPORTED items in train")

# Test items fall into three buckets by how often their template was seen in
# training.

counts = {b: 0 for b in Bucket}
for item in test:
    counts[frequency_bucket(stats, item.template_key)] += 1
print({b.value: n for b, n in counts.items()})
