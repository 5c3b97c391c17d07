"""How latency and quality move with the wait value k for both policies.

Run with ``python demos/latency_vs_k.py``. Takes under a minute.
"""

import math

from syncst import SessionConfig
from syncst.corpus import CorpusConfig, generate
from syncst.harness import simulate_corpus
from syncst.metrics import evaluate

corpus = generate(CorpusConfig(n_utts=40, seed=1))
refs = corpus.references()

print(f"{'policy':6s} {'k':>4s} {'AL ms':>8s} {'CA-AL ms':>9s} {'AP':>6s} {'BLEU':>6s}")
for policy in ("lcp", "sh"):
    for k in (1, 2, 3, 5, math.inf):
        rep = evaluate(simulate_corpus(corpus, SessionConfig(k=k, policy=policy)), refs)
        print(f"{policy:6s} {k:>4} {rep['al_ms']:8.1f} {rep['ca_al_ms']:9.1f} {rep['ap']:6.3f} {rep['bleu']:6.2f}")

# LCP waits for the whole beam to agree, so it commits later than SH at the
# same k. k=inf is full-sentence decoding and its AL is the utterance length.
