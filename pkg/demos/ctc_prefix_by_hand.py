"""CTC prefix scores checked against brute-force path enumeration.

Run with ``python demos/ctc_prefix_by_hand.py``.
"""

import itertools
import math

import numpy as np

from syncst.ctc_prefix import PrefixScorer, brute_force_exact_prob, brute_force_prefix_prob

rng = np.random.default_rng(0)
steps, labels = 4, 3  # blank plus two tokens
post = np.log(rng.dirichlet(np.ones(labels), size=steps))

scorer = PrefixScorer(labels)
scorer.add_posteriors(post)

# every labeling of length <= 2 over tokens {1, 2}
for n in range(3):
    for prefix in itertools.product((1, 2), repeat=n):
        st = scorer.state(prefix, steps)
        print(f"{str(prefix):8s} exact {math.exp(st.log_prob()):.6f} (paths {brute_force_exact_prob(post, list(prefix)):.6f})"
              f"  prefix {math.exp(st.log_psi):.6f} (paths {brute_force_prefix_prob(post, list(prefix)):.6f})")

# exact-labeling probabilities over all labelings sum to one
total = sum(brute_force_exact_prob(post, list(p)) for n in range(steps + 1)
            for p in itertools.product((1, 2), repeat=n))
print(f"sum over all labelings: {total:.6f}")
