"""Compare seeing and doing on the dense reference network.

Conditioning on a memory rating also tells us about the other domains
that feed it; intervening on memory does not. Run with
``python demos/interventions.py``.
"""

from cdrdag import intervene, query, reference_network
from cdrdag.cdr import LEVEL_LABELS

if __name__ == "__main__":
    bn = reference_network("adni-like")
    print("M    P(CDR>=1 | M)   P(CDR>=1 | do(M))")
    for level in LEVEL_LABELS:
        seen = query(bn, "CDR", {"M": level})[2:].sum()
        done = query(intervene(bn, {"M": level}), "CDR")[2:].sum()
        print(f"{level:<4} {seen:>13.3f}   {done:>17.3f}")
