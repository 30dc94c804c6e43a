"""Walk through the global CDR scoring rule on a few hand-picked profiles.

Run with ``python demos/scoring_rule.py``.
"""

from cdrdag import DOMAINS, score_global

CASES = {
    "unimpaired": (0, 0, 0, 0, 0, 0),
    "questionable memory, mild elsewhere": (0.5, 1, 1, 1, 0.5, 0.5),
    "four below, tie broken toward memory": (2, 1, 1, 0.5, 0.5, 2),
    "three above, two below": (1, 2, 2, 3, 0, 0.5),
    "tie among higher secondaries": (1, 3, 3, 2, 2, 1),
}

if __name__ == "__main__":
    print("  ".join(f"{d:>3}" for d in DOMAINS), " global  tie-break  case")
    for label, scores in CASES.items():
        trace = score_global(dict(zip(DOMAINS, scores)))
        cells = "  ".join(f"{s:>3g}" for s in scores)
        print(f"{cells}  {trace.rating:>6g}  {str(trace.tie_break):>9}  {label}")
