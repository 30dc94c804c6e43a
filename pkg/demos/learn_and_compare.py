"""Learn a DAG for each synthetic cohort and print the comparison tables.

The two reference networks stand in for the ADNI and LASI-DAD exports,
which cannot be redistributed. Run with ``python demos/learn_and_compare.py``.
"""

import tempfile

from cdrdag import CohortSource, PcConfig, run_pipeline

if __name__ == "__main__":
    sources = [
        CohortSource("ADNI", profile="adni-like", n=10_000, seed=1),
        CohortSource("LASI", profile="lasi-like", n=10_000, seed=1),
    ]
    with tempfile.TemporaryDirectory() as out:
        result = run_pipeline(sources, PcConfig(alpha=0.05), out)
        for c in result.cohorts:
            print(f"{c.label}: {c.data.n_rows} rows, {len(c.dag.edges)} edges learned")
        print()
        print(result.comparison.to_text())
