"""Causal structure discovery over Clinical Dementia Rating domain scores."""

__version__ = "0.1.0"

from .bayesnet import (
    BayesianNetwork,
    Cpt,
    fit_cpts,
    forward_sample,
    intervene,
    joint_distribution,
    log_likelihood,
    query,
)
from .cdr import (
    DOMAINS,
    GLOBAL,
    DomainScores,
    CdrRecord,
    CohortProfile,
    RawRecord,
    CleaningReport,
    clean_records,
    generate_cohort,
    global_cdr,
    load_profile,
    reference_network,
    score_global,
)
from .contingency import (
    CiTestResult,
    ContingencyTable,
    build_table,
    chi_square_statistic,
    chi_square_survival,
    ci_test,
    g2_statistic,
)
from .graph import (
    Cpdag,
    Dag,
    Dataset,
    SepSetMap,
    VariableSpec,
    d_separated,
    node_degrees,
    structural_hamming_distance,
    topological_sort,
)
from .pc import (
    EdgeStrengthMap,
    PcConfig,
    apply_meek_rules,
    compute_edge_strengths,
    cpdag_of,
    extend_to_dag,
    learn_cpdag,
    learn_skeleton,
    learn_structure,
    orient_v_structures,
)
from .ingest import ColumnMapping, load_csv, mapping_template
from .pipeline import CohortSource, run_pipeline
from .report import ComparisonReport, compare_dags, export_dot
