"""End-to-end driver: load or simulate cohorts, learn DAGs, write artifacts.

Every step runs inside a named stage. A failure anywhere leaves a
``.failed`` marker in the output directory naming that stage, so partially
written artifacts are never mistaken for a finished run.
"""

from __future__ import annotations

import contextlib
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .bayesnet import fit_cpts
from .cdr import GLOBAL, LEVEL_LABELS, clean_records, generate_cohort, load_profile
from .errors import CdrDagError, InputError, StatisticalError
from .graph import Dag, Dataset, node_degrees
from .ingest import ColumnMapping, load_csv
from .pc import EdgeStrengthMap, PcConfig, compute_edge_strengths, learn_structure
from .report import ComparisonReport, compare_dags, export_dot
from .serialize import SCHEMA_VERSION, dag_to_dict, network_to_dict, write_json

FAILED_MARKER = ".failed"

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_STATISTICAL = 3
EXIT_IO = 4


class PipelineError(CdrDagError):
    """Wraps the error that stopped a run together with the stage it hit."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")

    @property
    def exit_code(self) -> int:
        return exit_code_for(self.cause)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, PipelineError):
        return exc.exit_code
    if isinstance(exc, StatisticalError):
        return EXIT_STATISTICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    if isinstance(exc, (InputError, ValueError, KeyError)):
        return EXIT_INPUT
    return 1


@dataclass(frozen=True)
class CohortSource:
    """Either a CSV export (with mapping) or a named synthetic profile."""

    label: str
    profile: str | None = None
    csv: Path | None = None
    mapping: ColumnMapping | None = None
    n: int = 10_000
    seed: int = 0
    rule_consistent: bool = False
    strict_morris: bool = False
    phases: tuple[str, ...] | None = None

    def __post_init__(self):
        if (self.profile is None) == (self.csv is None):
            raise InputError("a cohort needs exactly one of a profile name or a CSV path")


@dataclass
class CohortResult:
    label: str
    data: Dataset
    dag: Dag
    strengths: EdgeStrengthMap
    summary: dict
    paths: dict[str, Path] = field(default_factory=dict)


@dataclass
class PipelineResult:
    cohorts: list[CohortResult]
    comparison: ComparisonReport | None
    paths: dict[str, Path]


@contextlib.contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except (CdrDagError, OSError, ValueError, KeyError) as exc:
        raise PipelineError(name, exc) from exc


def _load(src: CohortSource) -> tuple[Dataset, dict]:
    if src.profile is not None:
        with _stage(f"{src.label}: simulate"):
            d = generate_cohort(src.profile, src.n, src.seed, src.rule_consistent)
        return d, {"source": {"profile": src.profile, "n": src.n, "seed": src.seed,
                              "rule_consistent": src.rule_consistent}}
    with _stage(f"{src.label}: load"):
        raw, load_report = load_csv(src.csv, src.mapping, phases=src.phases)
    with _stage(f"{src.label}: clean"):
        d, cleaning, _ = clean_records(raw, strict_morris=src.strict_morris)
    return d, {
        "source": {"csv": Path(src.csv).name, "phases": list(src.phases) if src.phases else None},
        "load": load_report.as_dict(),
        "cleaning": cleaning.as_dict(),
    }


def cdr_distribution(d: Dataset) -> dict:
    """Counts and proportions of each global rating."""
    counts = np.bincount(d.column(d.index_of(GLOBAL)), minlength=len(LEVEL_LABELS))
    total = int(counts.sum())
    return {
        label: {"count": int(c), "proportion": (float(c) / total if total else 0.0)}
        for label, c in zip(LEVEL_LABELS, counts)
    }


def _strengths_doc(g: Dag, s: EdgeStrengthMap, names, cfg: PcConfig) -> dict:
    return {
        "kind": "edge_strengths",
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.strength,
        "edges": [
            {"edge": [names[a], names[b]], "strength": s[(a, b)], "statistic": s.raw[(a, b)]}
            for a, b in sorted(g.edges)
        ],
    }


def _degrees_doc(g: Dag, names) -> dict:
    deg = node_degrees(g)
    return {
        "kind": "node_degrees",
        "schema_version": SCHEMA_VERSION,
        "degrees": {names[v]: {"in": deg[v].incoming, "out": deg[v].outgoing} for v in g.nodes},
    }


def _config_doc(cfg: PcConfig) -> dict:
    return {
        "alpha": cfg.alpha,
        "test": cfg.method,
        "stable": cfg.stable,
        "strength": cfg.strength,
        "max_cond_size": cfg.max_cond_size,
    }


def run_pipeline(
    sources: Sequence[CohortSource],
    cfg: PcConfig = PcConfig(),
    out_dir: str | Path = "cdrdag-out",
    truth: bool = False,
) -> PipelineResult:
    """Run every cohort through learning and write its artifacts.

    With ``truth`` each profile cohort uses its reference DAG instead of a
    learned one (strengths are still estimated from the simulated sample).
    Two cohorts also produce ``comparison.json`` and ``comparison.txt``.
    """
    out = Path(out_dir)
    marker = out / FAILED_MARKER
    stage = "prepare output"
    try:
        if not sources:
            raise InputError("no cohorts given")
        if len({s.label for s in sources}) != len(sources):
            raise InputError("cohort labels must be distinct")
        out.mkdir(parents=True, exist_ok=True)
        marker.unlink(missing_ok=True)

        results = []
        for src in sources:
            stage = f"{src.label}: load"
            d, summary = _load(src)
            names = d.names
            stage = f"{src.label}: learn"
            with _stage(stage):
                if truth:
                    if src.profile is None:
                        raise InputError("--truth needs profile cohorts")
                    dag = load_profile(src.profile).network.dag
                    strengths = compute_edge_strengths(d, dag, cfg.strength == "conditional")
                else:
                    dag, _, strengths = learn_structure(d, cfg)
                network = fit_cpts(d, dag, smoothing=1.0)
            summary = {
                "kind": "cohort_summary",
                "schema_version": SCHEMA_VERSION,
                "label": src.label,
                "n_rows": d.n_rows,
                "cdr_distribution": cdr_distribution(d),
                "config": _config_doc(cfg),
                "ground_truth_dag": truth,
                **summary,
            }
            stage = f"{src.label}: write"
            with _stage(stage):
                cdir = out / src.label
                cdir.mkdir(parents=True, exist_ok=True)
                paths = {
                    "summary": cdir / "summary.json",
                    "dag_json": cdir / "dag.json",
                    "dag_dot": cdir / "dag.dot",
                    "strengths": cdir / "strengths.json",
                    "degrees": cdir / "degrees.json",
                    "network": cdir / "network.json",
                }
                write_json(paths["summary"], summary)
                write_json(paths["dag_json"], dag_to_dict(dag, names))
                paths["dag_dot"].write_text(
                    export_dot(dag, strengths, names, header=f"cdrdag {__version__}"), encoding="utf-8"
                )
                write_json(paths["strengths"], _strengths_doc(dag, strengths, names, cfg))
                write_json(paths["degrees"], _degrees_doc(dag, names))
                write_json(paths["network"], network_to_dict(network, label=src.label))
            results.append(CohortResult(src.label, d, dag, strengths, summary, paths))

        comparison = None
        top_paths: dict[str, Path] = {}
        if len(results) == 2:
            a, b = results
            stage = "compare"
            with _stage(stage):
                comparison = compare_dags(
                    a.dag, b.dag, a.strengths, b.strengths, a.data.names, (a.label, b.label)
                )
                top_paths = {"comparison_json": out / "comparison.json", "comparison_txt": out / "comparison.txt"}
                write_json(top_paths["comparison_json"], comparison.to_dict())
                top_paths["comparison_txt"].write_text(comparison.to_text(), encoding="utf-8")
        return PipelineResult(results, comparison, top_paths)
    except Exception as exc:
        err = exc if isinstance(exc, PipelineError) else PipelineError(stage, exc)
        with contextlib.suppress(OSError):
            out.mkdir(parents=True, exist_ok=True)
            marker.write_text(f"stage: {err.stage}\nerror: {err.cause}\n", encoding="utf-8")
        if err is exc:
            raise
        raise err from exc

