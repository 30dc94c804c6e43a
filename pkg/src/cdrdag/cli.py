"""Command line entry point.

Subcommands: ``learn`` (one cohort), ``compare`` (two cohorts), ``score``
(global rating from six domains), ``simulate`` (write a synthetic cohort as
CSV) and ``query`` (exact conditional and interventional distributions).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .bayesnet import intervene, query
from .cdr import DOMAINS, GLOBAL, PROFILES, generate_cohort, load_profile, score_global
from .errors import InputError
from .ingest import ColumnMapping, load_mapping, mapping_template, write_cohort_csv
from .pc import PcConfig
from .pipeline import EXIT_OK, CohortSource, PipelineError, exit_code_for, run_pipeline
from .serialize import dag_to_dict, dumps, network_from_dict, read_json
from .report import export_dot


def _pc_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("structure learning")
    g.add_argument("--alpha", type=float, default=0.05, help="CI test level (default 0.05)")
    g.add_argument("--test", choices=("chi2", "g2"), default="chi2", help="CI test statistic")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--stable", dest="stable", action="store_true", default=True,
                      help="order-independent PC (default)")
    mode.add_argument("--classic", dest="stable", action="store_false", help="original PC")
    g.add_argument("--max-cond-size", type=int, default=None)
    g.add_argument("--strength", choices=("marginal", "conditional"), default="marginal",
                   help="edge strength statistic")


def _source_args(p: argparse.ArgumentParser, many: bool) -> None:
    g = p.add_argument_group("cohort source")
    action = "append" if many else "store"
    g.add_argument("--profile", action=action, choices=PROFILES, help="synthetic reference profile")
    g.add_argument("--csv", action=action, type=Path, help="CSV export to learn from")
    g.add_argument("--mapping", action=action, type=Path, help="column mapping JSON for --csv")
    g.add_argument("--mapping-template", action=action, choices=("adni", "lasi-dad"),
                   help="use a shipped column mapping template")
    g.add_argument("--label", action=action, help="cohort label used for output names")
    g.add_argument("--n", type=int, default=10_000, help="rows to simulate for profiles")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--rule-consistent", action="store_true",
                   help="set simulated global ratings by the scoring rule")
    g.add_argument("--strict-morris", action="store_true", help="drop rows with PC=0.5")
    g.add_argument("--phase", action="append", default=None, metavar="LABEL",
                   help="keep only CSV rows from this study phase (repeatable; needs a phase column)")
    p.add_argument("--out", type=Path, default=Path("cdrdag-out"), help="output directory")
    p.add_argument("--format", choices=("dot", "json", "text"), default="text",
                   help="what to print on stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cdrdag", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"cdrdag {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    learn = sub.add_parser("learn", help="learn a DAG for one cohort")
    _source_args(learn, many=False)
    _pc_args(learn)

    cmp_ = sub.add_parser("compare", help="learn and compare DAGs for two cohorts")
    _source_args(cmp_, many=True)
    _pc_args(cmp_)
    cmp_.add_argument("--truth", action="store_true",
                      help="compare the profiles' reference DAGs instead of learned ones")

    score = sub.add_parser("score", help="global CDR from six domain ratings")
    for name in DOMAINS:
        score.add_argument(f"--{name.lower()}", type=float, required=True)
    score.add_argument("--format", choices=("json", "text"), default="text")

    sim = sub.add_parser("simulate", help="write a synthetic cohort as CSV")
    sim.add_argument("--profile", choices=PROFILES, required=True)
    sim.add_argument("--n", type=int, default=10_000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--rule-consistent", action="store_true")
    sim.add_argument("--out", type=Path, required=True, help="CSV path to write")

    q = sub.add_parser("query", help="exact P(target | evidence) or P(target | do(...))")
    src = q.add_mutually_exclusive_group(required=True)
    src.add_argument("--profile", choices=PROFILES)
    src.add_argument("--network", type=Path, help="network.json written by learn/compare")
    q.add_argument("--target", default=GLOBAL)
    q.add_argument("--given", action="append", default=[], metavar="VAR=LEVEL")
    q.add_argument("--do", action="append", default=[], metavar="VAR=LEVEL")
    q.add_argument("--format", choices=("json", "text"), default="text")
    return p


def _assignments(items: list[str]) -> dict[str, str]:
    out = {}
    for item in items:
        name, sep, level = item.partition("=")
        if not sep or not name or not level:
            raise InputError(f"expected VAR=LEVEL, got {item!r}")
        out[name.strip()] = level.strip()
    return out


def _nth(values, i):
    if values is None:
        return None
    return values[i] if i < len(values) else None


def _mapping(path, template) -> ColumnMapping | None:
    if path is not None:
        return load_mapping(path)
    if template is not None:
        return mapping_template(template)
    return None


def _sources(args, many: bool) -> list[CohortSource]:
    def listify(v):
        return v if many else ([v] if v is not None else None)

    profiles, csvs = listify(args.profile), listify(args.csv)
    if profiles and csvs:
        raise InputError("give either --profile or --csv cohorts, not both")
    items = profiles or csvs or []
    if profiles and args.phase:
        raise InputError("--phase applies to --csv cohorts only")
    phases = tuple(args.phase) if args.phase else None
    want = 2 if many else 1
    if len(items) != want:
        raise InputError(f"expected {want} cohort(s), got {len(items)}")
    maps, templates, labels = listify(args.mapping), listify(args.mapping_template), listify(args.label)
    out = []
    for i, item in enumerate(items):
        label = _nth(labels, i) or (item if profiles else Path(item).stem)
        if profiles:
            out.append(CohortSource(label, profile=item, n=args.n, seed=args.seed,
                                    rule_consistent=args.rule_consistent))
        else:
            out.append(CohortSource(label, csv=Path(item),
                                    mapping=_mapping(_nth(maps, i), _nth(templates, i)),
                                    strict_morris=args.strict_morris, phases=phases))
    if many and out[0].label == out[1].label:
        out[1] = CohortSource(**{**vars(out[1]), "label": out[1].label + "-2"})
    return out


def _cmd_pipeline(args, many: bool) -> int:
    cfg = PcConfig(args.alpha, args.test, args.max_cond_size, args.stable, args.strength)
    result = run_pipeline(_sources(args, many), cfg, args.out, truth=getattr(args, "truth", False))
    if many and args.format == "text":
        sys.stdout.write(result.comparison.to_text())
    elif many and args.format == "json":
        sys.stdout.write(dumps(result.comparison.to_dict()))
    else:
        for c in result.cohorts:
            names = c.data.names
            if args.format == "dot":
                sys.stdout.write(export_dot(c.dag, c.strengths, names))
            elif args.format == "json":
                sys.stdout.write(dumps(dag_to_dict(c.dag, names)))
            else:
                sys.stdout.write(f"{c.label}: {c.data.n_rows} rows, {len(c.dag.edges)} edges\n")
                for (a, b), s in c.strengths.items():
                    sys.stdout.write(f"  {names[a]} -> {names[b]}  {s:.1f}\n")
    return EXIT_OK


def _cmd_score(args) -> int:
    scores = {name: getattr(args, name.lower()) for name in DOMAINS}
    trace = score_global(scores)
    if args.format == "json":
        sys.stdout.write(dumps({"global": trace.rating, "tie_break": trace.tie_break}))
    else:
        sys.stdout.write(f"{trace.rating:g}\n")
    return EXIT_OK


def _cmd_simulate(args) -> int:
    d = generate_cohort(args.profile, args.n, args.seed, args.rule_consistent)
    write_cohort_csv(args.out, d)
    return EXIT_OK


def _cmd_query(args) -> int:
    bn = load_profile(args.profile).network if args.profile else network_from_dict(read_json(args.network))
    do, given = _assignments(args.do), _assignments(args.given)
    if do:
        bn = intervene(bn, do)
    dist = query(bn, args.target, given)
    levels = bn.variables[bn.node(args.target)].levels
    if args.format == "json":
        sys.stdout.write(dumps({
            "target": args.target, "do": do, "given": given,
            "distribution": {lv: float(p) for lv, p in zip(levels, dist)},
        }))
    else:
        for lv, p in zip(levels, dist):
            sys.stdout.write(f"{args.target}={lv}\t{p:.6f}\n")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "learn":
            return _cmd_pipeline(args, many=False)
        if args.command == "compare":
            return _cmd_pipeline(args, many=True)
        if args.command == "score":
            return _cmd_score(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        return _cmd_query(args)
    except PipelineError as exc:
        print(f"cdrdag: error in stage {exc.stage!r}: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:
        print(f"cdrdag: error in stage {args.command!r}: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
