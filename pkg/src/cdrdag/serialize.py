"""Versioned JSON documents for graphs, networks and reports."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bayesnet import BayesianNetwork, Cpt
from .graph import Cpdag, Dag, VariableSpec

SCHEMA_VERSION = 1


def _check_version(doc: dict, kind: str) -> None:
    if doc.get("kind") != kind:
        raise ValueError(f"expected a {kind!r} document, got {doc.get('kind')!r}")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")


def dag_to_dict(g: Dag, names: list[str] | None = None) -> dict:
    names = names or [str(i) for i in g.nodes]
    return {
        "kind": "dag",
        "schema_version": SCHEMA_VERSION,
        "nodes": list(names),
        "edges": [[names[a], names[b]] for a, b in sorted(g.edges)],
    }


def dag_from_dict(doc: dict) -> tuple[Dag, list[str]]:
    _check_version(doc, "dag")
    names = list(doc["nodes"])
    idx = {n: i for i, n in enumerate(names)}
    return Dag(len(names), frozenset((idx[a], idx[b]) for a, b in doc["edges"])), names


def cpdag_to_dict(g: Cpdag, names: list[str] | None = None) -> dict:
    names = names or [str(i) for i in g.nodes]
    return {
        "kind": "cpdag",
        "schema_version": SCHEMA_VERSION,
        "nodes": list(names),
        "directed": [[names[a], names[b]] for a, b in sorted(g.directed)],
        "undirected": [[names[a], names[b]] for a, b in sorted(g.undirected)],
    }


def network_to_dict(bn: BayesianNetwork, **meta) -> dict:
    doc = {
        "kind": "bayesian_network",
        "schema_version": SCHEMA_VERSION,
        "variables": [{"name": v.name, "levels": list(v.levels)} for v in bn.variables],
        "edges": [[bn.names[a], bn.names[b]] for a, b in sorted(bn.dag.edges)],
        "cpts": [
            {
                "node": bn.names[c.node],
                "parents": [bn.names[p] for p in c.parents],
                "table": c.table.tolist(),
            }
            for c in bn.cpts
        ],
    }
    if meta:
        doc["meta"] = meta
    return doc


def network_from_dict(doc: dict) -> BayesianNetwork:
    _check_version(doc, "bayesian_network")
    variables = tuple(VariableSpec(v["name"], tuple(v["levels"])) for v in doc["variables"])
    idx = {v.name: i for i, v in enumerate(variables)}
    dag = Dag(len(variables), frozenset((idx[a], idx[b]) for a, b in doc["edges"]))
    cpts = tuple(
        Cpt(idx[c["node"]], tuple(idx[p] for p in c["parents"]), np.array(c["table"], dtype=float))
        for c in doc["cpts"]
    )
    return BayesianNetwork(variables, dag, cpts)


def dumps(doc: dict) -> str:
    """Canonical text form: sorted keys, fixed indentation, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def write_json(path: str | Path, doc: dict) -> None:
    Path(path).write_text(dumps(doc), encoding="utf-8")


def read_json(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))
