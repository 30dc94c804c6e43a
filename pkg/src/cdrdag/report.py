"""Cohort DAG comparison tables and Graphviz export."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from .errors import NodeSetMismatch
from .graph import Dag, node_degrees, structural_hamming_distance
from .pc import EdgeStrengthMap
from .serialize import SCHEMA_VERSION

ABSENT = "−"  # minus sign, as used for absent edges in published tables

Edge = tuple[int, int]


def _fmt(x: float | None) -> str:
    return ABSENT if x is None else f"{x:.1f}"


@dataclass(frozen=True)
class ComparisonReport:
    """Side-by-side view of two DAGs over the same variables.

    ``reversed`` holds edges as oriented in ``a``. Strength cells are already
    rounded to one decimal; ``None`` means the edge is absent in that cohort.
    """

    names: tuple[str, ...]
    labels: tuple[str, str]
    degrees: tuple[tuple[tuple[int, int], ...], tuple[tuple[int, int], ...]]
    strengths: tuple[tuple[Edge, float | None, float | None], ...]
    shared: tuple[Edge, ...]
    reversed: tuple[Edge, ...]
    only_a: tuple[Edge, ...]
    only_b: tuple[Edge, ...]
    shd: int

    def edge_name(self, e: Edge) -> str:
        return f"{self.names[e[0]]}->{self.names[e[1]]}"

    def degree_rows(self) -> list[tuple[str, str, str]]:
        a, b = self.degrees
        return [
            (n, f"{a[i][0]} / {a[i][1]}", f"{b[i][0]} / {b[i][1]}") for i, n in enumerate(self.names)
        ]

    def degree_table(self) -> str:
        return _table(("Node", *self.labels), self.degree_rows())

    def strength_table(self) -> str:
        rows = [(self.edge_name(e), _fmt(sa), _fmt(sb)) for e, sa, sb in self.strengths]
        return _table(("Edge", *self.labels), rows)

    def to_text(self) -> str:
        la, lb = self.labels
        parts = [
            "Node degrees (in / out)",
            self.degree_table(),
            "",
            "Edge strengths",
            self.strength_table(),
            "",
            f"Shared orientation: {_edge_list(self, self.shared)}",
            f"Reversed ({la} orientation): {_edge_list(self, self.reversed)}",
            f"Only in {la}: {_edge_list(self, self.only_a)}",
            f"Only in {lb}: {_edge_list(self, self.only_b)}",
            f"Structural Hamming distance: {self.shd}",
        ]
        return "\n".join(parts) + "\n"

    def to_dict(self) -> dict:
        names = self.names

        def edges(es):
            return [[names[a], names[b]] for a, b in es]

        return {
            "kind": "comparison_report",
            "schema_version": SCHEMA_VERSION,
            "labels": list(self.labels),
            "nodes": list(names),
            "degrees": {
                label: {n: {"in": d[i][0], "out": d[i][1]} for i, n in enumerate(names)}
                for label, d in zip(self.labels, self.degrees)
            },
            "strengths": [
                {"edge": [names[e[0]], names[e[1]]], self.labels[0]: sa, self.labels[1]: sb}
                for e, sa, sb in self.strengths
            ],
            "shared": edges(self.shared),
            "reversed": edges(self.reversed),
            "only_a": edges(self.only_a),
            "only_b": edges(self.only_b),
            "shd": self.shd,
        }


def _edge_list(r: ComparisonReport, es) -> str:
    return ", ".join(r.edge_name(e) for e in es) if es else "(none)"


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    cols = list(zip(header, *rows)) if rows else [(h,) for h in header]
    widths = [max(len(c) for c in col) for col in cols]
    lines = ["  ".join(h.ljust(w) for h, w in zip(header, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines)


def compare_dags(
    a: Dag,
    b: Dag,
    strengths_a: EdgeStrengthMap | None = None,
    strengths_b: EdgeStrengthMap | None = None,
    names: Sequence[str] | None = None,
    labels: tuple[str, str] = ("A", "B"),
) -> ComparisonReport:
    """Partition the union of edges and tabulate degrees and strengths."""
    if a.n_nodes != b.n_nodes:
        raise NodeSetMismatch(f"graphs have {a.n_nodes} and {b.n_nodes} nodes")
    names = tuple(names) if names is not None else tuple(str(i) for i in a.nodes)
    if len(names) != a.n_nodes:
        raise NodeSetMismatch(f"{len(names)} names for {a.n_nodes} nodes")

    shared, rev, only_a, only_b = [], [], [], []
    for e in sorted(a.edges):
        if e in b.edges:
            shared.append(e)
        elif (e[1], e[0]) in b.edges:
            rev.append(e)
        else:
            only_a.append(e)
    for e in sorted(b.edges):
        if e not in a.edges and (e[1], e[0]) not in a.edges:
            only_b.append(e)

    rows = []
    for e in sorted(a.edges | b.edges):
        sa = round(float(strengths_a[e]), 1) if strengths_a and e in a.edges else None
        sb = round(float(strengths_b[e]), 1) if strengths_b and e in b.edges else None
        rows.append((e, sa, sb))

    def deg(g):
        dd = node_degrees(g)
        return tuple((dd[v].incoming, dd[v].outgoing) for v in g.nodes)

    return ComparisonReport(
        names=names,
        labels=tuple(labels),
        degrees=(deg(a), deg(b)),
        strengths=tuple(rows),
        shared=tuple(shared),
        reversed=tuple(rev),
        only_a=tuple(only_a),
        only_b=tuple(only_b),
        shd=structural_hamming_distance(a, b),
    )


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(
    g: Dag,
    strengths: EdgeStrengthMap | None = None,
    names: Sequence[str] | None = None,
    header: str | None = None,
    min_width: float = 1.0,
    max_width: float = 5.0,
) -> str:
    """Graphviz digraph; pen width is linear in strength between the two bounds."""
    names = list(names) if names is not None else [str(i) for i in g.nodes]
    lines = []
    if header:
        lines.append(f"// {header}")
    lines.append("digraph cdr_dag {")
    lines.append("  node [shape=ellipse];")
    for n in names:
        lines.append(f"  {_quote(n)};")
    for a, b in sorted(g.edges):
        attrs = ""
        if strengths:
            s = float(strengths[(a, b)])
            width = min_width + (max_width - min_width) * s
            attrs = f' [label="{s:.1f}", penwidth={width:.2f}]'
        lines.append(f"  {_quote(names[a])} -> {_quote(names[b])}{attrs};")
    lines.append("}")
    return "\n".join(lines) + "\n"
