"""Discrete Bayesian networks over a :class:`~cdrdag.graph.Dag`.

Conditional probability tables are dense arrays of shape
``(*parent_levels, node_levels)``; the last axis sums to one. Inference is
by full enumeration of the joint, which is cheap at the sizes this package
targets (seven variables with five levels is 78,125 states).
"""

from __future__ import annotations

import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import InvalidLevel, UnknownNode, ZeroProbabilityEvidence
from .graph import Dag, Dataset, VariableSpec, topological_sort

MAX_JOINT_STATES = 5_000_000
_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Cpt:
    node: int
    parents: tuple[int, ...]
    table: np.ndarray

    def __post_init__(self):
        table = np.array(self.table, dtype=float, copy=True)
        if table.ndim != len(self.parents) + 1:
            raise ValueError(f"CPT of node {self.node} has {table.ndim} axes for {len(self.parents)} parents")
        if np.any(table < 0):
            raise ValueError(f"CPT of node {self.node} has negative entries")
        if not np.allclose(table.sum(axis=-1), 1.0, atol=_TOL, rtol=0):
            raise ValueError(f"CPT rows of node {self.node} do not sum to 1")
        table.setflags(write=False)
        object.__setattr__(self, "parents", tuple(int(p) for p in self.parents))
        object.__setattr__(self, "table", table)

    def row(self, parent_levels: Sequence[int]) -> np.ndarray:
        return self.table[tuple(parent_levels)]

    def __eq__(self, other):
        if not isinstance(other, Cpt):
            return NotImplemented
        return (self.node, self.parents) == (other.node, other.parents) and np.array_equal(
            self.table, other.table
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class BayesianNetwork:
    variables: tuple[VariableSpec, ...]
    dag: Dag
    cpts: tuple[Cpt, ...]

    def __post_init__(self):
        variables = tuple(self.variables)
        cpts = tuple(sorted(self.cpts, key=lambda c: c.node))
        if self.dag.n_nodes != len(variables):
            raise ValueError("DAG size does not match the variable list")
        if [c.node for c in cpts] != list(range(len(variables))):
            raise ValueError("need exactly one CPT per node")
        for c in cpts:
            if list(c.parents) != self.dag.parents(c.node):
                raise ValueError(f"CPT parents of node {c.node} differ from the DAG")
            want = tuple(variables[p].n_levels for p in c.parents) + (variables[c.node].n_levels,)
            if c.table.shape != want:
                raise ValueError(f"CPT of node {c.node} has shape {c.table.shape}, expected {want}")
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "cpts", cpts)

    @property
    def n_nodes(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def node(self, key: int | str) -> int:
        if isinstance(key, str):
            for i, v in enumerate(self.variables):
                if v.name == key:
                    return i
            raise UnknownNode(f"no variable named {key!r}")
        if not 0 <= key < self.n_nodes:
            raise UnknownNode(f"node {key} not in network")
        return int(key)

    def __eq__(self, other):
        if not isinstance(other, BayesianNetwork):
            return NotImplemented
        return (self.variables, self.dag, self.cpts) == (other.variables, other.dag, other.cpts)

    __hash__ = None


def fit_cpts(d: Dataset, g: Dag, smoothing: float = 1.0) -> BayesianNetwork:
    """Maximum-likelihood CPTs with additive smoothing.

    Parent configurations never observed get a uniform row when
    ``smoothing`` is zero.
    """
    if smoothing < 0:
        raise ValueError("smoothing must be non-negative")
    if g.n_nodes != d.n_variables:
        raise ValueError("DAG size does not match the dataset")
    cpts = []
    for v in g.nodes:
        parents = g.parents(v)
        dims = tuple(d.variables[p].n_levels for p in parents) + (d.variables[v].n_levels,)
        flat = np.ravel_multi_index(tuple(d.rows[:, i] for i in (*parents, v)), dims) if d.n_rows else []
        counts = np.bincount(np.asarray(flat, dtype=np.int64), minlength=math.prod(dims)).reshape(dims)
        counts = counts.astype(float) + smoothing
        totals = counts.sum(axis=-1, keepdims=True)
        k = dims[-1]
        table = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / k)
        cpts.append(Cpt(v, tuple(parents), table))
    return BayesianNetwork(d.variables, g, tuple(cpts))


def forward_sample(bn: BayesianNetwork, n: int, seed: int | None = None) -> Dataset:
    """Ancestral sampling in topological order with a per-call generator."""
    if n < 0:
        raise ValueError("n must be non-negative")
    rng = np.random.default_rng(seed)
    rows = np.zeros((n, bn.n_nodes), dtype=np.int64)
    for v in topological_sort(bn.dag):
        cpt = bn.cpts[v]
        probs = cpt.table[tuple(rows[:, p] for p in cpt.parents)] if cpt.parents else np.broadcast_to(cpt.table, (n, cpt.table.shape[-1]))
        cum = np.cumsum(probs, axis=1)
        u = rng.random(n)[:, None]
        rows[:, v] = np.minimum((u >= cum).sum(axis=1), cum.shape[1] - 1)
    return Dataset(bn.variables, rows)


def joint_distribution(bn: BayesianNetwork) -> np.ndarray:
    """Full joint as an array with one axis per variable."""
    shape = tuple(v.n_levels for v in bn.variables)
    if math.prod(shape) > MAX_JOINT_STATES:
        raise ValueError(f"joint has {math.prod(shape)} states; enumeration is capped at {MAX_JOINT_STATES}")
    joint = np.ones(shape)
    for cpt in bn.cpts:
        axes = (*cpt.parents, cpt.node)
        order = np.argsort(axes)
        t = np.transpose(cpt.table, order)
        view = [1] * len(shape)
        for ax in axes:
            view[ax] = shape[ax]
        joint = joint * t.reshape(view)
    return joint


def _resolve(bn: BayesianNetwork, assignment: Mapping) -> dict[int, int]:
    out = {}
    for key, level in assignment.items():
        v = bn.node(key)
        if isinstance(level, str):
            try:
                level = bn.variables[v].levels.index(level)
            except ValueError:
                raise InvalidLevel(f"{bn.variables[v].name} has no level {level!r}") from None
        level = int(level)
        if not 0 <= level < bn.variables[v].n_levels:
            raise InvalidLevel(f"level {level} out of range for {bn.variables[v].name}")
        out[v] = level
    return out


def query(bn: BayesianNetwork, target: int | str, evidence: Mapping | None = None) -> np.ndarray:
    """Exact ``P(target | evidence)`` by enumerating the joint."""
    t = bn.node(target)
    ev = _resolve(bn, evidence or {})
    if t in ev:
        raise ValueError("target must not appear in the evidence")
    joint = joint_distribution(bn)
    index = tuple(ev.get(v, slice(None)) for v in range(bn.n_nodes))
    sub = joint[index]
    # remaining axes keep their original order, minus the evidence axes
    free = [v for v in range(bn.n_nodes) if v not in ev]
    axis = free.index(t)
    marginal = sub.sum(axis=tuple(i for i in range(len(free)) if i != axis))
    total = marginal.sum()
    if total <= 0:
        raise ZeroProbabilityEvidence(f"evidence {ev} has probability zero")
    return marginal / total


def intervene(bn: BayesianNetwork, assignments: Mapping) -> BayesianNetwork:
    """Apply ``do(...)``: cut incoming edges of each intervened node and pin it."""
    fixed = _resolve(bn, assignments)
    dag = bn.dag.without_incoming(fixed)
    cpts = []
    for cpt in bn.cpts:
        if cpt.node in fixed:
            table = np.zeros(bn.variables[cpt.node].n_levels)
            table[fixed[cpt.node]] = 1.0
            cpts.append(Cpt(cpt.node, (), table))
        else:
            cpts.append(cpt)
    return BayesianNetwork(bn.variables, dag, tuple(cpts))


def log_likelihood(bn: BayesianNetwork, d: Dataset) -> float:
    """Sum of per-row log joint probabilities.

    Returns ``-inf`` when any row is impossible under ``bn``.
    """
    if tuple(d.variables) != tuple(bn.variables):
        raise ValueError("dataset variables do not match the network")
    with np.errstate(divide="ignore"):
        total = 0.0
        for cpt in bn.cpts:
            p = cpt.table[tuple(d.rows[:, i] for i in (*cpt.parents, cpt.node))]
            total += float(np.log(p).sum())
    return total
