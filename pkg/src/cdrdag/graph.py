"""Graph and data containers shared by every other module.

Nodes are integer positions into the variable list of a :class:`Dataset`;
variable names are carried only as metadata.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import CycleDetected, InvalidLevel, UnknownNode


@dataclass(frozen=True)
class VariableSpec:
    """A named ordinal categorical variable."""

    name: str
    levels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(str(lv) for lv in self.levels))
        if not self.levels:
            raise ValueError(f"variable {self.name!r} has no levels")
        if len(set(self.levels)) != len(self.levels):
            raise ValueError(f"variable {self.name!r} has duplicate level labels")

    @property
    def n_levels(self) -> int:
        return len(self.levels)


@dataclass(frozen=True, eq=False)
class Dataset:
    """Complete categorical observations stored as level indices.

    ``rows`` has shape ``(n_rows, n_variables)``; entry ``[r, v]`` is the
    level index of variable ``v`` in row ``r``. The array is copied and made
    read-only on construction.
    """

    variables: tuple[VariableSpec, ...]
    rows: np.ndarray

    def __post_init__(self):
        variables = tuple(self.variables)
        rows = np.array(self.rows, dtype=np.int64, copy=True)
        if rows.size == 0:
            rows = rows.reshape(0, len(variables))
        if rows.ndim != 2 or rows.shape[1] != len(variables):
            raise ValueError(
                f"rows must have shape (n, {len(variables)}), got {rows.shape}"
            )
        for j, var in enumerate(variables):
            col = rows[:, j]
            if col.size and (col.min() < 0 or col.max() >= var.n_levels):
                raise InvalidLevel(
                    f"column {var.name!r} has level indices outside [0, {var.n_levels})"
                )
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("variable names must be unique")
        rows.setflags(write=False)
        object.__setattr__(self, "variables", variables)
        object.__setattr__(self, "rows", rows)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def names(self) -> list[str]:
        return [v.name for v in self.variables]

    def index_of(self, name: str) -> int:
        for i, v in enumerate(self.variables):
            if v.name == name:
                return i
        raise UnknownNode(f"no variable named {name!r}")

    def column(self, node: int) -> np.ndarray:
        self._check(node)
        return self.rows[:, node]

    def permuted(self, order: Sequence[int]) -> Dataset:
        """Return a dataset whose variable ``i`` is this dataset's ``order[i]``."""
        order = list(order)
        if sorted(order) != list(range(self.n_variables)):
            raise ValueError("order must be a permutation of the variable indices")
        return Dataset(tuple(self.variables[i] for i in order), self.rows[:, order])

    def _check(self, node: int) -> None:
        if not 0 <= node < self.n_variables:
            raise UnknownNode(f"node {node} not in dataset with {self.n_variables} variables")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.variables == other.variables and np.array_equal(self.rows, other.rows)

    __hash__ = None


def _pair(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class Dag:
    """Directed acyclic graph over nodes ``0..n_nodes-1``."""

    n_nodes: int
    edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        edges = frozenset((int(a), int(b)) for a, b in self.edges)
        for a, b in edges:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            for v in (a, b):
                if not 0 <= v < self.n_nodes:
                    raise UnknownNode(f"edge endpoint {v} outside 0..{self.n_nodes - 1}")
        object.__setattr__(self, "edges", edges)
        _toposort(self.n_nodes, edges)

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    def parents(self, v: int) -> list[int]:
        return sorted(a for a, b in self.edges if b == v)

    def children(self, v: int) -> list[int]:
        return sorted(b for a, b in self.edges if a == v)

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset(_pair(a, b) for a, b in self.edges)

    def v_structures(self) -> frozenset[tuple[int, int, int]]:
        """Unshielded colliders as ``(x, z, y)`` with ``x < y`` and ``x -> z <- y``."""
        out = set()
        for z in self.nodes:
            pa = self.parents(z)
            for i, x in enumerate(pa):
                for y in pa[i + 1:]:
                    if not self.adjacent(x, y):
                        out.add((x, z, y))
        return frozenset(out)

    def without_incoming(self, nodes: Iterable[int]) -> Dag:
        cut = set(nodes)
        return Dag(self.n_nodes, frozenset(e for e in self.edges if e[1] not in cut))


@dataclass(frozen=True)
class Cpdag:
    """Partially directed graph: a set of directed and a set of undirected edges.

    Undirected edges are stored as ``(low, high)`` tuples.
    """

    n_nodes: int
    directed: frozenset[tuple[int, int]] = field(default_factory=frozenset)
    undirected: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self):
        directed = frozenset((int(a), int(b)) for a, b in self.directed)
        undirected = frozenset(_pair(int(a), int(b)) for a, b in self.undirected)
        for a, b in directed | undirected:
            if a == b:
                raise ValueError(f"self-loop on node {a}")
            for v in (a, b):
                if not 0 <= v < self.n_nodes:
                    raise UnknownNode(f"edge endpoint {v} outside 0..{self.n_nodes - 1}")
        directed_pairs = {_pair(a, b) for a, b in directed}
        if len(directed_pairs) != len(directed):
            raise ValueError("an edge is directed both ways")
        if directed_pairs & undirected:
            raise ValueError("an edge is both directed and undirected")
        object.__setattr__(self, "directed", directed)
        object.__setattr__(self, "undirected", undirected)
        _toposort(self.n_nodes, directed)

    @classmethod
    def from_dag(cls, dag: Dag) -> Cpdag:
        return cls(dag.n_nodes, dag.edges, frozenset())

    @property
    def nodes(self) -> range:
        return range(self.n_nodes)

    def adjacent(self, a: int, b: int) -> bool:
        return (
            (a, b) in self.directed
            or (b, a) in self.directed
            or _pair(a, b) in self.undirected
        )

    def neighbors(self, v: int) -> set[int]:
        """Nodes joined to ``v`` by any edge."""
        out = {b for a, b in self.directed if a == v}
        out |= {a for a, b in self.directed if b == v}
        out |= {b if a == v else a for a, b in self.undirected if v in (a, b)}
        return out

    def skeleton(self) -> frozenset[tuple[int, int]]:
        return frozenset({_pair(a, b) for a, b in self.directed} | self.undirected)

    def edge_mark(self, a: int, b: int) -> str | None:
        """Mark of the pair as seen from ``a``: ``'->'``, ``'<-'``, ``'--'`` or ``None``."""
        if (a, b) in self.directed:
            return "->"
        if (b, a) in self.directed:
            return "<-"
        if _pair(a, b) in self.undirected:
            return "--"
        return None


class SepSetMap(Mapping):
    """Separation sets keyed by unordered node pair."""

    def __init__(self, entries: Mapping | Iterable = ()):
        items = entries.items() if isinstance(entries, Mapping) else entries
        self._data: dict[tuple[int, int], frozenset[int]] = {}
        for key, value in items:
            a, b = tuple(key)
            self._data[_pair(a, b)] = frozenset(value)

    def __getitem__(self, key):
        a, b = tuple(key)
        return self._data[_pair(a, b)]

    def __contains__(self, key):
        try:
            a, b = tuple(key)
        except (TypeError, ValueError):
            return False
        return _pair(a, b) in self._data

    def __iter__(self):
        return iter(sorted(self._data))

    def __len__(self):
        return len(self._data)

    def __eq__(self, other):
        if isinstance(other, SepSetMap):
            return self._data == other._data
        return NotImplemented

    def __repr__(self):
        body = ", ".join(f"{k}: {sorted(v)}" for k, v in sorted(self._data.items()))
        return f"SepSetMap({{{body}}})"

    def relabeled(self, mapping: Mapping[int, int]) -> SepSetMap:
        return SepSetMap(
            ((mapping[a], mapping[b]), {mapping[s] for s in sep})
            for (a, b), sep in self._data.items()
        )


def _toposort(n_nodes: int, edges: Iterable[tuple[int, int]]) -> list[int]:
    children: dict[int, list[int]] = {v: [] for v in range(n_nodes)}
    indeg = [0] * n_nodes
    for a, b in edges:
        children[a].append(b)
        indeg[b] += 1
    heap = [v for v in range(n_nodes) if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) < n_nodes:
        raise CycleDetected(_find_cycle({v for v in range(n_nodes) if indeg[v] > 0}, children))
    return order


def _find_cycle(remaining: set[int], children: Mapping[int, list[int]]) -> list[int]:
    # each node left over by Kahn's algorithm keeps a left-over parent, so a
    # backwards walk must revisit a node
    parents: dict[int, list[int]] = {v: [] for v in remaining}
    for a in remaining:
        for c in children[a]:
            if c in remaining:
                parents[c].append(a)
    path, seen = [], {}
    v = min(remaining)
    while v not in seen:
        seen[v] = len(path)
        path.append(v)
        v = min(parents[v])
    return path[seen[v]:][::-1]


def topological_sort(g: Dag | int, edges: Iterable[tuple[int, int]] | None = None) -> list[int]:
    """Order nodes so every edge points forward; ties go to the lower index.

    Accepts a :class:`Dag` or a node count plus raw edges (the latter is how
    cycles are reported, since a ``Dag`` cannot hold one).
    """
    if isinstance(g, Dag):
        return _toposort(g.n_nodes, g.edges)
    return _toposort(int(g), edges or ())


@dataclass(frozen=True)
class Degree:
    incoming: int
    outgoing: int


def node_degrees(g: Dag) -> dict[int, Degree]:
    inc = [0] * g.n_nodes
    out = [0] * g.n_nodes
    for a, b in g.edges:
        out[a] += 1
        inc[b] += 1
    return {v: Degree(inc[v], out[v]) for v in g.nodes}


def d_separated(g: Dag, x: int, y: int, z: Iterable[int] = ()) -> bool:
    """True iff ``x`` and ``y`` are d-separated given ``z`` in ``g``.

    Uses the reachability ("Bayes ball") traversal: walk from ``x`` over
    (node, direction) states and report whether ``y`` is ever reached by an
    active trail.
    """
    z = set(z)
    for v in (x, y, *z):
        if not 0 <= v < g.n_nodes:
            raise UnknownNode(f"node {v} not in graph with {g.n_nodes} nodes")
    if x == y:
        raise ValueError("x and y must differ")
    if x in z or y in z:
        raise ValueError("x and y must not be in the conditioning set")

    parents = {v: [] for v in g.nodes}
    children = {v: [] for v in g.nodes}
    for a, b in g.edges:
        parents[b].append(a)
        children[a].append(b)

    # z and its ancestors: colliders in this set are open
    anc = set()
    stack = list(z)
    while stack:
        v = stack.pop()
        if v not in anc:
            anc.add(v)
            stack.extend(parents[v])

    # direction "up": arrived from a child; "down": arrived from a parent
    visited = set()
    stack = [(x, "up")]
    while stack:
        v, d = stack.pop()
        if (v, d) in visited:
            continue
        visited.add((v, d))
        if v == y:
            return False
        if d == "up" and v not in z:
            stack.extend((p, "up") for p in parents[v])
            stack.extend((c, "down") for c in children[v])
        elif d == "down":
            if v not in z:
                stack.extend((c, "down") for c in children[v])
            if v in anc:
                stack.extend((p, "up") for p in parents[v])
    return True


def structural_hamming_distance(a: Dag | Cpdag, b: Dag | Cpdag) -> int:
    """Number of node pairs whose edge status differs between ``a`` and ``b``.

    A missing, extra, reversed or differently (un)oriented edge each count once.
    """
    a = Cpdag.from_dag(a) if isinstance(a, Dag) else a
    b = Cpdag.from_dag(b) if isinstance(b, Dag) else b
    if a.n_nodes != b.n_nodes:
        raise ValueError("graphs have different node counts")
    return sum(
        a.edge_mark(i, j) != b.edge_mark(i, j)
        for i in range(a.n_nodes)
        for j in range(i + 1, a.n_nodes)
    )
