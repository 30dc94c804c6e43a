"""PC structure learning: skeleton search, collider orientation, Meek
propagation, consistent DAG extension and chi-square edge strengths."""

from __future__ import annotations

import logging
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from itertools import combinations

from .contingency import METHODS, CiTestResult, build_table, chi_square_statistic, ci_test
from .errors import (
    CycleDetected,
    InconsistentSepSets,
    InsufficientVariables,
    NoConsistentExtension,
)
from .graph import Cpdag, Dag, Dataset, SepSetMap, _pair, d_separated

log = logging.getLogger(__name__)

IndependenceTest = Callable[[int, int, tuple[int, ...]], CiTestResult]


@dataclass(frozen=True)
class PcConfig:
    alpha: float = 0.05
    method: str = "chi2"
    max_cond_size: int | None = None  # None means n_nodes - 2
    stable: bool = True
    strength: str = "marginal"  # or "conditional"

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise ValueError("max_cond_size must be >= 0")
        if self.strength not in ("marginal", "conditional"):
            raise ValueError("strength must be 'marginal' or 'conditional'")


@dataclass(frozen=True)
class EdgeStrengthMap:
    """Normalized strengths in [0, 1] plus the raw statistics they came from."""

    strength: dict[tuple[int, int], float] = field(default_factory=dict)
    raw: dict[tuple[int, int], float] = field(default_factory=dict)

    def __getitem__(self, edge):
        return self.strength[tuple(edge)]

    def __contains__(self, edge):
        return tuple(edge) in self.strength

    def __len__(self):
        return len(self.strength)

    def __iter__(self):
        return iter(sorted(self.strength))

    def items(self):
        return sorted(self.strength.items())

    def strongest(self) -> tuple[int, int] | None:
        if not self.strength:
            return None
        return max(sorted(self.raw), key=lambda e: self.raw[e])


def dsep_oracle(dag: Dag) -> IndependenceTest:
    """Independence test that answers from d-separation in ``dag``."""

    def test(x, y, cond):
        sep = d_separated(dag, x, y, cond)
        return CiTestResult(0.0, 0, 1.0 if sep else 0.0, sep)

    return test


def _data_test(d: Dataset, cfg: PcConfig) -> IndependenceTest:
    def test(x, y, cond):
        return ci_test(d, x, y, cond, alpha=cfg.alpha, method=cfg.method)

    return test


def _cached(test: IndependenceTest) -> IndependenceTest:
    cache: dict = {}

    def wrapped(x, y, cond):
        key = (*_pair(x, y), tuple(sorted(cond)))
        if key not in cache:
            cache[key] = test(x, y, tuple(sorted(cond)))
        return cache[key]

    wrapped.cache = cache
    return wrapped


def _shape(d: Dataset | int) -> tuple[int, list[str]]:
    if isinstance(d, Dataset):
        return d.n_variables, d.names
    return int(d), [str(i) for i in range(int(d))]


def learn_skeleton(
    d: Dataset | int,
    cfg: PcConfig = PcConfig(),
    ci: IndependenceTest | None = None,
) -> tuple[Cpdag, SepSetMap]:
    """Remove edges from the complete graph by testing conditional independence.

    ``d`` may be a bare node count when ``ci`` is supplied (oracle runs).

    In stable mode each round of conditioning-set size ``l`` draws candidate
    sets from adjacencies frozen at the start of the round and applies all
    removals at the round's end. Every candidate set for a pair is tested,
    and the recorded separating set is the one with the largest p-value
    (ties go to the lexicographically smallest tuple of variable names), so
    both skeleton and separating sets are independent of column order.
    Classic mode stops at the first independence and removes immediately.
    """
    n, names = _shape(d)
    if n < 2:
        raise InsufficientVariables(f"need at least 2 variables, got {n}")
    if ci is None:
        if not isinstance(d, Dataset):
            raise TypeError("a Dataset is required unless an independence test is given")
        ci = _data_test(d, cfg)
    ci = _cached(ci)
    max_l = n - 2 if cfg.max_cond_size is None else cfg.max_cond_size

    adj = {v: set(range(n)) - {v} for v in range(n)}
    sepsets: dict[tuple[int, int], tuple[int, ...]] = {}
    level = 0
    while level <= max_l:
        if not any(len(adj[x]) - 1 >= level for x in range(n) if adj[x]):
            break
        if cfg.stable:
            frozen = {v: frozenset(adj[v]) for v in adj}
            removals = {}
            for x in range(n):
                for y in sorted(adj[x]):
                    if y < x:
                        continue
                    cands = set()
                    for a, b in ((x, y), (y, x)):
                        pool = sorted(frozen[a] - {b})
                        if len(pool) >= level:
                            cands.update(combinations(pool, level))
                    best = None
                    for s in sorted(cands):
                        r = ci(x, y, s)
                        if r.independent:
                            key = (-r.p_value, tuple(sorted(names[i] for i in s)))
                            if best is None or key < best[0]:
                                best = (key, s)
                    if best is not None:
                        removals[(x, y)] = best[1]
            for (x, y), s in removals.items():
                adj[x].discard(y)
                adj[y].discard(x)
                sepsets[(x, y)] = s
        else:
            for x in range(n):
                for y in sorted(adj[x]):
                    pool = sorted(adj[x] - {y})
                    if len(pool) < level:
                        continue
                    for s in combinations(pool, level):
                        if ci(x, y, s).independent:
                            adj[x].discard(y)
                            adj[y].discard(x)
                            sepsets[_pair(x, y)] = s
                            break
        level += 1
    log.debug("skeleton search ran %d distinct CI tests", len(ci.cache))
    edges = frozenset((x, y) for x in range(n) for y in adj[x] if x < y)
    return Cpdag(n, frozenset(), edges), SepSetMap(sepsets)


def _reaches(directed: Iterable[tuple[int, int]], src: int, dst: int) -> bool:
    children: dict[int, list[int]] = {}
    for a, b in directed:
        children.setdefault(a, []).append(b)
    stack, seen = [src], set()
    while stack:
        v = stack.pop()
        if v == dst:
            return True
        if v not in seen:
            seen.add(v)
            stack.extend(children.get(v, ()))
    return False


def orient_v_structures(skeleton: Cpdag, sepsets: SepSetMap) -> Cpdag:
    """Orient ``x -> z <- y`` for each unshielded triple with ``z`` outside
    the separating set of ``(x, y)``.

    Triples are scanned in ``(x, y, z)`` order. An orientation that would
    reverse an earlier one, or close a directed cycle, is skipped and
    logged.
    """
    n = skeleton.n_nodes
    for pair in sepsets:
        if skeleton.adjacent(*pair):
            raise InconsistentSepSets(f"pair {pair} has a separating set but is still adjacent")
    for x in range(n):
        for y in range(x + 1, n):
            if not skeleton.adjacent(x, y) and (x, y) not in sepsets:
                raise InconsistentSepSets(f"non-adjacent pair {(x, y)} has no separating set")

    triples = []
    for z in range(n):
        nb = sorted(skeleton.neighbors(z))
        for i, x in enumerate(nb):
            for y in nb[i + 1:]:
                if not skeleton.adjacent(x, y) and z not in sepsets[(x, y)]:
                    triples.append((x, y, z))
    directed = set(skeleton.directed)
    for x, y, z in sorted(triples):
        for a in (x, y):
            if (a, z) in directed:
                continue
            if (z, a) in directed:
                log.info("collider conflict at %d-%d: keeping %d->%d", a, z, z, a)
                continue
            if _reaches(directed, z, a):
                log.info("collider orientation %d->%d would close a cycle; skipped", a, z)
                continue
            directed.add((a, z))
    pairs = {_pair(a, b) for a, b in directed}
    return Cpdag(n, frozenset(directed), skeleton.skeleton() - pairs)


def _meek_fires(i, j, directed, undirected, adjacent, n) -> bool:
    """Whether any of Meek's four rules orients the undirected edge i--j as i->j."""
    und = lambda a, b: _pair(a, b) in undirected  # noqa: E731
    # R1: k -> i -- j, k and j non-adjacent
    for k in range(n):
        if (k, i) in directed and k != j and not adjacent(k, j):
            return True
    # R2: i -> k -> j
    for k in range(n):
        if (i, k) in directed and (k, j) in directed:
            return True
    # R3: i -- k -> j, i -- l -> j, k and l non-adjacent
    ks = [k for k in range(n) if k not in (i, j) and und(i, k) and (k, j) in directed]
    for a, k in enumerate(ks):
        for m in ks[a + 1:]:
            if not adjacent(k, m):
                return True
    # R4: i -- k -> l -> j, i adjacent to l, k and j non-adjacent
    for k in range(n):
        if k in (i, j) or not und(i, k):
            continue
        for m in range(n):
            if m in (i, j, k):
                continue
            if (k, m) in directed and (m, j) in directed and adjacent(i, m) and not adjacent(k, j):
                return True
    return False


def apply_meek_rules(g: Cpdag) -> Cpdag:
    """Propagate orientations with Meek's rules R1-R4 until nothing changes."""
    n = g.n_nodes
    directed = set(g.directed)
    undirected = set(g.undirected)
    skel = g.skeleton()

    def adjacent(a, b):
        return _pair(a, b) in skel

    changed = True
    while changed:
        changed = False
        for a, b in sorted(undirected):
            for i, j in ((a, b), (b, a)):
                if _meek_fires(i, j, directed, undirected, adjacent, n):
                    if _reaches(directed, j, i):
                        log.info("Meek orientation %d->%d would close a cycle; skipped", i, j)
                        continue
                    directed.add((i, j))
                    undirected.discard((a, b))
                    changed = True
                    break
    return Cpdag(n, frozenset(directed), frozenset(undirected))


def _extendable(g: Cpdag) -> bool:
    """Dor and Tarsi's test for whether a PDAG admits a consistent extension."""
    remaining = set(g.nodes)
    directed = set(g.directed)
    undirected = set(g.undirected)
    skel = g.skeleton()
    while remaining:
        for x in sorted(remaining):
            if any(a == x and b in remaining for a, b in directed):
                continue
            und_nb = [b if a == x else a for a, b in undirected if x in (a, b)]
            und_nb = [v for v in und_nb if v in remaining]
            nb = [v for v in remaining if v != x and _pair(v, x) in skel]
            if all(_pair(u, w) in skel for u in und_nb for w in nb if w != u):
                remaining.discard(x)
                directed = {e for e in directed if x not in e}
                undirected = {e for e in undirected if x not in e}
                break
        else:
            return False
    return True


def _colliders(n, directed, skel) -> set[tuple[int, int, int]]:
    out = set()
    for z in range(n):
        pa = sorted(a for a, b in directed if b == z)
        for i, x in enumerate(pa):
            for y in pa[i + 1:]:
                if _pair(x, y) not in skel:
                    out.add((x, z, y))
    return out


def extend_to_dag(g: Cpdag) -> Dag:
    """Orient every undirected edge, giving a DAG with the same skeleton and
    unshielded colliders as ``g``.

    Undirected edges are visited in lexicographic order and oriented
    low -> high whenever that choice still admits a consistent extension,
    with Meek propagation after each choice.
    """
    n = g.n_nodes
    cur = apply_meek_rules(g)
    if not _extendable(cur):
        raise NoConsistentExtension("partially directed graph has no consistent extension")
    skel = g.skeleton()
    for a, b in sorted(g.undirected):
        if (a, b) not in cur.undirected:
            continue
        for i, j in ((a, b), (b, a)):
            try:
                cand = Cpdag(n, cur.directed | {(i, j)}, cur.undirected - {(a, b)})
            except CycleDetected:
                continue
            cand = apply_meek_rules(cand)
            if _extendable(cand):
                cur = cand
                break
        else:
            raise NoConsistentExtension(f"edge {a}--{b} cannot be oriented either way")
    if cur.undirected:
        raise NoConsistentExtension("orientation left undirected edges behind")
    if _colliders(n, cur.directed, skel) != _colliders(n, g.directed, skel):
        raise NoConsistentExtension("extension would change the unshielded colliders")
    return Dag(n, cur.directed)


def _forced_orientation(g: Cpdag) -> Dag:
    """Acyclic orientation of ``g``'s skeleton for graphs with no consistent
    extension: keep directed edges unless they close a cycle, then orient the
    rest low -> high unless that closes a cycle."""
    directed: set[tuple[int, int]] = set()
    for a, b in sorted(g.directed):
        directed.add((b, a) if _reaches(directed, b, a) else (a, b))
    for a, b in sorted(g.undirected):
        directed.add((b, a) if _reaches(directed, b, a) else (a, b))
    return Dag(g.n_nodes, directed)


def cpdag_of(dag: Dag) -> Cpdag:
    """Completed partially directed graph of ``dag``'s Markov equivalence class."""
    v = dag.v_structures()
    directed = {(x, z) for x, z, _ in v} | {(y, z) for _, z, y in v}
    pairs = {_pair(a, b) for a, b in directed}
    return apply_meek_rules(Cpdag(dag.n_nodes, frozenset(directed), dag.skeleton() - pairs))


def learn_cpdag(
    d: Dataset | int,
    cfg: PcConfig = PcConfig(),
    ci: IndependenceTest | None = None,
) -> tuple[Cpdag, SepSetMap]:
    skeleton, sepsets = learn_skeleton(d, cfg, ci)
    return apply_meek_rules(orient_v_structures(skeleton, sepsets)), sepsets


def compute_edge_strengths(d: Dataset, g: Dag, conditional: bool = False) -> EdgeStrengthMap:
    """Chi-square statistic of each edge's endpoints, divided by the largest one.

    With ``conditional=True`` the statistic for ``x -> y`` is stratified on
    ``y``'s other parents. If every raw statistic is zero all edges tie at 1.
    """
    raw = {}
    for a, b in sorted(g.edges):
        cond = [p for p in g.parents(b) if p != a] if conditional else []
        raw[(a, b)] = chi_square_statistic(build_table(d, a, b, cond))[0]
    if not raw:
        return EdgeStrengthMap({}, {})
    top = max(raw.values())
    if top <= 0:
        return EdgeStrengthMap({e: 1.0 for e in raw}, raw)
    return EdgeStrengthMap({e: v / top for e, v in raw.items()}, raw)


def learn_structure(
    d: Dataset,
    cfg: PcConfig = PcConfig(),
    ci: IndependenceTest | None = None,
) -> tuple[Dag, SepSetMap, EdgeStrengthMap]:
    """Full PC run on ``d``: learned DAG, separating sets and edge strengths."""
    cpdag, sepsets = learn_cpdag(d, cfg, ci)
    try:
        dag = extend_to_dag(cpdag)
    except NoConsistentExtension as exc:
        log.warning("%s; falling back to cycle-avoiding orientation", exc)
        dag = _forced_orientation(cpdag)
    strengths = compute_edge_strengths(d, dag, conditional=cfg.strength == "conditional")
    return dag, sepsets, strengths
