import itertools

import numpy as np
import pytest
from hypothesis import strategies as st

from cdrdag.graph import Dag, Dataset, VariableSpec


def random_dag(rng: np.random.Generator, n: int, p: float) -> Dag:
    """Random DAG: edges go forward in a random node order."""
    order = rng.permutation(n)
    edges = set()
    for i, j in itertools.combinations(range(n), 2):
        if rng.random() < p:
            edges.add((int(order[i]), int(order[j])))
    return Dag(n, frozenset(edges))


@st.composite
def dags(draw, min_nodes=2, max_nodes=7):
    n = draw(st.integers(min_nodes, max_nodes))
    order = draw(st.permutations(range(n)))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return Dag(n, frozenset((order[i], order[j]) for (i, j), keep in zip(pairs, mask) if keep))


def dsep_by_moralization(g: Dag, x: int, y: int, z) -> bool:
    """Textbook criterion: x and y are d-separated by z iff they are
    disconnected in the moral graph of the ancestral set of {x, y} | z
    once z is removed."""
    z = set(z)
    anc = set()
    stack = [x, y, *z]
    while stack:
        v = stack.pop()
        if v not in anc:
            anc.add(v)
            stack.extend(g.parents(v))
    und = {v: set() for v in anc}
    for a, b in g.edges:
        if a in anc and b in anc:
            und[a].add(b)
            und[b].add(a)
    for v in anc:
        for p, q in itertools.combinations(g.parents(v), 2):
            und[p].add(q)
            und[q].add(p)
    seen, stack = {x}, [x]
    while stack:
        v = stack.pop()
        for w in und[v] - z:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return y not in seen


def make_dataset(columns, levels=None) -> Dataset:
    cols = [np.asarray(c, dtype=np.int64) for c in columns]
    specs = []
    for i, c in enumerate(cols):
        k = levels[i] if levels else int(c.max(initial=0)) + 1
        specs.append(VariableSpec(f"X{i}", tuple(str(v) for v in range(max(k, 1)))))
    rows = np.stack(cols, axis=1) if cols else np.zeros((0, 0), dtype=np.int64)
    return Dataset(tuple(specs), rows)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
