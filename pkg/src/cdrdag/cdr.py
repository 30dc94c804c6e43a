"""Clinical Dementia Rating knowledge: the seven-variable schema, the global
scoring rule, record cleaning and synthetic reference cohorts."""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

from .bayesnet import BayesianNetwork, Cpt, forward_sample
from .errors import InvalidRating, UnknownProfile
from .graph import Dag, Dataset, VariableSpec
from .serialize import network_from_dict, network_to_dict

RATINGS = (0.0, 0.5, 1.0, 2.0, 3.0)
LEVEL_LABELS = ("0", "0.5", "1", "2", "3")
DOMAINS = ("M", "O", "JPS", "CA", "HH", "PC")
GLOBAL = "CDR"
VARIABLES = DOMAINS + (GLOBAL,)
FULL_NAMES = {
    "M": "Memory",
    "O": "Orientation",
    "JPS": "Judgement and problem-solving",
    "CA": "Community affairs",
    "HH": "Home and hobbies",
    "PC": "Personal care",
    "CDR": "Global CDR",
}
SENTINEL = -1.0


def cdr_variables() -> tuple[VariableSpec, ...]:
    return tuple(VariableSpec(name, LEVEL_LABELS) for name in VARIABLES)


def rating_index(value: float) -> int:
    try:
        return RATINGS.index(float(value))
    except ValueError:
        raise InvalidRating(f"{value!r} is not one of {RATINGS}") from None


@dataclass(frozen=True)
class DomainScores:
    M: float
    O: float  # noqa: E741
    JPS: float
    CA: float
    HH: float
    PC: float

    def __post_init__(self):
        for name in DOMAINS:
            value = getattr(self, name)
            if value is None or float(value) not in RATINGS:
                raise InvalidRating(f"{name}={value!r} is not one of {RATINGS}")
            object.__setattr__(self, name, float(value))

    @classmethod
    def of(cls, scores) -> DomainScores:
        if isinstance(scores, DomainScores):
            return scores
        if isinstance(scores, Mapping):
            return cls(**{k: scores[k] for k in DOMAINS})
        return cls(*scores)

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, k) for k in DOMAINS)

    def check_strict_morris(self) -> None:
        """Reject a personal-care rating of 0.5, which the standard form omits."""
        if self.PC == 0.5:
            raise InvalidRating("PC=0.5 is not allowed under strict Morris rules")


@dataclass(frozen=True)
class CdrRecord:
    scores: DomainScores
    cdr: float
    subject: str = ""
    visit: str | None = None
    rater: str | None = None

    def __post_init__(self):
        if float(self.cdr) not in RATINGS:
            raise InvalidRating(f"global CDR {self.cdr!r} is not one of {RATINGS}")


@dataclass(frozen=True)
class ScoreTrace:
    rating: float
    tie_break: bool


def score_global(scores) -> ScoreTrace:
    """Global CDR from the six domain ratings, noting whether a tie was broken.

    Memory is primary and the other five domains are secondary.
    """
    s = DomainScores.of(scores)
    m = s.M
    sec = [s.O, s.JPS, s.CA, s.HH, s.PC]
    if m == 0.0:
        return ScoreTrace(0.5 if sum(v >= 0.5 for v in sec) >= 2 else 0.0, False)
    if m == 0.5:
        return ScoreTrace(1.0 if sum(v >= 1.0 for v in sec) >= 3 else 0.5, False)
    if sum(v == m for v in sec) >= 3:
        return ScoreTrace(m, False)
    hi = [v for v in sec if v > m]
    lo = [v for v in sec if v < m]
    if len(hi) < 3 and len(lo) < 3:
        return ScoreTrace(m, False)
    if sorted((len(hi), len(lo))) == [2, 3]:
        return ScoreTrace(m, False)
    side = hi if len(hi) >= 3 else lo
    counts = Counter(side)
    top = max(counts.values())
    modes = [v for v, c in counts.items() if c == top]
    # closest to memory first, then the more impaired value
    pick = min(modes, key=lambda v: (abs(v - m), -v))
    if pick == 0.0:
        pick = 0.5  # memory >= 1 rules out a global of 0
    return ScoreTrace(pick, len(modes) > 1)


def global_cdr(scores) -> float:
    return score_global(scores).rating


@lru_cache(maxsize=1)
def _global_lookup() -> np.ndarray:
    """Global level index for every combination of domain level indices."""
    out = np.zeros((len(RATINGS),) * len(DOMAINS), dtype=np.int64)
    for idx in np.ndindex(out.shape):
        out[idx] = RATINGS.index(global_cdr([RATINGS[i] for i in idx]))
    out.setflags(write=False)
    return out


# --------------------------------------------------------------------------
# cleaning

DROP_REASONS = (
    "non_first_rater",
    "missing_global",
    "invalid_sentinel",
    "invalid_global",
    "missing_domain",
    "invalid_domain",
    "strict_morris_pc",
)


@dataclass
class RawRecord:
    """One row as loaded, before validation. ``None`` marks a missing cell."""

    scores: dict[str, float | None]
    cdr: float | None
    subject: str = ""
    visit: str | None = None
    rater: str | None = None
    line: int | None = None
    phase: str | None = None


@dataclass
class CleaningReport:
    n_input: int = 0
    n_retained: int = 0
    dropped: dict[str, int] = field(default_factory=lambda: {r: 0 for r in DROP_REASONS})
    rule_mismatches: int = 0
    tie_breaks: int = 0

    def as_dict(self) -> dict:
        return {
            "n_input": self.n_input,
            "n_retained": self.n_retained,
            "dropped": dict(self.dropped),
            "rule_mismatches": self.rule_mismatches,
            "tie_breaks": self.tie_breaks,
        }


def _missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def _rater_key(r):
    if r is None:
        return (0, 0, "")
    try:
        return (0, float(r), str(r))
    except (TypeError, ValueError):
        return (1, 0, str(r))


def _first_rater(raw: Sequence[RawRecord]) -> tuple[list[RawRecord], int]:
    best: dict[tuple, RawRecord] = {}
    for rec in raw:
        key = (rec.subject, rec.visit)
        if key not in best or _rater_key(rec.rater) < _rater_key(best[key].rater):
            best[key] = rec
    keep = {id(r) for r in best.values()}
    kept = [r for r in raw if id(r) in keep]
    return kept, len(raw) - len(kept)


def clean_records(
    raw: Iterable[RawRecord], strict_morris: bool = False
) -> tuple[Dataset, CleaningReport, list[CdrRecord]]:
    """Filter raw rows into an analysis dataset.

    Multi-rater visits keep only the lowest rater id; the remaining rows are
    dropped for a missing or sentinel global rating, or a missing or invalid
    domain rating. Retained values are never altered. Rows whose global
    rating disagrees with :func:`global_cdr` are counted, not corrected.
    """
    raw = list(raw)
    report = CleaningReport(n_input=len(raw))
    has_raters = any(r.rater is not None for r in raw)
    if has_raters:
        raw, n_other = _first_rater(raw)
        report.dropped["non_first_rater"] = n_other
    kept: list[CdrRecord] = []
    for rec in raw:
        reason = _drop_reason(rec, strict_morris)
        if reason:
            report.dropped[reason] += 1
            continue
        scores = DomainScores.of(rec.scores)
        trace = score_global(scores)
        if trace.tie_break:
            report.tie_breaks += 1
        if trace.rating != float(rec.cdr):
            report.rule_mismatches += 1
        kept.append(CdrRecord(scores, float(rec.cdr), rec.subject, rec.visit, rec.rater))
    report.n_retained = len(kept)
    rows = [[rating_index(v) for v in r.scores.as_tuple()] + [rating_index(r.cdr)] for r in kept]
    return Dataset(cdr_variables(), np.array(rows, dtype=np.int64).reshape(-1, 7)), report, kept


def _drop_reason(rec: RawRecord, strict_morris: bool) -> str | None:
    if _missing(rec.cdr):
        return "missing_global"
    if float(rec.cdr) == SENTINEL:
        return "invalid_sentinel"
    if float(rec.cdr) not in RATINGS:
        return "invalid_global"
    values = [rec.scores.get(k) for k in DOMAINS]
    if any(_missing(v) for v in values):
        return "missing_domain"
    if any(float(v) not in RATINGS for v in values):
        return "invalid_domain"
    if strict_morris and float(rec.scores["PC"]) == 0.5:
        return "strict_morris_pc"
    return None


# --------------------------------------------------------------------------
# reference networks

# child -> {parent: link weight}. The structures follow the reported degree
# tables. Weights make M -> CDR the strongest edge and keep every edge
# detectable by PC at n = 10,000 without planting near-independences.
_STRUCTURES = {
    "adni-like": {
        "JPS": {},
        "CA": {"JPS": 0.656},
        "PC": {"CA": 0.354},
        "HH": {"JPS": 2.729, "CA": 2.015, "PC": 2.843},
        "O": {"JPS": 1.525, "CA": 1.797, "HH": 0.975},
        "M": {"O": 0.927, "JPS": 1.859, "CA": 0.988, "HH": 1.025},
        "CDR": {"M": 5.526, "O": 2.694, "JPS": 1.433, "CA": 2.85, "HH": 0.98, "PC": 2.331},
    },
    "lasi-like": {
        "O": {},
        "PC": {},
        "JPS": {"O": 1.19},
        "CA": {"JPS": 1.2, "PC": 1.2},
        "HH": {"CA": 1.4, "PC": 0.84},
        "M": {"O": 1.6, "JPS": 0.85},
        "CDR": {"M": 2.0, "O": 1.38, "JPS": 1.0, "CA": 0.7, "HH": 1.0, "PC": 1.0},
    },
}

# global CDR counts per level from the two cohorts' distribution table
CDR_COUNTS = {
    "adni-like": (4623, 6277, 1496, 363, 89),
    "lasi-like": (728, 1610, 160, 25, 5),
}

_DOMAIN_MARGINALS = {
    "adni-like": {
        "M": (0.4037, 0.4006, 0.1140, 0.0443, 0.0374),
        "O": (0.3714, 0.4235, 0.0918, 0.0791, 0.0342),
        "JPS": (0.2862, 0.4701, 0.1081, 0.0995, 0.0361),
        "CA": (0.5336, 0.2217, 0.0983, 0.0867, 0.0597),
        "HH": (0.3710, 0.3550, 0.1198, 0.1107, 0.0435),
        "PC": (0.5986, 0.1770, 0.1136, 0.0614, 0.0494),
    },
    "lasi-like": {
        "M": (0.30, 0.55, 0.11, 0.03, 0.01),
        "O": (0.45, 0.42, 0.09, 0.03, 0.01),
        "JPS": (0.35, 0.52, 0.09, 0.03, 0.01),
        "CA": (0.45, 0.42, 0.09, 0.03, 0.01),
        "HH": (0.40, 0.47, 0.09, 0.03, 0.01),
        "PC": (0.70, 0.20, 0.06, 0.03, 0.01),
    },
}

PROFILES = tuple(_STRUCTURES)
FIXTURE_VERSION = "1"


def cdr_marginals(profile_name: str) -> np.ndarray:
    counts = np.array(CDR_COUNTS[profile_name], dtype=float)
    return counts / counts.sum()


def _cumulative_logit_cpt(parent_marginal, weights, target) -> np.ndarray:
    """Ordinal CPT with ``P(Y >= k | pa) = expit(eta(pa) - theta_k)``.

    ``eta`` is the weighted sum of parent severity ranks (0 for "0" up to 4
    for "3"); each threshold is solved so the child's marginal under
    ``parent_marginal`` equals ``target``.
    """
    sev = np.arange(len(RATINGS), dtype=float)
    shape = parent_marginal.shape
    eta = np.zeros(shape)
    for axis, w in enumerate(weights):
        view = [1] * len(shape)
        view[axis] = len(RATINGS)
        eta = eta + w * sev.reshape(view)
    cum_target = np.cumsum(np.asarray(target)[::-1])[::-1]  # P(Y >= k)
    cum = [np.ones(shape)]
    for k in range(1, len(RATINGS)):
        goal = cum_target[k]
        theta = brentq(
            lambda t: float((parent_marginal * expit(eta - t)).sum()) - goal,
            eta.min() - 60, eta.max() + 60, xtol=1e-14,
        )
        cum.append(expit(eta - theta))
    cum.append(np.zeros(shape))
    return np.stack([cum[k] - cum[k + 1] for k in range(len(RATINGS))], axis=-1)


def build_reference_network(profile_name: str) -> BayesianNetwork:
    """Construct a reference network from its structure and target marginals."""
    if profile_name not in _STRUCTURES:
        raise UnknownProfile(f"unknown profile {profile_name!r}; known: {PROFILES}")
    structure = _STRUCTURES[profile_name]
    targets = dict(_DOMAIN_MARGINALS[profile_name])
    targets[GLOBAL] = tuple(cdr_marginals(profile_name))
    idx = {name: i for i, name in enumerate(VARIABLES)}
    k = len(RATINGS)

    joint = np.ones((1,) * len(VARIABLES))
    cpts = []
    for child, parent_weights in structure.items():
        parents = sorted(parent_weights, key=idx.__getitem__)
        p_idx = [idx[p] for p in parents]
        others = tuple(a for a in range(len(VARIABLES)) if a not in p_idx)
        pm = joint.sum(axis=others) if others else joint
        pm = pm.reshape([k] * len(parents)) if parents else np.ones(())
        table = _cumulative_logit_cpt(pm, [parent_weights[p] for p in parents], targets[child])
        cpts.append(Cpt(idx[child], tuple(p_idx), table))
        axes = (*p_idx, idx[child])
        view = [1] * len(VARIABLES)
        for a in axes:
            view[a] = k
        joint = joint * np.transpose(table, np.argsort(axes)).reshape(view)
    dag = Dag(len(VARIABLES), frozenset((idx[p], idx[c]) for c, pw in structure.items() for p in pw))
    return BayesianNetwork(cdr_variables(), dag, tuple(cpts))


def fixture_document(profile_name: str) -> dict:
    bn = build_reference_network(profile_name)
    return network_to_dict(
        bn,
        profile=profile_name,
        fixture_version=FIXTURE_VERSION,
        cdr_marginals=[float(x) for x in cdr_marginals(profile_name)],
        link_weights=_STRUCTURES[profile_name],
    )


def _fixture_name(profile_name: str) -> str:
    return profile_name.replace("-", "_") + ".json"


@lru_cache(maxsize=None)
def reference_network(profile_name: str) -> BayesianNetwork:
    """Load the committed reference network for ``profile_name``."""
    if profile_name not in _STRUCTURES:
        raise UnknownProfile(f"unknown profile {profile_name!r}; known: {PROFILES}")
    import json

    text = resources.files("cdrdag.data").joinpath(_fixture_name(profile_name)).read_text("utf-8")
    return network_from_dict(json.loads(text))


@dataclass(frozen=True)
class CohortProfile:
    name: str
    network: BayesianNetwork
    cdr_marginals: tuple[float, ...]

    def __post_init__(self):
        if abs(sum(self.cdr_marginals) - 1.0) > 1e-9:
            raise ValueError("CDR marginals must sum to 1")


def load_profile(name: str) -> CohortProfile:
    return CohortProfile(name, reference_network(name), tuple(float(x) for x in cdr_marginals(name)))


def generate_cohort(
    profile: CohortProfile | str, n: int, seed: int | None = None, rule_consistent: bool = False
) -> Dataset:
    """Sample ``n`` synthetic records from a profile's network.

    With ``rule_consistent`` the sampled global rating is replaced by the
    scoring rule applied to the sampled domain ratings.
    """
    if isinstance(profile, str):
        profile = load_profile(profile)
    if n < 1:
        raise ValueError("n must be at least 1")
    d = forward_sample(profile.network, n, seed)
    if not rule_consistent:
        return d
    names = d.names
    dom = tuple(d.rows[:, names.index(k)] for k in DOMAINS)
    rows = d.rows.copy()
    rows[:, names.index(GLOBAL)] = _global_lookup()[dom]
    return Dataset(d.variables, rows)


def records_from_dataset(d: Dataset) -> list[CdrRecord]:
    names = d.names
    out = []
    for i, row in enumerate(d.rows):
        scores = DomainScores(*(RATINGS[row[names.index(k)]] for k in DOMAINS))
        out.append(CdrRecord(scores, RATINGS[row[names.index(GLOBAL)]], subject=str(i)))
    return out
