"""Contingency tables and conditional-independence tests for categorical data."""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InvalidDof, OverlappingArguments
from .graph import Dataset

METHODS = ("chi2", "g2")
_DENSE_LIMIT = 4_000_000  # cells; above this strata are found with np.unique


@dataclass(frozen=True, eq=False)
class ContingencyTable:
    """Stratified x-by-y counts.

    ``counts[s]`` is the ``x_levels x y_levels`` table for the stratum whose
    conditioning configuration is ``configs[s]``. Only observed
    configurations are materialized.
    """

    x_levels: int
    y_levels: int
    configs: np.ndarray  # (n_strata, n_cond) level indices
    counts: np.ndarray  # (n_strata, x_levels, y_levels)

    @property
    def total_n(self) -> int:
        return int(self.counts.sum())

    @property
    def strata(self) -> list[tuple[tuple[int, ...], np.ndarray]]:
        return [(tuple(int(c) for c in cfg), cnt) for cfg, cnt in zip(self.configs, self.counts)]

    @classmethod
    def from_counts(cls, counts, configs=None) -> ContingencyTable:
        """Build directly from an array of shape ``(r, c)`` or ``(s, r, c)``."""
        counts = np.asarray(counts, dtype=np.int64)
        if counts.ndim == 2:
            counts = counts[None]
        if configs is None:
            configs = np.arange(counts.shape[0]).reshape(-1, 1)
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        return cls(counts.shape[1], counts.shape[2], np.asarray(configs), counts)


@dataclass(frozen=True)
class CiTestResult:
    statistic: float
    dof: int
    p_value: float
    independent: bool


def build_table(d: Dataset, x: int, y: int, cond: Iterable[int] = ()) -> ContingencyTable:
    cond = sorted(set(cond))
    for v in (x, y, *cond):
        d._check(v)
    if x == y or x in cond or y in cond:
        raise OverlappingArguments(f"x={x}, y={y}, cond={cond} overlap")

    rx = d.variables[x].n_levels
    ry = d.variables[y].n_levels
    if cond:
        dims = tuple(d.variables[c].n_levels for c in cond)
        key = np.ravel_multi_index(tuple(d.rows[:, c] for c in cond), dims)
        n_configs = int(np.prod(dims))
        if n_configs * rx * ry <= _DENSE_LIMIT:
            flat = (key * rx + d.rows[:, x]) * ry + d.rows[:, y]
            counts = np.bincount(flat, minlength=n_configs * rx * ry).reshape(n_configs, rx, ry)
            keys = np.flatnonzero(counts.sum(axis=(1, 2)))
            configs = np.stack(np.unravel_index(keys, dims), axis=1)
            return ContingencyTable(rx, ry, configs, counts[keys])
        keys, inverse = np.unique(key, return_inverse=True)
        configs = np.stack(np.unravel_index(keys, dims), axis=1)
    else:
        inverse = np.zeros(d.n_rows, dtype=np.int64)
        configs = np.zeros((1, 0), dtype=np.int64)
        if d.n_rows == 0:
            return ContingencyTable(rx, ry, configs[:0], np.zeros((0, rx, ry), dtype=np.int64))
    n_strata = configs.shape[0]
    flat = (inverse.reshape(-1) * rx + d.rows[:, x]) * ry + d.rows[:, y]
    counts = np.bincount(flat, minlength=n_strata * rx * ry).reshape(n_strata, rx, ry)
    return ContingencyTable(rx, ry, configs, counts)


def _margins(t: ContingencyTable):
    obs = t.counts.astype(float)
    row = obs.sum(axis=2)
    col = obs.sum(axis=1)
    n = row.sum(axis=1)
    r_eff = (row > 0).sum(axis=1)
    c_eff = (col > 0).sum(axis=1)
    live = (r_eff > 1) & (c_eff > 1)
    with np.errstate(invalid="ignore", divide="ignore"):
        expected = row[:, :, None] * col[:, None, :] / n[:, None, None]
    expected[~live] = 0.0
    dof = int(((r_eff - 1) * (c_eff - 1))[live].sum())
    return obs, expected, dof


def chi_square_statistic(t: ContingencyTable) -> tuple[float, int]:
    """Pearson chi-square summed over strata, with effective-level dof."""
    obs, expected, dof = _margins(t)
    mask = expected > 0
    stat = float((((obs - expected) ** 2)[mask] / expected[mask]).sum())
    return stat, dof


def g2_statistic(t: ContingencyTable) -> tuple[float, int]:
    """Likelihood-ratio G statistic; same dof rule as :func:`chi_square_statistic`."""
    obs, expected, dof = _margins(t)
    mask = (obs > 0) & (expected > 0)
    stat = float(2.0 * (obs[mask] * np.log(obs[mask] / expected[mask])).sum())
    # rounding can leave tiny negatives in exactly-independent tables
    return max(stat, 0.0), dof


def chi_square_survival(statistic: float, dof: int) -> float:
    """Upper tail probability of the chi-square distribution."""
    if dof < 1 or int(dof) != dof:
        raise InvalidDof(f"dof must be a positive integer, got {dof}")
    if statistic < 0:
        raise ValueError("statistic must be non-negative")
    if statistic == 0:
        return 1.0
    return float(special.gammaincc(dof / 2.0, statistic / 2.0))


_STATISTICS = {"chi2": chi_square_statistic, "g2": g2_statistic}


def ci_test(
    d: Dataset,
    x: int,
    y: int,
    cond: Iterable[int] = (),
    alpha: float = 0.05,
    method: str = "chi2",
) -> CiTestResult:
    """Test ``x`` independent of ``y`` given ``cond``.

    Degenerate tables (zero degrees of freedom) are reported as independent
    with p-value 1.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    try:
        stat_fn = _STATISTICS[method]
    except KeyError:
        raise ValueError(f"unknown CI test method {method!r}; expected one of {METHODS}") from None
    stat, dof = stat_fn(build_table(d, x, y, cond))
    if dof == 0:
        return CiTestResult(stat, 0, 1.0, True)
    p = chi_square_survival(stat, dof)
    return CiTestResult(stat, dof, p, p > alpha)
