"""Constraint-based DAG discovery over discrete columns.

Skeleton search removes edges that a stratified chi-square test declares
conditionally independent, collider orientation uses the recorded
separating sets, propagation rules direct what they can, and whatever
stays undirected is resolved by column order so the result is a function
of (table, alpha) alone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.stats import chi2

from .dag import Dag, Edge
from .tabular import ColumnKind, Table

DEFAULT_ALPHA = 0.01
MIN_ROWS = 30


class DiscoveryError(ValueError):
    """Discovery cannot run on this input."""


def check_alpha(alpha: float) -> float:
    if not (0.0 < alpha < 1.0):
        raise DiscoveryError(f"alpha must be in (0, 1), got {alpha!r}")
    return float(alpha)


@dataclass(frozen=True)
class CITestResult:
    statistic: float
    dof: int
    pvalue: float


def _codes(table: Table, name: str) -> np.ndarray:
    """Column as integer codes. Binary stays 0/1, categorical is coded by sorted value."""
    kind = table.spec(name).kind
    if kind is ColumnKind.BINARY:
        return np.asarray(table.column(name), dtype=np.int64)
    if kind is ColumnKind.CATEGORICAL:
        values = table.column(name)
        order = {v: i for i, v in enumerate(sorted(set(values), key=str))}
        return np.asarray([order[v] for v in values], dtype=np.int64)
    raise DiscoveryError(f"column {name!r} is numeric; binarize before discovery")


def _stratum_chi2(x: np.ndarray, y: np.ndarray) -> tuple[float, int]:
    """Chi-square statistic and dof for one contingency table, zero margins dropped."""
    obs = np.zeros((int(x.max()) + 1, int(y.max()) + 1), dtype=np.float64)
    np.add.at(obs, (x, y), 1.0)
    obs = obs[obs.sum(axis=1) > 0][:, obs.sum(axis=0) > 0]
    r, c = obs.shape
    if r < 2 or c < 2:
        return 0.0, 0
    total = obs.sum()
    expected = np.outer(obs.sum(axis=1), obs.sum(axis=0)) / total
    stat = float(((obs - expected) ** 2 / expected).sum())
    return stat, (r - 1) * (c - 1)


def ci_test(table: Table, x: str, y: str, given: tuple[str, ...] = ()) -> CITestResult:
    """Chi-square test of x independent of y within every configuration of `given`.

    Statistics and degrees of freedom are summed across strata; a stratum
    where either variable is constant contributes nothing. With zero total
    dof the p-value is 1.0 (independence holds vacuously).
    """
    xc, yc = _codes(table, x), _codes(table, y)
    if not given:
        strata = [np.arange(len(xc))]
    else:
        cond = np.column_stack([_codes(table, g) for g in given])
        _, inverse = np.unique(cond, axis=0, return_inverse=True)
        strata = [np.flatnonzero(inverse == s) for s in range(int(inverse.max()) + 1)]
    stat_total, dof_total = 0.0, 0
    for idx in strata:
        stat, dof = _stratum_chi2(xc[idx], yc[idx])
        stat_total += stat
        dof_total += dof
    if dof_total == 0:
        return CITestResult(0.0, 0, 1.0)
    return CITestResult(stat_total, dof_total, float(chi2.sf(stat_total, dof_total)))


def _find_separator(
    table: Table, order: dict[str, int], adj: dict[str, set[str]],
    x: str, y: str, level: int, alpha: float,
) -> tuple[str, ...] | None:
    """First conditioning set of the given size that separates x and y, or None."""
    for side, other in ((x, y), (y, x)):
        neighbours = sorted(adj[side] - {other}, key=order.get)
        if len(neighbours) < level:
            continue
        for subset in combinations(neighbours, level):
            if side == y and set(subset) <= adj[x] - {y}:
                continue  # already tried from the x side
            if ci_test(table, x, y, subset).pvalue > alpha:
                return subset
    return None


def pc_discover(table: Table, alpha: float = DEFAULT_ALPHA) -> Dag:
    """Discover a DAG over the table's columns.

    Works on binary/categorical columns; zero-variance columns are left
    isolated with a warning. The search is the stable-skeleton variant:
    within one conditioning-set size, removals do not affect which
    neighbourhoods are enumerated.
    """
    alpha = check_alpha(alpha)
    if table.row_count < MIN_ROWS:
        raise DiscoveryError(f"need at least {MIN_ROWS} rows, got {table.row_count}")
    names = list(table.column_names)
    usable = []
    for name in names:
        if len(set(table.column(name))) < 2:
            warnings.warn(f"column {name!r} has zero variance; excluded from discovery")
            continue
        usable.append(name)
    for name in usable:
        _codes(table, name)  # raises for numeric columns up front
    order = {n: i for i, n in enumerate(names)}

    adj: dict[str, set[str]] = {n: set(usable) - {n} for n in usable}
    sepset: dict[frozenset, tuple[str, ...]] = {}
    level = 0
    max_level = max(len(usable) - 2, 0)
    while level <= max_level:
        snapshot = {n: set(adj[n]) for n in usable}
        removals: list[tuple[str, str]] = []
        for x, y in combinations(usable, 2):
            if y not in adj[x]:
                continue
            sep = _find_separator(table, order, snapshot, x, y, level, alpha)
            if sep is not None:
                sepset[frozenset((x, y))] = sep
                removals.append((x, y))
        for x, y in removals:
            adj[x].discard(y)
            adj[y].discard(x)
        if not any(len(adj[n]) - 1 >= level + 1 for n in usable):
            break
        level += 1

    directed: set[Edge] = set()
    undirected: set[frozenset] = {frozenset((x, y)) for x in usable for y in adj[x] if order[x] < order[y]}

    def is_adjacent(a: str, b: str) -> bool:
        return frozenset((a, b)) in undirected or (a, b) in directed or (b, a) in directed

    def has_path(src: str, dst: str) -> bool:
        seen, stack = set(), [src]
        while stack:
            node = stack.pop()
            if node == dst:
                return True
            if node in seen:
                continue
            seen.add(node)
            stack.extend(t for s, t in directed if s == node)
        return False

    def orient(a: str, b: str) -> bool:
        """Direct a - b as a -> b unless that contradicts or closes a cycle."""
        pair = frozenset((a, b))
        if (a, b) in directed:
            undirected.discard(pair)
            return True
        if (b, a) in directed or has_path(b, a):
            return False
        undirected.discard(pair)
        directed.add((a, b))
        return True

    # colliders: x - z - y with x, y nonadjacent and z outside their separator
    for x, y in combinations(usable, 2):
        if is_adjacent(x, y):
            continue
        for z in sorted(adj[x] & adj[y], key=order.get):
            if z in sepset.get(frozenset((x, y)), ()):
                continue
            for a in (x, y):
                if frozenset((a, z)) in undirected or (z, a) in directed:
                    if not orient(a, z):
                        warnings.warn(
                            f"conflicting collider orientation at {z!r}; keeping earlier one")

    def meek_pass() -> bool:
        changed = False
        for pair in sorted(undirected, key=lambda p: sorted(order[n] for n in p)):
            if pair not in undirected:
                continue  # oriented earlier in this same pass
            a, b = sorted(pair, key=order.get)
            for u, v in ((a, b), (b, a)):
                # chain u <- w with w nonadjacent to v extends to u -> v
                if any((w, u) in directed and not is_adjacent(w, v) for w in usable):
                    if orient(u, v):
                        changed = True
                        break
                # directed path u -> w -> v plus edge u - v closes as u -> v
                if any((u, w) in directed and (w, v) in directed for w in usable):
                    if orient(u, v):
                        changed = True
                        break
                # two colliders into v from nonadjacent w1, w2 both tied to u
                pool = [w for w in usable
                        if frozenset((u, w)) in undirected and (w, v) in directed]
                if any(not is_adjacent(w1, w2) for w1, w2 in combinations(pool, 2)):
                    if orient(u, v):
                        changed = True
                        break
        return changed

    while meek_pass():
        pass
    while undirected:
        pair = min(undirected, key=lambda p: sorted(order[n] for n in p))
        a, b = sorted(pair, key=order.get)
        if not orient(a, b) and not orient(b, a):
            # both directions blocked by earlier conflicts; drop the edge
            warnings.warn(f"cannot orient {a!r} - {b!r} acyclically; dropping it")
            undirected.discard(pair)
        while meek_pass():
            pass

    edges = tuple(sorted(directed, key=lambda e: (order[e[0]], order[e[1]])))
    return Dag(tuple(names), edges)
