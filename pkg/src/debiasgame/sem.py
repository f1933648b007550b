"""Linear model on standardized columns, user edge re-weighting, regeneration.

Every endogenous column is regressed on its parents after z-scoring with
the original column statistics, and the per-row residuals are kept. A
regeneration pass recomputes each endogenous column in topological order
as intercept + sum of effective-beta * parent z-score + stored residual,
where effective beta = fitted beta * (1 + delta) and delta in [-1, +1] is
the user's edit. Binary columns are re-discretized by rank so the number
of 1s never changes; with all deltas at zero the pass reproduces the
fitted table.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .dag import Dag, Edge
from .tabular import ColumnKind, ColumnSpec, Table, TableError


class ModelError(ValueError):
    """Invalid fit input, intervention, or regeneration input."""


@dataclass(frozen=True)
class ColumnStats:
    mean: float
    std: float


def zscore(values: np.ndarray, st: ColumnStats) -> np.ndarray:
    """Standardize with stored stats; a zero-spread column maps to all zeros."""
    if st.std == 0.0:
        return np.zeros(len(values))
    return (values - st.mean) / st.std


def _freeze(m: Mapping) -> Mapping:
    return MappingProxyType(dict(m))


@dataclass(frozen=True)
class SemModel:
    """Fitted weights plus the user's current per-edge deltas."""

    dag: Dag
    schema: tuple[ColumnSpec, ...]
    beta: Mapping[Edge, float]
    delta: Mapping[Edge, float]
    intercept: Mapping[str, float]
    residuals: Mapping[str, np.ndarray]
    stats: Mapping[str, ColumnStats]

    def __post_init__(self):
        for name in ("beta", "delta", "intercept", "residuals", "stats"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    def effective_beta(self, edge: Edge) -> float:
        return self.beta[edge] * (1.0 + self.delta[edge])

    def multiplier(self, edge: Edge) -> float:
        """Current weight as a fraction of the fitted weight, in [0, 2]."""
        return 1.0 + self.delta[edge]

    def canonical_document(self) -> dict:
        """Serialization-stable summary used for hashing and snapshots."""
        return {
            "nodes": list(self.dag.nodes),
            "schema": [[c.name, c.kind.value, c.role.value] for c in self.schema],
            "edges": [
                {"source": s, "target": t, "beta": self.beta[(s, t)], "delta": self.delta[(s, t)]}
                for s, t in self.dag.edges
            ],
            "intercepts": {n: self.intercept[n] for n in sorted(self.intercept)},
            "stats": {n: [self.stats[n].mean, self.stats[n].std] for n in sorted(self.stats)},
            "residuals_sha256": {
                n: hashlib.sha256(np.ascontiguousarray(self.residuals[n]).tobytes()).hexdigest()
                for n in sorted(self.residuals)
            },
        }


def model_hash(model: SemModel) -> str:
    doc = json.dumps(model.canonical_document(), sort_keys=True)
    return hashlib.sha256(doc.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Intervention:
    """Sparse edge->delta map; each delta replaces that edge's current one."""

    deltas: Mapping[Edge, float] = field(default_factory=dict)

    def __post_init__(self):
        for edge, d in self.deltas.items():
            if not (-1.0 <= d <= 1.0):
                raise ModelError(f"delta for {edge} is {d}, outside [-1, +1]")
        object.__setattr__(self, "deltas", _freeze(self.deltas))


def fit_sem(dag: Dag, table: Table) -> SemModel:
    """Least-squares fit of every endogenous column on its parents.

    All standardization uses population statistics of the input table.
    Collinear parent sets fall back to the minimum-norm solution with a
    warning. Edges pinned in the DAG file skip estimation; pinning only
    some parents of a node is rejected.
    """
    unknown = set(dag.nodes) - set(table.column_names)
    if unknown:
        raise ModelError(f"DAG nodes missing from table: {sorted(unknown)}")
    involved = {n for e in dag.edges for n in e}
    for name in involved:
        if table.spec(name).kind is ColumnKind.CATEGORICAL:
            raise ModelError(f"column {name!r} is categorical; binarize before fitting")

    stats: dict[str, ColumnStats] = {}
    zcols: dict[str, np.ndarray] = {}
    for name in sorted(involved, key=table.column_names.index):
        col = table.numeric(name)
        st = ColumnStats(float(col.mean()), float(col.std()))
        stats[name] = st
        zcols[name] = zscore(col, st)

    beta: dict[Edge, float] = {}
    intercept: dict[str, float] = {}
    residuals: dict[str, np.ndarray] = {}
    for node in dag.endogenous:
        parents = dag.parents(node)
        pinned = [(p, node) in dag.pinned_beta for p in parents]
        z_child = zcols[node]
        zp = np.column_stack([zcols[p] for p in parents])
        if all(pinned):
            coeffs = np.array([dag.pinned_beta[(p, node)] for p in parents])
            icpt = 0.0
        elif any(pinned):
            raise ModelError(f"node {node!r} mixes pinned and fitted parent edges")
        else:
            design = np.column_stack([np.ones(len(z_child)), zp])
            solution, _, rank, _ = np.linalg.lstsq(design, z_child, rcond=None)
            if rank < design.shape[1]:
                warnings.warn(f"collinear parents for {node!r}; using minimum-norm fit")
            icpt = float(solution[0])
            coeffs = solution[1:]
        for p, b in zip(parents, coeffs):
            beta[(p, node)] = float(b)
        intercept[node] = icpt
        # same expression regeneration uses, so an all-zero-delta pass round-trips
        fitted = icpt + zp @ coeffs
        resid = z_child - fitted
        resid.setflags(write=False)
        residuals[node] = resid

    delta = {e: 0.0 for e in dag.edges}
    return SemModel(dag, table.columns, beta, delta, intercept, residuals, stats)


def apply_intervention(model: SemModel, intervention: Intervention) -> SemModel:
    """New model with the intervention's deltas replacing the current ones."""
    for edge in intervention.deltas:
        if edge not in model.delta:
            raise ModelError(f"no edge {edge[0]!r} -> {edge[1]!r} in the model")
    merged = dict(model.delta)
    merged.update(intervention.deltas)
    return replace(model, delta=merged)


def regenerate(model: SemModel, table: Table) -> Table:
    """Recompute endogenous columns from the model against the given table.

    The table must carry the schema the model was fitted on. Exogenous
    columns are copied. Binary columns keep their exact count of 1s: the
    rows with the highest scores get them, ties going to the lower row
    index. Numeric columns are de-standardized scores.
    """
    if table.columns != model.schema:
        raise TableError("table schema differs from the one the model was fitted on")
    n = table.row_count
    for node, resid in model.residuals.items():
        if len(resid) != n:
            raise TableError(f"model was fitted on {len(resid)} rows, table has {n}")

    values: dict[str, np.ndarray] = {}
    new_columns: dict[str, list] = {}
    for node in model.dag.topological_order():
        kind = table.spec(node).kind
        if node not in model.residuals:  # exogenous: keep original values
            if kind is not ColumnKind.CATEGORICAL:
                values[node] = table.numeric(node)
            continue
        parents = model.dag.parents(node)
        zp = np.column_stack([zscore(values[p], model.stats[p]) for p in parents])
        coeffs = np.array([model.effective_beta((p, node)) for p in parents])
        score = model.intercept[node] + zp @ coeffs + model.residuals[node]
        if kind is ColumnKind.BINARY:
            k = int(np.asarray(table.column(node)).sum())
            col = np.zeros(n, dtype=np.int64)
            col[np.argsort(-score, kind="stable")[:k]] = 1
            values[node] = col.astype(np.float64)
            new_columns[node] = [int(v) for v in col]
        elif kind is ColumnKind.NUMERIC:
            st = model.stats[node]
            col = st.mean + st.std * score
            values[node] = col
            new_columns[node] = [float(v) for v in col]
        else:
            raise TableError(f"cannot regenerate categorical column {node!r}")
    return table.replace_columns(new_columns)
