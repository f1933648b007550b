"""Directed acyclic graphs over table columns, plus the edge-list file format.

The file format is one edge per line, ``source -> target``, ``#`` starts a
comment, and an optional ``beta=<float>`` suffix pins the fitted weight of
that edge (used to bypass estimation in tests and demos).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from types import MappingProxyType
from typing import Mapping, Sequence

from .tabular import Table

Edge = tuple[str, str]


class DagError(ValueError):
    """Invalid graph structure or DAG file."""


def _frozen_mapping(m: Mapping[Edge, float]) -> Mapping[Edge, float]:
    return MappingProxyType(dict(m))


@dataclass(frozen=True)
class Dag:
    """Node-ordered DAG. Node order is the tie-break for every traversal."""

    nodes: tuple[str, ...]
    edges: tuple[Edge, ...]
    pinned_beta: Mapping[Edge, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pinned_beta", _frozen_mapping(self.pinned_beta))
        if len(set(self.nodes)) != len(self.nodes):
            raise DagError("duplicate nodes")
        known = set(self.nodes)
        seen = set()
        for s, t in self.edges:
            if s == t:
                raise DagError(f"self-loop on {s!r}")
            if (s, t) in seen:
                raise DagError(f"duplicate edge {s!r} -> {t!r}")
            if s not in known or t not in known:
                raise DagError(f"edge {s!r} -> {t!r} uses unknown node")
            seen.add((s, t))
        for edge in self.pinned_beta:
            if edge not in seen:
                raise DagError(f"pinned beta for unknown edge {edge}")
        self.topological_order()  # raises on cycles

    def parents(self, node: str) -> tuple[str, ...]:
        """Sources of incoming edges, in edge-declaration order."""
        return tuple(s for s, t in self.edges if t == node)

    def children(self, node: str) -> tuple[str, ...]:
        return tuple(t for s, t in self.edges if s == node)

    @property
    def endogenous(self) -> tuple[str, ...]:
        """Nodes with at least one parent, in node order."""
        targets = {t for _, t in self.edges}
        return tuple(n for n in self.nodes if n in targets)

    @property
    def exogenous(self) -> tuple[str, ...]:
        targets = {t for _, t in self.edges}
        return tuple(n for n in self.nodes if n not in targets)

    def topological_order(self) -> tuple[str, ...]:
        """Kahn's algorithm; among ready nodes the one earliest in node order wins."""
        indeg = {n: 0 for n in self.nodes}
        for _, t in self.edges:
            indeg[t] += 1
        order = []
        remaining = dict(indeg)
        while remaining:
            ready = [n for n in self.nodes if n in remaining and remaining[n] == 0]
            if not ready:
                cycle = sorted(remaining)
                raise DagError(f"cycle among {cycle}")
            node = ready[0]
            order.append(node)
            del remaining[node]
            for t in self.children(node):
                if t in remaining:
                    remaining[t] -= 1
        return tuple(order)


def parse_dag_text(text: str, nodes: Sequence[str], source: str = "<dag>") -> Dag:
    """Parse edge-list text against a known node set (usually table columns)."""
    known = set(nodes)
    edges: list[Edge] = []
    pinned: dict[Edge, float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        beta = None
        if "beta=" in line:
            line, _, beta_part = line.partition("beta=")
            line = line.strip()
            try:
                beta = float(beta_part.strip())
            except ValueError:
                raise DagError(f"{source}:{lineno}: bad beta value {beta_part.strip()!r}") from None
        parts = [p.strip() for p in line.split("->")]
        if len(parts) != 2 or not parts[0] or not parts[1]:
            raise DagError(f"{source}:{lineno}: expected 'source -> target', got {raw.strip()!r}")
        s, t = parts
        for name in (s, t):
            if name not in known:
                raise DagError(f"{source}:{lineno}: {name!r} is not a table column")
        edges.append((s, t))
        if beta is not None:
            pinned[(s, t)] = beta
    return Dag(tuple(nodes), tuple(edges), pinned)


def load_dag(path: str | Path, table: Table) -> Dag:
    """Load a DAG file; every node must be a column of the given table."""
    text = Path(path).read_text(encoding="utf-8")
    return parse_dag_text(text, table.column_names, source=str(path))


def write_dag(dag: Dag, path: str | Path | None = None) -> str:
    """Edge-list text for a DAG; optionally write it to a file."""
    lines = []
    for s, t in dag.edges:
        suffix = f"  beta={dag.pinned_beta[(s, t)]:g}" if (s, t) in dag.pinned_beta else ""
        lines.append(f"{s} -> {t}{suffix}")
    text = "\n".join(lines) + ("\n" if lines else "")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
