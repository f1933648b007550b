"""In-game metrics: outcome counts, disparity, scores, edge-history summaries.

Counts answer "how many rows with feature=value hold a positive label",
for the current regenerated table and for the original one. Disparity is
a player's care weight minus that cell's share of all positives, so zero
means the cell gets exactly the attention the player asked for. A score
is the care-weighted sum of a player's counts. These satisfy, per player,
sum over selections of care * (care - disparity) * total positives = score.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .dag import Edge
from .groups import Group, Selection
from .tabular import ColumnKind, Table, TableError

Cell = tuple[str, int]

#: Display buckets for signed disparity in [-1, +1]; index 5 is the neutral middle.
DISPARITY_BUCKETS = 11


def disparity_bucket(value: float) -> int:
    """Bucket index 0..10 for a signed value in [-1, +1]; 0.0 maps to 5."""
    clamped = max(-1.0, min(1.0, value))
    return int(round((clamped + 1.0) / 2.0 * (DISPARITY_BUCKETS - 1)))


@dataclass(frozen=True)
class OutcomeCounts:
    """Positive-label counts per (feature, value), current and original table."""

    counts: Mapping[Cell, int]
    original: Mapping[Cell, int]
    total_positives: int
    original_total: int


def _positive_counts(table: Table, label: str) -> tuple[dict[Cell, int], int]:
    labels = table.column(label)
    counts: dict[Cell, int] = {}
    for feature in table.feature_names:
        if table.spec(feature).kind is not ColumnKind.BINARY:
            raise TableError(f"outcome counts need binary features, {feature!r} is not")
        col = table.column(feature)
        pos = [v for v, lab in zip(col, labels) if lab == 1]
        counts[(feature, 1)] = sum(pos)
        counts[(feature, 0)] = len(pos) - sum(pos)
    return counts, sum(labels)


def compute_outcome(table: Table, label: str, original: Table | None = None) -> OutcomeCounts:
    """Count positives per cell; `original` defaults to the table itself."""
    if table.spec(label).kind is not ColumnKind.BINARY:
        raise TableError(f"label {label!r} must be binary")
    counts, total = _positive_counts(table, label)
    if original is None or original is table:
        return OutcomeCounts(counts, dict(counts), total, total)
    orig_counts, orig_total = _positive_counts(original, label)
    return OutcomeCounts(counts, orig_counts, total, orig_total)


@dataclass(frozen=True)
class DisparityMap:
    """Per player: selection -> care minus positive-share. Degenerate when no positives."""

    values: Mapping[str, Mapping[Selection, float]]
    degenerate: bool = False


def compute_disparity(groups: Mapping[str, Group], outcome: OutcomeCounts) -> DisparityMap:
    total = outcome.total_positives
    values: dict[str, dict[Selection, float]] = {}
    for player, group in groups.items():
        per: dict[Selection, float] = {}
        for sel in group.selections:
            cell = (sel.feature, sel.value)
            if cell not in outcome.counts:
                raise TableError(f"no outcome cell for {cell}")
            share = outcome.counts[cell] / total if total else 0.0
            per[sel] = group.care - share
        values[player] = per
    return DisparityMap(values, degenerate=(total == 0))


@dataclass(frozen=True)
class ScoreBoard:
    """Per player: care-weighted positive count and its change since last time."""

    scores: Mapping[str, float]
    deltas: Mapping[str, float]


def player_score(group: Group, outcome: OutcomeCounts) -> float:
    return sum(group.care * outcome.counts[(s.feature, s.value)] for s in group.selections)


def compute_scores(
    groups: Mapping[str, Group],
    outcome: OutcomeCounts,
    previous: ScoreBoard | None = None,
) -> ScoreBoard:
    scores = {player: player_score(group, outcome) for player, group in groups.items()}
    deltas = {player: scores[player] - (previous.scores.get(player, 0.0) if previous else 0.0)
              for player in scores}
    if previous is None:
        deltas = {player: 0.0 for player in scores}
    return ScoreBoard(scores, deltas)


# -- edge history ------------------------------------------------------------


@dataclass(frozen=True)
class MoveEntry:
    round: int
    player: str
    edge: Edge
    delta: float
    change: float  # new delta minus the delta it replaced


@dataclass
class EdgeHistory:
    """Append-only record of every staged edge edit."""

    entries: list[MoveEntry] = field(default_factory=list)

    def add(self, entry: MoveEntry) -> None:
        self.entries.append(entry)


@dataclass(frozen=True)
class HistorySummary:
    top_edges: tuple[Edge, ...]                       # up to three, by total |change|
    round_counts: Mapping[int, int]                   # moves that actually changed a delta
    series: Mapping[Edge, tuple[MoveEntry, ...]]      # per-edge move sequence


def summarize_history(history: EdgeHistory) -> HistorySummary:
    totals: dict[Edge, float] = {}
    series: dict[Edge, list[MoveEntry]] = {}
    round_counts: dict[int, int] = {}
    for entry in history.entries:
        series.setdefault(entry.edge, []).append(entry)
        totals[entry.edge] = totals.get(entry.edge, 0.0) + abs(entry.change)
        if entry.change != 0.0:
            round_counts[entry.round] = round_counts.get(entry.round, 0) + 1
    ordered = sorted(totals, key=lambda e: (-totals[e], e))
    top = tuple(e for e in ordered if totals[e] > 0.0)[:3]
    return HistorySummary(top, round_counts, {e: tuple(v) for e, v in series.items()})


# -- serialization helpers ---------------------------------------------------


def outcome_document(outcome: OutcomeCounts) -> dict:
    def nest(counts: Mapping[Cell, int]) -> dict:
        doc: dict[str, dict[str, int]] = {}
        for (feature, value), count in sorted(counts.items()):
            doc.setdefault(feature, {})[str(value)] = count
        return doc

    return {
        "current": nest(outcome.counts),
        "original": nest(outcome.original),
        "total_positives": outcome.total_positives,
        "original_total": outcome.original_total,
    }


def disparity_document(disparity: DisparityMap) -> dict:
    doc: dict[str, list[dict]] = {}
    for player, per in disparity.values.items():
        doc[player] = [
            {"feature": s.feature, "value": s.value, "disparity": d, "bucket": disparity_bucket(d)}
            for s, d in per.items()
        ]
    return {"players": doc, "degenerate": disparity.degenerate}


def scores_document(board: ScoreBoard) -> dict:
    return {player: {"score": board.scores[player], "delta": board.deltas[player]}
            for player in board.scores}


def history_document(summary: HistorySummary) -> dict:
    return {
        "top_edges": [list(e) for e in summary.top_edges],
        "round_counts": {str(r): c for r, c in sorted(summary.round_counts.items())},
        "series": [
            {"edge": list(edge),
             "moves": [{"round": m.round, "player": m.player, "delta": m.delta, "change": m.change}
                       for m in moves]}
            for edge, moves in sorted(summary.series.items())
        ],
    }
