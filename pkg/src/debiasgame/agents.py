"""Scripted players for unattended runs.

The rule-driven agent zeroes every edge leaving a sensitive column and
votes stop once none are left. The score-driven agent greedily grid
searches one edge change per turn and only takes strict improvements of
its own score. A scripted agent replays an explicit move list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

from .dag import Edge
from .engine import CONTINUE, Game, STOP
from .metrics import compute_outcome, player_score
from .sem import Intervention, apply_intervention, regenerate
from .tabular import binarize


class AgentError(ValueError):
    """Bad policy specification or script."""


class AgentPolicy(Protocol):
    def plan(self, game: Game, player: str) -> dict[Edge, float]: ...
    def vote(self, game: Game, player: str) -> str: ...


@dataclass(frozen=True)
class Deontologist:
    """Remove sensitive influence outright, then hold the line."""

    sensitive: frozenset[str]

    def _open_edges(self, game: Game) -> list[Edge]:
        model = game.current_model
        return [e for e in game.dag.edges
                if e[0] in self.sensitive and model.multiplier(e) > 0.0]

    def plan(self, game: Game, player: str) -> dict[Edge, float]:
        return {e: -1.0 for e in self._open_edges(game)}

    def vote(self, game: Game, player: str) -> str:
        return STOP if not self._open_edges(game) else CONTINUE


def default_grid(step: float = 0.25) -> tuple[float, ...]:
    if not (0.0 < step <= 1.0):
        raise AgentError(f"grid step must be in (0, 1], got {step}")
    n = int(round(1.0 / step))
    values = sorted({round(i * step, 10) for i in range(-n, n + 1)} | {-1.0, 1.0})
    return tuple(values)


@dataclass(frozen=True)
class Consequentialist:
    """One edge per turn, best strict improvement of the agent's own score.

    Ties go to the earlier edge in the graph, then to the smaller |delta|.
    Votes stop when no strict improvement remains (or once a satisfaction
    score has been reached).
    """

    grid: tuple[float, ...] = field(default_factory=default_grid)
    satisfaction: float | None = None

    def _own_score(self, game: Game, player: str) -> float:
        outcome = compute_outcome(game.current_table, game.config.label)
        return player_score(game.groups[player], outcome)

    def _best_move(self, game: Game, player: str) -> tuple[Edge, float] | None:
        group = game.groups[player]
        label = game.config.label
        best_score = self._own_score(game, player)
        best: tuple[Edge, float] | None = None
        for edge in game.dag.edges:
            current = game.current_model.delta[edge]
            for delta in sorted(self.grid, key=lambda d: (abs(d), d)):
                if delta == current:
                    continue
                model = apply_intervention(game.current_model, Intervention({edge: delta}))
                table = binarize(regenerate(model, game.original_substrate), game.view_cuts)
                score = player_score(group, compute_outcome(table, label))
                if score > best_score:
                    best_score, best = score, (edge, delta)
        return best

    def plan(self, game: Game, player: str) -> dict[Edge, float]:
        move = self._best_move(game, player)
        return {move[0]: move[1]} if move else {}

    def vote(self, game: Game, player: str) -> str:
        if self.satisfaction is not None and self._own_score(game, player) >= self.satisfaction:
            return STOP
        return STOP if self._best_move(game, player) is None else CONTINUE


@dataclass(frozen=True)
class ScriptLine:
    round: int
    edge: Edge | None
    delta: float | None
    vote: str


@dataclass(frozen=True)
class Scripted:
    """Replays `round edge delta vote` lines; rounds past the script pass and stop."""

    lines: tuple[ScriptLine, ...]

    def plan(self, game: Game, player: str) -> dict[Edge, float]:
        plan: dict[Edge, float] = {}
        for line in self.lines:
            if line.round == game.round and line.edge is not None:
                plan[line.edge] = line.delta
        return plan

    def vote(self, game: Game, player: str) -> str:
        votes = [line.vote for line in self.lines if line.round == game.round]
        return votes[-1] if votes else STOP


def parse_script(text: str, source: str = "<script>") -> Scripted:
    lines: list[ScriptLine] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.split()
        if len(parts) != 4:
            raise AgentError(f"{source}:{lineno}: expected 'round edge delta vote'")
        round_s, edge_s, delta_s, vote = parts
        if vote not in (STOP, CONTINUE):
            raise AgentError(f"{source}:{lineno}: vote must be stop or continue")
        edge = None
        delta = None
        if edge_s != "-":
            if "->" not in edge_s:
                raise AgentError(f"{source}:{lineno}: edge must look like A->B or be '-'")
            s, _, t = edge_s.partition("->")
            edge = (s.strip(), t.strip())
            try:
                delta = float(delta_s)
            except ValueError:
                raise AgentError(f"{source}:{lineno}: bad delta {delta_s!r}") from None
        try:
            lines.append(ScriptLine(int(round_s), edge, delta, vote))
        except ValueError:
            raise AgentError(f"{source}:{lineno}: bad round {round_s!r}") from None
    return Scripted(tuple(lines))


def load_script(path: str | Path) -> Scripted:
    return parse_script(Path(path).read_text(encoding="utf-8"), source=str(path))


def make_policy(
    spec: str,
    sensitive: Sequence[str] = (),
    grid_step: float = 0.25,
    satisfaction: float | None = None,
) -> AgentPolicy:
    """Policy from its CLI name: deontologist | consequentialist | scripted:<file>."""
    name, _, arg = spec.partition(":")
    if name == "deontologist":
        return Deontologist(frozenset(sensitive))
    if name == "consequentialist":
        return Consequentialist(default_grid(grid_step), satisfaction)
    if name == "scripted":
        if not arg:
            raise AgentError("scripted policy needs a file: scripted:<path>")
        return load_script(arg)
    raise AgentError(f"unknown policy {spec!r}")
