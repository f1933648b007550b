"""Turn-based game engine.

One shared causal model, players in fixed order. A turn stages any number
of edge deltas, applies them atomically (new checkpoint + regenerated
dataset + fresh metrics), then ends. After the last player the round
closes with a simultaneous stop/continue vote: unanimous stop concludes
the game, anything else opens the next round. Every action lands in an
append-only audit log from which the whole game can be replayed.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import metrics as gm
from .classifiers import UnsupportedAlgorithmError
from .dag import Dag, Edge, load_dag
from .evaluation import ClassifierSpec, EvalReport, HIGHER_IS_BETTER, evaluate_table
from .groups import Group, create_group, group_coverage, priority_chart
from .pc import DEFAULT_ALPHA, check_alpha, pc_discover
from .sem import Intervention, SemModel, apply_intervention, fit_sem, model_hash, regenerate
from .tabular import (
    ColumnKind, Cut, HIRING_CUTS, Table, binarize, encode_categoricals,
    generate_hiring, load_csv, parse_cuts, write_csv,
)

DEFAULT_MAX_ROUNDS = 50
MAX_PLAYERS = 5


class GameError(Exception):
    """Any rule violation: wrong player, wrong phase, bad vote, bad config."""


class ConfigError(GameError):
    pass


class Phase(str, Enum):
    EDITING = "editing"
    APPLIED = "applied"
    ENDED = "ended"


class Status(str, Enum):
    IN_PROGRESS = "in-progress"
    VOTE_PENDING = "vote-pending"
    CONCLUDED = "concluded"


STOP, CONTINUE = "stop", "continue"


@dataclass(frozen=True)
class DatasetSource:
    """Either a synthetic draw (seed, rows) or a CSV path."""

    kind: str  # "synthetic" | "csv"
    seed: int = 0
    rows: int = 4000
    path: str = ""

    def __post_init__(self):
        if self.kind not in ("synthetic", "csv"):
            raise ConfigError(f"unknown dataset kind {self.kind!r}")
        if self.kind == "csv" and not self.path:
            raise ConfigError("csv dataset needs a path")


@dataclass(frozen=True)
class PlayerSpec:
    id: str
    role: str
    group: Group


@dataclass(frozen=True)
class GameConfig:
    dataset: DatasetSource
    label: str
    players: tuple[PlayerSpec, ...]
    sensitive: tuple[str, ...] = ()
    alpha: float = DEFAULT_ALPHA
    classifier: ClassifierSpec = ClassifierSpec()
    cuts: Mapping[str, Cut] | None = None
    dag_source: str = "discover"  # "discover" or a DAG file path
    seed: int = 0
    max_rounds: int | None = DEFAULT_MAX_ROUNDS
    test_fraction: float = 0.25
    fairness_k: int = 10
    parity_feature: str | None = None

    def __post_init__(self):
        if not (1 <= len(self.players) <= MAX_PLAYERS):
            raise ConfigError(f"need 1..{MAX_PLAYERS} players, got {len(self.players)}")
        ids = [p.id for p in self.players]
        if len(set(ids)) != len(ids):
            raise ConfigError("duplicate player ids")
        check_alpha(self.alpha)
        if self.max_rounds is not None and self.max_rounds < 0:
            raise ConfigError("max_rounds must be >= 0 (or None to disable)")


@dataclass(frozen=True)
class MoveRecord:
    round: int
    player: str
    edge: Edge
    previous: float
    delta: float
    timestamp: float


@dataclass(frozen=True)
class MetricsSnapshot:
    """Everything the charts need after one applied turn (or at game start)."""

    turn: int
    round: int
    player: str | None
    outcome: gm.OutcomeCounts
    disparity: gm.DisparityMap
    scores: gm.ScoreBoard
    history: gm.HistorySummary
    evaluation: EvalReport | None
    evaluation_error: str | None = None


@dataclass(frozen=True)
class Checkpoint:
    label: str
    model: SemModel
    hash: str


class Game:
    """Mutable game state; drive it through the module-level operations.

    Two views of the data live side by side: the substrate (raw scales,
    categoricals encoded 0/1) that the causal model is fitted on and
    regenerates, and the fully binarized table that all game metrics,
    charts, and classifier evaluation read. `view_cuts` turns the former
    into the latter.
    """

    def __init__(
        self,
        config: GameConfig,
        substrate: Table,
        view: Table,
        dag: Dag,
        model: SemModel,
        view_cuts: Mapping[str, Cut],
    ):
        self.config = config
        self.original_substrate = substrate
        self.current_substrate = substrate
        self.original_table = view
        self.current_table = view
        self.view_cuts = dict(view_cuts)
        self.dag = dag
        self.checkpoints: list[Checkpoint] = [Checkpoint("original", model, model_hash(model))]
        self.groups: dict[str, Group] = {p.id: p.group for p in config.players}
        self.staged: dict[Edge, float] = {}
        self.history = gm.EdgeHistory()
        self.move_records: list[MoveRecord] = []
        self.records: list[dict] = []
        self.snapshots: list[MetricsSnapshot] = []
        self.votes: dict[str, str] = {}
        self.vote_history: list[dict] = []
        self.exhausted = False
        if config.max_rounds == 0:
            self.round = 0
            self.turn_index = 0
            self.phase = Phase.ENDED
            self.status = Status.VOTE_PENDING
        else:
            self.round = 1
            self.turn_index = 0
            self.phase = Phase.EDITING
            self.status = Status.IN_PROGRESS

    @property
    def current_model(self) -> SemModel:
        return self.checkpoints[-1].model

    @property
    def player_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.config.players)

    def current_player(self) -> str | None:
        if self.exhausted or self.status is not Status.IN_PROGRESS:
            return None
        return self.config.players[self.turn_index].id

    def _require_turn(self, player: str, op: str) -> None:
        if self.exhausted:
            raise GameError("round limit reached; game is frozen")
        if self.status is Status.CONCLUDED:
            raise GameError("game already concluded")
        if self.status is not Status.IN_PROGRESS:
            raise GameError(f"cannot {op} while a vote is pending")
        if player not in self.player_ids:
            raise GameError(f"unknown player {player!r}")
        if player != self.current_player():
            raise GameError(f"not {player!r}'s turn")


def _build_table(config: GameConfig) -> tuple[Table, Table, dict[str, Cut]]:
    """(substrate, binarized view, view cuts) for the config's dataset.

    The substrate keeps numeric columns on their raw scale and encodes
    categorical ones to 0/1; the view applies the remaining numeric cuts
    so every column the metrics see is binary.
    """
    ds = config.dataset
    if ds.kind == "synthetic":
        raw = generate_hiring(ds.seed, ds.rows)
        cuts = dict(config.cuts) if config.cuts is not None else dict(HIRING_CUTS)
    else:
        raw = load_csv(ds.path, label=config.label, sensitive=config.sensitive)
        cuts = dict(config.cuts) if config.cuts is not None else {}
    needs_cut = [c.name for c in raw.columns if c.kind is not ColumnKind.BINARY]
    if needs_cut and not cuts:
        raise ConfigError(f"columns {needs_cut} need cut rules in the config")
    cuts = {name: cut for name, cut in cuts.items()
            if raw.spec(name).kind is not ColumnKind.BINARY}
    substrate = encode_categoricals(raw, cuts)
    view_cuts = {name: cut for name, cut in cuts.items()
                 if substrate.spec(name).kind is not ColumnKind.BINARY}
    return substrate, binarize(substrate, view_cuts), view_cuts


def _evaluate(game_or_config, table: Table) -> tuple[EvalReport | None, str | None]:
    config = game_or_config.config if isinstance(game_or_config, Game) else game_or_config
    try:
        report = evaluate_table(
            table, config.classifier,
            split_seed=config.seed, test_fraction=config.test_fraction,
            fairness_k=config.fairness_k, parity_feature=config.parity_feature,
        )
        return report, None
    except UnsupportedAlgorithmError as exc:
        return None, str(exc)


def _snapshot(game: Game, player: str | None) -> MetricsSnapshot:
    outcome = gm.compute_outcome(game.current_table, game.config.label, game.original_table)
    disparity = gm.compute_disparity(game.groups, outcome)
    previous = game.snapshots[-1].scores if game.snapshots else None
    scores = gm.compute_scores(game.groups, outcome, previous)
    summary = gm.summarize_history(game.history)
    report, error = _evaluate(game, game.current_table)
    return MetricsSnapshot(
        turn=len(game.snapshots), round=game.round, player=player,
        outcome=outcome, disparity=disparity, scores=scores,
        history=summary, evaluation=report, evaluation_error=error,
    )


def new_game(config: GameConfig) -> Game:
    """Build the tables, the causal model, validate groups, open round one."""
    substrate, view, view_cuts = _build_table(config)
    if view.label_name != config.label:
        raise ConfigError(f"label {config.label!r} missing or not the table's label")
    missing = set(config.sensitive) - set(view.column_names)
    if missing:
        raise ConfigError(f"sensitive columns not in the table: {sorted(missing)}")
    if config.dag_source == "discover":
        dag = pc_discover(view, config.alpha)  # CI tests need discrete data
    else:
        dag = load_dag(config.dag_source, view)
    if not dag.edges:
        raise ConfigError("causal graph has no edges; nothing to play with")
    for p in config.players:
        # re-run the validations that need the table
        create_group(p.group.name, p.group.owner, p.group.selections,
                     p.group.goal, label=config.label)
        priority_chart(p.group, view)
    model = fit_sem(dag, substrate)
    game = Game(config, substrate, view, dag, model, view_cuts)
    game.snapshots.append(_snapshot(game, None))
    return game


def propose_edge(
    game: Game, player: str, edge: Edge, delta: float,
    timestamp: float | None = None,
) -> Game:
    """Stage one edge delta for the current turn; logged immediately."""
    game._require_turn(player, "propose")
    if game.phase is not Phase.EDITING:
        raise GameError("turn already applied; end it or start the next round")
    edge = (edge[0], edge[1])
    if edge not in game.current_model.delta:
        raise GameError(f"no edge {edge[0]!r} -> {edge[1]!r} in the model")
    if not (-1.0 <= delta <= 1.0):
        raise GameError(f"delta {delta} outside [-1, +1]")
    previous = game.staged.get(edge, game.current_model.delta[edge])
    ts = time.time() if timestamp is None else timestamp
    record = MoveRecord(game.round, player, edge, previous, float(delta), ts)
    game.move_records.append(record)
    game.staged[edge] = float(delta)
    game.history.add(gm.MoveEntry(game.round, player, edge, float(delta), float(delta) - previous))
    game.records.append({
        "kind": "move", "round": game.round, "player": player,
        "edge": list(edge), "previous": previous, "delta": float(delta), "ts": ts,
    })
    return game


def apply_turn(game: Game, player: str) -> Game:
    """Commit the staged deltas: new checkpoint, regenerated table, new metrics."""
    game._require_turn(player, "apply")
    if game.phase is not Phase.EDITING:
        raise GameError("turn already applied")
    model = apply_intervention(game.current_model, Intervention(dict(game.staged)))
    digest = model_hash(model)
    game.checkpoints.append(Checkpoint(f"turn-{len(game.checkpoints)}", model, digest))
    game.current_substrate = regenerate(model, game.original_substrate)
    game.current_table = binarize(game.current_substrate, game.view_cuts)
    game.staged = {}
    game.phase = Phase.APPLIED
    game.snapshots.append(_snapshot(game, player))
    game.records.append({
        "kind": "apply", "round": game.round, "player": player,
        "checkpoint": len(game.checkpoints) - 1, "hash": digest,
    })
    return game


def end_turn(game: Game, player: str) -> Game:
    """Close the turn; a turn with staged edits must be applied first."""
    game._require_turn(player, "end turn")
    if game.phase is Phase.EDITING and game.staged:
        raise GameError("staged changes pending; apply them before ending the turn")
    game.records.append({"kind": "end-turn", "round": game.round, "player": player})
    if game.turn_index + 1 < len(game.config.players):
        game.turn_index += 1
        game.phase = Phase.EDITING
    else:
        game.phase = Phase.ENDED
        game.status = Status.VOTE_PENDING
        game.votes = {}
    return game


def cast_vote(game: Game, player: str, choice: str) -> Game:
    """Record one hidden vote; the last one resolves the round."""
    if game.exhausted:
        raise GameError("round limit reached; game is frozen")
    if game.status is not Status.VOTE_PENDING:
        raise GameError("no vote is open")
    if player not in game.player_ids:
        raise GameError(f"unknown player {player!r}")
    if player in game.votes:
        raise GameError(f"{player!r} already voted this round")
    if choice not in (STOP, CONTINUE):
        raise GameError(f"vote must be {STOP!r} or {CONTINUE!r}, got {choice!r}")
    game.votes[player] = choice
    game.records.append({"kind": "vote", "round": game.round, "player": player, "choice": choice})
    if len(game.votes) < len(game.config.players):
        return game
    stops = sum(1 for c in game.votes.values() if c == STOP)
    game.vote_history.append({
        "round": game.round, "stop": stops, "continue": len(game.votes) - stops,
    })
    if stops == len(game.config.players):
        game.status = Status.CONCLUDED
        game.phase = Phase.ENDED
        return game
    game.round += 1
    game.turn_index = 0
    game.votes = {}
    if game.config.max_rounds is not None and game.round > game.config.max_rounds:
        game.exhausted = True
        game.status = Status.IN_PROGRESS
        game.phase = Phase.ENDED
    else:
        game.status = Status.IN_PROGRESS
        game.phase = Phase.EDITING
    return game


# -- audit log and replay ----------------------------------------------------


def audit_log_text(game: Game) -> str:
    return "".join(json.dumps(rec, sort_keys=True) + "\n" for rec in game.records)


def replay(config: GameConfig, log: str | Iterable[dict]) -> Game:
    """Rebuild a game by re-driving the logged actions against a fresh start."""
    if isinstance(log, str):
        records = [json.loads(line) for line in log.splitlines() if line.strip()]
    else:
        records = list(log)
    game = new_game(config)
    for rec in records:
        kind = rec.get("kind")
        if kind == "move":
            propose_edge(game, rec["player"], tuple(rec["edge"]), rec["delta"],
                         timestamp=rec.get("ts"))
        elif kind == "apply":
            apply_turn(game, rec["player"])
        elif kind == "end-turn":
            end_turn(game, rec["player"])
        elif kind == "vote":
            cast_vote(game, rec["player"], rec["choice"])
        else:
            raise GameError(f"unknown audit record kind {kind!r}")
    return game


# -- export ------------------------------------------------------------------


def _directions(original: EvalReport, debiased: EvalReport) -> dict[str, dict]:
    out = {}
    for name, higher_better in HIGHER_IS_BETTER.items():
        before = getattr(original, name)
        after = getattr(debiased, name)
        if after == before:
            verdict = "unchanged"
        elif (after > before) == higher_better:
            verdict = "improved"
        else:
            verdict = "regressed"
        out[name] = {
            "original": before, "debiased": after,
            "prefers": "higher" if higher_better else "lower", "verdict": verdict,
        }
    return out


@dataclass(frozen=True)
class ExportBundle:
    csv_text: str
    audit_text: str
    report: dict

    def save(self, out_dir: str | Path) -> dict[str, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "csv": out / "debiased.csv",
            "audit": out / "audit.log",
            "report": out / "report.json",
        }
        paths["csv"].write_text(self.csv_text, encoding="utf-8")
        paths["audit"].write_text(self.audit_text, encoding="utf-8")
        paths["report"].write_text(json.dumps(self.report, indent=2) + "\n", encoding="utf-8")
        return paths


def export_game(game: Game, out_dir: str | Path | None = None) -> ExportBundle:
    """Debiased CSV, audit log, and the before/after evaluation report."""
    if game.status is not Status.CONCLUDED:
        raise GameError("export requires a concluded game")
    original_report, orig_err = _evaluate(game, game.original_table)
    final_report, final_err = _evaluate(game, game.current_table)
    if original_report is not None and final_report is not None:
        report = {
            "original": original_report.as_dict(),
            "debiased": final_report.as_dict(),
            "directions": _directions(original_report, final_report),
        }
    else:
        report = {"evaluation_unavailable": orig_err or final_err}
    report["rounds"] = game.vote_history[-1]["round"] if game.vote_history else game.round
    report["checkpoints"] = [{"label": c.label, "hash": c.hash} for c in game.checkpoints]
    bundle = ExportBundle(write_csv(game.current_substrate), audit_log_text(game), report)
    if out_dir is not None:
        bundle.save(out_dir)
    return bundle


# -- chart-data snapshot document ---------------------------------------------


def snapshot_document(game: Game) -> dict:
    """Everything a client needs to draw the whole screen, JSON-safe."""
    snap = game.snapshots[-1]
    model = game.current_model
    edges = []
    for s, t in game.dag.edges:
        edges.append({
            "source": s, "target": t,
            "beta": model.beta[(s, t)],
            "delta": model.delta[(s, t)],
            "multiplier": model.multiplier((s, t)),
            "effective_beta": model.effective_beta((s, t)),
            "staged_delta": game.staged.get((s, t)),
        })
    eval_doc = (snap.evaluation.as_dict() if snap.evaluation is not None
                else {"unsupported": snap.evaluation_error})
    first = game.snapshots[0]
    eval_original = (first.evaluation.as_dict() if first.evaluation is not None
                     else {"unsupported": first.evaluation_error})
    coverage = {}
    for pid, group in game.groups.items():
        cov = group_coverage(group, game.original_table)
        coverage[pid] = {
            "joint": cov.joint,
            "per_selection": [
                {"feature": s.feature, "value": s.value, "fraction": f}
                for s, f in cov.per_selection.items()
            ],
        }
    return {
        "round": game.round,
        "turn_player": game.current_player(),
        "phase": game.phase.value,
        "status": game.status.value,
        "exhausted": game.exhausted,
        "players": [
            {"id": p.id, "role": p.role, "group": p.group.name, "goal": p.group.goal,
             "selections": [{"feature": s.feature, "value": s.value}
                            for s in p.group.selections],
             "care": p.group.care}
            for p in game.config.players
        ],
        "network": {"nodes": list(game.dag.nodes), "edges": edges},
        "outcome": gm.outcome_document(snap.outcome),
        "disparity": gm.disparity_document(snap.disparity),
        "scores": gm.scores_document(snap.scores),
        "history": gm.history_document(snap.history),
        "evaluation": {"original": eval_original, "current": eval_doc},
        "priorities": {pid: {f: {str(v): w for v, w in vals.items()}
                             for f, vals in priority_chart(g, game.original_table).items()}
                       for pid, g in game.groups.items()},
        "coverage": coverage,
        "votes": {"cast": sorted(game.votes), "needed": len(game.config.players),
                  "history": list(game.vote_history)},
        "checkpoints": [{"label": c.label, "hash": c.hash} for c in game.checkpoints],
        "cut_labels": game.original_table.cut_labels,
        "label": game.config.label,
        "sensitive": list(game.config.sensitive),
        "turn": snap.turn,
    }


# -- config documents ----------------------------------------------------------


def config_from_document(doc: Mapping, base_dir: str | Path | None = None) -> GameConfig:
    """GameConfig from the JSON config-file form."""
    base = Path(base_dir) if base_dir else None

    def resolve(p: str) -> str:
        path = Path(p)
        if base and not path.is_absolute():
            path = base / path
        return str(path)

    try:
        ds_doc = dict(doc["dataset"])
        if ds_doc.get("kind") == "csv":
            ds_doc["path"] = resolve(ds_doc["path"])
        dataset = DatasetSource(**ds_doc)
        label = doc["label"]
        players = []
        for p in doc["players"]:
            selections = [(s[0], int(s[1])) for s in p["selections"]]
            group = create_group(p.get("group", p["role"]), p["id"], selections,
                                 goal=p.get("goal", ""), label=label)
            players.append(PlayerSpec(p["id"], p["role"], group))
        classifier_doc = doc.get("classifier", {})
        if isinstance(classifier_doc, str):
            classifier_doc = {"algorithm": classifier_doc}
        dag_source = doc.get("dag", "discover")
        if isinstance(dag_source, Mapping):
            dag_source = dag_source.get("path", "discover")
        if dag_source != "discover":
            dag_source = resolve(dag_source)
        raw_cuts = doc.get("binarize")
        max_rounds = doc.get("max_rounds", DEFAULT_MAX_ROUNDS)
        if max_rounds is not None:
            max_rounds = int(max_rounds)
        return GameConfig(
            dataset=dataset,
            label=label,
            players=tuple(players),
            sensitive=tuple(doc.get("sensitive", ())),
            alpha=float(doc.get("alpha", DEFAULT_ALPHA)),
            classifier=ClassifierSpec(
                classifier_doc.get("algorithm", "logistic-regression"),
                dict(classifier_doc.get("params", {})),
            ),
            cuts=parse_cuts(raw_cuts) if raw_cuts is not None else None,
            dag_source=dag_source,
            seed=int(doc.get("seed", 0)),
            max_rounds=max_rounds,
            test_fraction=float(doc.get("test_fraction", 0.25)),
            fairness_k=int(doc.get("fairness_k", 10)),
            parity_feature=doc.get("parity_feature"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, GameError):
            raise
        raise ConfigError(f"bad game config: {exc}") from exc


def load_config(path: str | Path) -> GameConfig:
    p = Path(path)
    return config_from_document(json.loads(p.read_text(encoding="utf-8")), base_dir=p.parent)
