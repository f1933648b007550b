"""Unattended games: drive agent policies through the engine, report the result."""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from . import engine
from .agents import AgentPolicy
from .engine import Game, GameConfig, Status
from .evaluation import HIGHER_IS_BETTER
from .metrics import disparity_document, scores_document


class SimulationError(ValueError):
    pass


@dataclass
class SimulationReport:
    consensus: bool
    rounds: int
    exhausted: bool
    round_multipliers: list[dict]   # one entry per round: {"round", "multipliers"}
    round_scores: list[dict]        # one entry per round: {"round", "scores"}
    round_change_counts: dict[int, int]
    evaluation_original: dict
    evaluation_final: dict
    final_scores: dict
    final_disparity: dict
    players: list[dict]
    game: Game                      # kept for export; not serialized

    def to_document(self) -> dict:
        return {
            "consensus": self.consensus,
            "rounds": self.rounds,
            "exhausted": self.exhausted,
            "round_multipliers": self.round_multipliers,
            "round_scores": self.round_scores,
            "round_change_counts": {str(r): c for r, c in sorted(self.round_change_counts.items())},
            "evaluation": {"original": self.evaluation_original, "final": self.evaluation_final},
            "final_scores": self.final_scores,
            "final_disparity": self.final_disparity,
            "players": self.players,
        }


def _eval_doc(snapshot: engine.MetricsSnapshot) -> dict:
    if snapshot.evaluation is not None:
        return snapshot.evaluation.as_dict()
    return {"unsupported": snapshot.evaluation_error}


def run_simulation(
    config: GameConfig,
    policies: Sequence[AgentPolicy],
    max_rounds: int | None = None,
    seed: int | None = None,
) -> SimulationReport:
    """Play a full game with one policy per configured player.

    `max_rounds` overrides the config's bound when given; the engine
    freezes the game if a continue vote would pass it, and the report then
    says consensus=false. A non-None `seed` is carried into the config for
    synthetic data and splits so reruns are reproducible.
    """
    if len(policies) != len(config.players):
        raise SimulationError(
            f"{len(policies)} policies for {len(config.players)} players")
    if max_rounds is not None:
        config = replace(config, max_rounds=max_rounds)
    if seed is not None:
        config = replace(config, seed=seed,
                         dataset=replace(config.dataset, seed=seed)
                         if config.dataset.kind == "synthetic" else config.dataset)
    by_player = {p.id: policy for p, policy in zip(config.players, policies)}

    game = engine.new_game(config)
    round_multipliers: list[dict] = []
    round_scores: list[dict] = []
    while True:
        if game.exhausted or game.status is Status.CONCLUDED:
            break
        if game.status is Status.IN_PROGRESS:
            player = game.current_player()
            plan = by_player[player].plan(game, player)
            for edge, delta in plan.items():
                engine.propose_edge(game, player, edge, delta)
            if plan:
                engine.apply_turn(game, player)
            engine.end_turn(game, player)
        elif game.status is Status.VOTE_PENDING:
            model = game.current_model
            round_multipliers.append({
                "round": game.round,
                "multipliers": {f"{s}->{t}": model.multiplier((s, t))
                                for s, t in game.dag.edges},
            })
            round_scores.append({
                "round": game.round,
                "scores": dict(game.snapshots[-1].scores.scores),
            })
            # simultaneous: everyone decides before anyone's ballot lands
            choices = {pid: by_player[pid].vote(game, pid) for pid in game.player_ids}
            for pid in game.player_ids:
                engine.cast_vote(game, pid, choices[pid])

    summary = game.snapshots[-1]
    rounds = game.vote_history[-1]["round"] if game.vote_history else 0
    return SimulationReport(
        consensus=game.status is Status.CONCLUDED,
        rounds=rounds,
        exhausted=game.exhausted,
        round_multipliers=round_multipliers,
        round_scores=round_scores,
        round_change_counts=dict(summary.history.round_counts),
        evaluation_original=_eval_doc(game.snapshots[0]),
        evaluation_final=_eval_doc(summary),
        final_scores=scores_document(summary.scores),
        final_disparity=disparity_document(summary.disparity),
        players=[{"id": p.id, "role": p.role} for p in config.players],
        game=game,
    )


# -- report rendering ---------------------------------------------------------


def _format_metric_table(original: dict, final: dict) -> list[str]:
    rows = ["metric                 original     final        prefers   verdict",
            "-" * 68]
    if "unsupported" in original or "unsupported" in final:
        rows.append("evaluation unavailable: "
                    + str(original.get("unsupported") or final.get("unsupported")))
        return rows
    for name, higher_better in HIGHER_IS_BETTER.items():
        before, after = original[name], final[name]
        if after == before:
            verdict = "unchanged"
        elif (after > before) == higher_better:
            verdict = "improved"
        else:
            verdict = "regressed"
        prefers = "higher" if higher_better else "lower"
        rows.append(f"{name:<22} {before:<12.4f} {after:<12.4f} {prefers:<9} {verdict}")
    return rows


def render_text_report(report: SimulationReport) -> str:
    lines = [
        "simulation report",
        "=" * 68,
        f"consensus: {'yes' if report.consensus else 'no'}"
        + ("  (round limit reached)" if report.exhausted else ""),
        f"rounds played: {report.rounds}",
        "",
        "evaluation (original vs debiased)",
        "-" * 68,
    ]
    lines += _format_metric_table(report.evaluation_original, report.evaluation_final)
    lines += ["", "edge weight multipliers by round", "-" * 68]
    for entry in report.round_multipliers:
        lines.append(f"round {entry['round']}:")
        for edge, mult in entry["multipliers"].items():
            lines.append(f"  {edge:<28} {mult:+.2f}x")
    lines += ["", "edge changes per round: "
              + (", ".join(f"r{r}={c}" for r, c in sorted(report.round_change_counts.items()))
                 or "none")]
    lines += ["", "final scores", "-" * 68]
    for player, entry in report.final_scores.items():
        lines.append(f"  {player:<12} score={entry['score']:>10.3f}  delta={entry['delta']:+.3f}")
    lines += ["", "final disparity by player", "-" * 68]
    for player, cells in report.final_disparity["players"].items():
        parts = [f"{c['feature']}={c['value']}:{c['disparity']:+.3f}" for c in cells]
        lines.append(f"  {player:<12} " + "  ".join(parts))
    return "\n".join(lines) + "\n"


def emit_report(
    report: SimulationReport,
    out_dir: str | Path,
    formats: Sequence[str] = ("json", "text"),
) -> dict[str, Path]:
    """Write the report files; concluded games also get their export bundle."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for fmt in formats:
        if fmt == "json":
            paths["json"] = out / "simulation.json"
            paths["json"].write_text(
                json.dumps(report.to_document(), indent=2) + "\n", encoding="utf-8")
        elif fmt == "text":
            paths["text"] = out / "simulation.txt"
            paths["text"].write_text(render_text_report(report), encoding="utf-8")
        else:
            raise SimulationError(f"unknown report format {fmt!r}")
    if report.consensus:
        bundle = engine.export_game(report.game)
        saved = bundle.save(out)
        paths.update(saved)
    return paths
