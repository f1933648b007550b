"""Player groups: which (feature, value) cells a player cares about.

A group splits a unit care budget evenly across its selections. Coverage
reports how much of the dataset each selection and their conjunction
touch. The on-disk format is a small header (name/owner/goal) followed by
one ``feature=value`` line per selection; ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .tabular import ColumnKind, Table, TableError


class GroupError(ValueError):
    """Invalid group definition or group file."""


@dataclass(frozen=True)
class Selection:
    feature: str
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise GroupError(f"selection value must be 0 or 1, got {self.value!r}")


@dataclass(frozen=True)
class Group:
    name: str
    owner: str
    selections: tuple[Selection, ...]
    goal: str = ""

    @property
    def care(self) -> float:
        """Care weight of each selection: the unit budget split evenly."""
        return 1.0 / len(self.selections)

    def care_weights(self) -> dict[Selection, float]:
        return {s: self.care for s in self.selections}


def create_group(
    name: str,
    owner: str,
    selections: Sequence[Selection | tuple[str, int]],
    goal: str = "",
    label: str | None = None,
) -> Group:
    """Validated group; rejects empty or duplicate selections and label picks."""
    normed = tuple(s if isinstance(s, Selection) else Selection(*s) for s in selections)
    if not normed:
        raise GroupError(f"group {name!r} has no selections")
    if len(set(normed)) != len(normed):
        raise GroupError(f"group {name!r} repeats a selection")
    if label is not None:
        picked = [s for s in normed if s.feature == label]
        if picked:
            raise GroupError(f"group {name!r} selects the label column {label!r}")
    return Group(name, owner, normed, goal)


def group_coverage(group: Group, table: Table) -> "Coverage":
    """Fraction of rows matching each selection, and their conjunction."""
    n = table.row_count
    per: dict[Selection, float] = {}
    joint = [True] * n
    for sel in group.selections:
        if table.spec(sel.feature).kind is not ColumnKind.BINARY:
            raise TableError(f"selection on non-binary column {sel.feature!r}")
        col = table.column(sel.feature)
        matches = [v == sel.value for v in col]
        per[sel] = (sum(matches) / n) if n else 0.0
        joint = [j and m for j, m in zip(joint, matches)]
    return Coverage(per, (sum(joint) / n) if n else 0.0)


@dataclass(frozen=True)
class Coverage:
    per_selection: dict[Selection, float]
    joint: float


def priority_chart(group: Group, table: Table) -> dict[str, dict[int, float]]:
    """Care weight per (feature, value) over all feature columns, zeros elsewhere."""
    chart = {name: {0: 0.0, 1: 0.0} for name in table.feature_names}
    for sel in group.selections:
        if sel.feature not in chart:
            raise GroupError(f"selection on unknown feature {sel.feature!r}")
        chart[sel.feature][sel.value] = group.care
    return chart


# -- group files -------------------------------------------------------------


def parse_group_text(text: str, source: str = "<group>") -> Group:
    name = owner = None
    goal = ""
    selections: list[Selection] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" in line and "=" not in line:
            key, _, value = line.partition(":")
            key, value = key.strip().lower(), value.strip()
            if key == "name":
                name = value
            elif key == "owner":
                owner = value
            elif key == "goal":
                goal = value
            else:
                raise GroupError(f"{source}:{lineno}: unknown header {key!r}")
        elif "=" in line:
            feature, _, value = line.partition("=")
            try:
                selections.append(Selection(feature.strip(), int(value.strip())))
            except ValueError:
                raise GroupError(f"{source}:{lineno}: bad selection {line!r}") from None
        else:
            raise GroupError(f"{source}:{lineno}: cannot parse {raw.strip()!r}")
    if not name:
        raise GroupError(f"{source}: missing 'name:' header")
    return create_group(name, owner or "", selections, goal)


def load_group(path: str | Path) -> Group:
    return parse_group_text(Path(path).read_text(encoding="utf-8"), source=str(path))


def write_group(group: Group, path: str | Path | None = None) -> str:
    lines = [f"name: {group.name}", f"owner: {group.owner}"]
    if group.goal:
        lines.append(f"goal: {group.goal}")
    lines += [f"{s.feature}={s.value}" for s in group.selections]
    text = "\n".join(lines) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
