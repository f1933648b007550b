"""Column-typed tables: CSV I/O, kind inference, binarization, synthetic hiring data.

A Table is immutable. Binary columns hold only 0/1, numeric columns hold
ints or floats, categorical columns hold strings. Exactly one column may
carry the label role, and a label must be binary.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

Value = Union[int, float, str]


class TableError(ValueError):
    """Invalid table, CSV file, or cut specification."""


class ColumnKind(str, Enum):
    BINARY = "binary"
    CATEGORICAL = "categorical"
    NUMERIC = "numeric"


class ColumnRole(str, Enum):
    FEATURE = "feature"
    LABEL = "label"
    SENSITIVE = "sensitive-feature"


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: ColumnKind
    role: ColumnRole = ColumnRole.FEATURE


class Table:
    """Immutable rectangular table with per-column kind and role.

    Rows are stored row-major; numeric views of individual columns are
    cached on first access. Equality compares specs, rows and cut labels.
    """

    def __init__(
        self,
        columns: Sequence[ColumnSpec],
        rows: Iterable[Sequence[Value]],
        cut_labels: Mapping[str, str] | None = None,
    ):
        self._columns = tuple(columns)
        self._rows = tuple(tuple(r) for r in rows)
        self._cut_labels = dict(cut_labels or {})
        self._index = {c.name: i for i, c in enumerate(self._columns)}
        self._numeric_cache: dict[str, np.ndarray] = {}
        self._validate()

    def _validate(self) -> None:
        if len(self._index) != len(self._columns):
            raise TableError("duplicate column names")
        width = len(self._columns)
        for i, row in enumerate(self._rows):
            if len(row) != width:
                raise TableError(f"row {i} has {len(row)} cells, expected {width}")
        labels = [c for c in self._columns if c.role is ColumnRole.LABEL]
        if len(labels) > 1:
            raise TableError("more than one label column")
        for spec in self._columns:
            if spec.kind is ColumnKind.BINARY:
                col = self.column(spec.name)
                bad = {v for v in col if v not in (0, 1)}
                if bad:
                    raise TableError(f"binary column {spec.name!r} holds {sorted(map(str, bad))[:3]}")
            if spec.role is ColumnRole.LABEL and spec.kind is not ColumnKind.BINARY:
                raise TableError(f"label column {spec.name!r} must be binary")
        for name in self._cut_labels:
            if name not in self._index:
                raise TableError(f"cut label for unknown column {name!r}")

    # -- accessors ---------------------------------------------------------

    @property
    def columns(self) -> tuple[ColumnSpec, ...]:
        return self._columns

    @property
    def rows(self) -> tuple[tuple[Value, ...], ...]:
        return self._rows

    @property
    def row_count(self) -> int:
        return len(self._rows)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self._columns)

    @property
    def cut_labels(self) -> dict[str, str]:
        return dict(self._cut_labels)

    @property
    def label_name(self) -> str | None:
        for c in self._columns:
            if c.role is ColumnRole.LABEL:
                return c.name
        return None

    @property
    def feature_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self._columns if c.role is not ColumnRole.LABEL)

    @property
    def sensitive_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self._columns if c.role is ColumnRole.SENSITIVE)

    def spec(self, name: str) -> ColumnSpec:
        try:
            return self._columns[self._index[name]]
        except KeyError:
            raise TableError(f"no column {name!r}") from None

    def column(self, name: str) -> list[Value]:
        self.spec(name)
        i = self._index[name]
        return [row[i] for row in self._rows]

    def numeric(self, name: str) -> np.ndarray:
        """Column as float64 array; raises for categorical columns."""
        cached = self._numeric_cache.get(name)
        if cached is not None:
            return cached
        spec = self.spec(name)
        if spec.kind is ColumnKind.CATEGORICAL:
            raise TableError(f"column {name!r} is categorical, no numeric view")
        arr = np.asarray(self.column(name), dtype=np.float64)
        arr.setflags(write=False)
        self._numeric_cache[name] = arr
        return arr

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Float matrix of the given columns, one column each, row-major."""
        return np.column_stack([self.numeric(n) for n in names]) if names else np.empty((self.row_count, 0))

    def replace_columns(self, values: Mapping[str, Sequence[Value]]) -> "Table":
        """New table with the given columns swapped out, specs unchanged."""
        for name in values:
            self.spec(name)
        cols = {name: list(vals) for name, vals in values.items()}
        new_rows = []
        for i, row in enumerate(self._rows):
            new_rows.append(tuple(cols[c.name][i] if c.name in cols else row[j]
                                  for j, c in enumerate(self._columns)))
        return Table(self._columns, new_rows, self._cut_labels)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Table):
            return NotImplemented
        return (self._columns == other._columns and self._rows == other._rows
                and self._cut_labels == other._cut_labels)

    def __ne__(self, other: object) -> bool:
        eq = self.__eq__(other)
        return eq if eq is NotImplemented else not eq

    def __repr__(self) -> str:
        return f"Table({len(self._columns)} cols x {len(self._rows)} rows)"


# -- CSV -------------------------------------------------------------------


def _parse_cell(text: str) -> Value:
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _infer_kind(values: Iterable[Value]) -> ColumnKind:
    distinct = set(values)
    if distinct <= {0, 1}:
        return ColumnKind.BINARY
    if all(isinstance(v, (int, float)) for v in distinct):
        return ColumnKind.NUMERIC
    return ColumnKind.CATEGORICAL


def load_csv(
    path: str | Path,
    label: str | None = None,
    sensitive: Sequence[str] = (),
) -> Table:
    """Load a CSV file, inferring column kinds from the parsed values.

    A column whose values all fall in {0, 1} is binary, all-numeric
    columns are numeric, anything else is categorical.
    """
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise TableError(f"{path}: empty file") from None
    raw_rows = [[_parse_cell(c) for c in row] for row in reader if row]
    for i, row in enumerate(raw_rows):
        if len(row) != len(header):
            raise TableError(f"{path}: row {i + 1} has {len(row)} cells, expected {len(header)}")
    if label is not None and label not in header:
        raise TableError(f"{path}: label column {label!r} not found")
    unknown = set(sensitive) - set(header)
    if unknown:
        raise TableError(f"{path}: sensitive columns not found: {sorted(unknown)}")
    specs = []
    for j, name in enumerate(header):
        kind = _infer_kind(row[j] for row in raw_rows)
        if name == label:
            role = ColumnRole.LABEL
        elif name in sensitive:
            role = ColumnRole.SENSITIVE
        else:
            role = ColumnRole.FEATURE
        specs.append(ColumnSpec(name, kind, role))
    return Table(specs, raw_rows)


def _format_cell(v: Value) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(table: Table, path: str | Path | None = None) -> str:
    """Serialize to CSV text ('\\n' newlines, minimal quoting); optionally write it."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.column_names)
    for row in table.rows:
        writer.writerow([_format_cell(v) for v in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


# -- binarization ----------------------------------------------------------


@dataclass(frozen=True)
class NumericCut:
    """Numeric rule: value > threshold maps to 1."""

    threshold: float

    def apply(self, v: Value) -> int:
        if isinstance(v, str):
            raise TableError(f"numeric cut applied to string value {v!r}")
        return int(v > self.threshold)

    def label(self) -> str:
        return f"above {self.threshold:g} ⇒ 1"


@dataclass(frozen=True)
class MembershipCut:
    """Categorical rule: value in the member set maps to 1."""

    members: frozenset

    def apply(self, v: Value) -> int:
        return int(v in self.members)

    def label(self) -> str:
        shown = ", ".join(sorted(map(str, self.members)))
        return f"in {{{shown}}} ⇒ 1"


Cut = Union[NumericCut, MembershipCut]


def parse_cuts(raw: Mapping[str, Mapping]) -> dict[str, Cut]:
    """Cut rules from config-file form: {"Age": {"threshold": 42}} or {"values": [...]}."""
    cuts: dict[str, Cut] = {}
    for name, rule in raw.items():
        if "threshold" in rule:
            cuts[name] = NumericCut(float(rule["threshold"]))
        elif "values" in rule:
            cuts[name] = MembershipCut(frozenset(rule["values"]))
        else:
            raise TableError(f"cut for {name!r} needs 'threshold' or 'values'")
    return cuts


def binarize(table: Table, cuts: Mapping[str, Cut]) -> Table:
    """Map every non-binary column to 0/1 using the given cut rules.

    Every numeric or categorical column must have a rule; binary columns
    must not. Cut labels are recorded on the result so charts can show
    what each 1 means.
    """
    for name in cuts:
        spec = table.spec(name)
        if spec.kind is ColumnKind.BINARY:
            raise TableError(f"cut given for already-binary column {name!r}")
    missing = [c.name for c in table.columns
               if c.kind is not ColumnKind.BINARY and c.name not in cuts]
    if missing:
        raise TableError(f"no cut rule for non-binary columns: {missing}")
    if not cuts:
        return table
    new_specs = [ColumnSpec(c.name, ColumnKind.BINARY, c.role) if c.name in cuts else c
                 for c in table.columns]
    idx = {c.name: i for i, c in enumerate(table.columns)}
    new_rows = []
    for row in table.rows:
        vals = list(row)
        for name, cut in cuts.items():
            vals[idx[name]] = cut.apply(row[idx[name]])
        new_rows.append(tuple(vals))
    labels = table.cut_labels
    labels.update({name: cut.label() for name, cut in cuts.items()})
    return Table(new_specs, new_rows, labels)


def encode_categoricals(table: Table, cuts: Mapping[str, Cut]) -> Table:
    """Binary-encode just the categorical columns; other kinds keep their scale.

    The causal model needs every column on a numeric scale, so membership
    rules turn categorical columns into 0/1 indicators while measurement
    columns stay raw. Labels are recorded exactly as binarize does.
    """
    wanted = {c.name: cuts[c.name] for c in table.columns
              if c.kind is ColumnKind.CATEGORICAL and c.name in cuts}
    missing = [c.name for c in table.columns
               if c.kind is ColumnKind.CATEGORICAL and c.name not in cuts]
    if missing:
        raise TableError(f"no membership rule for categorical columns: {missing}")
    if not wanted:
        return table
    new_specs = [ColumnSpec(c.name, ColumnKind.BINARY, c.role) if c.name in wanted else c
                 for c in table.columns]
    idx = {c.name: i for i, c in enumerate(table.columns)}
    new_rows = []
    for row in table.rows:
        vals = list(row)
        for name, cut in wanted.items():
            vals[idx[name]] = cut.apply(row[idx[name]])
        new_rows.append(tuple(vals))
    labels = table.cut_labels
    labels.update({name: cut.label() for name, cut in wanted.items()})
    return Table(new_specs, new_rows, labels)


# -- synthetic hiring data ---------------------------------------------------

HIRING_COLUMNS = ("Age", "Gender", "Race", "WorkExp", "GPA", "SAT", "CollegeRank", "Major", "Job")

#: Default cut rules matching the generator's bands.
HIRING_CUTS: dict[str, Cut] = {
    "Age": NumericCut(42),
    "WorkExp": NumericCut(24),
    "GPA": NumericCut(3),
    "SAT": NumericCut(1200),
    "CollegeRank": MembershipCut(frozenset({"Elite"})),
    "Major": MembershipCut(frozenset({"CS"})),
}

HIRING_POSITIVE_RATE = 0.35


def generate_hiring(seed: int, n: int = 4000) -> Table:
    """Synthetic hiring dataset, a pure function of (seed, n).

    Columns: Age, Gender, Race (sensitive), WorkExp, GPA, SAT,
    CollegeRank, Major (qualifications), Job (label). Work experience,
    GPA, and SAT rise with age through noisy linear links whose means sit
    on the default cut values, so the binarized bands stay balanced even
    after the age influence is edited away. Job marks the top 35% of a
    score mixing qualifications (70%) with gender/race/youth (30%), a
    deliberate bias for the game to remove.
    """
    if n <= 0:
        raise TableError("n must be positive")
    rng = np.random.default_rng(seed)
    age = rng.integers(21, 61, n)
    gender = rng.integers(0, 2, n)
    race = rng.integers(0, 2, n)

    workexp = np.clip(np.rint(24.0 + 1.3 * (age - 40.5) + rng.normal(0.0, 8.0, n)),
                      0, 120).astype(int)
    gpa = np.round(np.clip(3.0 + 0.03 * (age - 40.5) + rng.normal(0.0, 0.28, n),
                           2.0, 4.0), 2)
    sat = np.clip(np.rint(1200.0 + 280.0 * (gpa - 3.0) + rng.normal(0.0, 95.0, n)),
                  400, 1600).astype(int)
    elite = (sat + rng.normal(0.0, 110.0, n)) > 1285.0
    cs = rng.random(n) < 0.25

    def unit(v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float64)
        sd = v.std()
        return (v - v.mean()) / sd if sd > 0.0 else np.zeros_like(v)

    qual = unit(0.30 * unit(workexp) + 0.25 * unit(gpa) + 0.20 * unit(sat)
                + 0.15 * unit(elite) + 0.10 * unit(cs))
    bias = unit(0.4 * gender + 0.4 * race + 0.2 * (age <= 42))
    score = 0.7 * qual + 0.3 * bias + rng.normal(0.0, 0.10, n)

    k = int(round(HIRING_POSITIVE_RATE * n))
    job = np.zeros(n, dtype=int)
    job[np.argsort(-score, kind="stable")[:k]] = 1

    specs = [
        ColumnSpec("Age", ColumnKind.NUMERIC, ColumnRole.SENSITIVE),
        ColumnSpec("Gender", ColumnKind.BINARY, ColumnRole.SENSITIVE),
        ColumnSpec("Race", ColumnKind.BINARY, ColumnRole.SENSITIVE),
        ColumnSpec("WorkExp", ColumnKind.NUMERIC),
        ColumnSpec("GPA", ColumnKind.NUMERIC),
        ColumnSpec("SAT", ColumnKind.NUMERIC),
        ColumnSpec("CollegeRank", ColumnKind.CATEGORICAL),
        ColumnSpec("Major", ColumnKind.CATEGORICAL),
        ColumnSpec("Job", ColumnKind.BINARY, ColumnRole.LABEL),
    ]
    rows = zip(
        (int(v) for v in age),
        (int(v) for v in gender),
        (int(v) for v in race),
        (int(v) for v in workexp),
        (float(v) for v in gpa),
        (int(v) for v in sat),
        ("Elite" if e else "Standard" for e in elite),
        ("CS" if c else "Other" for c in cs),
        (int(v) for v in job),
    )
    return Table(specs, rows)
