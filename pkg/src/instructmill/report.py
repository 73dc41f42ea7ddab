"""Result tables, per-language averages, deltas, and the paired
signed-rank comparison between score columns.

Tables are plain CSV with optional '#' comment lines. Score columns are
detected by content (every non-empty cell numeric), so the same reader
handles both the main comparison table and ablation tables whose score
columns happen to reuse metadata-like names.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Optional, Sequence

from .errors import (
    AllZeroDifferences,
    ConfigError,
    DataError,
    EmptyInput,
    IoError,
    LengthMismatch,
    ParseError,
    UnknownColumnName,
)

_META_COLUMNS = ("dataset", "language", "task", "metric")

MISSING = ("", "--", "n/a", "na")


@dataclass(frozen=True)
class ResultRow:
    dataset: str
    language: str
    task: str
    metric: str
    scores: Mapping[str, Optional[float]]

    def get(self, column: str) -> Optional[float]:
        return self.scores.get(column)


@dataclass(frozen=True)
class ResultTable:
    columns: tuple[str, ...]
    rows: tuple[ResultRow, ...]

    def __post_init__(self):
        seen = set()
        for row in self.rows:
            key = (row.language, row.dataset)
            if key in seen:
                raise DataError(f"duplicate row: {row.language}/{row.dataset}")
            seen.add(key)

    def column_values(self, column: str) -> list[Optional[float]]:
        if column not in self.columns:
            raise UnknownColumnName(column)
        return [row.get(column) for row in self.rows]

    def languages(self) -> list[str]:
        out: list[str] = []
        for row in self.rows:
            if row.language not in out:
                out.append(row.language)
        return out


def _parse_score(cell: str) -> Optional[float]:
    cell = cell.strip()
    if cell.lower() in MISSING:
        return None
    return float(cell)


def _is_scoreish(cells: list[str]) -> bool:
    any_value = False
    for cell in cells:
        cell = cell.strip()
        if cell.lower() in MISSING:
            continue
        try:
            float(cell)
        except ValueError:
            return False
        any_value = True
    return any_value


def from_csv(path: Path) -> ResultTable:
    """Load a result table, deciding per column whether it holds scores.

    A column whose every non-empty cell parses as a number is a score
    column; dataset/language/task/metric are metadata when non-numeric.
    """
    path = Path(path)
    lines = [
        line
        for line in path.read_text(encoding="utf-8").splitlines()
        if line.strip() and not line.lstrip().startswith("#")
    ]
    if not lines:
        raise ParseError(f"{path}: no content rows")
    reader = csv.DictReader(io.StringIO("\n".join(lines)))
    header = reader.fieldnames or []
    if "dataset" not in header or "language" not in header:
        raise ParseError(f"{path}: header must include dataset and language")
    raw_rows = list(reader)
    if not raw_rows:
        raise ParseError(f"{path}: no data rows")
    score_columns: list[str] = []
    for name in header:
        if name in ("dataset", "language"):
            continue
        cells = [row.get(name) or "" for row in raw_rows]
        if _is_scoreish(cells):
            score_columns.append(name)
        elif name not in _META_COLUMNS:
            raise ParseError(f"{path}: column {name!r} is neither metadata nor numeric")
    rows = []
    for lineno, raw in enumerate(raw_rows, start=2):
        scores: dict[str, Optional[float]] = {}
        for name in score_columns:
            try:
                scores[name] = _parse_score(raw.get(name) or "")
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}, column {name}: {exc}") from exc
        rows.append(
            ResultRow(
                dataset=(raw.get("dataset") or "").strip(),
                language=(raw.get("language") or "").strip(),
                task=(raw.get("task") or "").strip() if "task" not in score_columns else "",
                metric=(raw.get("metric") or "").strip() if "metric" not in score_columns else "",
                scores=scores,
            )
        )
    return ResultTable(columns=tuple(score_columns), rows=tuple(rows))


def to_csv(table: ResultTable, path: Optional[Path] = None) -> str:
    """Serialize losslessly; numbers keep full repr precision."""
    buffer = io.StringIO()
    meta = ["dataset", "language"]
    if any(row.task for row in table.rows):
        meta.append("task")
    if any(row.metric for row in table.rows):
        meta.append("metric")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(meta + list(table.columns))
    for row in table.rows:
        cells = [getattr(row, name) for name in meta]
        for column in table.columns:
            value = row.get(column)
            cells.append("" if value is None else repr(value))
        writer.writerow(cells)
    text = buffer.getvalue()
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    return text


def compute_delta(
    table: ResultTable, col_a: str, col_b: str, name: str = "delta"
) -> ResultTable:
    """Append (or overwrite) a per-row difference column col_a - col_b."""
    for column in (col_a, col_b):
        if column not in table.columns:
            raise UnknownColumnName(column)
    rows = []
    for row in table.rows:
        a = row.get(col_a)
        b = row.get(col_b)
        delta = None if a is None or b is None else a - b
        scores = dict(row.scores)
        scores[name] = delta
        rows.append(replace(row, scores=scores))
    columns = table.columns if name in table.columns else table.columns + (name,)
    return ResultTable(columns=columns, rows=tuple(rows))


@dataclass(frozen=True)
class ColumnAverage:
    mean: Optional[float]
    count: int


def aggregate_averages(
    table: ResultTable,
    group_by: str = "language",
    columns: Optional[Sequence[str]] = None,
    policy: str = "complete",
) -> dict[str, dict[str, ColumnAverage]]:
    """Mean per score column within each group.

    policy "complete" averages only rows carrying every requested
    column, so all columns share one row set per group; "per_column"
    skips missing values independently per column. Complete-case is the
    default because mixed row sets make columns of one Average row
    incomparable with each other.
    """
    if not table.rows:
        raise EmptyInput("empty result table")
    if group_by not in ("language", "task", "metric"):
        raise ConfigError(f"cannot group by {group_by!r}")
    if policy not in ("complete", "per_column"):
        raise ConfigError(f"unknown averaging policy {policy!r}")
    wanted = tuple(columns) if columns is not None else table.columns
    for column in wanted:
        if column not in table.columns:
            raise UnknownColumnName(column)
    groups: dict[str, list[ResultRow]] = {}
    for row in table.rows:
        groups.setdefault(getattr(row, group_by), []).append(row)
    out: dict[str, dict[str, ColumnAverage]] = {}
    for group, rows in groups.items():
        if policy == "complete":
            rows = [r for r in rows if all(r.get(c) is not None for c in wanted)]
            averages = {}
            for column in wanted:
                values = [r.get(column) for r in rows]
                mean = sum(values) / len(values) if values else None
                averages[column] = ColumnAverage(mean=mean, count=len(values))
        else:
            averages = {}
            for column in wanted:
                values = [
                    r.get(column) for r in rows if r.get(column) is not None
                ]
                mean = sum(values) / len(values) if values else None
                averages[column] = ColumnAverage(mean=mean, count=len(values))
        out[group] = averages
    return out


def relative_improvement(
    table: ResultTable, col_a: str, col_b: str
) -> dict[str, float | int | None]:
    """Relative gain of col_a over col_b, under both common readings.

    "mean_of_ratios" averages per-row (a-b)/b; "ratio_of_means" compares
    the complete-case column means. The two can differ substantially, so
    both are always reported together.
    """
    for column in (col_a, col_b):
        if column not in table.columns:
            raise UnknownColumnName(column)
    pairs = [
        (row.get(col_a), row.get(col_b))
        for row in table.rows
        if row.get(col_a) is not None and row.get(col_b) is not None
    ]
    ratios = [(a - b) / b for a, b in pairs if b != 0]
    mean_of_ratios = sum(ratios) / len(ratios) if ratios else None
    if pairs:
        mean_a = sum(a for a, _ in pairs) / len(pairs)
        mean_b = sum(b for _, b in pairs) / len(pairs)
        ratio_of_means = (mean_a - mean_b) / mean_b if mean_b != 0 else None
    else:
        ratio_of_means = None
    return {
        "mean_of_ratios": mean_of_ratios,
        "ratio_of_means": ratio_of_means,
        "n": len(pairs),
    }


@dataclass(frozen=True)
class WilcoxonResult:
    n_effective: int
    statistic: float
    p_value: float
    method: str

    def to_dict(self) -> dict:
        return {
            "n_effective": self.n_effective,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "method": self.method,
        }


def _signed_ranks(diffs: Sequence[float]) -> tuple[list[float], list[int]]:
    """Average ranks of |d| (ties shared) and tie-group sizes."""
    indexed = sorted(range(len(diffs)), key=lambda i: abs(diffs[i]))
    ranks = [0.0] * len(diffs)
    tie_sizes: list[int] = []
    position = 0
    while position < len(indexed):
        stop = position
        value = abs(diffs[indexed[position]])
        while stop < len(indexed) and abs(diffs[indexed[stop]]) == value:
            stop += 1
        average = (position + 1 + stop) / 2
        for i in indexed[position:stop]:
            ranks[i] = average
        tie_sizes.append(stop - position)
        position = stop
    return ranks, tie_sizes


def _exact_p(ranks: Sequence[float], w_min: float) -> float:
    # Subset-sum DP over doubled ranks keeps everything integral even
    # with .5 average ranks.
    doubled = [round(2 * r) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for value in doubled:
        for s in range(total, value - 1, -1):
            counts[s] += counts[s - value]
    target = round(2 * w_min)
    at_most = sum(counts[: min(target, total) + 1])
    p = 2 * at_most / (2 ** len(ranks))
    return min(1.0, p)


def _approx_p(
    n: int, w: float, tie_sizes: Sequence[int]
) -> float:
    mean = n * (n + 1) / 4
    variance = n * (n + 1) * (2 * n + 1) / 24
    variance -= sum(t**3 - t for t in tie_sizes) / 48
    if variance <= 0:
        raise DataError("all differences tied; variance is zero")
    z = (w - mean + 0.5) / math.sqrt(variance)
    p = math.erfc(-z / math.sqrt(2))
    return min(1.0, max(0.0, p))


def wilcoxon_signed_rank(
    a: Sequence[float],
    b: Sequence[float],
    method: str = "auto",
    exact_cutoff: int = 25,
) -> WilcoxonResult:
    """Two-sided paired signed-rank test of a against b.

    Zero differences are dropped. Small samples get the exact null
    distribution by enumeration; larger ones a normal approximation
    with tie-corrected variance and continuity correction.
    """
    if len(a) != len(b):
        raise LengthMismatch(f"{len(a)} vs {len(b)} scores")
    if len(a) < 3:
        raise EmptyInput("need at least 3 pairs")
    if method not in ("auto", "exact", "normal_approx"):
        raise ConfigError(f"unknown method {method!r}")
    diffs = [x - y for x, y in zip(a, b) if x != y]
    if not diffs:
        raise AllZeroDifferences("every pair is identical")
    n = len(diffs)
    ranks, tie_sizes = _signed_ranks(diffs)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    w = min(w_plus, w_minus)
    if method == "auto":
        method = "exact" if n <= exact_cutoff else "normal_approx"
    if method == "exact":
        p = _exact_p(ranks, w)
    else:
        p = _approx_p(n, w, tie_sizes)
    return WilcoxonResult(n_effective=n, statistic=w, p_value=p, method=method)


def _fmt(value: Optional[float]) -> str:
    return "--" if value is None else f"{value:.3f}"


def render_report(
    table: ResultTable,
    averages: Optional[dict[str, dict[str, ColumnAverage]]] = None,
    stats: Optional[Mapping[str, WilcoxonResult]] = None,
    improvements: Optional[Mapping[str, Mapping]] = None,
    fmt: str = "markdown",
    path: Optional[Path] = None,
) -> str:
    """Render the table (plus optional averages and test results).

    Markdown mirrors the comparison-table layout with scores at three
    decimals and "--" for missing cells; csv is the lossless form and
    carries the table only.
    """
    if fmt == "csv":
        return to_csv(table, path)
    if fmt != "markdown":
        raise ConfigError(f"unknown report format {fmt!r}")
    lines: list[str] = []
    header = ["dataset", "language", "task", "metric", *table.columns]
    lines.append("| " + " | ".join(header) + " |")
    lines.append("|" + "|".join([" --- "] * len(header)) + "|")
    for row in table.rows:
        cells = [row.dataset, row.language, row.task, row.metric]
        cells += [_fmt(row.get(c)) for c in table.columns]
        lines.append("| " + " | ".join(cells) + " |")
    if averages:
        lines.append("")
        lines.append("## Averages")
        lines.append("")
        avg_header = ["group", "n", *table.columns]
        lines.append("| " + " | ".join(avg_header) + " |")
        lines.append("|" + "|".join([" --- "] * len(avg_header)) + "|")
        for group in sorted(averages):
            cols = averages[group]
            counts = {c.count for c in cols.values()}
            n_text = str(counts.pop()) if len(counts) == 1 else "varies"
            cells = [group, n_text]
            for column in table.columns:
                entry = cols.get(column)
                cells.append(_fmt(entry.mean) if entry else "--")
            lines.append("| " + " | ".join(cells) + " |")
    if improvements:
        lines.append("")
        lines.append("## Relative improvement")
        lines.append("")
        for name in sorted(improvements):
            values = improvements[name]
            mor = values.get("mean_of_ratios")
            rom = values.get("ratio_of_means")
            mor_text = "--" if mor is None else f"{100 * mor:.1f}%"
            rom_text = "--" if rom is None else f"{100 * rom:.1f}%"
            lines.append(
                f"- {name}: mean of per-dataset ratios {mor_text}; "
                f"ratio of means {rom_text} (n={values.get('n')})"
            )
    if stats:
        lines.append("")
        lines.append("## Paired comparisons")
        lines.append("")
        for name in sorted(stats):
            result = stats[name]
            lines.append(
                f"- {name}: W={result.statistic:g}, "
                f"n={result.n_effective}, p={result.p_value:.5f} "
                f"({result.method})"
            )
    text = "\n".join(lines) + "\n"
    if path is not None:
        try:
            Path(path).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    return text
