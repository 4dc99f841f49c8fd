"""Aggregation of scorecards and external scores into result matrices.

A matrix cell is the per-(model, dataset, metric) mean; subjective
opinion-score metrics (names ending in ``-MOS``) additionally carry a 95%
confidence-interval halfwidth when at least two observations exist.
Markdown output rounds half-up to two decimals and renders intervals as
``mean ± halfwidth``; CSV and line-delimited records are lossless, and
records parse back into an equal matrix.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import IO, Iterable, Sequence

from .judge import METRICS as RUBRIC_METRICS
from .judge import ScoreCard
from .metrics import ExternalScore, confidence_interval, mean_score

FORMATS = ("markdown", "csv", "records")

# Column ordering within a dataset block; anything else goes after, alphabetical.
METRIC_ORDER = (*RUBRIC_METRICS, "WER", "CER", "UTMOS")

CSV_COLUMNS = ("model", "dataset", "metric", "mean", "ci_halfwidth", "n")


def is_mos_metric(metric: str) -> bool:
    """Subjective opinion scores get confidence intervals; automatic
    predictors (UTMOS) do not."""
    return metric.upper().endswith("-MOS")


@dataclass(frozen=True)
class MatrixCell:
    mean: float
    ci_halfwidth: float | None = None
    n: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ValueError("cell must aggregate at least one value")
        if self.ci_halfwidth is not None and self.ci_halfwidth < 0:
            raise ValueError("ci_halfwidth must be >= 0")


def _check_cell_range(metric: str, mean: float) -> None:
    if metric in RUBRIC_METRICS and not 0.0 <= mean <= 2.0:
        raise ValueError(f"{metric} mean {mean} outside [0, 2]")
    if metric in ("WER", "CER") and mean < 0.0:
        raise ValueError(f"{metric} mean {mean} is negative")
    if (metric == "UTMOS" or is_mos_metric(metric)) and not 1.0 <= mean <= 5.0:
        raise ValueError(f"{metric} mean {mean} outside [1, 5]")


class ScoreMatrix:
    """model x (dataset, metric) grid of aggregated means."""

    def __init__(self) -> None:
        self._cells: dict[tuple[str, str, str], MatrixCell] = {}

    def set_cell(self, model: str, dataset: str, metric: str, cell: MatrixCell) -> None:
        key = (model, dataset, metric)
        if key in self._cells:
            raise ValueError(f"cell {key} set twice")
        _check_cell_range(metric, cell.mean)
        self._cells[key] = cell

    def get(self, model: str, dataset: str, metric: str) -> MatrixCell | None:
        return self._cells.get((model, dataset, metric))

    @property
    def models(self) -> list[str]:
        return sorted({model for model, _, _ in self._cells})

    @property
    def columns(self) -> list[tuple[str, str]]:
        """(dataset, metric) pairs, grouped by dataset in canonical metric order."""
        pairs = {(dataset, metric) for _, dataset, metric in self._cells}

        def order(pair: tuple[str, str]) -> tuple:
            dataset, metric = pair
            try:
                rank = METRIC_ORDER.index(metric)
            except ValueError:
                rank = len(METRIC_ORDER)
            return (dataset, rank, metric)

        return sorted(pairs, key=order)

    def rows(self) -> Iterable[tuple[str, str, str, MatrixCell]]:
        for model in self.models:
            for dataset, metric in self.columns:
                cell = self.get(model, dataset, metric)
                if cell is not None:
                    yield model, dataset, metric, cell

    def merge(self, other: "ScoreMatrix") -> "ScoreMatrix":
        merged = ScoreMatrix()
        for key, cell in {**self._cells, **other._cells}.items():
            if key in self._cells and key in other._cells and self._cells[key] != other._cells[key]:
                raise ValueError(f"conflicting values for cell {key}")
            merged.set_cell(*key, cell)
        return merged

    def __eq__(self, other: object) -> bool:
        return isinstance(other, ScoreMatrix) and other._cells == self._cells

    def __len__(self) -> int:
        return len(self._cells)


def aggregate(
    cards: Sequence[ScoreCard],
    external: Sequence[ExternalScore] = (),
    *,
    model: str,
    dataset: str,
) -> ScoreMatrix:
    """Fold one run's scorecards and external scores into a matrix.

    Metrics never emitted by the run (e.g. dimensions the evaluated
    configuration cannot produce) simply have no cell and render as "-".
    """
    matrix = ScoreMatrix()
    by_metric: dict[str, list[float]] = {}
    for card in cards:
        for metric, score in card.scores.items():
            by_metric.setdefault(metric, []).append(float(score))
    for metric in sorted(by_metric):
        values = by_metric[metric]
        matrix.set_cell(
            model, dataset, metric, MatrixCell(mean=mean_score(values), n=len(values))
        )

    ext_by_metric: dict[str, list[float]] = {}
    for score in external:
        ext_by_metric.setdefault(score.metric_name, []).append(score.value)
    for metric in sorted(ext_by_metric):
        values = ext_by_metric[metric]
        halfwidth = None
        if is_mos_metric(metric) and len(values) >= 2:
            halfwidth = confidence_interval(values).halfwidth
        matrix.set_cell(
            model,
            dataset,
            metric,
            MatrixCell(mean=mean_score(values), ci_halfwidth=halfwidth, n=len(values)),
        )
    return matrix


def round2(value: float) -> str:
    """Two decimals, rounding half-up (0.005 -> 0.01)."""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def _render_cell(cell: MatrixCell | None) -> str:
    if cell is None:
        return "-"
    if cell.ci_halfwidth is not None:
        return f"{round2(cell.mean)} ± {round2(cell.ci_halfwidth)}"
    return round2(cell.mean)


def emit(matrix: ScoreMatrix, fmt: str = "markdown") -> bytes:
    """Serialize the matrix; markdown for reading, csv/records lossless."""
    if fmt == "markdown":
        columns = matrix.columns
        header = ["Model"] + [f"{dataset} {metric}" for dataset, metric in columns]
        lines = [
            "| " + " | ".join(header) + " |",
            "| " + " | ".join("---" for _ in header) + " |",
        ]
        for model in matrix.models:
            cells = [_render_cell(matrix.get(model, d, m)) for d, m in columns]
            lines.append("| " + " | ".join([model] + cells) + " |")
        return ("\n".join(lines) + "\n").encode("utf-8")

    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for model, dataset, metric, cell in matrix.rows():
            writer.writerow(
                [
                    model,
                    dataset,
                    metric,
                    repr(cell.mean),
                    "" if cell.ci_halfwidth is None else repr(cell.ci_halfwidth),
                    cell.n,
                ]
            )
        return buffer.getvalue().encode("utf-8")

    if fmt == "records":
        lines = []
        for model, dataset, metric, cell in matrix.rows():
            lines.append(
                json.dumps(
                    {
                        "model": model,
                        "dataset": dataset,
                        "metric": metric,
                        "mean": cell.mean,
                        "ci_halfwidth": cell.ci_halfwidth,
                        "n": cell.n,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
        return "".join(lines).encode("utf-8")

    raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")


def load_matrix_records(data: bytes | str | IO[bytes]) -> ScoreMatrix:
    """Parse emit(..., "records") output back into an equal matrix."""
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    matrix = ScoreMatrix()
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        matrix.set_cell(
            obj["model"],
            obj["dataset"],
            obj["metric"],
            MatrixCell(mean=obj["mean"], ci_halfwidth=obj["ci_halfwidth"], n=obj["n"]),
        )
    return matrix
