"""Transcription error rates, score aggregation, and interval estimates.

Error rates come from a minimal-cost Levenshtein alignment over tokens:
words for English, characters for Chinese.  Among alignments of equal
total cost the decomposition with the fewest insertions is reported
(equivalently the most substitutions; unique because deletions minus
insertions is fixed by the two lengths), so counts are deterministic.

Subjective scores ingested from external files (automatic quality
predictors, human opinion scores) are plain ``{sample_id, metric_name,
value}`` records, one JSON object per line.
"""

from __future__ import annotations

import json
import statistics
import unicodedata
from dataclasses import dataclass
from math import fsum, sqrt
from typing import IO, Iterable, Sequence

Z_95 = statistics.NormalDist().inv_cdf(0.975)  # 1.959964 to 6 decimals


class EmptyReference(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class InsufficientData(ValueError):
    pass


@dataclass(frozen=True)
class EditCounts:
    """Operation counts of a minimal alignment of hyp against ref."""

    substitutions: int
    deletions: int
    insertions: int
    ref_len: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            raise EmptyReference("error rate undefined for an empty reference")
        return self.total / self.ref_len


# Apostrophes vanish instead of splitting so contractions stay one token.
_WORD_JOINERS = frozenset("'’ʼ")


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(
    text: str,
    language: str,
    *,
    lowercase: bool = True,
    joiners: frozenset[str] = _WORD_JOINERS,
) -> list[str]:
    """Normalize and split text into comparison units.

    English: lowercased, punctuation treated as separators, whitespace
    split.  Chinese: punctuation and whitespace removed, split into
    individual characters.
    """
    if lowercase:
        text = text.lower()
    if language == "zh":
        return [ch for ch in text if not ch.isspace() and not _is_punct(ch)]
    chars = []
    for ch in text:
        if ch in joiners:
            continue
        chars.append(" " if _is_punct(ch) else ch)
    return "".join(chars).split()


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> EditCounts:
    """Minimal-cost alignment counts (unit costs, fewest-insertions rule)."""
    n, m = len(ref), len(hyp)

    def better(a: tuple[int, int, int], b: tuple[int, int, int]) -> tuple[int, int, int]:
        return a if (sum(a), a[2]) <= (sum(b), b[2]) else b

    prev = [(0, 0, j) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur: list[tuple[int, int, int]] = [(0, i, 0)]
        for j in range(1, m + 1):
            diag = prev[j - 1]
            if ref[i - 1] != hyp[j - 1]:
                diag = (diag[0] + 1, diag[1], diag[2])
            best = better(diag, (prev[j][0], prev[j][1] + 1, prev[j][2]))
            best = better(best, (cur[j - 1][0], cur[j - 1][1], cur[j - 1][2] + 1))
            cur.append(best)
        prev = cur
    s, d, i = prev[m]
    return EditCounts(substitutions=s, deletions=d, insertions=i, ref_len=n)


def error_rate(ref: str, hyp: str, language: str) -> float:
    """Word (en) or character (zh) error rate: (S + D + I) / |ref|."""
    ref_tokens = tokenize(ref, language)
    if not ref_tokens:
        raise EmptyReference("reference has no tokens after normalization")
    return edit_distance(ref_tokens, tokenize(hyp, language)).rate


def mean_score(values: Sequence[float]) -> float:
    if not values:
        raise EmptyInput("cannot average an empty list")
    return fsum(values) / len(values)


@dataclass(frozen=True)
class IntervalEstimate:
    mean: float
    halfwidth: float
    n: int
    level: float


def confidence_interval(
    values: Sequence[float], level: float = 0.95, *, use_t: bool = False
) -> IntervalEstimate:
    """Two-sided confidence interval for the mean.

    Normal approximation by default (halfwidth z * s / sqrt(n), with s the
    sample standard deviation); ``use_t`` switches to the Student-t
    critical value for small samples.  Constant inputs give a halfwidth of
    exactly zero (the variance is computed in exact arithmetic).
    """
    n = len(values)
    if n < 2:
        raise InsufficientData("need at least two observations")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    mean = fsum(values) / n
    s = sqrt(statistics.variance(values))
    quantile = (1.0 + level) / 2.0
    if use_t:
        from scipy import stats as _scipy_stats

        critical = float(_scipy_stats.t.ppf(quantile, n - 1))
    else:
        critical = statistics.NormalDist().inv_cdf(quantile)
    return IntervalEstimate(mean=mean, halfwidth=critical * s / sqrt(n), n=n, level=level)


@dataclass(frozen=True)
class ExternalScore:
    """One externally computed score (quality predictor, human rating)."""

    sample_id: str
    metric_name: str
    value: float


def load_external_scores(data: bytes | str | IO[bytes]) -> list[ExternalScore]:
    """Parse a line-delimited external-score file."""
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    scores = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        try:
            scores.append(
                ExternalScore(
                    sample_id=str(obj["sample_id"]),
                    metric_name=str(obj["metric_name"]),
                    value=float(obj["value"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"external score line {line_no}: {exc}") from exc
    return scores


def write_external_scores(scores: Iterable[ExternalScore]) -> bytes:
    lines = [
        json.dumps(
            {"sample_id": s.sample_id, "metric_name": s.metric_name, "value": s.value},
            ensure_ascii=False,
        )
        + "\n"
        for s in scores
    ]
    return "".join(lines).encode("utf-8")
