"""Timeline processing for raw recordings.

Three pure steps, applied per media file before any model sees the data:
fixed-length chunking of a recording, merging of consecutive transcript
segments spoken by the same speaker, and derivation of padded clip
windows from the merged turns.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .corpus import TimeWindow, TranscriptSegment

DEFAULT_CHUNK_LEN_MS = 20 * 60 * 1000


class InvalidDuration(ValueError):
    pass


class UnorderedInput(ValueError):
    pass


class MergePolicy:
    """Controls when two adjacent same-speaker segments merge.

    ``max_gap_ms=None`` means unbounded: consecutive segments from one
    speaker always merge as long as no other speaker intervenes.  A
    bounded gap prevents joins across long silences (e.g. scene cuts).
    """

    __slots__ = ("max_gap_ms",)

    def __init__(self, max_gap_ms: int | None = None):
        if max_gap_ms is not None and max_gap_ms < 0:
            raise ValueError("max_gap_ms must be >= 0 when bounded")
        self.max_gap_ms = max_gap_ms

    def allows(self, gap_ms: int) -> bool:
        return self.max_gap_ms is None or gap_ms <= self.max_gap_ms

    def __eq__(self, other: object) -> bool:
        return isinstance(other, MergePolicy) and other.max_gap_ms == self.max_gap_ms

    def __repr__(self) -> str:
        return f"MergePolicy(max_gap_ms={self.max_gap_ms!r})"


def chunk_media(duration_ms: int, chunk_len_ms: int = DEFAULT_CHUNK_LEN_MS) -> list[TimeWindow]:
    """Partition [0, duration_ms) into fixed-length windows.

    Every window except possibly the last has exactly ``chunk_len_ms``
    milliseconds; the last covers the remainder.
    """
    if duration_ms <= 0:
        raise InvalidDuration(f"duration_ms must be positive, got {duration_ms}")
    if chunk_len_ms <= 0:
        raise InvalidDuration(f"chunk_len_ms must be positive, got {chunk_len_ms}")
    windows = []
    start = 0
    while start < duration_ms:
        end = min(start + chunk_len_ms, duration_ms)
        windows.append(TimeWindow(start, end))
        start = end
    return windows


def merge_turns(
    segments: Sequence[TranscriptSegment],
    policy: MergePolicy | None = None,
    language: str = "en",
) -> list[TranscriptSegment]:
    """Merge consecutive segments from the same speaker into single turns.

    The merged window spans from the first to the last input window of the
    run, and the merged text joins the input texts in order: separated by
    spaces for ``en``, concatenated directly for ``zh``.

    Raises:
        UnorderedInput: segments are not ordered by start_ms.
    """
    policy = policy or MergePolicy()
    joiner = "" if language == "zh" else " "
    starts = [seg.window.start_ms for seg in segments]
    if any(b < a for a, b in zip(starts, starts[1:])):
        raise UnorderedInput("segments must be ordered by start_ms")

    merged: list[TranscriptSegment] = []
    for seg in segments:
        if merged:
            prev = merged[-1]
            gap = seg.window.start_ms - prev.window.end_ms
            if seg.speaker == prev.speaker and policy.allows(gap):
                merged[-1] = TranscriptSegment(
                    speaker=prev.speaker,
                    window=TimeWindow(
                        prev.window.start_ms,
                        max(prev.window.end_ms, seg.window.end_ms),
                    ),
                    text=prev.text + joiner + seg.text,
                )
                continue
        merged.append(seg)
    return merged


def derive_clip_windows(
    merged: Iterable[TranscriptSegment], pad_ms: int = 0
) -> list[TimeWindow]:
    """One clip window per turn: the turn window padded on both sides.

    Windows are clamped at zero; ``pad_ms`` gives downstream cutting tools
    context slack around the exact speech span.
    """
    if pad_ms < 0:
        raise ValueError("pad_ms must be >= 0")
    return [
        TimeWindow(max(0, seg.window.start_ms - pad_ms), seg.window.end_ms + pad_ms)
        for seg in merged
    ]
