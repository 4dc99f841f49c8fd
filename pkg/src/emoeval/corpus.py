"""Corpus data model and line-delimited manifest I/O.

A manifest is UTF-8 text with one JSON record per line, one record per
dialogue sample.  Top-level field names are fixed (``id``, ``language``,
``media``, ``context``, ``target_response``, ``annotations``); unknown
top-level fields are carried through load/write untouched so foreign
tooling can annotate manifests without breaking round-trips.

All types are immutable value objects.  Constructors reject structural
nonsense (bad enums, inverted windows); content-level rule violations
(empty spans, out-of-order context, blank transcript text) are *data*,
reported by :func:`validate_sample` rather than raised.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import IO, Any, Iterable, Iterator

LANGUAGES = ("en", "zh")
MEDIA_KINDS = ("video", "audio", "text")

# validate_sample violation codes
EMPTY_SPAN = "EMPTY_SPAN"
OUT_OF_ORDER_CONTEXT = "OUT_OF_ORDER_CONTEXT"
EMPTY_TEXT = "EMPTY_TEXT"

CAPTION_FIELDS = ("pitch", "speaking_rate", "volume", "timbre", "emotion", "intonation")
MANIFEST_FIELDS = ("id", "language", "media", "context", "target_response", "annotations")


class MalformedRecord(ValueError):
    """A manifest line failed to parse or violated a structural invariant."""

    def __init__(self, line_no: int, cause: str):
        self.line_no = line_no
        self.cause = cause
        super().__init__(f"manifest line {line_no}: {cause}")


class DuplicateId(ValueError):
    def __init__(self, sample_id: str):
        self.sample_id = sample_id
        super().__init__(f"duplicate sample id {sample_id!r}")


@dataclass(frozen=True)
class TimeWindow:
    """Half-open interval [start_ms, end_ms) in integer milliseconds."""

    start_ms: int
    end_ms: int

    def __post_init__(self) -> None:
        for name, value in (("start_ms", self.start_ms), ("end_ms", self.end_ms)):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValueError(f"{name} must be an integer millisecond count")
        if self.start_ms < 0:
            raise ValueError("start_ms must be >= 0")
        if self.end_ms < self.start_ms:
            raise ValueError(
                f"window end ({self.end_ms}) precedes start ({self.start_ms})"
            )

    @property
    def length_ms(self) -> int:
        return self.end_ms - self.start_ms

    def contains(self, other: "TimeWindow") -> bool:
        return self.start_ms <= other.start_ms and other.end_ms <= self.end_ms

    def to_record(self) -> dict[str, int]:
        return {"start_ms": self.start_ms, "end_ms": self.end_ms}

    @classmethod
    def from_record(cls, obj: Any) -> "TimeWindow":
        if not isinstance(obj, dict):
            raise ValueError("window must be an object with start_ms/end_ms")
        return cls(start_ms=obj.get("start_ms"), end_ms=obj.get("end_ms"))


@dataclass(frozen=True)
class MediaRef:
    """Opaque locator for a media stream, optionally narrowed to a window.

    Nothing here is ever decoded; every consumer treats ``uri`` as an
    identifier and ``span`` as clipping metadata.
    """

    uri: str
    kind: str
    span: TimeWindow | None = None

    def __post_init__(self) -> None:
        if not isinstance(self.uri, str) or not self.uri:
            raise ValueError("media uri must be a non-empty string")
        if self.kind not in MEDIA_KINDS:
            raise ValueError(f"media kind must be one of {MEDIA_KINDS}, got {self.kind!r}")

    def to_record(self) -> dict[str, Any]:
        return {
            "uri": self.uri,
            "kind": self.kind,
            "span": self.span.to_record() if self.span is not None else None,
        }

    @classmethod
    def from_record(cls, obj: Any) -> "MediaRef":
        if not isinstance(obj, dict):
            raise ValueError("media entry must be an object")
        span = obj.get("span")
        return cls(
            uri=obj.get("uri"),
            kind=obj.get("kind"),
            span=TimeWindow.from_record(span) if span is not None else None,
        )


@dataclass(frozen=True)
class TranscriptSegment:
    """One diarized transcript span: who spoke, when, and what."""

    speaker: str
    window: TimeWindow
    text: str

    def __post_init__(self) -> None:
        if not isinstance(self.speaker, str) or not self.speaker:
            raise ValueError("speaker label must be a non-empty string")
        if not isinstance(self.window, TimeWindow):
            raise ValueError("window must be a TimeWindow")
        if not isinstance(self.text, str):
            raise ValueError("text must be a string")

    def to_record(self) -> dict[str, Any]:
        return {"speaker": self.speaker, "window": self.window.to_record(), "text": self.text}

    @classmethod
    def from_record(cls, obj: Any) -> "TranscriptSegment":
        if not isinstance(obj, dict):
            raise ValueError("context entry must be an object")
        return cls(
            speaker=obj.get("speaker"),
            window=TimeWindow.from_record(obj.get("window")),
            text=obj.get("text"),
        )


@dataclass(frozen=True)
class CaptionSet:
    """Six free-text acoustic captions describing the final speaker turn."""

    pitch: str = ""
    speaking_rate: str = ""
    volume: str = ""
    timbre: str = ""
    emotion: str = ""
    intonation: str = ""

    def __post_init__(self) -> None:
        for name in CAPTION_FIELDS:
            if not isinstance(getattr(self, name), str):
                raise ValueError(f"caption {name} must be a string")

    def to_record(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in CAPTION_FIELDS}

    @classmethod
    def from_record(cls, obj: Any) -> "CaptionSet":
        if not isinstance(obj, dict):
            raise ValueError("annotations must be an object")
        unknown = set(obj) - set(CAPTION_FIELDS)
        if unknown:
            raise ValueError(f"unknown caption fields: {sorted(unknown)}")
        missing = set(CAPTION_FIELDS) - set(obj)
        if missing:
            raise ValueError(f"missing caption fields: {sorted(missing)}")
        return cls(**obj)


@dataclass(frozen=True)
class DialogueSample:
    """One evaluation/training unit: media, context turns, optional target.

    ``extras`` holds unknown top-level manifest fields verbatim; they are
    re-emitted on write so round-trips preserve them.
    """

    id: str
    language: str
    media: tuple[MediaRef, ...] = ()
    context: tuple[TranscriptSegment, ...] = ()
    target_response: str | None = None
    annotations: CaptionSet | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not isinstance(self.id, str) or not self.id:
            raise ValueError("sample id must be a non-empty string")
        if self.language not in LANGUAGES:
            raise ValueError(f"language must be one of {LANGUAGES}, got {self.language!r}")
        object.__setattr__(self, "media", tuple(self.media))
        object.__setattr__(self, "context", tuple(self.context))
        if self.target_response is not None and not isinstance(self.target_response, str):
            raise ValueError("target_response must be a string or null")

    def to_record(self) -> dict[str, Any]:
        record: dict[str, Any] = {
            "id": self.id,
            "language": self.language,
            "media": [m.to_record() for m in self.media],
            "context": [s.to_record() for s in self.context],
            "target_response": self.target_response,
            "annotations": self.annotations.to_record() if self.annotations else None,
        }
        for key, value in self.extras.items():
            if key not in MANIFEST_FIELDS:
                record[key] = value
        return record

    @classmethod
    def from_record(cls, obj: Any) -> "DialogueSample":
        if not isinstance(obj, dict):
            raise ValueError("record must be a JSON object")
        annotations = obj.get("annotations")
        extras = {k: v for k, v in obj.items() if k not in MANIFEST_FIELDS}
        return cls(
            id=obj.get("id"),
            language=obj.get("language"),
            media=tuple(MediaRef.from_record(m) for m in obj.get("media") or ()),
            context=tuple(TranscriptSegment.from_record(s) for s in obj.get("context") or ()),
            target_response=obj.get("target_response"),
            annotations=CaptionSet.from_record(annotations) if annotations is not None else None,
            extras=extras,
        )

    def with_extras(self, **extras: Any) -> "DialogueSample":
        merged = dict(self.extras)
        merged.update(extras)
        return replace(self, extras=merged)


def _iter_lines(data: bytes | str | IO[bytes]) -> Iterator[tuple[int, str]]:
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    for line_no, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield line_no, line


def load_manifest(data: bytes | str | IO[bytes]) -> list[DialogueSample]:
    """Parse a line-delimited manifest, preserving record order.

    Raises:
        MalformedRecord: a line is not valid JSON or violates a structural
            invariant (unknown enum value, inverted window, ...).
        DuplicateId: the same sample id appears on two lines.
    """
    samples: list[DialogueSample] = []
    seen: set[str] = set()
    for line_no, line in _iter_lines(data):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedRecord(line_no, f"invalid JSON: {exc.msg}") from exc
        try:
            sample = DialogueSample.from_record(obj)
        except ValueError as exc:
            raise MalformedRecord(line_no, str(exc)) from exc
        if sample.id in seen:
            raise DuplicateId(sample.id)
        seen.add(sample.id)
        samples.append(sample)
    return samples


def write_manifest(samples: Iterable[DialogueSample]) -> bytes:
    """Serialize samples to manifest bytes; inverse of :func:`load_manifest`."""
    lines = [sample_line(s) for s in samples]
    return "".join(lines).encode("utf-8")


def sample_line(sample: DialogueSample) -> str:
    """One manifest line (with trailing newline) for a single sample."""
    return json.dumps(sample.to_record(), ensure_ascii=False) + "\n"


def validate_sample(sample: DialogueSample) -> list[str]:
    """Return violation codes for content-level rules; empty means clean."""
    report: list[str] = []
    for media in sample.media:
        if media.span is not None and media.span.length_ms == 0:
            report.append(EMPTY_SPAN)
    starts = [seg.window.start_ms for seg in sample.context]
    if any(b < a for a, b in zip(starts, starts[1:])):
        report.append(OUT_OF_ORDER_CONTEXT)
    for seg in sample.context:
        if not seg.text.strip():
            report.append(EMPTY_TEXT)
    return report


def format_dialogue(segments: Iterable[TranscriptSegment]) -> str:
    """Render context turns as ``speaker: text`` lines for prompt payloads."""
    return "\n".join(f"{seg.speaker}: {seg.text}" for seg in segments)


def format_captions(captions: CaptionSet) -> str:
    """Render the six acoustic captions as ``name: text`` lines."""
    return "\n".join(f"{name}: {getattr(captions, name)}" for name in CAPTION_FIELDS)
