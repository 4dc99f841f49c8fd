"""Shared builders for the test suite."""

from __future__ import annotations

import json
import random
import string

import pytest

from emoeval.corpus import (
    CaptionSet,
    DialogueSample,
    MediaRef,
    TimeWindow,
    TranscriptSegment,
)

WORDS = (
    "so", "what", "happened", "today", "really", "fine", "sure", "you",
    "look", "tired", "sorry", "thanks", "maybe", "later", "done", "wait",
)

ZH_CHARS = "你好吗我很累没事谢谢再见想说话安静"


def make_segment(speaker: str, start_ms: int, end_ms: int, text: str) -> TranscriptSegment:
    return TranscriptSegment(speaker=speaker, window=TimeWindow(start_ms, end_ms), text=text)


def make_sample(
    sample_id: str = "s1",
    language: str = "en",
    segments: tuple[TranscriptSegment, ...] | None = None,
    **kwargs,
) -> DialogueSample:
    if segments is None:
        segments = (
            make_segment("A", 0, 1500, "so what happened today"),
            make_segment("B", 1500, 3200, "honestly nothing much"),
        )
    defaults = dict(
        media=(MediaRef(uri=f"media/{sample_id}.mp4", kind="video", span=TimeWindow(0, 60_000)),),
        target_response="that sounds okay to me",
    )
    defaults.update(kwargs)
    return DialogueSample(id=sample_id, language=language, context=segments, **defaults)


def random_text(rng: random.Random, language: str = "en", max_words: int = 6) -> str:
    if language == "zh":
        return "".join(rng.choice(ZH_CHARS) for _ in range(rng.randint(1, max_words)))
    return " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, max_words)))


def random_segments(
    rng: random.Random, count: int, language: str = "en", speakers: str = "ABC"
) -> list[TranscriptSegment]:
    segments = []
    cursor = rng.randint(0, 2000)
    for _ in range(count):
        length = rng.randint(1, 4000)
        segments.append(
            make_segment(
                rng.choice(speakers), cursor, cursor + length, random_text(rng, language)
            )
        )
        cursor += length + rng.randint(0, 1500)
    return segments


def random_sample(rng: random.Random, sample_id: str) -> DialogueSample:
    language = rng.choice(("en", "zh"))
    segments = tuple(random_segments(rng, rng.randint(1, 6), language))
    media = tuple(
        MediaRef(
            uri=f"store/{sample_id}/{i}.{kind}",
            kind=kind,
            span=TimeWindow(0, rng.randint(1, 90_000)) if rng.random() < 0.7 else None,
        )
        for i, kind in enumerate(rng.sample(("video", "audio", "text"), rng.randint(1, 3)))
    )
    annotations = None
    if rng.random() < 0.5:
        annotations = CaptionSet(
            pitch=random_text(rng, language),
            speaking_rate=random_text(rng, language),
            volume=random_text(rng, language),
            timbre=random_text(rng, language),
            emotion=random_text(rng, language),
            intonation=random_text(rng, language),
        )
    extras = {}
    if rng.random() < 0.4:
        extras = {"source_tag": "".join(rng.choices(string.ascii_lowercase, k=6))}
    return DialogueSample(
        id=sample_id,
        language=language,
        media=media,
        context=segments,
        target_response=random_text(rng, language) if rng.random() < 0.8 else None,
        annotations=annotations,
        extras=extras,
    )


def jsonl(records) -> bytes:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records).encode("utf-8")


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xE401)
