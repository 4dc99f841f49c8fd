import itertools
import random

import pytest

from emoeval.corpus import TimeWindow, TranscriptSegment
from emoeval.segmenter import (
    InvalidDuration,
    MergePolicy,
    UnorderedInput,
    chunk_media,
    derive_clip_windows,
    merge_turns,
)

from conftest import make_segment, random_segments

MIN_20 = 20 * 60 * 1000


def reference_merge(segments, language="en"):
    """Independent merger: run-length group by speaker, then join."""
    joiner = "" if language == "zh" else " "
    out = []
    for speaker, group in itertools.groupby(segments, key=lambda s: s.speaker):
        run = list(group)
        out.append(
            TranscriptSegment(
                speaker=speaker,
                window=TimeWindow(
                    run[0].window.start_ms, max(s.window.end_ms for s in run)
                ),
                text=joiner.join(s.text for s in run),
            )
        )
    return out


class TestChunkMedia:
    def test_45_minutes_in_20_minute_chunks(self):
        windows = chunk_media(45 * 60 * 1000, MIN_20)
        assert windows == [
            TimeWindow(0, MIN_20),
            TimeWindow(MIN_20, 2 * MIN_20),
            TimeWindow(2 * MIN_20, 45 * 60 * 1000),
        ]

    def test_exact_fit_single_window(self):
        assert chunk_media(MIN_20, MIN_20) == [TimeWindow(0, MIN_20)]

    def test_one_millisecond_input(self):
        assert chunk_media(1, MIN_20) == [TimeWindow(0, 1)]

    @pytest.mark.parametrize("duration,chunk", [(0, 100), (-5, 100), (100, 0)])
    def test_non_positive_inputs(self, duration, chunk):
        with pytest.raises(InvalidDuration):
            chunk_media(duration, chunk)

    def test_partition_property(self, rng):
        for _ in range(300):
            duration = rng.randint(1, 10_000_000)
            chunk = rng.randint(1, 2_000_000)
            windows = chunk_media(duration, chunk)
            assert windows[0].start_ms == 0
            assert windows[-1].end_ms == duration
            for a, b in zip(windows, windows[1:]):
                assert a.end_ms == b.start_ms
            assert all(w.length_ms <= chunk for w in windows)
            assert all(w.length_ms == chunk for w in windows[:-1])
            assert sum(w.length_ms for w in windows) == duration


class TestMergeTurns:
    def test_same_speaker_run_merges(self):
        merged = merge_turns(
            [
                make_segment("A", 0, 2000, "hi"),
                make_segment("A", 2000, 4000, "there"),
                make_segment("B", 4000, 6000, "hello"),
            ]
        )
        assert merged == [
            make_segment("A", 0, 4000, "hi there"),
            make_segment("B", 4000, 6000, "hello"),
        ]

    def test_single_segment_unchanged(self):
        segments = [make_segment("A", 0, 1000, "x")]
        assert merge_turns(segments) == segments

    def test_chinese_concatenates_without_separator(self):
        merged = merge_turns(
            [make_segment("A", 0, 500, "你好"), make_segment("A", 500, 900, "吗")],
            language="zh",
        )
        assert merged[0].text == "你好吗"

    def test_matches_reference_merger(self, rng):
        for _ in range(200):
            segments = random_segments(rng, rng.randint(0, 12))
            assert merge_turns(segments) == reference_merge(segments)

    def test_idempotent(self, rng):
        for _ in range(200):
            once = merge_turns(random_segments(rng, rng.randint(0, 10)))
            assert merge_turns(once) == once

    def test_output_alternates_speakers_and_preserves_text(self, rng):
        for _ in range(200):
            segments = random_segments(rng, rng.randint(0, 10))
            merged = merge_turns(segments)
            speakers = [s.speaker for s in merged]
            assert all(a != b for a, b in zip(speakers, speakers[1:]))
            expected = [k for k, _ in itertools.groupby(s.speaker for s in segments)]
            assert speakers == expected
            assert " ".join(s.text for s in merged) == " ".join(s.text for s in segments)

    def test_bounded_gap_blocks_distant_join(self):
        segments = [
            make_segment("A", 0, 1000, "one"),
            make_segment("A", 5000, 6000, "two"),
        ]
        assert len(merge_turns(segments, MergePolicy(max_gap_ms=1000))) == 2
        assert len(merge_turns(segments, MergePolicy(max_gap_ms=4000))) == 1
        assert len(merge_turns(segments)) == 1

    def test_bounded_gap_idempotent(self, rng):
        policy = MergePolicy(max_gap_ms=800)
        for _ in range(100):
            once = merge_turns(random_segments(rng, rng.randint(0, 10)), policy)
            assert merge_turns(once, policy) == once

    def test_unordered_input_rejected(self):
        with pytest.raises(UnorderedInput):
            merge_turns(
                [make_segment("A", 5000, 6000, "b"), make_segment("A", 0, 1000, "a")]
            )

    def test_negative_gap_policy_rejected(self):
        with pytest.raises(ValueError):
            MergePolicy(max_gap_ms=-1)


class TestDeriveClipWindows:
    def test_zero_pad_is_identity(self):
        windows = derive_clip_windows([make_segment("A", 1000, 2000, "x")], pad_ms=0)
        assert windows == [TimeWindow(1000, 2000)]

    def test_clamped_at_zero(self):
        windows = derive_clip_windows([make_segment("A", 100, 2000, "x")], pad_ms=250)
        assert windows == [TimeWindow(0, 2250)]

    def test_padded_window_contains_segment(self, rng):
        segments = random_segments(rng, 100)
        for seg, window in zip(segments, derive_clip_windows(segments, pad_ms=500)):
            assert window.contains(seg.window)

    def test_count_preserved(self, rng):
        segments = random_segments(rng, 37)
        assert len(derive_clip_windows(segments, pad_ms=10)) == 37

    def test_negative_pad_rejected(self):
        with pytest.raises(ValueError):
            derive_clip_windows([], pad_ms=-1)
