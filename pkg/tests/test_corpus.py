import json
import random

import pytest

from emoeval.corpus import (
    EMPTY_SPAN,
    EMPTY_TEXT,
    OUT_OF_ORDER_CONTEXT,
    DialogueSample,
    DuplicateId,
    MalformedRecord,
    MediaRef,
    TimeWindow,
    load_manifest,
    validate_sample,
    write_manifest,
)

from conftest import make_sample, make_segment, random_sample


class TestLoadManifest:
    def test_empty_input_gives_empty_list(self):
        assert load_manifest(b"") == []

    def test_single_record(self):
        sample = make_sample("s1")
        loaded = load_manifest(write_manifest([sample]))
        assert len(loaded) == 1
        assert loaded[0].id == "s1"

    def test_duplicate_id_rejected(self):
        data = write_manifest([make_sample("s1")]) * 2
        with pytest.raises(DuplicateId) as err:
            load_manifest(data)
        assert err.value.sample_id == "s1"

    def test_order_preserved(self):
        samples = [make_sample(f"s{i}") for i in range(20)]
        assert [s.id for s in load_manifest(write_manifest(samples))] == [
            s.id for s in samples
        ]

    def test_invalid_json_names_line(self):
        data = write_manifest([make_sample("s1")]) + b"{oops\n"
        with pytest.raises(MalformedRecord) as err:
            load_manifest(data)
        assert err.value.line_no == 2

    def test_bad_enum_is_malformed(self):
        record = make_sample("s1").to_record()
        record["language"] = "fr"
        with pytest.raises(MalformedRecord):
            load_manifest(json.dumps(record).encode())

    def test_inverted_window_is_malformed(self):
        record = make_sample("s1").to_record()
        record["context"][0]["window"] = {"start_ms": 100, "end_ms": 50}
        with pytest.raises(MalformedRecord):
            load_manifest(json.dumps(record).encode())

    def test_blank_lines_skipped(self):
        data = b"\n" + write_manifest([make_sample("s1")]) + b"\n\n"
        assert len(load_manifest(data)) == 1


class TestRoundTrip:
    def test_empty_write(self):
        assert write_manifest([]) == b""

    def test_single_sample_byte_exact(self):
        sample = make_sample("s1")
        data = write_manifest([sample])
        assert write_manifest(load_manifest(data)) == data

    def test_generated_corpus_round_trips(self):
        rng = random.Random(1309)
        samples = [random_sample(rng, f"gen-{i:04d}") for i in range(1000)]
        assert load_manifest(write_manifest(samples)) == samples

    def test_unknown_fields_preserved(self):
        record = make_sample("s1").to_record()
        record["x_custom"] = {"a": [1, 2]}
        line = (json.dumps(record) + "\n").encode()
        loaded = load_manifest(line)
        assert loaded[0].extras == {"x_custom": {"a": [1, 2]}}
        assert json.loads(write_manifest(loaded)) == record


class TestValidateSample:
    def test_well_formed_sample_is_clean(self):
        assert validate_sample(make_sample("s1")) == []

    def test_out_of_order_context(self):
        sample = make_sample(
            "s1",
            segments=(
                make_segment("A", 5000, 6000, "later"),
                make_segment("B", 0, 1000, "earlier"),
            ),
        )
        assert OUT_OF_ORDER_CONTEXT in validate_sample(sample)

    def test_empty_media_span(self):
        sample = make_sample(
            "s1", media=(MediaRef(uri="u", kind="video", span=TimeWindow(100, 100)),)
        )
        assert EMPTY_SPAN in validate_sample(sample)

    def test_blank_segment_text(self):
        sample = make_sample("s1", segments=(make_segment("A", 0, 100, "   "),))
        assert EMPTY_TEXT in validate_sample(sample)

    def test_pure(self):
        sample = make_sample(
            "s1", media=(MediaRef(uri="u", kind="video", span=TimeWindow(0, 0)),)
        )
        assert validate_sample(sample) == validate_sample(sample)


class TestConstruction:
    def test_negative_window_rejected(self):
        with pytest.raises(ValueError):
            TimeWindow(-1, 10)

    def test_inverted_window_rejected(self):
        with pytest.raises(ValueError):
            TimeWindow(10, 5)

    def test_zero_length_window_allowed(self):
        assert TimeWindow(7, 7).length_ms == 0

    def test_bad_media_kind(self):
        with pytest.raises(ValueError):
            MediaRef(uri="u", kind="subtitles")

    def test_bad_language(self):
        with pytest.raises(ValueError):
            DialogueSample(id="x", language="de")
