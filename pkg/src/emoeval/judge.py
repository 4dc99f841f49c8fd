"""Rubric-based scoring of dialogue model outputs by a judge model.

Four rubric prompts (shipped verbatim under ``templates/``) cover the
benchmark's three settings: text-response relevance (one prompt), emotion
analysis plus emotional strategy (one prompt scoring both), end-to-end
video-to-speech quality, and instruction-following of synthesized speech.
Every dimension is scored 0, 1, or 2.

``judge_sample`` runs every applicable rubric for one sample: rubrics
whose required model-output field is absent score 0 with reason "missing
output"; malformed judge replies are retried up to the policy budget.
Metrics a model genuinely cannot produce (no reasoning trace, no speech
leg) are omitted from the scorecard entirely rather than scored, mirroring
how report tables mark them "-".
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, Callable, Iterable, Mapping, Sequence

from .backends import Backend, BackendRequest, RetryPolicy
from .corpus import DialogueSample, MediaRef
from .ecot import ChainVariant
from .filters import load_template
from .jsonutil import JsonExtractError, extract_json_object

MISSING_OUTPUT_REASON = "missing output"

VS_RES = "VS-RES"
VS_RC = "VS-RC"
VT_EA = "VT-EA"
VT_RES = "VT-RES"
VT_RC = "VT-RC"
IF = "IF"
METRICS = (VS_RES, VS_RC, VT_EA, VT_RES, VT_RC, IF)


class RubricKind(Enum):
    VT_RC = "vt_rc"
    VT_EA_RES = "vt_ea_res"
    VS = "vs"
    IF = "if"


RUBRIC_ORDER = (RubricKind.VT_RC, RubricKind.VT_EA_RES, RubricKind.VS, RubricKind.IF)

TEMPLATE_FILES = {
    RubricKind.VT_RC: "vt_rc.txt",
    RubricKind.VT_EA_RES: "vt_ea_res.txt",
    RubricKind.VS: "vs.txt",
    RubricKind.IF: "if.txt",
}

# JSON key in the judge reply -> benchmark metric name
RUBRIC_KEYMAP: dict[RubricKind, dict[str, str]] = {
    RubricKind.VT_RC: {"Response_Content": VT_RC},
    RubricKind.VT_EA_RES: {
        "Emotion_Analysis": VT_EA,
        "Response_Emotional_Strategy": VT_RES,
    },
    RubricKind.VS: {
        "Response_Content": VS_RC,
        "Response_Emotional_Strategy": VS_RES,
    },
    RubricKind.IF: {"Consistency": IF},
}

IF_DESCRIPTOR_KEYS = (
    "Pitch",
    "Speaking Rate",
    "Volume",
    "Timbre/Texture",
    "Emotion",
    "Intonation",
)


class MissingInstruction(ValueError):
    pass


class MissingModelOutput(ValueError):
    pass


class VerdictParseError(ValueError):
    def __init__(self, kind: "RubricKind", cause: str):
        self.kind = kind
        self.cause = cause
        super().__init__(f"{kind.value} verdict: {cause}")


class JudgeUnavailable(RuntimeError):
    def __init__(self, kind: "RubricKind", attempts: int, cause: str):
        self.kind = kind
        self.attempts = attempts
        super().__init__(
            f"judge produced no parseable {kind.value} verdict in {attempts} attempt(s): {cause}"
        )


@dataclass(frozen=True)
class JudgeVerdict:
    """Parsed judge reply for one rubric: metric scores plus reason text.

    For the instruction-following rubric, ``descriptors`` carries the six
    free-text acoustic observations alongside the consistency score.
    """

    scores: Mapping[str, int]
    reasons: Mapping[str, str]
    descriptors: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class ScoreCard:
    sample_id: str
    scores: Mapping[str, int]
    reasons: Mapping[str, str]
    judge_model: str
    attempt_count: int = 1

    def __post_init__(self) -> None:
        unknown = set(self.scores) - set(METRICS)
        if unknown:
            raise ValueError(f"unknown metric names: {sorted(unknown)}")
        bad = {m: s for m, s in self.scores.items() if s not in (0, 1, 2)}
        if bad:
            raise ValueError(f"scores outside {{0,1,2}}: {bad}")
        if self.attempt_count < 1:
            raise ValueError("attempt_count must be >= 1")


@dataclass(frozen=True)
class ModelOutput:
    """What the model under test produced for one sample.

    Any field may be None when the model has no such output; the judge
    treats absence per rubric (score 0 for applicable rubrics, omission
    for rubrics filtered out by the chain variant).
    """

    response_text: str | None = None
    reasoning_text: str | None = None
    speech: MediaRef | None = None
    instruction: str | None = None


def applicable_metrics(variant: ChainVariant) -> frozenset[str]:
    """Metrics a chain variant can produce at all.

    Dropping the strategy node removes the acoustic-instruction leg (no
    speech synthesis, no strategy dimension); dropping the reasoning
    record entirely leaves only the bare text response.
    """
    if variant is ChainVariant.NO_ECOT:
        return frozenset({VT_RC})
    if variant is ChainVariant.NO_STRATEGY:
        return frozenset({VT_RC, VT_EA})
    if variant is ChainVariant.NO_EMOTION:
        return frozenset(set(METRICS) - {VT_EA})
    return frozenset(METRICS)


def render_rubric(
    kind: RubricKind,
    model_output: str = "",
    instruction: str | None = None,
    *,
    video: MediaRef | None = None,
    speech: MediaRef | None = None,
) -> tuple[str, list[MediaRef]]:
    """Fill the rubric template and declare which media accompany it.

    Text-response rubrics interpolate ``model_output``; the speech rubric
    has no text payload (the judged speech is an attachment); the
    instruction-following rubric interpolates the instruction under test.
    """
    template = load_template(TEMPLATE_FILES[kind])
    if kind is RubricKind.IF:
        if not (instruction and instruction.strip()):
            raise MissingInstruction("instruction-following rubric needs the instruction text")
        prompt = template.replace("{{INSTRUCTION}}", instruction)
        attachments = [m for m in (speech,) if m is not None]
    elif kind is RubricKind.VS:
        prompt = template
        attachments = [m for m in (video, speech) if m is not None]
    else:
        if not model_output.strip():
            raise MissingModelOutput(f"{kind.value} rubric needs the model output text")
        prompt = template.replace("{{MODEL_RESPONSE}}", model_output)
        attachments = [m for m in (video,) if m is not None]
    return prompt, attachments


def _check_score(kind: RubricKind, key: str, value: object) -> int:
    if isinstance(value, bool):
        raise VerdictParseError(kind, f"{key} score must be an integer, got a boolean")
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int):
        raise VerdictParseError(kind, f"{key} score must be an integer, got {value!r}")
    if value not in (0, 1, 2):
        raise VerdictParseError(kind, f"{key} score must be 0, 1, or 2, got {value}")
    return value


def parse_verdict(kind: RubricKind, text: str) -> JudgeVerdict:
    """Extract and validate the reply JSON against the rubric's schema.

    Raises:
        VerdictParseError: no JSON object, missing or unexpected score
            keys, or a score outside {0, 1, 2}.
    """
    try:
        obj = extract_json_object(text)
    except JsonExtractError as exc:
        raise VerdictParseError(kind, str(exc)) from exc

    if kind is RubricKind.IF:
        unknown = set(obj) - ({"Consistency"} | set(IF_DESCRIPTOR_KEYS))
        if unknown:
            raise VerdictParseError(kind, f"unexpected keys: {sorted(unknown)}")
        if "Consistency" not in obj:
            raise VerdictParseError(kind, "missing Consistency score")
        score = _check_score(kind, "Consistency", obj["Consistency"])
        descriptors = {}
        for key in IF_DESCRIPTOR_KEYS:
            if key in obj:
                if not isinstance(obj[key], str):
                    raise VerdictParseError(kind, f"{key} must be a string description")
                descriptors[key] = obj[key]
        return JudgeVerdict(scores={IF: score}, reasons={}, descriptors=descriptors)

    keymap = RUBRIC_KEYMAP[kind]
    if set(obj) != set(keymap):
        missing = sorted(set(keymap) - set(obj))
        extra = sorted(set(obj) - set(keymap))
        raise VerdictParseError(kind, f"missing keys {missing}, unexpected keys {extra}")
    scores: dict[str, int] = {}
    reasons: dict[str, str] = {}
    for key, metric in keymap.items():
        entry = obj[key]
        if not isinstance(entry, dict) or "score" not in entry:
            raise VerdictParseError(kind, f"{key} must be an object with a score")
        scores[metric] = _check_score(kind, key, entry["score"])
        reason = entry.get("reason", "")
        if not isinstance(reason, str):
            raise VerdictParseError(kind, f"{key} reason must be a string")
        reasons[metric] = reason
    return JudgeVerdict(scores=scores, reasons=reasons)


def _rubric_payload(
    kind: RubricKind, output: ModelOutput
) -> tuple[bool, str, str | None, MediaRef | None]:
    """(available, model_output, instruction, speech) for one rubric."""
    if kind is RubricKind.VT_RC:
        text = output.response_text or ""
        return bool(text.strip()), text, None, None
    if kind is RubricKind.VT_EA_RES:
        text = output.reasoning_text or ""
        return bool(text.strip()), text, None, None
    if kind is RubricKind.VS:
        return output.speech is not None, "", None, output.speech
    ok = output.speech is not None and bool(output.instruction and output.instruction.strip())
    return ok, "", output.instruction, output.speech


def judge_sample(
    sample: DialogueSample,
    output: ModelOutput,
    backend: Backend,
    policy: RetryPolicy = RetryPolicy(),
    *,
    rubrics: Sequence[RubricKind] = RUBRIC_ORDER,
    metrics: Iterable[str] | None = None,
    sleep: Callable[[float], None] = time.sleep,
) -> ScoreCard:
    """Score one sample across every applicable rubric.

    ``metrics`` restricts the card to metrics the evaluated configuration
    can produce (see :func:`applicable_metrics`); rubrics with no allowed
    metric are skipped entirely.  Exactly one backend call is made per
    rubric per attempt; ``attempt_count`` reports the worst case across
    rubrics.

    Raises:
        JudgeUnavailable: one rubric's replies stayed malformed through
            every attempt.
    """
    allowed = set(METRICS) if metrics is None else set(metrics)
    video = next((m for m in sample.media if m.kind == "video"), None)
    scores: dict[str, int] = {}
    reasons: dict[str, str] = {}
    attempts_used = [1]

    for kind in rubrics:
        kind_metrics = [m for m in RUBRIC_KEYMAP[kind].values() if m in allowed]
        if not kind_metrics:
            continue
        available, text, instruction, speech = _rubric_payload(kind, output)
        if not available:
            for metric in kind_metrics:
                scores[metric] = 0
                reasons[metric] = MISSING_OUTPUT_REASON
            continue
        prompt, attachments = render_rubric(
            kind, text, instruction, video=video, speech=speech
        )
        verdict: JudgeVerdict | None = None
        for attempt in range(1, policy.max_attempts + 1):
            request = BackendRequest(
                prompt=prompt,
                attachments=tuple(attachments),
                request_id=f"{sample.id}:{kind.value}:{attempt}",
            )
            reply = backend.complete(request)
            try:
                verdict = parse_verdict(kind, reply.text)
                break
            except VerdictParseError as exc:
                if attempt == policy.max_attempts:
                    raise JudgeUnavailable(kind, attempt, str(exc)) from exc
                delay_ms = policy.backoff_ms(attempt)
                if delay_ms:
                    sleep(delay_ms / 1000.0)
        attempts_used.append(attempt)
        for metric in kind_metrics:
            scores[metric] = verdict.scores[metric]
            reasons[metric] = verdict.reasons.get(metric, "")

    return ScoreCard(
        sample_id=sample.id,
        scores=scores,
        reasons=reasons,
        judge_model=backend.name,
        attempt_count=max(attempts_used),
    )


def write_scorecards(cards: Iterable[ScoreCard]) -> bytes:
    """Line-delimited scorecard records, one line per (sample, metric)."""
    lines = []
    for card in cards:
        for metric in METRICS:
            if metric not in card.scores:
                continue
            lines.append(
                json.dumps(
                    {
                        "sample_id": card.sample_id,
                        "metric": metric,
                        "score": card.scores[metric],
                        "reason": card.reasons.get(metric, ""),
                        "judge_model": card.judge_model,
                        "attempt_count": card.attempt_count,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
    return "".join(lines).encode("utf-8")


def load_scorecards(data: bytes | str | IO[bytes]) -> list[ScoreCard]:
    """Regroup scorecard records by sample id; inverse of write_scorecards."""
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    grouped: dict[str, dict] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        entry = grouped.setdefault(
            obj["sample_id"],
            {
                "scores": {},
                "reasons": {},
                "judge_model": obj["judge_model"],
                "attempt_count": obj["attempt_count"],
            },
        )
        entry["scores"][obj["metric"]] = obj["score"]
        entry["reasons"][obj["metric"]] = obj.get("reason", "")
        entry["attempt_count"] = max(entry["attempt_count"], obj["attempt_count"])
    return [
        ScoreCard(
            sample_id=sample_id,
            scores=entry["scores"],
            reasons=entry["reasons"],
            judge_model=entry["judge_model"],
            attempt_count=entry["attempt_count"],
        )
        for sample_id, entry in grouped.items()
    ]
