"""Expression leg: strategy text to acoustic instruction to synthesized audio.

A lightweight language model rewrites the reasoning chain's strategy node
into a natural-language voice instruction; the talker backend then
receives the instruction and the reply text as one serialized sequence
(``<instruction>...</instruction><text>...</text>``, with ``&`` and ``<``
escaped in content) and answers with a JSON record naming the synthesized
audio, e.g. ``{"audio_uri": "..."}``.
"""

from __future__ import annotations

from dataclasses import dataclass

from .backends import Backend, BackendRequest, request_hash
from .corpus import MediaRef
from .filters import load_template
from .jsonutil import JsonExtractError, extract_json_object


class EmptyStrategy(ValueError):
    pass


class EmptyResponse(ValueError):
    pass


class SequenceParseError(ValueError):
    pass


class MalformedTalkerReply(ValueError):
    pass


@dataclass(frozen=True)
class AcousticInstruction:
    """A voice instruction plus the strategy text it was derived from."""

    text: str
    source_strategy: str

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("instruction text must be non-empty")


@dataclass(frozen=True)
class TalkerSequence:
    """Ordered talker input: the instruction segment, then the reply text."""

    instruction: str
    response_text: str

    def __post_init__(self) -> None:
        if not self.instruction.strip():
            raise ValueError("instruction segment must be non-empty")
        if not self.response_text.strip():
            raise ValueError("text segment must be non-empty")


def instruction_prompt(strategy: str) -> str:
    """The strategy-to-instruction prompt sent to the lightweight LM."""
    if not strategy.strip():
        raise EmptyStrategy("no strategy text to derive an instruction from")
    return load_template("strategy_to_instruction.txt").replace("{{STRATEGY}}", strategy)


def derive_instruction(strategy: str, slm: Backend) -> AcousticInstruction:
    """One backend call mapping the strategy node to a voice instruction.

    Raises:
        EmptyStrategy: the chain variant carries no strategy node.
    """
    prompt = instruction_prompt(strategy)
    request = BackendRequest(
        prompt=prompt, request_id=f"slm:{request_hash(prompt)[:16]}"
    )
    reply = slm.complete(request)
    return AcousticInstruction(text=reply.text.strip(), source_strategy=strategy)


def build_sequence(instruction: AcousticInstruction, response: str) -> TalkerSequence:
    if not response.strip():
        raise EmptyResponse("no response text to synthesize")
    return TalkerSequence(instruction=instruction.text, response_text=response)


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;")


def _unescape(text: str) -> str:
    return text.replace("&lt;", "<").replace("&amp;", "&")


def serialize_sequence(seq: TalkerSequence) -> str:
    """Wire form of the talker input; boundary tags never collide with
    content because ``<`` is escaped."""
    return (
        f"<instruction>{_escape(seq.instruction)}</instruction>"
        f"<text>{_escape(seq.response_text)}</text>"
    )


def parse_sequence(text: str) -> TalkerSequence:
    """Inverse of :func:`serialize_sequence`."""
    segments = []
    pos = 0
    for tag in ("instruction", "text"):
        open_tag, close_tag = f"<{tag}>", f"</{tag}>"
        if not text.startswith(open_tag, pos):
            raise SequenceParseError(f"expected {open_tag} at position {pos}")
        start = pos + len(open_tag)
        end = text.find(close_tag, start)
        if end == -1:
            raise SequenceParseError(f"unterminated {open_tag} segment")
        segments.append(_unescape(text[start:end]))
        pos = end + len(close_tag)
    if text[pos:]:
        raise SequenceParseError(f"trailing content {text[pos:pos + 24]!r}")
    return TalkerSequence(instruction=segments[0], response_text=segments[1])


def synthesize(seq: TalkerSequence, talker: Backend) -> MediaRef:
    """Send the serialized sequence to the talker; return its audio ref.

    Raises:
        MalformedTalkerReply: the reply carries no usable ``audio_uri``.
    """
    prompt = serialize_sequence(seq)
    request = BackendRequest(
        prompt=prompt, request_id=f"talker:{request_hash(prompt)[:16]}"
    )
    reply = talker.complete(request)
    return parse_talker_reply(reply.text)


def parse_talker_reply(text: str) -> MediaRef:
    """Extract the synthesized-audio reference from a talker reply body."""
    try:
        obj = extract_json_object(text)
    except JsonExtractError as exc:
        raise MalformedTalkerReply(f"no audio record in talker reply: {exc}") from exc
    uri = obj.get("audio_uri")
    if not isinstance(uri, str) or not uri:
        raise MalformedTalkerReply("talker reply lacks a non-empty audio_uri")
    return MediaRef(uri=uri, kind="audio")
