"""Structured emotional reasoning records and their training objectives.

A reasoning record walks four causal stages before the reply is settled:
what the speaker's emotional cues look like (perception), what they
actually want (intent), how to react (strategy), and the reply itself
(response).  Each stage conditions the next, so the record's joint
log-probability is the sum of the per-stage conditional log-probabilities
and the training losses are negative log-likelihood means over batches of
those per-stage values.

The text form wraps each present stage in paired delimiter tags in causal
order, e.g. ``<perception>...</perception><intent>...</intent>...``; the
ablation variants drop individual stages, optionally prepend a raw ASR
transcript block (``<asr>``), or reduce the record to the bare response.
Per-stage log-probabilities are supplied by an external scorer; nothing
here touches tokens or gradients.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from math import fsum
from typing import Sequence

PERCEPTION = "perception"
INTENT = "intent"
STRATEGY = "strategy"
RESPONSE = "response"
ASR = "asr"

CORE_COMPONENTS = (PERCEPTION, INTENT, STRATEGY, RESPONSE)


class ChainVariant(Enum):
    """Which reasoning stages the chain carries."""

    FULL = "full"
    NO_EMOTION = "no-emotion"
    NO_INTENT = "no-intent"
    NO_STRATEGY = "no-strategy"
    WITH_ASR = "with-asr"
    NO_ECOT = "no-ecot"

    @classmethod
    def from_name(cls, name: str) -> "ChainVariant":
        for variant in cls:
            if variant.value == name:
                return variant
        raise ValueError(f"unknown chain variant {name!r}")


_VARIANT_COMPONENTS: dict[ChainVariant, tuple[str, ...]] = {
    ChainVariant.FULL: (PERCEPTION, INTENT, STRATEGY, RESPONSE),
    ChainVariant.NO_EMOTION: (INTENT, STRATEGY, RESPONSE),
    ChainVariant.NO_INTENT: (PERCEPTION, STRATEGY, RESPONSE),
    ChainVariant.NO_STRATEGY: (PERCEPTION, INTENT, RESPONSE),
    ChainVariant.WITH_ASR: (ASR, PERCEPTION, INTENT, STRATEGY, RESPONSE),
    ChainVariant.NO_ECOT: (RESPONSE,),
}


def components_for(variant: ChainVariant) -> tuple[str, ...]:
    """Component names present under ``variant``, in causal order."""
    return _VARIANT_COMPONENTS[variant]


def scored_components(variant: ChainVariant) -> tuple[str, ...]:
    """Components that carry a log-probability term (the ASR block does not)."""
    return tuple(c for c in components_for(variant) if c != ASR)


class MissingComponent(ValueError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"required component {component!r} is missing or empty")


class UnexpectedComponent(ValueError):
    def __init__(self, component: str):
        self.component = component
        super().__init__(f"component {component!r} is not part of this variant")


class ParseError(ValueError):
    def __init__(self, expected_tag: str, detail: str = ""):
        self.expected_tag = expected_tag
        message = f"expected <{expected_tag}> block"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class EmptyBatch(ValueError):
    pass


@dataclass(frozen=True)
class ECoT:
    """One reasoning record.  Fields for stages absent under the record's
    variant stay empty; ``asr_transcript`` is set only for the ASR variant.
    """

    perception: str = ""
    intent: str = ""
    strategy: str = ""
    response: str = ""
    asr_transcript: str | None = None

    def component(self, name: str) -> str:
        if name == ASR:
            return self.asr_transcript or ""
        return getattr(self, name)

    def validate_for(self, variant: ChainVariant) -> None:
        """Check required stages are non-empty and absent ones empty."""
        present = components_for(variant)
        for name in present:
            if not self.component(name).strip():
                raise MissingComponent(name)
        for name in (*CORE_COMPONENTS, ASR):
            if name not in present and self.component(name).strip():
                raise UnexpectedComponent(name)


def render_ecot(e: ECoT, variant: ChainVariant = ChainVariant.FULL) -> str:
    """Serialize the record for ``variant``: tagged blocks in causal order,
    or the bare response when the variant carries no reasoning.

    Component text must not contain the delimiter tags themselves; the
    format has no escaping.
    """
    e.validate_for(variant)
    if variant is ChainVariant.NO_ECOT:
        return e.response
    return "\n".join(
        f"<{name}>{e.component(name)}</{name}>" for name in components_for(variant)
    )


def parse_ecot(text: str, variant: ChainVariant = ChainVariant.FULL) -> ECoT:
    """Inverse of :func:`render_ecot`; tolerates whitespace between blocks.

    Raises:
        ParseError: a required block is absent, empty, out of causal
            order, or followed by trailing non-whitespace.
    """
    if variant is ChainVariant.NO_ECOT:
        body = text.strip()
        if not body:
            raise ParseError(RESPONSE, "empty text")
        return ECoT(response=body)

    values: dict[str, str] = {}
    pos = 0
    for name in components_for(variant):
        while pos < len(text) and text[pos].isspace():
            pos += 1
        open_tag, close_tag = f"<{name}>", f"</{name}>"
        if not text.startswith(open_tag, pos):
            found = text[pos : pos + 24]
            raise ParseError(name, f"found {found!r}")
        start = pos + len(open_tag)
        end = text.find(close_tag, start)
        if end == -1:
            raise ParseError(name, "unterminated block")
        value = text[start:end]
        if not value.strip():
            raise ParseError(name, "empty block")
        values[name] = value
        pos = end + len(close_tag)
    if text[pos:].strip():
        raise ParseError("end-of-input", f"trailing content {text[pos:pos + 24]!r}")

    return ECoT(
        perception=values.get(PERCEPTION, ""),
        intent=values.get(INTENT, ""),
        strategy=values.get(STRATEGY, ""),
        response=values.get(RESPONSE, ""),
        asr_transcript=values.get(ASR) if ASR in values else None,
    )


@dataclass(frozen=True)
class ComponentLogProbs:
    """Per-stage summed log-likelihoods from an external scorer.

    Stages absent under the record's variant are left as ``None``; every
    supplied value must be a log-probability, i.e. <= 0.
    """

    lp_perception: float | None = None
    lp_intent: float | None = None
    lp_strategy: float | None = None
    lp_response: float | None = None

    def __post_init__(self) -> None:
        for name in CORE_COMPONENTS:
            value = self.get(name)
            if value is not None and not value <= 0:
                raise ValueError(f"lp_{name} must be <= 0, got {value!r}")

    def get(self, component: str) -> float | None:
        return getattr(self, f"lp_{component}")


def chain_logprob(lp: ComponentLogProbs, variant: ChainVariant = ChainVariant.FULL) -> float:
    """Joint chain log-probability: the sum over the variant's stages.

    Raises:
        MissingComponent: a stage the variant scores has no value.
    """
    terms = []
    for name in scored_components(variant):
        value = lp.get(name)
        if value is None:
            raise MissingComponent(name)
        terms.append(value)
    return fsum(terms)


def stage1_loss(batch: Sequence[float]) -> float:
    """Perceptual-grounding objective: NLL mean of perception log-probs."""
    if not batch:
        raise EmptyBatch("stage-1 batch is empty")
    for value in batch:
        if not value <= 0:
            raise ValueError(f"log-probabilities must be <= 0, got {value!r}")
    return -fsum(batch) / len(batch)


def stage2_loss(
    batch: Sequence[ComponentLogProbs], variant: ChainVariant = ChainVariant.FULL
) -> float:
    """Joint reasoning objective: NLL mean of per-sample chain log-probs."""
    if not batch:
        raise EmptyBatch("stage-2 batch is empty")
    return -fsum(chain_logprob(lp, variant) for lp in batch) / len(batch)
