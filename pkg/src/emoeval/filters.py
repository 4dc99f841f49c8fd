"""Corpus quality gates: semantic coherence and hallucination/toxicity.

Two prompt templates (shipped verbatim under ``templates/``) ask a filter
model to audit a dialogue fragment: the semantic filter checks that the
fragment is a coherent, informative exchange; the hallucination filter
checks that a generated strategy analysis stays faithful to the dialogue
context and is suitable for training.  Rendering is a literal placeholder
substitution, so rendered prompts are byte-identical to the template
files outside the payload slots.

The keep/drop policy: a sample survives only if it is coherent, free of
interpretive hallucination, and marked suitable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .jsonutil import JsonExtractError, extract_json_object

CONFIDENCE_LEVELS = ("High", "Medium", "Low")
JUDGMENTS = ("PASS", "REJECT")
REJECT_CONDITIONS = ("context_reason", "answer_reason", "none")
SUITS = ("YES", "NO")

# Drop reason codes
INCOHERENT = "INCOHERENT"
HALLUCINATION = "HALLUCINATION"
UNSUITABLE = "UNSUITABLE"
DROP_REASONS = (INCOHERENT, HALLUCINATION, UNSUITABLE)


class EmptyDialogue(ValueError):
    pass


class EmptyInput(ValueError):
    pass


class VerdictParseError(ValueError):
    pass


@lru_cache(maxsize=None)
def load_template(name: str) -> str:
    return (resources.files("emoeval") / "templates" / name).read_text(encoding="utf-8")


@dataclass(frozen=True)
class SemanticVerdict:
    is_coherent_and_valuable: bool
    confidence: str
    reason: str

    def __post_init__(self) -> None:
        if not isinstance(self.is_coherent_and_valuable, bool):
            raise ValueError("is_coherent_and_valuable must be a boolean")
        if self.confidence not in CONFIDENCE_LEVELS:
            raise ValueError(
                f"confidence must be one of {CONFIDENCE_LEVELS}, got {self.confidence!r}"
            )
        if not isinstance(self.reason, str):
            raise ValueError("reason must be a string")


@dataclass(frozen=True)
class HallucinationVerdict:
    judgment: str
    reason: str
    reject_condition: str
    suit: str

    def __post_init__(self) -> None:
        if self.judgment not in JUDGMENTS:
            raise ValueError(f"judgment must be one of {JUDGMENTS}, got {self.judgment!r}")
        if self.reject_condition not in REJECT_CONDITIONS:
            raise ValueError(
                f"reject_condition must be one of {REJECT_CONDITIONS},"
                f" got {self.reject_condition!r}"
            )
        if self.suit not in SUITS:
            raise ValueError(f"suit must be one of {SUITS}, got {self.suit!r}")
        if not isinstance(self.reason, str):
            raise ValueError("reason must be a string")
        if self.judgment == "PASS" and self.reject_condition != "none":
            raise ValueError("a PASS verdict cannot carry a reject_condition")


def render_semantic_prompt(dialogue_text: str) -> str:
    if not dialogue_text.strip():
        raise EmptyDialogue("dialogue text is empty")
    return load_template("semantic_filter.txt").replace("{{DIALOGUE}}", dialogue_text)


def render_hallucination_prompt(context: str, strategy_analysis: str) -> str:
    if not context.strip():
        raise EmptyInput("dialogue context is empty")
    if not strategy_analysis.strip():
        raise EmptyInput("strategy analysis is empty")
    template = load_template("hallucination_filter.txt")
    return template.replace("{{CONTEXT}}", context).replace("{{STRATEGY}}", strategy_analysis)


def parse_semantic_verdict(text: str) -> SemanticVerdict:
    """Extract and validate a coherence verdict from a filter reply."""
    try:
        obj = extract_json_object(text)
        return SemanticVerdict(
            is_coherent_and_valuable=obj["is_coherent_and_valuable"],
            confidence=obj["confidence"],
            reason=obj["reason"],
        )
    except (JsonExtractError, KeyError, ValueError, TypeError) as exc:
        raise VerdictParseError(f"bad semantic verdict: {exc}") from exc


def parse_hallucination_verdict(text: str) -> HallucinationVerdict:
    """Extract and validate a hallucination/suitability verdict."""
    try:
        obj = extract_json_object(text)
        return HallucinationVerdict(
            judgment=obj["judgment"],
            reason=obj["reason"],
            reject_condition=obj["reject_condition"],
            suit=obj["suit"],
        )
    except (JsonExtractError, KeyError, ValueError, TypeError) as exc:
        raise VerdictParseError(f"bad hallucination verdict: {exc}") from exc


@dataclass(frozen=True)
class Decision:
    """Keep/drop outcome for one sample.

    ``low_confidence`` is metadata only: the semantic filter's confidence
    never drops a sample by itself, but downstream consumers may apply a
    threshold.
    """

    keep: bool
    reason_code: str | None = None
    low_confidence: bool = False


def decide(semantic: SemanticVerdict, halluc: HallucinationVerdict | None = None) -> Decision:
    """Apply the three gates: coherence, hallucination, suitability."""
    low = semantic.confidence == "Low"
    if not semantic.is_coherent_and_valuable:
        return Decision(keep=False, reason_code=INCOHERENT, low_confidence=low)
    if halluc is not None:
        if halluc.judgment == "REJECT":
            return Decision(keep=False, reason_code=HALLUCINATION, low_confidence=low)
        if halluc.suit == "NO":
            return Decision(keep=False, reason_code=UNSUITABLE, low_confidence=low)
    return Decision(keep=True, low_confidence=low)
