"""Command-line orchestrator for the corpus pipeline and benchmark.

Subcommands:

* ``pipe``    raw transcript manifests -> filtered dialogue manifest + drop log
* ``run``     dialogue manifest -> reasoning chain, voice instruction, audio ref
* ``eval``    run results -> scorecards, error rates, result matrix
* ``report``  scorecards + external scores -> emitted matrix
* ``loss``    per-component log-prob records -> stage-1/stage-2 loss values

Option precedence: a JSON config file (``--config``) overrides flags, and
flags override ``EMOEVAL_*`` environment variables.  Backends bind per
role through env vars (see :mod:`emoeval.backends`) or the config file's
``backends`` section; fixture-directory mocks make every command fully
deterministic offline.

Exit codes: 0 success, 1 per-sample failures were recorded, 2
configuration or transport abort.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Mapping, Sequence

from . import backends as backends_mod
from .backends import (
    Backend,
    BackendError,
    BackendRequest,
    DispatchError,
    FixtureBackend,
    HttpBackend,
    RetryingBackend,
    RetryPolicy,
    TransportError,
    dispatch_all,
)
from .corpus import (
    DialogueSample,
    MediaRef,
    format_captions,
    format_dialogue,
    load_manifest,
    sample_line,
)
from .ecot import ChainVariant, ECoT, ParseError, components_for, parse_ecot, render_ecot
from .ecot import ComponentLogProbs, EmptyBatch, stage1_loss, stage2_loss
from .filters import (
    INCOHERENT,
    VerdictParseError,
    decide,
    load_template,
    parse_hallucination_verdict,
    parse_semantic_verdict,
    render_hallucination_prompt,
    render_semantic_prompt,
)
from .judge import JudgeUnavailable, ModelOutput, applicable_metrics, judge_sample, load_scorecards, write_scorecards
from .jsonutil import JsonExtractError, extract_json_object
from .metrics import EmptyReference, ExternalScore, error_rate, load_external_scores
from .report import FORMATS, aggregate, emit
from .segmenter import MergePolicy, chunk_media, derive_clip_windows, merge_turns
from .talker import (
    AcousticInstruction,
    MalformedTalkerReply,
    build_sequence,
    instruction_prompt,
    parse_talker_reply,
    serialize_sequence,
)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_ABORT = 2

_VARIANT_NAMES = tuple(v.value for v in ChainVariant)

_BLOCK_HINTS = {
    "asr": "verbatim transcript of the speech you heard",
    "perception": "the speaker's observable emotional cues across modalities",
    "intent": "the speaker's underlying intent and mental state",
    "strategy": "how you will respond, emotionally and pragmatically",
    "response": "your reply text",
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings for one command invocation."""

    manifest: Path | None
    out: Path
    variant: ChainVariant
    max_in_flight: int
    retry: RetryPolicy
    chunk_len_ms: int
    merge: MergePolicy
    pad_ms: int
    fmt: str
    model_label: str
    dataset_label: str
    results: Path | None
    scorecards: Path | None
    external: Path | None
    input: Path | None
    split_prompt: Path | None
    backend_bindings: Mapping[str, Any]


_DEFAULTS: dict[str, Any] = {
    "manifest": None,
    "out": "out",
    "variant": "full",
    "max_in_flight": 4,
    "retries": 3,
    "backoff_ms": 100,
    "chunk_minutes": 20,
    "max_gap_ms": "inf",
    "pad_ms": 0,
    "format": "markdown",
    "model_label": "model",
    "dataset_label": "dataset",
    "results": None,
    "scorecards": None,
    "external": None,
    "input": None,
    "split_prompt": None,
}


def _coerce_int(key: str, value: Any) -> int:
    try:
        return int(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from exc


def build_config(args: argparse.Namespace, env: Mapping[str, str] | None = None) -> RunConfig:
    """Merge defaults, environment, flags, and config file (in that order)."""
    import os

    env = os.environ if env is None else env
    values = dict(_DEFAULTS)
    for key in _DEFAULTS:
        env_value = env.get(f"EMOEVAL_{key.upper()}")
        if env_value is not None:
            values[key] = env_value
    for key in _DEFAULTS:
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            values[key] = flag_value

    file_cfg: dict[str, Any] = {}
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            file_cfg = json.loads(Path(config_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {config_path}: {exc}") from exc
        if not isinstance(file_cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in file_cfg.items():
            if key in _DEFAULTS and value is not None:
                values[key] = value

    variant_name = str(values["variant"])
    if variant_name not in _VARIANT_NAMES:
        raise ConfigError(f"variant must be one of {_VARIANT_NAMES}, got {variant_name!r}")
    fmt = str(values["format"])
    if fmt not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}, got {fmt!r}")
    max_gap_raw = values["max_gap_ms"]
    max_gap = None if str(max_gap_raw) == "inf" else _coerce_int("max_gap_ms", max_gap_raw)
    retries = _coerce_int("retries", values["retries"])
    if retries < 1:
        raise ConfigError("retries must be >= 1")
    max_in_flight = _coerce_int("max_in_flight", values["max_in_flight"])
    if max_in_flight < 1:
        raise ConfigError("max_in_flight must be >= 1")

    def path_or_none(key: str) -> Path | None:
        return Path(values[key]) if values[key] else None

    return RunConfig(
        manifest=path_or_none("manifest"),
        out=Path(values["out"]),
        variant=ChainVariant.from_name(variant_name),
        max_in_flight=max_in_flight,
        retry=RetryPolicy(max_attempts=retries, base_backoff_ms=_coerce_int("backoff_ms", values["backoff_ms"])),
        chunk_len_ms=_coerce_int("chunk_minutes", values["chunk_minutes"]) * 60_000,
        merge=MergePolicy(max_gap_ms=max_gap),
        pad_ms=_coerce_int("pad_ms", values["pad_ms"]),
        fmt=fmt,
        model_label=str(values["model_label"]),
        dataset_label=str(values["dataset_label"]),
        results=path_or_none("results"),
        scorecards=path_or_none("scorecards"),
        external=path_or_none("external"),
        input=path_or_none("input"),
        split_prompt=path_or_none("split_prompt"),
        backend_bindings=file_cfg.get("backends", {}),
    )


def _resolve_role(cfg: RunConfig, role: str, required: bool) -> Backend | None:
    spec = cfg.backend_bindings.get(role.lower()) or cfg.backend_bindings.get(role.upper())
    backend: Backend | None
    if spec is not None:
        if not isinstance(spec, dict):
            raise ConfigError(f"backends.{role.lower()} must be an object")
        if spec.get("fixtures"):
            backend = FixtureBackend(directory=spec["fixtures"], name=f"fixture:{role.lower()}")
        elif spec.get("url"):
            backend = HttpBackend(
                url=spec["url"], api_key=spec.get("key"), name=f"http:{role.lower()}"
            )
        else:
            raise ConfigError(f"backends.{role.lower()} needs a fixtures dir or url")
    else:
        backend = backends_mod.resolve_backend(role)
    if backend is None and required:
        raise ConfigError(
            f"no backend bound for role {role}; set "
            f"EMOEVAL_BACKEND_URL_{role} or EMOEVAL_BACKEND_FIXTURES_{role}"
        )
    if backend is None:
        return None
    return RetryingBackend(backend, cfg.retry)


def _load_manifest_file(path: Path | None) -> list[DialogueSample]:
    if path is None:
        raise ConfigError("--manifest is required")
    try:
        return load_manifest(path.read_bytes())
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {path}: {exc}") from exc


def _load_jsonl(path: Path) -> list[dict]:
    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(json.loads(line))
    return records


# ---------------------------------------------------------------------------
# pipe


def _complete_parsed(
    backend: Backend,
    prompt: str,
    parser: Callable[[str], Any],
    policy: RetryPolicy,
    request_base: str,
    attachments: Sequence[MediaRef] = (),
):
    """Backend call + schema parse, retrying malformed replies."""
    last_error: Exception | None = None
    for attempt in range(1, policy.max_attempts + 1):
        request = BackendRequest(
            prompt=prompt,
            attachments=tuple(attachments),
            request_id=f"{request_base}:{attempt}",
        )
        reply = backend.complete(request)
        try:
            return parser(reply.text)
        except (VerdictParseError, JsonExtractError, ValueError) as exc:
            last_error = exc
    raise VerdictParseError(
        f"no parseable reply for {request_base} in {policy.max_attempts} attempt(s): {last_error}"
    )


def _sample_duration_ms(sample: DialogueSample) -> int:
    video = next((m for m in sample.media if m.kind == "video" and m.span), None)
    if video is not None:
        return video.span.end_ms
    if sample.context:
        return max(seg.window.end_ms for seg in sample.context)
    return 0


def _split_children(
    sample: DialogueSample, backend: Backend, template: str, cfg: RunConfig
) -> list[DialogueSample]:
    numbered = "\n".join(
        f"{i}. {seg.speaker}: {seg.text}" for i, seg in enumerate(sample.context)
    )
    prompt = template.replace("{{DIALOGUE}}", numbered)
    obj = _complete_parsed(
        backend, prompt, extract_json_object, cfg.retry, f"{sample.id}:split"
    )
    boundaries = obj.get("boundaries")
    if not isinstance(boundaries, list) or not all(
        isinstance(b, int) and 0 < b < len(sample.context) for b in boundaries
    ):
        raise VerdictParseError(f"bad split boundaries for {sample.id}: {boundaries!r}")
    cuts = sorted(set(boundaries))
    if not cuts:
        return [sample]
    children = []
    edges = [0, *cuts, len(sample.context)]
    for index, (lo, hi) in enumerate(zip(edges, edges[1:])):
        children.append(
            replace(sample, id=f"{sample.id}.{index}", context=sample.context[lo:hi])
        )
    return children


def cmd_pipe(cfg: RunConfig) -> int:
    """Transform, split, and filter a raw transcript manifest.

    Kept samples, a drop log, and a cursor of processed input ids are
    flushed incrementally, so an aborted run resumes where it stopped and
    converges to the same outputs.
    """
    samples = _load_manifest_file(cfg.manifest)
    cfg.out.mkdir(parents=True, exist_ok=True)
    kept_path = cfg.out / "kept.jsonl"
    drops_path = cfg.out / "drops.jsonl"
    cursor_path = cfg.out / "pipe.cursor"

    done: set[str] = set()
    if cursor_path.exists():
        done = {line.strip() for line in cursor_path.read_text().splitlines() if line.strip()}

    todo = [s for s in samples if s.id not in done]
    backend = _resolve_role(cfg, "FILTER", required=bool(todo))
    split_template = (
        cfg.split_prompt.read_text(encoding="utf-8") if cfg.split_prompt else None
    )

    with (
        open(kept_path, "a", encoding="utf-8") as kept_file,
        open(drops_path, "a", encoding="utf-8") as drops_file,
        open(cursor_path, "a", encoding="utf-8") as cursor_file,
    ):
        for sample in samples:
            if sample.id in done:
                continue
            try:
                outcomes = _pipe_sample(sample, backend, split_template, cfg)
            except (BackendError, VerdictParseError) as exc:
                print(f"pipe aborted at sample {sample.id}: {exc}", file=sys.stderr)
                return EXIT_ABORT
            for child, decision, detail in outcomes:
                if decision.keep:
                    kept_file.write(sample_line(child))
                else:
                    drops_file.write(
                        json.dumps(
                            {
                                "id": child.id,
                                "reason": decision.reason_code,
                                "detail": detail,
                                "low_confidence": decision.low_confidence,
                            },
                            ensure_ascii=False,
                        )
                        + "\n"
                    )
            kept_file.flush()
            drops_file.flush()
            cursor_file.write(sample.id + "\n")
            cursor_file.flush()
    return EXIT_OK


def _pipe_sample(
    sample: DialogueSample,
    backend: Backend,
    split_template: str | None,
    cfg: RunConfig,
) -> list[tuple[DialogueSample, Any, str]]:
    merged = merge_turns(list(sample.context), cfg.merge, sample.language)
    base = replace(sample, context=tuple(merged))
    children = (
        _split_children(base, backend, split_template, cfg) if split_template else [base]
    )

    duration = _sample_duration_ms(sample)
    chunks = chunk_media(duration, cfg.chunk_len_ms) if duration > 0 else []

    outcomes = []
    for child in children:
        clips = derive_clip_windows(child.context, cfg.pad_ms)
        child = child.with_extras(
            clip_windows=[w.to_record() for w in clips],
            chunks=[w.to_record() for w in chunks],
        )
        dialogue = format_dialogue(child.context)
        if not dialogue.strip():
            from .filters import Decision

            outcomes.append(
                (child, Decision(keep=False, reason_code=INCOHERENT), "empty context")
            )
            continue
        semantic = _complete_parsed(
            backend,
            render_semantic_prompt(dialogue),
            parse_semantic_verdict,
            cfg.retry,
            f"{child.id}:semantic",
        )
        halluc = None
        analysis = child.extras.get("strategy_analysis")
        if isinstance(analysis, str) and analysis.strip():
            halluc = _complete_parsed(
                backend,
                render_hallucination_prompt(dialogue, analysis),
                parse_hallucination_verdict,
                cfg.retry,
                f"{child.id}:hallucination",
            )
        decision = decide(semantic, halluc)
        if decision.keep or decision.reason_code == INCOHERENT:
            detail = semantic.reason
        else:
            detail = halluc.reason if halluc is not None else ""
        outcomes.append((child, decision, detail))
    return outcomes


# ---------------------------------------------------------------------------
# run


def thinker_prompt(sample: DialogueSample, variant: ChainVariant) -> str:
    """The dialogue prompt sent to the thinker backend for one sample."""
    if variant is ChainVariant.NO_ECOT:
        block_format = "Reply with the response text only, no tags."
    else:
        block_format = "\n".join(
            f"<{name}>{_BLOCK_HINTS[name]}</{name}>" for name in components_for(variant)
        )
    captions = format_captions(sample.annotations) if sample.annotations else "(none provided)"
    return (
        load_template("thinker_dialogue.txt")
        .replace("{{FORMAT}}", block_format)
        .replace("{{CAPTIONS}}", captions)
        .replace("{{DIALOGUE}}", format_dialogue(sample.context))
    )


def cmd_run(cfg: RunConfig) -> int:
    """Drive the full chain per sample: reasoning, instruction, synthesis."""
    samples = _load_manifest_file(cfg.manifest)
    variant = cfg.variant
    speech_leg = variant not in (ChainVariant.NO_STRATEGY, ChainVariant.NO_ECOT)
    thinker = _resolve_role(cfg, "THINKER", required=bool(samples))
    slm = _resolve_role(cfg, "SLM", required=speech_leg and bool(samples))
    talker = _resolve_role(cfg, "TALKER", required=speech_leg and bool(samples))
    cfg.out.mkdir(parents=True, exist_ok=True)

    failures: list[dict] = []
    chains: dict[str, ECoT] = {}
    instructions: dict[str, AcousticInstruction] = {}
    audio: dict[str, MediaRef] = {}

    try:
        requests = [
            BackendRequest(
                prompt=thinker_prompt(s, variant),
                attachments=s.media,
                request_id=f"{s.id}:thinker",
            )
            for s in samples
        ]
        replies = dispatch_all(thinker, requests, cfg.max_in_flight) if samples else {}
        for sample in samples:
            try:
                chains[sample.id] = parse_ecot(replies[f"{sample.id}:thinker"].text, variant)
            except ParseError as exc:
                failures.append(
                    {"sample_id": sample.id, "stage": "thinker", "error": str(exc)}
                )

        if speech_leg:
            pending = [s for s in samples if s.id in chains]
            slm_requests = [
                BackendRequest(
                    prompt=instruction_prompt(chains[s.id].strategy),
                    request_id=f"{s.id}:slm",
                )
                for s in pending
            ]
            slm_replies = dispatch_all(slm, slm_requests, cfg.max_in_flight) if pending else {}
            for sample in pending:
                try:
                    instructions[sample.id] = AcousticInstruction(
                        text=slm_replies[f"{sample.id}:slm"].text.strip(),
                        source_strategy=chains[sample.id].strategy,
                    )
                except ValueError as exc:
                    failures.append(
                        {"sample_id": sample.id, "stage": "slm", "error": str(exc)}
                    )

            voiced = [s for s in pending if s.id in instructions]
            talker_requests = [
                BackendRequest(
                    prompt=serialize_sequence(
                        build_sequence(instructions[s.id], chains[s.id].response)
                    ),
                    request_id=f"{s.id}:talker",
                )
                for s in voiced
            ]
            talker_replies = (
                dispatch_all(talker, talker_requests, cfg.max_in_flight) if voiced else {}
            )
            for sample in voiced:
                try:
                    audio[sample.id] = parse_talker_reply(
                        talker_replies[f"{sample.id}:talker"].text
                    )
                except MalformedTalkerReply as exc:
                    failures.append(
                        {"sample_id": sample.id, "stage": "talker", "error": str(exc)}
                    )
    except (DispatchError, TransportError, BackendError) as exc:
        print(f"run aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT

    failed_ids = {f["sample_id"] for f in failures}
    with open(cfg.out / "results.jsonl", "w", encoding="utf-8") as results_file:
        for sample in samples:
            if sample.id in failed_ids or sample.id not in chains:
                continue
            chain = chains[sample.id]
            instruction = instructions.get(sample.id)
            record = {
                "sample_id": sample.id,
                "variant": variant.value,
                "ecot": {
                    "perception": chain.perception,
                    "intent": chain.intent,
                    "strategy": chain.strategy,
                    "response": chain.response,
                    "asr_transcript": chain.asr_transcript,
                },
                "reasoning_text": (
                    render_ecot(chain, variant) if variant is not ChainVariant.NO_ECOT else None
                ),
                "response_text": chain.response,
                "instruction": instruction.text if instruction else None,
                "audio_uri": audio[sample.id].uri if sample.id in audio else None,
            }
            results_file.write(json.dumps(record, ensure_ascii=False) + "\n")
    _write_failures(cfg.out / "run_failures.jsonl", failures)
    return EXIT_PARTIAL if failures else EXIT_OK


def _write_failures(path: Path, failures: list[dict]) -> None:
    if failures:
        with open(path, "w", encoding="utf-8") as handle:
            for failure in failures:
                handle.write(json.dumps(failure, ensure_ascii=False) + "\n")


# ---------------------------------------------------------------------------
# eval


def cmd_eval(cfg: RunConfig) -> int:
    """Judge run results, compute error rates, and emit the matrix."""
    from concurrent.futures import ThreadPoolExecutor

    samples = _load_manifest_file(cfg.manifest)
    results_path = cfg.results or (cfg.out / "results.jsonl")
    if not results_path.exists():
        raise ConfigError(f"results file {results_path} not found; run `run` first")
    results = {rec["sample_id"]: rec for rec in _load_jsonl(results_path)}
    judge = _resolve_role(cfg, "JUDGE", required=bool(samples))
    allowed = applicable_metrics(cfg.variant)
    external = list(load_external_scores(cfg.external.read_bytes())) if cfg.external else []
    cfg.out.mkdir(parents=True, exist_ok=True)

    def work(sample: DialogueSample):
        record = results.get(sample.id)
        if record is None:
            return None, None, {
                "sample_id": sample.id,
                "stage": "eval",
                "error": "no result record for sample",
            }
        output = ModelOutput(
            response_text=record.get("response_text"),
            reasoning_text=record.get("reasoning_text"),
            speech=MediaRef(uri=record["audio_uri"], kind="audio")
            if record.get("audio_uri")
            else None,
            instruction=record.get("instruction"),
        )
        try:
            card = judge_sample(sample, output, judge, cfg.retry, metrics=allowed)
        except (JudgeUnavailable, TransportError) as exc:
            return None, None, {"sample_id": sample.id, "stage": "judge", "error": str(exc)}
        rate_score = None
        if sample.target_response and record.get("response_text"):
            try:
                metric = "WER" if sample.language == "en" else "CER"
                rate = error_rate(
                    sample.target_response, record["response_text"], sample.language
                )
                rate_score = ExternalScore(sample.id, metric, rate)
            except EmptyReference:
                pass
        return card, rate_score, None

    try:
        with ThreadPoolExecutor(max_workers=cfg.max_in_flight) as pool:
            outcomes = list(pool.map(work, samples))
    except BackendError as exc:
        print(f"eval aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT

    cards = [card for card, _, _ in outcomes if card is not None]
    rates = [rate for _, rate, _ in outcomes if rate is not None]
    failures = [failure for _, _, failure in outcomes if failure is not None]

    (cfg.out / "scorecards.jsonl").write_bytes(write_scorecards(cards))
    if cards or external or rates:
        matrix = aggregate(
            cards, [*external, *rates], model=cfg.model_label, dataset=cfg.dataset_label
        )
        suffix = {"markdown": "md", "csv": "csv", "records": "jsonl"}[cfg.fmt]
        (cfg.out / f"matrix.{suffix}").write_bytes(emit(matrix, cfg.fmt))
    _write_failures(cfg.out / "eval_failures.jsonl", failures)
    return EXIT_PARTIAL if failures else EXIT_OK


# ---------------------------------------------------------------------------
# report / loss


def cmd_report(cfg: RunConfig) -> int:
    """Aggregate stored scorecards (+ external scores) and print the matrix."""
    scorecards_path = cfg.scorecards or (cfg.out / "scorecards.jsonl")
    if not scorecards_path.exists():
        raise ConfigError(f"scorecards file {scorecards_path} not found")
    cards = load_scorecards(scorecards_path.read_bytes())
    external = list(load_external_scores(cfg.external.read_bytes())) if cfg.external else []
    matrix = aggregate(cards, external, model=cfg.model_label, dataset=cfg.dataset_label)
    data = emit(matrix, cfg.fmt)
    cfg.out.mkdir(parents=True, exist_ok=True)
    suffix = {"markdown": "md", "csv": "csv", "records": "jsonl"}[cfg.fmt]
    (cfg.out / f"matrix.{suffix}").write_bytes(data)
    sys.stdout.write(data.decode("utf-8"))
    return EXIT_OK


def cmd_loss(cfg: RunConfig) -> int:
    """Compute the two training objectives over a log-prob record file."""
    if cfg.input is None:
        raise ConfigError("--input is required for loss")
    try:
        records = _load_jsonl(cfg.input)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc}") from exc
    try:
        batch = [
            ComponentLogProbs(
                lp_perception=rec.get("lp_perception"),
                lp_intent=rec.get("lp_intent"),
                lp_strategy=rec.get("lp_strategy"),
                lp_response=rec.get("lp_response"),
            )
            for rec in records
        ]
        stage2 = stage2_loss(batch, cfg.variant)
        perception = [lp.lp_perception for lp in batch if lp.lp_perception is not None]
        stage1 = stage1_loss(perception) if perception else None
    except (EmptyBatch, ValueError) as exc:
        print(f"loss: {exc}", file=sys.stderr)
        return EXIT_ABORT
    print(json.dumps({"stage1": stage1, "stage2": stage2}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; its values override flags")
    common.add_argument("--manifest", help="input manifest path")
    common.add_argument("--out", help="output directory (default: out)")
    common.add_argument("--variant", choices=_VARIANT_NAMES, help="chain variant")
    common.add_argument("--max-in-flight", type=int, dest="max_in_flight")
    common.add_argument("--retries", type=int, help="attempt budget per call")
    common.add_argument("--backoff-ms", type=int, dest="backoff_ms")
    common.add_argument("--chunk-minutes", type=int, dest="chunk_minutes")
    common.add_argument(
        "--max-gap-ms", dest="max_gap_ms", help="merge gap bound in ms, or 'inf'"
    )
    common.add_argument("--pad-ms", type=int, dest="pad_ms")
    common.add_argument("--format", choices=FORMATS, help="matrix output format")
    common.add_argument("--model-label", dest="model_label")
    common.add_argument("--dataset-label", dest="dataset_label")
    common.add_argument("--results", help="run results file (default: OUT/results.jsonl)")
    common.add_argument(
        "--scorecards", help="scorecards file (default: OUT/scorecards.jsonl)"
    )
    common.add_argument("--external", help="external score file to merge")
    common.add_argument("--input", help="log-prob record file (loss)")
    common.add_argument("--split-prompt", dest="split_prompt", help="dialogue split prompt file")

    parser = argparse.ArgumentParser(
        prog="emoeval",
        description="Corpus pipeline and dialogue benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("pipe", parents=[common], help="filter a raw transcript manifest")
    sub.add_parser("run", parents=[common], help="run the dialogue chain per sample")
    sub.add_parser("eval", parents=[common], help="judge run results and emit the matrix")
    sub.add_parser("report", parents=[common], help="aggregate stored scorecards")
    sub.add_parser("loss", parents=[common], help="compute training losses from log-probs")
    return parser


_COMMANDS = {
    "pipe": cmd_pipe,
    "run": cmd_run,
    "eval": cmd_eval,
    "report": cmd_report,
    "loss": cmd_loss,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = build_config(args)
        return _COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
